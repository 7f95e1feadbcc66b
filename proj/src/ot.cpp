#include "ganlab/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <unordered_set>
#include <cstdlib>
#include <cstdio>

#include "ganlab/pool.hpp"
#include "ganlab/util.hpp"

namespace ganlab::ot {

namespace {

// ---------------------------------------------------------------------------
// Network simplex for the balanced transportation problem.
//
// Nodes: sources 0..n-1, targets n..n+m-1.  The basis is a spanning tree kept
// as adjacency lists of arc ids.  Supplies carry a tiny graded perturbation
// against degenerate pivots; exact flows are re-derived on the final tree
// from the unperturbed marginals.  In sparse mode the candidate arc set is
// grown by pricing sweeps over all pairs until no reduced cost is negative,
// which certifies global optimality.
// ---------------------------------------------------------------------------

struct Arc {
  int src;
  int tgt;  // target index (0-based, node id is n + tgt)
  double cost;
};

struct EuclideanCost {
  const double* a;
  const double* b;
  int dim;
  bool squared;
  double operator()(int i, int j) const {
    const double* x = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
    const double* y = b + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim);
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      double d = x[k] - y[k];
      s += d * d;
    }
    return squared ? s : std::sqrt(s);
  }
};

struct SimplexResult {
  std::vector<Arc> tree_arcs;
  std::vector<double> tree_flows;
  std::vector<double> u, v;  // potentials: u_i + v_j = c_ij on the basis
  double cost = 0.0;
};

class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand,
                   EuclideanCost cost, double cost_scale)
      : n_(static_cast<int>(supply.size())),
        m_(static_cast<int>(demand.size())),
        cost_(cost),
        supply_orig_(std::move(supply)),
        demand_orig_(std::move(demand)),
        tol_(1e-12 * (1.0 + cost_scale)) {
    supply_ = supply_orig_;
    demand_ = demand_orig_;
    const double delta = 1e-11 / static_cast<double>(n_);
    for (double& s : supply_) s += delta;
    demand_.back() += delta * static_cast<double>(n_);
    u_.assign(static_cast<std::size_t>(n_), 0.0);
    v_.assign(static_cast<std::size_t>(m_), 0.0);
    const auto nodes = static_cast<std::size_t>(n_ + m_);
    adj_.assign(nodes, {});
    parent_node_.assign(nodes, -1);
    parent_arc_.assign(nodes, -1);
    depth_.assign(nodes, 0);
  }

  void add_arc(int i, int j) {
    std::uint64_t key = static_cast<std::uint64_t>(i) *
                            static_cast<std::uint64_t>(m_) +
                        static_cast<std::uint64_t>(j);
    if (!seen_.insert(key).second) return;
    arcs_.push_back({i, j, cost_(i, j)});
    flow_.push_back(0.0);
    in_tree_.push_back(0);
  }

  void add_all_arcs() {
    arcs_.reserve(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) arcs_.push_back({i, j, cost_(i, j)});
    flow_.assign(arcs_.size(), 0.0);
    in_tree_.assign(arcs_.size(), 0);
    dense_ = true;
  }

  // Northwest-corner start over the given index order; the arcs are created
  // on demand, so this also works in sparse mode.
  void build_initial_basis() {
    int i = 0, j = 0;
    double rs = supply_[0], rd = demand_[0];
    while (true) {
      int arc_id = find_or_add(i, j);
      flow_[static_cast<std::size_t>(arc_id)] = std::max(std::min(rs, rd), 0.0);
      make_basic(arc_id);
      if (i == n_ - 1 && j == m_ - 1) break;
      // index-driven advance keeps the walk inside the grid under roundoff
      bool advance_i = (j == m_ - 1) || (i < n_ - 1 && rs <= rd);
      if (advance_i) {
        rd = std::max(rd - rs, 0.0);
        ++i;
        rs = supply_[static_cast<std::size_t>(i)];
      } else {
        rs = std::max(rs - rd, 0.0);
        ++j;
        rd = demand_[static_cast<std::size_t>(j)];
      }
    }
    init_tree_state();
  }

  void run_pivots() {
    const std::size_t block = std::max<std::size_t>(
        64, 2 * static_cast<std::size_t>(
                    std::sqrt(static_cast<double>(arcs_.size()))));
    long pivots = 0;
    const long cap = 400L * (n_ + m_) + 20000L;
    std::size_t pos = scan_pos_ % arcs_.size();
    while (true) {
      int entering = -1;
      double best = -tol_;
      std::size_t scanned = 0;
      while (scanned < arcs_.size()) {
        for (std::size_t c = 0; c < block && scanned < arcs_.size();
             ++c, ++scanned) {
          const Arc& a = arcs_[pos];
          if (!in_tree_[pos]) {
            double r = a.cost - u_[static_cast<std::size_t>(a.src)] -
                       v_[static_cast<std::size_t>(a.tgt)];
            if (r < best) {
              best = r;
              entering = static_cast<int>(pos);
            }
          }
          if (++pos == arcs_.size()) pos = 0;
        }
        if (entering >= 0) break;
      }
      stats_scanned += static_cast<long>(scanned);
      if (entering < 0) break;
      pivot(entering, best);
      ++stats_pivots;
      if (++pivots > cap)
        throw NumericalFailure("network simplex: pivot limit exceeded");
    }
    scan_pos_ = pos;
  }

  // One sweep over all pairs, adding the most violating arc per source.
  // Squared comparison avoids the sqrt except on genuine candidates.
  long price_all() {
    long added = 0;
    const int dim = cost_.dim;
    for (int i = 0; i < n_; ++i) {
      const double ui = u_[static_cast<std::size_t>(i)];
      const double* x =
          cost_.a + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
      double best = -tol_, second = -tol_;
      int best_j = -1, second_j = -1;
      for (int j = 0; j < m_; ++j) {
        const double* y = cost_.b + static_cast<std::size_t>(j) *
                                        static_cast<std::size_t>(dim);
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
          double d = x[k] - y[k];
          s += d * d;
        }
        double bound = ui + v_[static_cast<std::size_t>(j)] + second;
        if (bound <= 0.0) continue;  // cost >= 0 > bound: no violation
        double c = cost_.squared ? s : 0.0;
        if (!cost_.squared) {
          if (s >= bound * bound) continue;
          c = std::sqrt(s);
        }
        double r = c - ui - v_[static_cast<std::size_t>(j)];
        if (r < best) {
          second = best;
          second_j = best_j;
          best = r;
          best_j = j;
        } else if (r < second) {
          second = r;
          second_j = j;
        }
      }
      for (int jj : {best_j, second_j}) {
        if (jj >= 0) {
          std::size_t before = arcs_.size();
          add_arc(i, jj);
          if (arcs_.size() > before) ++added;
        }
      }
    }
    return added;
  }

  void solve() {
    build_initial_basis();
    run_pivots();
    if (!dense_) {
      while (price_all() > 0) { ++stats_rounds; run_pivots(); }
    }
    if (const char* env = std::getenv("GANLAB_OT_STATS"))
      if (env[0] == '1')
        std::fprintf(stderr,
                     "[ot] n=%d m=%d arcs=%zu pivots=%ld rounds=%ld cyc=%ld sub=%ld scan=%ld\n",
                     n_, m_, arcs_.size(), stats_pivots, stats_rounds,
                     stats_cycle, stats_subtree, stats_scanned);
  }

  SimplexResult extract() const {
    // exact flows for the unperturbed marginals via leaf elimination
    std::vector<double> excess(static_cast<std::size_t>(n_ + m_), 0.0);
    for (int i = 0; i < n_; ++i)
      excess[static_cast<std::size_t>(i)] = supply_orig_[static_cast<std::size_t>(i)];
    for (int j = 0; j < m_; ++j)
      excess[static_cast<std::size_t>(n_ + j)] =
          -demand_orig_[static_cast<std::size_t>(j)];
    std::vector<int> degree(static_cast<std::size_t>(n_ + m_), 0);
    for (int x = 0; x < n_ + m_; ++x)
      degree[static_cast<std::size_t>(x)] =
          static_cast<int>(adj_[static_cast<std::size_t>(x)].size());
    std::vector<char> removed_node(static_cast<std::size_t>(n_ + m_), 0);
    std::vector<char> removed_arc(arcs_.size(), 0);
    std::vector<double> exact_flow(arcs_.size(), 0.0);
    std::vector<int> stack;
    for (int x = 0; x < n_ + m_; ++x)
      if (degree[static_cast<std::size_t>(x)] == 1) stack.push_back(x);
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      if (removed_node[static_cast<std::size_t>(x)]) continue;
      int live_arc = -1;
      for (int a : adj_[static_cast<std::size_t>(x)])
        if (!removed_arc[static_cast<std::size_t>(a)]) {
          live_arc = a;
          break;
        }
      if (live_arc < 0) continue;  // last node standing
      const Arc& arc = arcs_[static_cast<std::size_t>(live_arc)];
      int y = (x == arc.src) ? n_ + arc.tgt : arc.src;
      double f = (x < n_) ? excess[static_cast<std::size_t>(x)]
                          : -excess[static_cast<std::size_t>(x)];
      exact_flow[static_cast<std::size_t>(live_arc)] = f;
      excess[static_cast<std::size_t>(x)] = 0.0;
      if (x < n_)
        excess[static_cast<std::size_t>(y)] += f;
      else
        excess[static_cast<std::size_t>(y)] -= f;
      removed_node[static_cast<std::size_t>(x)] = 1;
      removed_arc[static_cast<std::size_t>(live_arc)] = 1;
      if (--degree[static_cast<std::size_t>(y)] == 1 &&
          !removed_node[static_cast<std::size_t>(y)])
        stack.push_back(y);
    }
    SimplexResult res;
    res.u = u_;
    res.v = v_;
    double cost = 0.0;
    for (std::size_t a = 0; a < arcs_.size(); ++a) {
      if (!in_tree_[a]) continue;
      double f = std::max(exact_flow[a], 0.0);  // degenerate slack stays tiny
      if (f > 0.0) {
        res.tree_arcs.push_back(arcs_[a]);
        res.tree_flows.push_back(f);
        cost += f * arcs_[a].cost;
      }
    }
    res.cost = cost;
    return res;
  }

 private:
  int find_or_add(int i, int j) {
    if (dense_) return i * m_ + j;
    std::size_t before = arcs_.size();
    add_arc(i, j);
    if (arcs_.size() > before) return static_cast<int>(arcs_.size() - 1);
    for (std::size_t a = 0; a < arcs_.size(); ++a)
      if (arcs_[a].src == i && arcs_[a].tgt == j) return static_cast<int>(a);
    throw NumericalFailure("network simplex: lost arc");
  }

  void make_basic(int arc_id) {
    const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
    in_tree_[static_cast<std::size_t>(arc_id)] = 1;
    adj_[static_cast<std::size_t>(a.src)].push_back(arc_id);
    adj_[static_cast<std::size_t>(n_ + a.tgt)].push_back(arc_id);
  }

  void make_nonbasic(int arc_id) {
    const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
    in_tree_[static_cast<std::size_t>(arc_id)] = 0;
    auto drop = [&](int node) {
      auto& list = adj_[static_cast<std::size_t>(node)];
      list.erase(std::find(list.begin(), list.end(), arc_id));
    };
    drop(a.src);
    drop(n_ + a.tgt);
  }

  int other_end(const Arc& a, int x) const {
    return (x == a.src) ? n_ + a.tgt : a.src;
  }

  // rebuild potentials, parents and depths from scratch (root = node 0)
  void init_tree_state() {
    std::vector<char> visited(static_cast<std::size_t>(n_ + m_), 0);
    std::vector<int> queue{0};
    visited[0] = 1;
    u_[0] = 0.0;
    parent_node_[0] = -1;
    parent_arc_[0] = -1;
    depth_[0] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int x = queue[head];
      for (int arc_id : adj_[static_cast<std::size_t>(x)]) {
        const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
        int y = other_end(a, x);
        if (visited[static_cast<std::size_t>(y)]) continue;
        visited[static_cast<std::size_t>(y)] = 1;
        parent_node_[static_cast<std::size_t>(y)] = x;
        parent_arc_[static_cast<std::size_t>(y)] = arc_id;
        depth_[static_cast<std::size_t>(y)] = depth_[static_cast<std::size_t>(x)] + 1;
        if (y >= n_)
          v_[static_cast<std::size_t>(y - n_)] =
              a.cost - u_[static_cast<std::size_t>(a.src)];
        else
          u_[static_cast<std::size_t>(y)] =
              a.cost - v_[static_cast<std::size_t>(a.tgt)];
        queue.push_back(y);
      }
    }
  }

  // Entering arc e = (s0 -> t0) closes a cycle through the tree path between
  // its endpoints.  Traveling t0 -> lca -> s0, arcs traversed with their
  // source->target orientation gain theta, others lose theta.
  void pivot(int entering, double reduced) {
    const Arc& e = arcs_[static_cast<std::size_t>(entering)];
    const int s0 = e.src;
    const int t0 = n_ + e.tgt;

    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    bool leaving_on_src_side = false;

    // climb to the common ancestor, tracking the minimum against-flow
    int x = s0, y = t0;
    auto against_src_side = [&](int node) {
      // on the s0 side the cycle travels parent -> node (downward)
      int arc_id = parent_arc_[static_cast<std::size_t>(node)];
      const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
      bool with = (a.src == parent_node_[static_cast<std::size_t>(node)]);
      if (!with) {
        double f = flow_[static_cast<std::size_t>(arc_id)];
        if (f < theta) {
          theta = f;
          leaving = arc_id;
          leaving_on_src_side = true;
        }
      }
    };
    auto against_tgt_side = [&](int node) {
      // on the t0 side the cycle travels node -> parent (upward)
      int arc_id = parent_arc_[static_cast<std::size_t>(node)];
      const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
      bool with = (a.src == node);
      if (!with) {
        double f = flow_[static_cast<std::size_t>(arc_id)];
        if (f <= theta) {  // prefer the arc deepest on the target side
          theta = f;
          leaving = arc_id;
          leaving_on_src_side = false;
        }
      }
    };
    while (x != y) {
      ++stats_cycle;
      if (depth_[static_cast<std::size_t>(x)] >= depth_[static_cast<std::size_t>(y)]) {
        against_src_side(x);
        x = parent_node_[static_cast<std::size_t>(x)];
      } else {
        against_tgt_side(y);
        y = parent_node_[static_cast<std::size_t>(y)];
      }
    }
    if (leaving < 0)
      throw NumericalFailure("network simplex: no leaving arc on cycle");

    // apply the flow change around the cycle
    flow_[static_cast<std::size_t>(entering)] = theta;
    for (int p = s0; p != x; p = parent_node_[static_cast<std::size_t>(p)]) {
      int arc_id = parent_arc_[static_cast<std::size_t>(p)];
      bool with = (arcs_[static_cast<std::size_t>(arc_id)].src ==
                   parent_node_[static_cast<std::size_t>(p)]);
      flow_[static_cast<std::size_t>(arc_id)] += with ? theta : -theta;
    }
    for (int p = t0; p != x; p = parent_node_[static_cast<std::size_t>(p)]) {
      int arc_id = parent_arc_[static_cast<std::size_t>(p)];
      bool with = (arcs_[static_cast<std::size_t>(arc_id)].src == p);
      flow_[static_cast<std::size_t>(arc_id)] += with ? theta : -theta;
    }

    // child endpoint of the leaving arc roots the detached subtree
    const Arc& l = arcs_[static_cast<std::size_t>(leaving)];
    int child = 0;
    {
      int a_end = l.src, b_end = n_ + l.tgt;
      child = (parent_arc_[static_cast<std::size_t>(a_end)] == leaving) ? a_end
                                                                        : b_end;
    }
    make_nonbasic(leaving);
    make_basic(entering);

    // re-root the detached subtree at the entering endpoint inside it
    int new_root = leaving_on_src_side ? s0 : t0;
    int outside = leaving_on_src_side ? t0 : s0;
    {
      int prev = outside, prev_arc = entering, node = new_root;
      while (true) {
        int nx = parent_node_[static_cast<std::size_t>(node)];
        int na = parent_arc_[static_cast<std::size_t>(node)];
        parent_node_[static_cast<std::size_t>(node)] = prev;
        parent_arc_[static_cast<std::size_t>(node)] = prev_arc;
        if (node == child) break;
        prev = node;
        prev_arc = na;
        node = nx;
      }
    }

    // one pass over the moved subtree: fix depths and shift potentials
    const double shift = leaving_on_src_side ? reduced : -reduced;
    stack_.clear();
    stack_.push_back(new_root);
    depth_[static_cast<std::size_t>(new_root)] =
        depth_[static_cast<std::size_t>(outside)] + 1;
    while (!stack_.empty()) {
      ++stats_subtree;
      int node = stack_.back();
      stack_.pop_back();
      if (node < n_)
        u_[static_cast<std::size_t>(node)] += shift;
      else
        v_[static_cast<std::size_t>(node - n_)] -= shift;
      for (int arc_id : adj_[static_cast<std::size_t>(node)]) {
        if (arc_id == parent_arc_[static_cast<std::size_t>(node)]) continue;
        const Arc& a = arcs_[static_cast<std::size_t>(arc_id)];
        int ch = other_end(a, node);
        depth_[static_cast<std::size_t>(ch)] =
            depth_[static_cast<std::size_t>(node)] + 1;
        stack_.push_back(ch);
      }
    }
  }

  int n_, m_;
  EuclideanCost cost_;
  std::vector<double> supply_orig_, demand_orig_;
  std::vector<double> supply_, demand_;
  double tol_;
  bool dense_ = false;
  std::vector<Arc> arcs_;
  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
  std::unordered_set<std::uint64_t> seen_;
  std::size_t scan_pos_ = 0;
  std::vector<int> parent_node_;
  std::vector<int> parent_arc_;
  std::vector<int> depth_;
  std::vector<int> stack_;
  long stats_pivots = 0, stats_rounds = 0, stats_cycle = 0, stats_subtree = 0,
       stats_scanned = 0;
};

// Morton order over quantized coordinates; a cheap locality-preserving
// permutation that turns the northwest-corner start into a sane coupling.
std::vector<int> morton_order(const EmpiricalMeasure& mu) {
  const int n = mu.size();
  const int dim = mu.dim;
  std::vector<double> lo(static_cast<std::size_t>(dim), 1e300),
      hi(static_cast<std::size_t>(dim), -1e300);
  for (int i = 0; i < n; ++i) {
    auto p = mu.row(i);
    for (int k = 0; k < dim; ++k) {
      lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], p[static_cast<std::size_t>(k)]);
      hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], p[static_cast<std::size_t>(k)]);
    }
  }
  const int bits = std::max(1, 24 / dim);
  std::vector<std::pair<std::uint64_t, int>> keyed(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto p = mu.row(i);
    std::uint64_t key = 0;
    for (int b = bits - 1; b >= 0; --b) {
      for (int k = 0; k < dim; ++k) {
        double span = hi[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)];
        double t = span > 0 ? (p[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)]) / span : 0.0;
        auto q = static_cast<std::uint64_t>(
            std::min(static_cast<double>((1u << bits) - 1),
                     t * static_cast<double>(1u << bits)));
        key = (key << 1) | ((q >> b) & 1u);
      }
    }
    keyed[static_cast<std::size_t>(i)] = {key, i};
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = keyed[static_cast<std::size_t>(i)].second;
  return order;
}

// k nearest targets per source through a uniform grid; used to seed the
// sparse candidate set (correctness never depends on it, pricing does).
void add_knn_arcs(TransportSimplex& simplex, const EmpiricalMeasure& mu,
                  const EmpiricalMeasure& nu, int k) {
  const int dim = mu.dim;
  if (dim > 3) return;
  const int n = mu.size(), m = nu.size();
  std::vector<double> lo(static_cast<std::size_t>(dim), 1e300),
      hi(static_cast<std::size_t>(dim), -1e300);
  auto widen = [&](const EmpiricalMeasure& e) {
    for (int i = 0; i < e.size(); ++i) {
      auto p = e.row(i);
      for (int d = 0; d < dim; ++d) {
        lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], p[static_cast<std::size_t>(d)]);
        hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], p[static_cast<std::size_t>(d)]);
      }
    }
  };
  widen(mu);
  widen(nu);
  int cells_per_dim = std::max(
      1, static_cast<int>(std::floor(std::pow(static_cast<double>(m) / 2.0,
                                              1.0 / static_cast<double>(dim)))));
  cells_per_dim = std::min(cells_per_dim, 256);
  auto cell_of = [&](std::span<const double> p, int d) {
    double span = hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)];
    if (span <= 0) return 0;
    int c = static_cast<int>((p[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)]) / span *
                             cells_per_dim);
    return std::clamp(c, 0, cells_per_dim - 1);
  };
  long total_cells = 1;
  for (int d = 0; d < dim; ++d) total_cells *= cells_per_dim;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(total_cells));
  auto flat = [&](const int* c) {
    long f = 0;
    for (int d = 0; d < dim; ++d) f = f * cells_per_dim + c[d];
    return f;
  };
  for (int j = 0; j < m; ++j) {
    int c[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) c[d] = cell_of(nu.row(j), d);
    buckets[static_cast<std::size_t>(flat(c))].push_back(j);
  }
  std::vector<std::pair<double, int>> cand;
  for (int i = 0; i < n; ++i) {
    auto p = mu.row(i);
    int c[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) c[d] = cell_of(p, d);
    cand.clear();
    for (int ring = 0; ring < cells_per_dim; ++ring) {
      // scan the cube of radius `ring`, only its boundary shell
      int base[3] = {0, 0, 0};
      std::function<void(int)> visit = [&](int d) {
        if (d == dim) {
          bool shell = false;
          for (int dd = 0; dd < dim; ++dd)
            if (std::abs(base[dd] - c[dd]) == ring) shell = true;
          if (!shell && ring > 0) return;
          int cc[3];
          for (int dd = 0; dd < dim; ++dd) {
            cc[dd] = base[dd];
            if (cc[dd] < 0 || cc[dd] >= cells_per_dim) return;
          }
          for (int j : buckets[static_cast<std::size_t>(flat(cc))])
            cand.emplace_back(sqdist(p, nu.row(j)), j);
          return;
        }
        for (int off = -ring; off <= ring; ++off) {
          base[d] = c[d] + off;
          visit(d + 1);
        }
      };
      visit(0);
      if (static_cast<int>(cand.size()) >= k && ring >= 1) break;
    }
    int keep = std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
    for (int t = 0; t < keep; ++t) simplex.add_arc(i, cand[static_cast<std::size_t>(t)].second);
  }
}

constexpr long kDenseArcLimit = 1L << 16;

TransportPlan solve_transport(const EmpiricalMeasure& mu,
                              const EmpiricalMeasure& nu, bool squared) {
  mu.validate();
  nu.validate();
  if (mu.dim != nu.dim)
    throw ShapeMismatch("transport: dimension mismatch between measures");
  const int n = mu.size(), m = nu.size();

  const bool dense =
      static_cast<long>(n) * static_cast<long>(m) <= kDenseArcLimit;

  // order atoms along a Morton curve in sparse mode so the initial basis is
  // already a local coupling
  std::vector<int> src_order(static_cast<std::size_t>(n)),
      tgt_order(static_cast<std::size_t>(m));
  std::iota(src_order.begin(), src_order.end(), 0);
  std::iota(tgt_order.begin(), tgt_order.end(), 0);
  if (!dense) {
    src_order = morton_order(mu);
    tgt_order = morton_order(nu);
  }

  std::vector<double> pa(static_cast<std::size_t>(n) * static_cast<std::size_t>(mu.dim));
  std::vector<double> pb(static_cast<std::size_t>(m) * static_cast<std::size_t>(mu.dim));
  std::vector<double> sa(static_cast<std::size_t>(n)), sb(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    auto row = mu.row(src_order[static_cast<std::size_t>(i)]);
    std::copy(row.begin(), row.end(),
              pa.begin() + static_cast<long>(i) * mu.dim);
    sa[static_cast<std::size_t>(i)] = mu.weights[static_cast<std::size_t>(src_order[static_cast<std::size_t>(i)])];
  }
  for (int j = 0; j < m; ++j) {
    auto row = nu.row(tgt_order[static_cast<std::size_t>(j)]);
    std::copy(row.begin(), row.end(),
              pb.begin() + static_cast<long>(j) * mu.dim);
    sb[static_cast<std::size_t>(j)] = nu.weights[static_cast<std::size_t>(tgt_order[static_cast<std::size_t>(j)])];
  }
  // exact balance: the perturbation assumes sum supply == sum demand
  double ssum = std::accumulate(sa.begin(), sa.end(), 0.0);
  double dsum = std::accumulate(sb.begin(), sb.end(), 0.0);
  sb.back() += ssum - dsum;

  double diam2 = 0.0;
  {
    std::vector<double> lo(static_cast<std::size_t>(mu.dim), 1e300),
        hi(static_cast<std::size_t>(mu.dim), -1e300);
    auto widen = [&](const std::vector<double>& pts, int count) {
      for (int i = 0; i < count; ++i)
        for (int d = 0; d < mu.dim; ++d) {
          double x = pts[static_cast<std::size_t>(i) * static_cast<std::size_t>(mu.dim) +
                         static_cast<std::size_t>(d)];
          lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], x);
          hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], x);
        }
    };
    widen(pa, n);
    widen(pb, m);
    for (int d = 0; d < mu.dim; ++d) {
      double s = hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)];
      diam2 += s * s;
    }
  }
  double cost_scale = squared ? diam2 : std::sqrt(diam2);

  EuclideanCost cost{pa.data(), pb.data(), mu.dim, squared};
  TransportSimplex simplex(std::move(sa), std::move(sb), cost, cost_scale);
  if (dense) {
    simplex.add_all_arcs();
  } else {
    EmpiricalMeasure mu_s = measures::uniform_cloud(mu.dim, pa);
    EmpiricalMeasure nu_s = measures::uniform_cloud(mu.dim, pb);
    add_knn_arcs(simplex, mu_s, nu_s, 12);
  }
  simplex.solve();
  SimplexResult res = simplex.extract();

  TransportPlan plan;
  plan.cost = res.cost;
  plan.coupling.reserve(res.tree_arcs.size());
  for (std::size_t a = 0; a < res.tree_arcs.size(); ++a) {
    plan.coupling.push_back({src_order[static_cast<std::size_t>(res.tree_arcs[a].src)],
                             tgt_order[static_cast<std::size_t>(res.tree_arcs[a].tgt)],
                             res.tree_flows[a]});
  }
  plan.source_potential.assign(static_cast<std::size_t>(n), 0.0);
  plan.target_potential.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < n; ++i)
    plan.source_potential[static_cast<std::size_t>(src_order[static_cast<std::size_t>(i)])] =
        res.u[static_cast<std::size_t>(i)];
  for (int j = 0; j < m; ++j)
    plan.target_potential[static_cast<std::size_t>(tgt_order[static_cast<std::size_t>(j)])] =
        -res.v[static_cast<std::size_t>(j)];
  return plan;
}

}  // namespace

TransportPlan w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return solve_transport(mu, nu, /*squared=*/false);
}

double w2_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  TransportPlan plan = solve_transport(mu, nu, /*squared=*/true);
  return std::sqrt(std::max(plan.cost, 0.0));
}

double w1_bruteforce(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.dim != nu.dim) throw ShapeMismatch("w1_bruteforce: dimension mismatch");
  const int n = mu.size();
  if (n != nu.size())
    throw DegenerateInput("w1_bruteforce: atom counts must match");
  if (n > 8) throw TooLarge("w1_bruteforce: more than 8 atoms");
  for (int i = 0; i < n; ++i) {
    if (std::abs(mu.weights[static_cast<std::size_t>(i)] - 1.0 / n) > 1e-12 ||
        std::abs(nu.weights[static_cast<std::size_t>(i)] - 1.0 / n) > 1e-12)
      throw DegenerateInput("w1_bruteforce: weights must be uniform");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      total += dist2(mu.row(i), nu.row(perm[static_cast<std::size_t>(i)]));
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

double w1_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  struct Ev {
    double x;
    double dw;
  };
  std::vector<Ev> events;
  events.reserve(static_cast<std::size_t>(mu.size() + nu.size()));
  for (int i = 0; i < mu.size(); ++i)
    events.push_back({mu.points[static_cast<std::size_t>(i)], mu.weights[static_cast<std::size_t>(i)]});
  for (int j = 0; j < nu.size(); ++j)
    events.push_back({nu.points[static_cast<std::size_t>(j)], -nu.weights[static_cast<std::size_t>(j)]});
  std::sort(events.begin(), events.end(),
            [](const Ev& a, const Ev& b) { return a.x < b.x; });
  double cdf_gap = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    cdf_gap += events[k].dw;
    total += std::abs(cdf_gap) * (events[k + 1].x - events[k].x);
  }
  return total;
}

double w1_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.dim != nu.dim) throw ShapeMismatch("w1_cost: dimension mismatch");
  if (mu.dim == 1) return w1_sorted_1d(mu, nu);
  return w1_exact(mu, nu).cost;
}

double PotentialFn::eval(std::span<const double> x) const {
  double best = 0.0;
  bool first = true;
  for (int i = 0; i < anchor_count(); ++i) {
    std::span<const double> a{
        anchors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
        static_cast<std::size_t>(dim)};
    double cand = values[static_cast<std::size_t>(i)] + dist2(a, x);
    if (first || cand < best) {
      best = cand;
      first = false;
    }
  }
  return first ? 0.0 : best;
}

std::vector<double> PotentialFn::grad(std::span<const double> x) const {
  std::vector<double> g(static_cast<std::size_t>(dim), 0.0);
  double best = 0.0;
  int best_i = -1;
  for (int i = 0; i < anchor_count(); ++i) {
    std::span<const double> a{
        anchors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
        static_cast<std::size_t>(dim)};
    double cand = values[static_cast<std::size_t>(i)] + dist2(a, x);
    if (best_i < 0 || cand < best) {
      best = cand;
      best_i = i;
    }
  }
  if (best_i < 0) return g;
  std::span<const double> a{
      anchors.data() + static_cast<std::size_t>(best_i) * static_cast<std::size_t>(dim),
      static_cast<std::size_t>(dim)};
  double d = dist2(a, x);
  if (d < 1e-15) return g;
  for (int k = 0; k < dim; ++k)
    g[static_cast<std::size_t>(k)] = (x[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k)]) / d;
  return g;
}

PotentialFn kantorovich_potential(const EmpiricalMeasure& mu,
                                  const EmpiricalMeasure& nu) {
  TransportPlan plan = w1_exact(mu, nu);
  PotentialFn f;
  f.dim = nu.dim;
  f.anchors = nu.points;
  f.values = plan.target_potential;
  // recenter so that f(0_D) = 0
  std::vector<double> origin(static_cast<std::size_t>(nu.dim), 0.0);
  double at0 = f.eval(origin);
  for (double& v : f.values) v -= at0;
  return f;
}

double rate_table_cell(int dim, const std::vector<long>& n_grid,
                       int replicates, const RateTableOptions& options,
                       long cell) {
  const long proxy_n = options.proxy_multiple * n_grid.back();
  const auto gi = static_cast<std::size_t>(cell / replicates);
  const long n = n_grid[gi];
  Rng root(options.seed, 0x0eaeau);
  Rng rng = root.split(static_cast<std::uint64_t>(cell));
  measures::LatentSpec law{dim};
  Rng rng_a = rng.split(1), rng_b = rng.split(2);
  EmpiricalMeasure sample =
      measures::sample_latent(law, static_cast<int>(n), rng_a);
  EmpiricalMeasure proxy = measures::sample_latent(
      law,
      static_cast<int>(options.proxy == ProxyMode::population ? proxy_n : n),
      rng_b);
  return w1_cost(sample, proxy);
}

harness::RateSeries empirical_rate_table(int dim,
                                         const std::vector<long>& n_grid,
                                         int replicates,
                                         const RateTableOptions& options) {
  if (n_grid.empty()) throw DomainError("empirical_rate_table: empty n grid");
  for (std::size_t k = 1; k < n_grid.size(); ++k)
    if (n_grid[k] <= n_grid[k - 1])
      throw DomainError("empirical_rate_table: n grid must increase");
  const long cells = static_cast<long>(n_grid.size()) * replicates;

  harness::RateSeries series;
  series.rows.assign(static_cast<std::size_t>(cells), {});
  parallel_for(cells, options.threads, [&](long cell) {
    const auto gi = static_cast<std::size_t>(cell / replicates);
    const int rep = static_cast<int>(cell % replicates);
    series.rows[static_cast<std::size_t>(cell)] = {
        n_grid[gi], rep, rate_table_cell(dim, n_grid, replicates, options, cell)};
  });
  if (n_grid.size() >= 3) series.fit = harness::fit_exponent(series);
  return series;
}

}  // namespace ganlab::ot
