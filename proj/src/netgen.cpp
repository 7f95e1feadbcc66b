#include "ganlab/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>

#include "json.hpp"

namespace ganlab::netgen {

using nlohmann::json;

long SparseReluNet::parameter_count() const {
  long n = 0;
  for (const auto& w : weights) n += static_cast<long>(w.size());
  for (const auto& v : shifts) n += static_cast<long>(v.size());
  return n;
}

long SparseReluNet::nonzero_count() const {
  long n = 0;
  for (std::size_t j = 1; j < weights.size(); ++j)
    for (double w : weights[j])
      if (w != 0.0) ++n;
  for (const auto& v : shifts)
    for (double x : v)
      if (x != 0.0) ++n;
  return n;
}

double SparseReluNet::max_entry() const {
  double m = 0.0;
  for (const auto& w : weights)
    for (double x : w) m = std::max(m, std::abs(x));
  for (const auto& v : shifts)
    for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void SparseReluNet::validate_shapes() const {
  if (static_cast<int>(widths.size()) != depth + 2)
    throw ShapeMismatch("net: widths must have depth+2 entries");
  if (static_cast<int>(weights.size()) != depth + 1)
    throw ShapeMismatch("net: weight matrix count != depth+1");
  if (static_cast<int>(shifts.size()) != depth)
    throw ShapeMismatch("net: shift vector count != depth");
  for (int j = 0; j <= depth; ++j) {
    auto rows = static_cast<std::size_t>(widths[static_cast<std::size_t>(j) + 1]);
    auto cols = static_cast<std::size_t>(widths[static_cast<std::size_t>(j)]);
    if (weights[static_cast<std::size_t>(j)].size() != rows * cols)
      throw ShapeMismatch("net: weight matrix size mismatch");
  }
  for (int i = 0; i < depth; ++i)
    if (static_cast<int>(shifts[static_cast<std::size_t>(i)].size()) !=
        widths[static_cast<std::size_t>(i) + 1])
      throw ShapeMismatch("net: shift vector size mismatch");
}

bool SparseReluNet::satisfies_constraints() const {
  validate_shapes();
  return max_entry() <= 1.0 + 1e-15 && nonzero_count() <= sparsity_budget;
}

SparseReluNet make_net(int depth, std::vector<int> widths, long sparsity,
                       double sup_bound) {
  SparseReluNet net;
  net.depth = depth;
  net.widths = std::move(widths);
  net.sparsity_budget = sparsity;
  net.sup_bound = sup_bound;
  net.weights.resize(static_cast<std::size_t>(depth) + 1);
  net.shifts.resize(static_cast<std::size_t>(depth));
  for (int j = 0; j <= depth; ++j)
    net.weights[static_cast<std::size_t>(j)].assign(
        static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j) + 1]) *
            static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j)]),
        0.0);
  for (int i = 0; i < depth; ++i)
    net.shifts[static_cast<std::size_t>(i)].assign(
        static_cast<std::size_t>(net.widths[static_cast<std::size_t>(i) + 1]), 0.0);
  net.validate_shapes();
  return net;
}

SparseReluNet random_net(int depth, std::vector<int> widths, long sparsity,
                         double sup_bound, Rng& rng, double scale) {
  SparseReluNet net = make_net(depth, std::move(widths), sparsity, sup_bound);
  for (auto& w : net.weights)
    for (double& x : w) x = rng.uniform(-scale, scale);
  for (auto& v : net.shifts)
    for (double& x : v) x = rng.uniform(-scale, scale);
  return project(std::move(net));
}

ForwardCache forward_cache(const SparseReluNet& net, std::span<const double> z) {
  if (static_cast<int>(z.size()) != net.in_dim())
    throw ShapeMismatch("forward: input dimension mismatch");
  ForwardCache cache;
  cache.pre.resize(static_cast<std::size_t>(net.depth));
  cache.post.resize(static_cast<std::size_t>(net.depth));
  std::vector<double> cur(z.begin(), z.end());
  std::vector<double> next;
  for (int j = 0; j <= net.depth; ++j) {
    const auto rows = static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j) + 1]);
    const auto cols = static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j)]);
    const double* w = net.weights[static_cast<std::size_t>(j)].data();
    next.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      const double* row = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * cur[c];
      next[r] = acc;
    }
    if (j < net.depth) {
      cache.pre[static_cast<std::size_t>(j)] = next;
      const auto& v = net.shifts[static_cast<std::size_t>(j)];
      for (std::size_t r = 0; r < rows; ++r)
        next[r] = std::max(next[r] - v[r], 0.0);
      cache.post[static_cast<std::size_t>(j)] = next;
    }
    cur.swap(next);
  }
  cache.out_raw = cur;
  for (double& v : cur) v = std::clamp(v, -net.sup_bound, net.sup_bound);
  cache.out = std::move(cur);
  return cache;
}

std::vector<double> forward(const SparseReluNet& net,
                            std::span<const double> z) {
  return forward_cache(net, z).out;
}

void NetGrads::scale(double a) {
  for (auto& w : d_weights)
    for (double& x : w) x *= a;
  for (auto& v : d_shifts)
    for (double& x : v) x *= a;
}

void NetGrads::add(const NetGrads& other) {
  for (std::size_t j = 0; j < d_weights.size(); ++j)
    for (std::size_t k = 0; k < d_weights[j].size(); ++k)
      d_weights[j][k] += other.d_weights[j][k];
  for (std::size_t j = 0; j < d_shifts.size(); ++j)
    for (std::size_t k = 0; k < d_shifts[j].size(); ++k)
      d_shifts[j][k] += other.d_shifts[j][k];
}

NetGrads zero_grads(const SparseReluNet& net) {
  NetGrads g;
  g.d_weights.resize(net.weights.size());
  g.d_shifts.resize(net.shifts.size());
  for (std::size_t j = 0; j < net.weights.size(); ++j)
    g.d_weights[j].assign(net.weights[j].size(), 0.0);
  for (std::size_t j = 0; j < net.shifts.size(); ++j)
    g.d_shifts[j].assign(net.shifts[j].size(), 0.0);
  return g;
}

void backward(const SparseReluNet& net, std::span<const double> z,
              std::span<const double> upstream, NetGrads& into) {
  if (static_cast<int>(upstream.size()) != net.out_dim())
    throw ShapeMismatch("backward: cotangent dimension mismatch");
  ForwardCache cache = forward_cache(net, z);
  // clamp: identity strictly inside (-F, F), zero gradient outside
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t k = 0; k < delta.size(); ++k)
    if (std::abs(cache.out_raw[k]) >= net.sup_bound) delta[k] = 0.0;

  for (int j = net.depth; j >= 0; --j) {
    const auto rows = static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j) + 1]);
    const auto cols = static_cast<std::size_t>(net.widths[static_cast<std::size_t>(j)]);
    const double* in =
        j == 0 ? z.data() : cache.post[static_cast<std::size_t>(j) - 1].data();
    double* dw = into.d_weights[static_cast<std::size_t>(j)].data();
    const double* w = net.weights[static_cast<std::size_t>(j)].data();
    std::vector<double> down(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double dr = delta[r];
      if (dr != 0.0) {
        double* dwrow = dw + r * cols;
        const double* wrow = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
          dwrow[c] += dr * in[c];
          down[c] += dr * wrow[c];
        }
      }
    }
    if (j > 0) {
      // through rho_v: active iff pre - v > 0 (subgradient 0 at the kink)
      const auto& pre = cache.pre[static_cast<std::size_t>(j) - 1];
      const auto& v = net.shifts[static_cast<std::size_t>(j) - 1];
      double* dv = into.d_shifts[static_cast<std::size_t>(j) - 1].data();
      for (std::size_t c = 0; c < cols; ++c) {
        if (pre[c] - v[c] > 0.0) {
          dv[c] += -down[c];
        } else {
          down[c] = 0.0;
        }
      }
    }
    delta.swap(down);
  }
}

NetGrads backward(const SparseReluNet& net, std::span<const double> z,
                  std::span<const double> upstream) {
  NetGrads g = zero_grads(net);
  backward(net, z, upstream, g);
  return g;
}

SparseReluNet project(SparseReluNet net) {
  net.validate_shapes();
  for (auto& w : net.weights)
    for (double& x : w) x = std::clamp(x, -1.0, 1.0);
  for (auto& v : net.shifts)
    for (double& x : v) x = std::clamp(x, -1.0, 1.0);

  // joint top-s selection across layers j >= 1 (weights and shifts);
  // deterministic tie-break by (layer kind, layer, flat index)
  struct Slot {
    double mag;
    int kind;  // 0 = weight, 1 = shift
    int layer;
    long idx;
  };
  std::vector<Slot> slots;
  for (std::size_t j = 1; j < net.weights.size(); ++j)
    for (std::size_t k = 0; k < net.weights[j].size(); ++k)
      if (net.weights[j][k] != 0.0)
        slots.push_back({std::abs(net.weights[j][k]), 0, static_cast<int>(j),
                         static_cast<long>(k)});
  for (std::size_t j = 0; j < net.shifts.size(); ++j)
    for (std::size_t k = 0; k < net.shifts[j].size(); ++k)
      if (net.shifts[j][k] != 0.0)
        slots.push_back({std::abs(net.shifts[j][k]), 1, static_cast<int>(j),
                         static_cast<long>(k)});
  const long s = net.sparsity_budget;
  if (static_cast<long>(slots.size()) > s) {
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
      return std::tie(b.mag, a.kind, a.layer, a.idx) <
             std::tie(a.mag, b.kind, b.layer, b.idx);
    });
    for (std::size_t r = static_cast<std::size_t>(s); r < slots.size(); ++r) {
      const Slot& slot = slots[r];
      if (slot.kind == 0)
        net.weights[static_cast<std::size_t>(slot.layer)]
                   [static_cast<std::size_t>(slot.idx)] = 0.0;
      else
        net.shifts[static_cast<std::size_t>(slot.layer)]
                  [static_cast<std::size_t>(slot.idx)] = 0.0;
    }
  }
  return net;
}

void apply_step(SparseReluNet& net, const NetGrads& grads, double step) {
  for (std::size_t j = 0; j < net.weights.size(); ++j)
    for (std::size_t k = 0; k < net.weights[j].size(); ++k)
      net.weights[j][k] -= step * grads.d_weights[j][k];
  for (std::size_t j = 0; j < net.shifts.size(); ++j)
    for (std::size_t k = 0; k < net.shifts[j].size(); ++k)
      net.shifts[j][k] -= step * grads.d_shifts[j][k];
  net = project(std::move(net));
}

NetSize size_for(long n, double beta_star, double t_star,
                 const SizeConstants& constants) {
  if (n < 2) throw DomainError("size_for: n must be >= 2");
  const double logn = std::log(static_cast<double>(n));
  const double expo = t_star / (2.0 * beta_star + t_star);
  const double poly = std::pow(static_cast<double>(n), expo) * logn;
  NetSize size;
  size.depth = static_cast<long>(std::ceil(constants.c_depth * logn));
  size.width = static_cast<long>(std::ceil(constants.c_width * poly));
  size.sparsity = static_cast<long>(std::ceil(constants.c_sparsity * poly));
  size.depth = std::max(size.depth, 1L);
  size.width = std::max(size.width, 1L);
  size.sparsity = std::max(size.sparsity, 1L);
  return size;
}

std::vector<int> make_widths(int in_dim, int out_dim, long depth, long width) {
  std::vector<int> widths;
  widths.push_back(in_dim);
  for (long i = 0; i < depth; ++i) widths.push_back(static_cast<int>(width));
  widths.push_back(out_dim);
  return widths;
}

double covering_bound(long depth, const std::vector<int>& widths, long sparsity,
                      double eps) {
  if (eps <= 0.0) throw DomainError("covering_bound: eps must be positive");
  double width_sum = 0.0;
  for (int p : widths) width_sum += std::log(static_cast<double>(p) + 1.0);
  double inner = std::log(2.0) + std::log(1.0 / eps) +
                 std::log(static_cast<double>(depth) + 1.0) + 2.0 * width_sum;
  return static_cast<double>(sparsity + 1) * inner;
}

std::string SparseReluNet::to_json() const {
  json j;
  j["depth"] = depth;
  j["widths"] = widths;
  j["sparsity_budget"] = sparsity_budget;
  j["sup_bound"] = sup_bound;
  j["weights"] = weights;  // dense, explicit zeros
  j["shifts"] = shifts;
  return j.dump();
}

SparseReluNet SparseReluNet::from_json(const std::string& text) {
  json j = json::parse(text);
  SparseReluNet net;
  net.depth = j.at("depth").get<int>();
  net.widths = j.at("widths").get<std::vector<int>>();
  net.sparsity_budget = j.at("sparsity_budget").get<long>();
  net.sup_bound = j.at("sup_bound").get<double>();
  net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  net.shifts = j.at("shifts").get<std::vector<std::vector<double>>>();
  net.validate_shapes();
  return net;
}

}  // namespace ganlab::netgen
