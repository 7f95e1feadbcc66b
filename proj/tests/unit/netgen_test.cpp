#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "ganlab/netgen.hpp"
#include "ganlab/rng.hpp"

using namespace ganlab;
using netgen::SparseReluNet;

namespace {

// straight-loop reference evaluator, independent of netgen::forward
std::vector<double> forward_oracle(const SparseReluNet& net,
                                   const std::vector<double>& z) {
  std::vector<double> cur = z;
  for (int layer = 0; layer <= net.depth; ++layer) {
    int rows = net.widths[static_cast<std::size_t>(layer) + 1];
    int cols = net.widths[static_cast<std::size_t>(layer)];
    std::vector<double> nxt(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        nxt[static_cast<std::size_t>(r)] +=
            net.weights[static_cast<std::size_t>(layer)]
                       [static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                        static_cast<std::size_t>(c)] *
            cur[static_cast<std::size_t>(c)];
    if (layer < net.depth)
      for (int r = 0; r < rows; ++r) {
        double shifted = nxt[static_cast<std::size_t>(r)] -
                         net.shifts[static_cast<std::size_t>(layer)]
                                   [static_cast<std::size_t>(r)];
        nxt[static_cast<std::size_t>(r)] = shifted > 0 ? shifted : 0.0;
      }
    cur = nxt;
  }
  for (double& x : cur) {
    if (x > net.sup_bound) x = net.sup_bound;
    if (x < -net.sup_bound) x = -net.sup_bound;
  }
  return cur;
}

SparseReluNet sample_net(Rng& rng, int depth, int width, int in_dim, int out_dim,
                         long s, double f = 10.0) {
  return netgen::random_net(depth, netgen::make_widths(in_dim, out_dim, depth, width),
                            s, f, rng, 0.9);
}

// resample until every preactivation and clamp margin clears `margin`
std::vector<double> safe_input(const SparseReluNet& net, Rng& rng,
                               double margin) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> z;
    for (int k = 0; k < net.in_dim(); ++k) z.push_back(rng.uniform(-1, 1));
    auto cache = netgen::forward_cache(net, z);
    bool ok = true;
    for (int l = 0; l < net.depth && ok; ++l)
      for (std::size_t r = 0; r < cache.pre[static_cast<std::size_t>(l)].size(); ++r)
        if (std::abs(cache.pre[static_cast<std::size_t>(l)][r] -
                     net.shifts[static_cast<std::size_t>(l)][r]) < margin) {
          ok = false;
          break;
        }
    for (double y : cache.out_raw)
      if (std::abs(std::abs(y) - net.sup_bound) < margin) ok = false;
    if (ok) return z;
  }
  return std::vector<double>(static_cast<std::size_t>(net.in_dim()), 0.37);
}

}  // namespace

TEST_CASE("forward: zero net, affine-only net, shape errors") {
  SparseReluNet zero = netgen::make_net(1, {2, 3, 2}, 10, 5.0);
  auto out = netgen::forward(zero, std::vector<double>{0.4, -0.2});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  SparseReluNet affine = netgen::make_net(0, {1, 1}, 0, 5.0);
  affine.weights[0][0] = 1.0;
  CHECK(netgen::forward(affine, std::vector<double>{0.3})[0] ==
        doctest::Approx(0.3).epsilon(1e-15));

  CHECK_THROWS_AS(netgen::forward(zero, std::vector<double>{1.0}),
                  ShapeMismatch);
}

TEST_CASE("forward matches the straight-loop reference") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    SparseReluNet net = sample_net(rng, 2, 6, 2, 2, 40);
    for (int pt = 0; pt < 20; ++pt) {
      std::vector<double> z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      auto a = netgen::forward(net, z);
      auto b = forward_oracle(net, z);
      for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward clamps to the sup bound") {
  Rng rng(3);
  SparseReluNet net = sample_net(rng, 1, 4, 1, 1, 12, 0.05);
  for (int pt = 0; pt < 50; ++pt) {
    auto out = netgen::forward(net, std::vector<double>{rng.uniform(-3, 3)});
    CHECK(std::abs(out[0]) <= 0.05 + 1e-15);
  }
}

TEST_CASE("backward: zero upstream, single neuron, finite differences") {
  Rng rng(21);
  SparseReluNet net = sample_net(rng, 2, 5, 2, 2, 30);
  std::vector<double> z{0.3, -0.4};
  auto g0 = netgen::backward(net, z, std::vector<double>{0.0, 0.0});
  for (const auto& layer : g0.d_weights)
    for (double x : layer) CHECK(x == 0.0);

  // single linear neuron f(z) = w z: df/dw = z
  SparseReluNet lin = netgen::make_net(0, {1, 1}, 0, 10.0);
  lin.weights[0][0] = 0.5;
  auto g1 = netgen::backward(lin, std::vector<double>{0.7},
                             std::vector<double>{1.0});
  CHECK(g1.d_weights[0][0] == doctest::Approx(0.7).epsilon(1e-15));

  // random nets vs central differences away from kinks
  for (int trial = 0; trial < 25; ++trial) {
    SparseReluNet rnet = sample_net(rng, 2, 5, 2, 1, 35);
    std::vector<double> zz = safe_input(rnet, rng, 1e-4);
    std::vector<double> up{1.0};
    auto grads = netgen::backward(rnet, zz, up);
    const double h = 1e-5;
    double max_rel = 0.0;
    for (int layer = 0; layer <= rnet.depth; ++layer) {
      for (std::size_t k = 0; k < rnet.weights[static_cast<std::size_t>(layer)].size();
           k += 3) {
        SparseReluNet plus = rnet, minus = rnet;
        plus.weights[static_cast<std::size_t>(layer)][k] += h;
        minus.weights[static_cast<std::size_t>(layer)][k] -= h;
        double fd = (netgen::forward(plus, zz)[0] - netgen::forward(minus, zz)[0]) /
                    (2 * h);
        double an = grads.d_weights[static_cast<std::size_t>(layer)][k];
        double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
        max_rel = std::max(max_rel, rel);
      }
    }
    for (int layer = 0; layer < rnet.depth; ++layer) {
      for (std::size_t k = 0; k < rnet.shifts[static_cast<std::size_t>(layer)].size();
           ++k) {
        SparseReluNet plus = rnet, minus = rnet;
        plus.shifts[static_cast<std::size_t>(layer)][k] += h;
        minus.shifts[static_cast<std::size_t>(layer)][k] -= h;
        double fd = (netgen::forward(plus, zz)[0] - netgen::forward(minus, zz)[0]) /
                    (2 * h);
        double an = grads.d_shifts[static_cast<std::size_t>(layer)][k];
        double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
        max_rel = std::max(max_rel, rel);
      }
    }
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("project: clip, top-s selection, idempotence") {
  SparseReluNet net = netgen::make_net(1, {1, 3, 1}, 3, 5.0);
  net.weights[0] = {2.5, -0.1, 0.9};            // input layer: clipped, not counted
  net.weights[1] = {0.8, -1.7, 0.3};            // hidden: counted
  net.shifts[0] = {0.6, -0.2, 0.05};
  SparseReluNet p = netgen::project(net);
  CHECK(p.weights[0][0] == 1.0);  // clip of 2.5
  // counted entries after clipping: 0.8, 1.0, 0.3, 0.6, 0.2, 0.05 -> keep top 3
  long nz = p.nonzero_count();
  CHECK(nz == 3);
  CHECK(p.weights[1][1] == -1.0);
  CHECK(p.weights[1][0] == 0.8);
  CHECK(p.shifts[0][0] == 0.6);
  CHECK(p.weights[1][2] == 0.0);
  CHECK(p.shifts[0][1] == 0.0);
  CHECK(p.shifts[0][2] == 0.0);

  // feasible nets unchanged; projection idempotent bit-exactly
  SparseReluNet q = netgen::project(p);
  CHECK(q.to_json() == p.to_json());

  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    SparseReluNet r = netgen::make_net(2, {2, 4, 4, 1}, 9, 3.0);
    for (auto& w : r.weights)
      for (double& x : w) x = rng.uniform(-2, 2);
    for (auto& v : r.shifts)
      for (double& x : v) x = rng.uniform(-2, 2);
    SparseReluNet pr = netgen::project(r);
    CHECK(pr.max_entry() <= 1.0);
    CHECK(pr.nonzero_count() <= 9);
    CHECK(netgen::project(pr).to_json() == pr.to_json());

    // sort oracle: the surviving magnitudes are the s largest
    std::vector<double> mags;
    for (std::size_t j = 1; j < r.weights.size(); ++j)
      for (double x : r.weights[j])
        mags.push_back(std::min(std::abs(x), 1.0));
    for (const auto& v : r.shifts)
      for (double x : v) mags.push_back(std::min(std::abs(x), 1.0));
    std::sort(mags.rbegin(), mags.rend());
    double kept_min = 1e300;
    for (std::size_t j = 1; j < pr.weights.size(); ++j)
      for (double x : pr.weights[j])
        if (x != 0.0) kept_min = std::min(kept_min, std::abs(x));
    for (const auto& v : pr.shifts)
      for (double x : v)
        if (x != 0.0) kept_min = std::min(kept_min, std::abs(x));
    CHECK(kept_min >= mags[8] - 1e-15);
  }
}

TEST_CASE("size_for: pinned arithmetic and limits") {
  auto size = netgen::size_for(403, 1.0, 1.0);
  CHECK(size.width == 45);  // ceil(403^(1/3) * log 403)
  CHECK(size.sparsity == 45);
  CHECK(size.depth == 6);

  // exponent t*/(2 beta* + t*) = 1/5 for beta*=2, t*=1
  auto s2 = netgen::size_for(100000, 2.0, 1.0);
  double expo = std::log(static_cast<double>(s2.width) /
                         std::log(100000.0)) /
                std::log(100000.0);
  CHECK(expo == doctest::Approx(0.2).epsilon(0.05));

  // L / log n -> c_L
  for (long n : {1000L, 100000L, 10000000L}) {
    auto s3 = netgen::size_for(n, 1.0, 1.0);
    CHECK(std::abs(static_cast<double>(s3.depth) / std::log(static_cast<double>(n)) -
                   1.0) <= 1.0 / std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("covering bound: pinned values and monotonicity") {
  CHECK(netgen::covering_bound(2, {1, 5, 5, 1}, 10, 0.1) ==
        doctest::Approx(154.37).epsilon(1e-4));
  CHECK(netgen::covering_bound(0, {1, 1}, 0, 1.0) ==
        doctest::Approx(3.466).epsilon(1e-3));
  double prev = 0.0;
  for (long s = 1; s <= 64; s *= 2) {
    double b = netgen::covering_bound(3, {2, 8, 8, 8, 1}, s, 0.05);
    CHECK(b > prev);
    prev = b;
  }
  CHECK_THROWS_AS(netgen::covering_bound(1, {1, 1, 1}, 1, 0.0), DomainError);
}

TEST_CASE("piecewise linearity along rays") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    SparseReluNet net = sample_net(rng, 2, 6, 2, 1, 60, 50.0);
    long hidden = 12;
    std::vector<double> z0{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> dir{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int steps = 1000;
    std::vector<double> vals;
    for (int s = 0; s <= steps; ++s) {
      double t = static_cast<double>(s) / steps;
      std::vector<double> z{z0[0] + t * dir[0], z0[1] + t * dir[1]};
      vals.push_back(netgen::forward(net, z)[0]);
    }
    // continuity and kink count via second differences
    long kinks = 0;
    double scale = 0.0;
    for (int s = 0; s + 1 <= steps; ++s)
      scale = std::max(scale, std::abs(vals[static_cast<std::size_t>(s + 1)] -
                                       vals[static_cast<std::size_t>(s)]));
    for (int s = 1; s + 1 <= steps; ++s) {
      double dd = vals[static_cast<std::size_t>(s + 1)] -
                  2 * vals[static_cast<std::size_t>(s)] +
                  vals[static_cast<std::size_t>(s - 1)];
      if (std::abs(dd) > 1e-7 + 1e-9 * scale) ++kinks;
      CHECK(std::abs(vals[static_cast<std::size_t>(s + 1)] -
                     vals[static_cast<std::size_t>(s)]) <= 10 * scale + 1e-12);
    }
    CHECK(kinks <= hidden + 1);
  }
}

TEST_CASE("json round trip preserves the net bit-exactly") {
  Rng rng(77);
  SparseReluNet net = sample_net(rng, 2, 5, 2, 3, 25);
  SparseReluNet back = SparseReluNet::from_json(net.to_json());
  CHECK(back.to_json() == net.to_json());
  for (int pt = 0; pt < 5; ++pt) {
    std::vector<double> z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto a = netgen::forward(net, z);
    auto b = netgen::forward(back, z);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}
