#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ganlab/measures.hpp"
#include "ganlab/ot.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/util.hpp"

using namespace ganlab;
using measures::EmpiricalMeasure;
using ot::w1_bruteforce;
using ot::w1_cost;
using ot::w1_exact;

namespace {

EmpiricalMeasure random_cloud(int n, int dim, Rng& rng, double scale = 1.0) {
  std::vector<double> pts(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  for (double& x : pts) x = scale * rng.uniform();
  return measures::uniform_cloud(dim, std::move(pts));
}

EmpiricalMeasure weighted_cloud(int n, int dim, Rng& rng) {
  EmpiricalMeasure mu = random_cloud(n, dim, rng);
  double sum = 0.0;
  for (double& w : mu.weights) {
    w = 0.05 + rng.uniform();
    sum += w;
  }
  for (double& w : mu.weights) w /= sum;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < mu.weights.size(); ++i) acc += mu.weights[i];
  mu.weights.back() = 1.0 - acc;
  return mu;
}

EmpiricalMeasure dirac(std::vector<double> x) {
  int dim = static_cast<int>(x.size());
  return measures::uniform_cloud(dim, std::move(x));
}

double duality_gap(const ot::TransportPlan& plan, const EmpiricalMeasure& mu,
                   const EmpiricalMeasure& nu) {
  double dual = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    dual += mu.weights[static_cast<std::size_t>(i)] *
            plan.source_potential[static_cast<std::size_t>(i)];
  for (int j = 0; j < nu.size(); ++j)
    dual -= nu.weights[static_cast<std::size_t>(j)] *
            plan.target_potential[static_cast<std::size_t>(j)];
  return plan.cost - dual;
}

}  // namespace

TEST_CASE("w1_exact trivial cases") {
  EmpiricalMeasure a = dirac({0.0, 0.0});
  EmpiricalMeasure b = dirac({3.0, 4.0});
  CHECK(w1_exact(a, b).cost == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(w1_exact(a, a).cost == doctest::Approx(0.0).epsilon(1e-12));

  // uniform on {0,1} vs uniform on {0,2} in one dimension
  EmpiricalMeasure c = measures::uniform_cloud(1, {0.0, 1.0});
  EmpiricalMeasure d = measures::uniform_cloud(1, {0.0, 2.0});
  CHECK(w1_exact(c, d).cost == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w1_bruteforce(c, d) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("w1_exact matches brute force on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng.next_below(5));  // up to 6 atoms
    int dim = 1 + static_cast<int>(rng.next_below(3));
    EmpiricalMeasure mu = random_cloud(n, dim, rng);
    EmpiricalMeasure nu = random_cloud(n, dim, rng);
    double exact = w1_exact(mu, nu).cost;
    double brute = w1_bruteforce(mu, nu);
    CHECK(std::abs(exact - brute) < 1e-9);
  }
}

TEST_CASE("brute force guard") {
  Rng rng(5);
  EmpiricalMeasure mu = random_cloud(9, 2, rng);
  EmpiricalMeasure nu = random_cloud(9, 2, rng);
  CHECK_THROWS_AS(w1_bruteforce(mu, nu), TooLarge);
}

TEST_CASE("duality gap, marginals and dual feasibility") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(rng.next_below(60));
    int m = 3 + static_cast<int>(rng.next_below(60));
    int dim = 1 + static_cast<int>(rng.next_below(3));
    EmpiricalMeasure mu = weighted_cloud(n, dim, rng);
    EmpiricalMeasure nu = weighted_cloud(m, dim, rng);
    ot::TransportPlan plan = w1_exact(mu, nu);
    CHECK(std::abs(duality_gap(plan, mu, nu)) < 1e-6);
    std::vector<double> row(static_cast<std::size_t>(n), 0.0), col(static_cast<std::size_t>(m), 0.0);
    for (const auto& e : plan.coupling) {
      CHECK(e.mass >= 0.0);
      row[static_cast<std::size_t>(e.i)] += e.mass;
      col[static_cast<std::size_t>(e.j)] += e.mass;
    }
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(row[static_cast<std::size_t>(i)] - mu.weights[static_cast<std::size_t>(i)]) < 1e-9);
    for (int j = 0; j < m; ++j)
      CHECK(std::abs(col[static_cast<std::size_t>(j)] - nu.weights[static_cast<std::size_t>(j)]) < 1e-9);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        CHECK(plan.source_potential[static_cast<std::size_t>(i)] -
                  plan.target_potential[static_cast<std::size_t>(j)] <=
              dist2(mu.row(i), nu.row(j)) + 1e-9);
  }
}

TEST_CASE("solution is invariant under atom reordering") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 64;
    EmpiricalMeasure mu = random_cloud(n, 2, rng);
    EmpiricalMeasure nu = random_cloud(n, 2, rng);
    double a = w1_exact(mu, nu).cost;
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i + 1)))]);
    EmpiricalMeasure mu2;
    mu2.dim = 2;
    for (int i = 0; i < n; ++i)
      mu2.push_row(mu.row(perm[static_cast<std::size_t>(i)]), mu.weights[static_cast<std::size_t>(i)]);
    double b = w1_exact(mu2, nu).cost;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("1-D closed form agrees with the simplex") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + static_cast<int>(rng.next_below(40));
    int m = 2 + static_cast<int>(rng.next_below(40));
    EmpiricalMeasure mu = weighted_cloud(n, 1, rng);
    EmpiricalMeasure nu = weighted_cloud(m, 1, rng);
    CHECK(ot::w1_sorted_1d(mu, nu) ==
          doctest::Approx(w1_exact(mu, nu).cost).epsilon(1e-9));
  }
}

TEST_CASE("metric axioms on empirical measures") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    int dim = 1 + static_cast<int>(rng.next_below(3));
    EmpiricalMeasure a = random_cloud(12, dim, rng);
    EmpiricalMeasure b = random_cloud(9, dim, rng);
    EmpiricalMeasure c = random_cloud(15, dim, rng);
    double ab = w1_exact(a, b).cost;
    double ba = w1_exact(b, a).cost;
    double bc = w1_exact(b, c).cost;
    double ac = w1_exact(a, c).cost;
    CHECK(std::abs(ab - ba) < 1e-9);
    CHECK(ac <= ab + bc + 1e-9);
    CHECK(w1_exact(a, a).cost < 1e-9);
  }
}

TEST_CASE("w2 dominates w1") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 1 + static_cast<int>(rng.next_below(3));
    int n = 2 + static_cast<int>(rng.next_below(12));
    int m = 2 + static_cast<int>(rng.next_below(12));
    EmpiricalMeasure a = random_cloud(n, dim, rng);
    EmpiricalMeasure b = random_cloud(m, dim, rng);
    double w1 = w1_exact(a, b).cost;
    double w2 = ot::w2_exact(a, b);
    CHECK(w1 <= w2 + 1e-9);
  }
  EmpiricalMeasure a = dirac({1.0, 2.0});
  EmpiricalMeasure b = dirac({4.0, 6.0});
  CHECK(ot::w2_exact(a, b) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(ot::w2_exact(a, a) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kantorovich potential attains the dual and is 1-Lipschitz") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    EmpiricalMeasure mu = random_cloud(10, 2, rng);
    EmpiricalMeasure nu = random_cloud(10, 2, rng);
    double w1 = w1_exact(mu, nu).cost;
    ot::PotentialFn f = ot::kantorovich_potential(mu, nu);
    double gap =
        mu.integrate([&](std::span<const double> x) { return f.eval(x); }) -
        nu.integrate([&](std::span<const double> x) { return f.eval(x); });
    CHECK(gap >= w1 - 1e-6);
    CHECK(gap <= w1 + 1e-6);
    std::vector<double> zero{0.0, 0.0};
    CHECK(std::abs(f.eval(zero)) < 1e-12);
    for (int pair = 0; pair < 200; ++pair) {
      std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      std::vector<double> y{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      double lhs = std::abs(f.eval(x) - f.eval(y));
      CHECK(lhs <= dist2(x, y) + 1e-12);
    }
  }
  EmpiricalMeasure a = dirac({0.0, 0.0});
  EmpiricalMeasure b = dirac({1.0, 1.0});
  ot::PotentialFn f = ot::kantorovich_potential(a, b);
  double fa = f.eval(std::vector<double>{0.0, 0.0});
  double fb = f.eval(std::vector<double>{1.0, 1.0});
  CHECK(fa - fb == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("degenerate inputs are rejected") {
  EmpiricalMeasure empty;
  empty.dim = 1;
  CHECK_THROWS_AS(w1_exact(empty, dirac({0.0})), DegenerateInput);
}
