#include "doctest.h"

#include <cmath>
#include <vector>

#include "ganlab/ipm.hpp"
#include "ganlab/measures.hpp"
#include "ganlab/ot.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/series.hpp"
#include "ganlab/util.hpp"

using namespace ganlab;
using measures::EmpiricalMeasure;
using measures::Generator;

namespace {

EmpiricalMeasure random_cloud(int n, int dim, Rng& rng) {
  std::vector<double> pts(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  for (double& x : pts) x = rng.uniform();
  return measures::uniform_cloud(dim, std::move(pts));
}

ot::PotentialFn random_potential(int anchors, int dim, Rng& rng) {
  ot::PotentialFn f;
  f.dim = dim;
  for (int i = 0; i < anchors; ++i) {
    for (int k = 0; k < dim; ++k) f.anchors.push_back(rng.uniform());
    f.values.push_back(0.3 * rng.uniform(-1, 1));
  }
  return f;
}

}  // namespace

TEST_CASE("ipm basics: identical measures, sign symmetry, exhaustive oracle") {
  Rng rng(1);
  EmpiricalMeasure mu = random_cloud(30, 2, rng);
  EmpiricalMeasure nu = random_cloud(25, 2, rng);

  ipm::FiniteSet set;
  for (int i = 0; i < 5; ++i) set.members.push_back(random_potential(6, 2, rng));
  ipm::DiscriminatorClass cls = set;
  CHECK(ipm::ipm(cls, mu, mu) == doctest::Approx(0.0).epsilon(1e-15));

  // {f, -f}: value is |mu f - nu f|
  ot::PotentialFn f = set.members[0];
  ot::PotentialFn neg = f;
  // the min-form cannot represent -f directly; check via one-member class
  ipm::FiniteSet one;
  one.members = {f};
  double direct = std::abs(
      mu.integrate([&](std::span<const double> x) { return f.eval(x); }) -
      nu.integrate([&](std::span<const double> x) { return f.eval(x); }));
  CHECK(ipm::ipm(ipm::DiscriminatorClass{one}, mu, nu) ==
        doctest::Approx(direct).epsilon(1e-12));

  // exhaustive per-member oracle
  double oracle = 0.0;
  for (const auto& member : set.members) {
    double a = mu.integrate([&](std::span<const double> x) { return member.eval(x); });
    double b = nu.integrate([&](std::span<const double> x) { return member.eval(x); });
    oracle = std::max(oracle, std::abs(a - b));
  }
  CHECK(ipm::ipm(cls, mu, nu) == doctest::Approx(oracle).epsilon(1e-12));

  ipm::FiniteSet empty;
  CHECK_THROWS_AS(ipm::ipm(ipm::DiscriminatorClass{empty}, mu, nu), EmptyClass);
}

TEST_CASE("finite-set ipm is a pseudometric below W1") {
  Rng rng(2);
  ipm::FiniteSet set;
  for (int i = 0; i < 7; ++i) set.members.push_back(random_potential(5, 2, rng));
  ipm::DiscriminatorClass cls = set;
  for (int trial = 0; trial < 20; ++trial) {
    EmpiricalMeasure a = random_cloud(12, 2, rng);
    EmpiricalMeasure b = random_cloud(10, 2, rng);
    EmpiricalMeasure c = random_cloud(14, 2, rng);
    double ab = ipm::ipm(cls, a, b);
    double ba = ipm::ipm(cls, b, a);
    double bc = ipm::ipm(cls, b, c);
    double ac = ipm::ipm(cls, a, c);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(ab <= ot::w1_exact(a, b).cost + 1e-9);  // members are 1-Lipschitz
  }
}

TEST_CASE("constructed discriminator: single and constant candidates") {
  std::vector<Generator> single{Generator::constant(1, {0.5, 0.5})};
  ipm::BuildInfo info;
  ipm::FiniteSet set = ipm::build_constructed_discriminator(single, 32, 0.05, 3, &info);
  CHECK(set.members.size() == 1);
  CHECK(info.net_indices.size() == 1);
  CHECK(ipm::ipm(ipm::DiscriminatorClass{set}, info.pushforwards[0],
                 info.pushforwards[0]) == doctest::Approx(0.0));

  // two Dirac-like constant generators: d_F recovers the distance
  std::vector<Generator> two{Generator::constant(1, {0.2, 0.2}),
                             Generator::constant(1, {0.8, 1.0})};
  ipm::BuildInfo info2;
  ipm::FiniteSet set2 = ipm::build_constructed_discriminator(two, 32, 0.01, 4, &info2);
  double want = std::hypot(0.6, 0.8);
  CHECK(ipm::ipm(ipm::DiscriminatorClass{set2}, info2.pushforwards[0],
                 info2.pushforwards[1]) == doctest::Approx(want).epsilon(1e-9));
  CHECK(ot::w1_cost(info2.pushforwards[0], info2.pushforwards[1]) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("constructed discriminator: 5e bound on random composite candidates") {
  Rng rng(5);
  composite::CompositeSpec spec;
  spec.depth = 0;
  spec.widths = {1, 2};
  spec.arities = {1};
  spec.smoothnesses = {1.2};
  spec.bound = 3.0;
  std::vector<Generator> candidates;
  for (int i = 0; i < 6; ++i)
    candidates.push_back(
        Generator::from(composite::make_synthetic_truth(100 + static_cast<std::uint64_t>(i), spec)));
  const double eps = 0.08;
  ipm::BuildInfo info;
  ipm::FiniteSet set =
      ipm::build_constructed_discriminator(candidates, 128, eps, 6, &info);
  ipm::DiscriminatorClass cls = set;

  std::vector<std::pair<EmpiricalMeasure, EmpiricalMeasure>> pairs;
  for (std::size_t a = 0; a < candidates.size(); ++a)
    for (std::size_t b = a + 1; b < candidates.size(); ++b)
      pairs.emplace_back(info.pushforwards[a], info.pushforwards[b]);
  for (const auto& [mu, nu] : pairs) {
    double w1 = ot::w1_cost(mu, nu);
    double df = ipm::ipm(cls, mu, nu);
    CHECK(df <= w1 + 1e-9);
    CHECK(df >= w1 - 5.0 * eps - 1e-6);
  }
  double worst = ipm::deviation_check(set, pairs);
  CHECK(worst <= 5.0 * eps + 1e-6);

  // identical pair deviates by zero; exact potentials give zero deviation
  CHECK(ipm::deviation_check(set, {{info.pushforwards[0], info.pushforwards[0]}}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  ipm::FiniteSet exact;
  for (const auto& [mu, nu] : pairs)
    exact.members.push_back(ot::kantorovich_potential(mu, nu));
  CHECK(ipm::deviation_check(exact, pairs) <= 1e-6);
}

TEST_CASE("smooth gap curve: zero noise, linear feature, quadratic identity") {
  Generator g = Generator::constant(1, {0.4, 0.6, 0.2});
  ipm::SmoothFeature quad;
  quad.kind = ipm::SmoothFeature::Kind::quadratic;
  quad.dim = 3;

  auto curve = ipm::smooth_gap_curve(g, quad, {0.0, 0.1, 0.2}, 4000, 11);
  CHECK(curve[0].gap == doctest::Approx(0.0));
  // quadratic-constant case: gap = D sigma^2 exactly, within MC stderr
  for (std::size_t i = 1; i < curve.size(); ++i) {
    double want = 3.0 * curve[i].sigma * curve[i].sigma;
    CHECK(std::abs(curve[i].gap - want) <= 4.0 * curve[i].stderr_ + 1e-12);
  }

  ipm::SmoothFeature lin;
  lin.kind = ipm::SmoothFeature::Kind::linear;
  lin.amplitude = 0.7;
  lin.frequency = {1.0, -2.0, 0.5};
  auto lcurve = ipm::smooth_gap_curve(g, lin, {0.0, 0.1, 0.3}, 500, 12);
  for (const auto& p : lcurve) CHECK(p.gap == doctest::Approx(0.0).epsilon(1e-12));

  // slope of log gap vs log sigma near 2 for the quadratic feature
  std::vector<double> grid{0.02, 0.04, 0.08, 0.16, 0.32};
  auto slope_curve = ipm::smooth_gap_curve(g, quad, grid, 20000, 13);
  harness::RateSeries series;
  for (std::size_t i = 0; i < grid.size(); ++i)
    series.rows.push_back({static_cast<long>(1e6 * grid[i]), 0, slope_curve[i].gap});
  auto fit = harness::fit_exponent(series);
  CHECK(std::abs(fit.slope - 2.0) < 0.3);
}

TEST_CASE("lipschitz gap curve: matched bound matches the chi mean") {
  composite::CompositeSpec spec;
  spec.depth = 0;
  spec.widths = {1, 2};
  spec.arities = {1};
  spec.smoothnesses = {1.5};
  spec.bound = 3.0;
  Generator g = Generator::from(composite::make_synthetic_truth(9, spec));
  std::vector<double> grid{0.0, 0.05, 0.1, 0.2};
  auto curve = ipm::lipschitz_gap_curve(g, grid, 1500, 21);
  CHECK(curve[0].w1 == doctest::Approx(0.0));
  const double chi2 = chi_mean(2);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double want = grid[i] * chi2;
    CHECK(std::abs(curve[i].matched_bound - want) <
          5.0 * grid[i] / std::sqrt(1500.0));
    CHECK(curve[i].w1 <= curve[i].matched_bound * (1.0 + 1e-9));
    CHECK(curve[i].w1 > 0.0);
  }
}

TEST_CASE("smooth feature class: empirical IPM rate is root-n") {
  // features with alpha > D/2 smoothness proxy: slope about -1/2
  Rng rng(31);
  ipm::SmoothFeatureSet set;
  for (int i = 0; i < 12; ++i) {
    ipm::SmoothFeature f;
    f.amplitude = rng.uniform(0.5, 1.0);
    f.frequency = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
    f.phase = rng.uniform(0, 6.28);
    set.features.push_back(f);
  }
  ipm::DiscriminatorClass cls = set;
  measures::LatentSpec law{2};
  harness::RateSeries series;
  Rng root(32);
  const int reps = 30;
  std::vector<long> grid{64, 256, 1024, 4096};
  Rng proxy_rng = root.split(999);
  EmpiricalMeasure proxy = measures::sample_latent(law, 32768, proxy_rng);
  for (std::size_t gi = 0; gi < grid.size(); ++gi)
    for (int rep = 0; rep < reps; ++rep) {
      Rng rr = root.split(gi * 1000 + static_cast<std::uint64_t>(rep));
      EmpiricalMeasure sample =
          measures::sample_latent(law, static_cast<int>(grid[gi]), rr);
      series.rows.push_back({grid[gi], rep, ipm::ipm(cls, sample, proxy)});
    }
  auto fit = harness::fit_exponent(series);
  CHECK(std::abs(fit.slope + 0.5) < 0.12);
}

TEST_CASE("lipschitz net discriminator: certified bound and evaluation") {
  Rng rng(41);
  netgen::SparseReluNet net =
      netgen::random_net(1, {2, 4, 1}, 10, 5.0, rng, 0.4);
  ipm::LipschitzNet lip{net, 50.0};
  CHECK_NOTHROW(lip.validate());
  double cert = lip.certified_bound();
  CHECK(cert > 0.0);
  // empirical Lipschitz quotient never exceeds the certificate
  for (int pair = 0; pair < 2000; ++pair) {
    std::vector<double> x{rng.uniform(), rng.uniform()};
    std::vector<double> y{rng.uniform(), rng.uniform()};
    double fx = netgen::forward(net, x)[0];
    double fy = netgen::forward(net, y)[0];
    double den = dist2(x, y);
    if (den > 1e-12) CHECK(std::abs(fx - fy) <= cert * den * (1 + 1e-9));
  }
  ipm::LipschitzNet tight{net, cert * 0.5};
  CHECK_THROWS_AS(tight.validate(), RangeViolation);

  EmpiricalMeasure mu = random_cloud(20, 2, rng);
  EmpiricalMeasure nu = random_cloud(20, 2, rng);
  double val = ipm::ipm(ipm::DiscriminatorClass{lip}, mu, nu);
  CHECK(val >= 0.0);
  CHECK(val <= cert * ot::w1_exact(mu, nu).cost + 1e-9);
}
