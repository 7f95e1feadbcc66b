#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ganlab/composite.hpp"
#include "ganlab/measures.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/util.hpp"

using namespace ganlab;
using measures::EmpiricalMeasure;
using measures::Generator;
using measures::LatentSpec;

namespace {

// two-sample energy statistic with a permutation threshold
double energy_stat(const std::vector<int>& g, const std::vector<double>& d,
                   int total) {
  double sxy = 0, sxx = 0, syy = 0;
  long nxy = 0, nxx = 0, nyy = 0;
  for (int i = 0; i < total; ++i)
    for (int j = i + 1; j < total; ++j) {
      double dist = d[static_cast<std::size_t>(i) * static_cast<std::size_t>(total) +
                      static_cast<std::size_t>(j)];
      if (g[static_cast<std::size_t>(i)] != g[static_cast<std::size_t>(j)]) {
        sxy += dist;
        ++nxy;
      } else if (g[static_cast<std::size_t>(i)] == 0) {
        sxx += dist;
        ++nxx;
      } else {
        syy += dist;
        ++nyy;
      }
    }
  return 2 * sxy / static_cast<double>(nxy) - sxx / static_cast<double>(nxx) -
         syy / static_cast<double>(nyy);
}

}  // namespace

TEST_CASE("latent sampling: determinism, mean, KS uniformity") {
  LatentSpec law{1};
  Rng a(9, 1), b(9, 1);
  EmpiricalMeasure s1 = measures::sample_latent(law, 512, a);
  EmpiricalMeasure s2 = measures::sample_latent(law, 512, b);
  CHECK(s1.points == s2.points);  // stream replay

  Rng c(10);
  const int n = 10000;
  EmpiricalMeasure big = measures::sample_latent(law, n, c);
  double mean = 0;
  for (double x : big.points) mean += x;
  mean /= n;
  CHECK(std::abs(mean - 0.5) <= 3.0 / std::sqrt(12.0 * n));

  // Kolmogorov-Smirnov vs uniform, 1% critical value 1.628/sqrt(n)
  std::vector<double> sorted = big.points;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0;
  for (int i = 0; i < n; ++i) {
    double f = sorted[static_cast<std::size_t>(i)];
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("pushforward: identity, constant, closed-form mean") {
  Rng rng(4);
  EmpiricalMeasure u = measures::pushforward_sample(Generator::identity(2), 256, rng);
  for (double x : u.points) CHECK((x >= 0.0 && x <= 1.0));

  Rng rng2(5);
  EmpiricalMeasure c =
      measures::pushforward_sample(Generator::constant(1, {0.25, 0.5}), 64, rng2);
  for (int i = 0; i < c.size(); ++i) {
    CHECK(c.row(i)[0] == 0.25);
    CHECK(c.row(i)[1] == 0.5);
  }

  // g(z) = 2z in one dimension: mean -> 1
  Generator twice(1, 1, [](std::span<const double> z) {
    return std::vector<double>{2.0 * z[0]};
  });
  Rng rng3(6);
  const int n = 20000;
  EmpiricalMeasure t = measures::pushforward_sample(twice, n, rng3);
  double mean = 0;
  for (double x : t.points) mean += x;
  mean /= n;
  CHECK(std::abs(mean - 1.0) < 4.0 * (2.0 / std::sqrt(12.0)) / std::sqrt(n));
}

TEST_CASE("noisy sampling: sigma=0 reduction, variance, covariance") {
  Rng a(11, 3), b(11, 3);
  Generator g = Generator::constant(1, {0.5, 0.5});
  EmpiricalMeasure clean = measures::pushforward_sample(g, 128, a);
  EmpiricalMeasure zero = measures::noisy_sample({g, 0.0}, 128, b);
  CHECK(clean.points == zero.points);

  const double sigma = 0.3;
  const int n = 20000;
  Rng c(12);
  EmpiricalMeasure noisy = measures::noisy_sample({g, sigma}, n, c);
  // per-coordinate variance of X - g(Z) and cross-covariance
  double v0 = 0, v1 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    double d0 = noisy.row(i)[0] - 0.5;
    double d1 = noisy.row(i)[1] - 0.5;
    v0 += d0 * d0;
    v1 += d1 * d1;
    cross += d0 * d1;
  }
  v0 /= n;
  v1 /= n;
  cross /= n;
  double tol = 5.0 * sigma * sigma * std::sqrt(2.0 / n);
  CHECK(std::abs(v0 - sigma * sigma) < tol);
  CHECK(std::abs(v1 - sigma * sigma) < tol);
  CHECK(std::abs(cross) < tol);
}

TEST_CASE("perturb: identity at zero, mean shift, variance inflation") {
  Rng rng(13);
  EmpiricalMeasure data = measures::sample_latent(LatentSpec{2}, 4000, rng);
  Rng r0(1);
  EmpiricalMeasure same = measures::perturb(data, 0.0, r0);
  CHECK(same.points == data.points);

  const double st = 0.2;
  Rng r1(2);
  EmpiricalMeasure moved = measures::perturb(data, st, r1);
  CHECK(moved.weights == data.weights);
  double shift = 0, var = 0;
  const int n = data.size();
  for (std::size_t k = 0; k < data.points.size(); ++k) {
    double d = moved.points[k] - data.points[k];
    shift += d;
    var += d * d;
  }
  shift /= static_cast<double>(data.points.size());
  var /= static_cast<double>(data.points.size());
  CHECK(std::abs(shift) < 4.0 * st / std::sqrt(2.0 * n));
  CHECK(std::abs(var - st * st) < 5.0 * st * st * std::sqrt(2.0 / (2.0 * n)));
}

TEST_CASE("noisy_sample distribution equals pushforward plus perturbation") {
  // energy statistic below the 5% permutation threshold
  composite::CompositeSpec spec;
  spec.depth = 0;
  spec.widths = {1, 2};
  spec.arities = {1};
  spec.smoothnesses = {1.5};
  spec.bound = 3.0;
  auto g0 = composite::make_synthetic_truth(21, spec);
  Generator g = Generator::from(g0);
  const int n = 1000;
  const double sigma = 0.1;
  Rng ra(30), rb(130), rc(230);
  EmpiricalMeasure a = measures::noisy_sample({g, sigma}, n, ra);
  EmpiricalMeasure b =
      measures::perturb(measures::pushforward_sample(g, n, rb), sigma, rc);
  const int total = 2 * n;
  std::vector<double> dmat(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0);
  auto point = [&](int i) { return i < n ? a.row(i) : b.row(i - n); };
  for (int i = 0; i < total; ++i)
    for (int j = i + 1; j < total; ++j) {
      double d = dist2(point(i), point(j));
      dmat[static_cast<std::size_t>(i) * static_cast<std::size_t>(total) +
           static_cast<std::size_t>(j)] = d;
    }
  std::vector<int> groups(static_cast<std::size_t>(total), 0);
  for (int i = n; i < total; ++i) groups[static_cast<std::size_t>(i)] = 1;
  double observed = energy_stat(groups, dmat, total);
  Rng perm(330);
  int exceed = 0;
  const int reps = 99;
  for (int r = 0; r < reps; ++r) {
    std::vector<int> shuffled = groups;
    for (int i = total - 1; i > 0; --i)
      std::swap(shuffled[static_cast<std::size_t>(i)],
                shuffled[static_cast<std::size_t>(perm.next_below(static_cast<std::uint64_t>(i + 1)))]);
    if (energy_stat(shuffled, dmat, total) >= observed) ++exceed;
  }
  // below the 5% threshold means at least 5% of permutations beat it
  CHECK(exceed >= 5);
}

TEST_CASE("weighted integration of a constant is exact") {
  EmpiricalMeasure mu;
  mu.dim = 1;
  mu.points = {0.1, 0.4, 0.9};
  mu.weights = {0.2, 0.5, 0.3};
  double val = mu.integrate([](std::span<const double>) { return 7.25; });
  CHECK(val == doctest::Approx(7.25).epsilon(1e-15));
}

TEST_CASE("csv round trip") {
  Rng rng(41);
  EmpiricalMeasure mu = measures::sample_latent(LatentSpec{3}, 17, rng);
  mu.weights[0] = 0.5;
  double rest = 0.5 / 16.0;
  for (std::size_t i = 1; i < mu.weights.size(); ++i) mu.weights[i] = rest;
  std::string text = mu.to_csv();
  EmpiricalMeasure back = EmpiricalMeasure::from_csv(text);
  CHECK(back.dim == mu.dim);
  CHECK(back.points == mu.points);
  CHECK(back.weights == mu.weights);
  CHECK(text.substr(0, 11) == "w,x1,x2,x3\n");
}
