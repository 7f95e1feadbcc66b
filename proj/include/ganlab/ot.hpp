#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "ganlab/errors.hpp"
#include "ganlab/measures.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/series.hpp"

namespace ganlab::ot {

using measures::EmpiricalMeasure;

// Optimal coupling between two empirical measures together with the dual
// potentials.  Potentials satisfy f_i - g_j <= c_ij with equality on the
// support of the plan, and sum_i mu_i f_i - sum_j nu_j g_j = cost.
struct TransportPlan {
  struct Entry {
    int i;
    int j;
    double mass;
  };
  std::vector<Entry> coupling;
  double cost = 0.0;
  std::vector<double> source_potential;  // f_i at source atoms
  std::vector<double> target_potential;  // g_j at target atoms
};

// W1 with Euclidean ground cost via the in-repo network simplex.  Small
// instances enumerate all arcs; larger ones run the same simplex with
// candidate-arc pricing, which terminates with a full optimality certificate.
TransportPlan w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// squared-Euclidean transport cost, square-rooted
double w2_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Test oracle: exact minimum over all n! assignments for uniform equal-size
// inputs with n <= 8 atoms.  Throws TooLarge beyond that.
double w1_bruteforce(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Cost-only W1 with fast exact routes: the closed-form CDF formula in
// dimension one, the pricing simplex otherwise.
double w1_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// exact 1-D W1 between weighted atom sets (integrated CDF difference)
double w1_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// 1-Lipschitz potential represented by anchor points and values,
// f(x) = min_i (f_i + |x - x_i|_2)  (McShane extension of the dual values).
struct PotentialFn {
  int dim = 0;
  std::vector<double> anchors;  // k * dim, row-major
  std::vector<double> values;   // k

  int anchor_count() const { return static_cast<int>(values.size()); }
  double eval(std::span<const double> x) const;
  // subgradient: unit vector toward the achieving anchor (0 at an anchor)
  std::vector<double> grad(std::span<const double> x) const;
};

// Dual optimizer of W1(mu, nu) extended off the supports, recentered so that
// f(0_D) = 0; satisfies mu f - nu f >= W1(mu, nu) - solver tolerance.
PotentialFn kantorovich_potential(const EmpiricalMeasure& mu,
                                  const EmpiricalMeasure& nu);

enum class ProxyMode {
  population,  // W1(P_n, P_N) against one big fresh sample, N = proxy_multiple * max n
  paired,      // W1(P_n, P_n') between two independent same-size samples
};

struct RateTableOptions {
  ProxyMode proxy = ProxyMode::population;
  long proxy_multiple = 64;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Mean-over-replicates W1 between empirical samples of the uniform law on
// [0,1]^D and a proxy for the law itself, for each n in the grid.  The
// population proxy adds an O(N^{-1/D}) bias; the paired mode replaces it with
// a multiplicative constant.  Slope is fitted when >= 3 distinct n exist.
harness::RateSeries empirical_rate_table(int dim,
                                         const std::vector<long>& n_grid,
                                         int replicates,
                                         const RateTableOptions& options = {});

// the (n, replicate) cell of the rate table, with the same stream derivation
// the table uses; cell = grid_index * replicates + replicate
double rate_table_cell(int dim, const std::vector<long>& n_grid,
                       int replicates, const RateTableOptions& options,
                       long cell);

}  // namespace ganlab::ot
