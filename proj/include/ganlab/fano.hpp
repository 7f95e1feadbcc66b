#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "ganlab/errors.hpp"
#include "ganlab/rng.hpp"

namespace ganlab::fano {

// Smooth bump: phi(z) = exp(4 - 1/(z(1-z))) on (0,1), zero elsewhere,
// normalized so max phi = phi(1/2) = 1.  Infinitely differentiable, unimodal,
// symmetric about 1/2, positive exactly on (0,1).
namespace bump {
double eval(double z);
double deriv(double z);
double sup_abs_deriv();  // computed once to high accuracy and cached
}  // namespace bump

// alpha lives on the cell grid J = {0..m-1}^dim, flattened with the first
// coordinate fastest
using SignVector = std::vector<std::int8_t>;

struct FanoConfig {
  int m = 2;          // grid resolution
  int dim = 1;        // d (the construction sets D = d)
  double beta = 2.0;  // smoothness
  double c1 = 0.25;   // perturbation amplitude

  long cells() const;  // |J| = m^dim
  long cell_of(std::span<const double> point) const;
  // min over a 64-per-axis grid of the worst-case first-coordinate Jacobian;
  // validate() throws AmplitudeTooLarge when it falls below 1/2
  double jacobian_floor() const;
  void validate() const;
};

// largest c1 in {1, 1/2, 1/4, ...} keeping the Jacobian floor at 1/2
double auto_c1(int m, int dim, double beta);

SignVector all_plus(const FanoConfig& cfg);
SignVector all_minus(const FanoConfig& cfg);

// g_alpha: first coordinate z1 + (c1/m^beta) sum_j alpha_j phi_{j1}(z1) ...
// phi_{jd}(z_d), remaining coordinates unchanged
std::vector<double> fano_g(const FanoConfig& cfg, const SignVector& alpha,
                           std::span<const double> z);

// change-of-variables density of g_alpha(Z), Z uniform: the reciprocal
// first-coordinate Jacobian at z = g_alpha^{-1}(y) (bisection to 1e-12)
double fano_density(const FanoConfig& cfg, const SignVector& alpha,
                    std::span<const double> y);

// certified enclosure of q_alpha from the amplitude bound
std::pair<double, double> density_bounds(const FanoConfig& cfg);

// tensor Gauss-Legendre integral of the density (should be 1)
double density_mass(const FanoConfig& cfg, const SignVector& alpha);

struct KlResult {
  double kl = 0.0;
  double hellinger_sq = 0.0;
};

// KL(q_alpha | q_alpha') and squared Hellinger by per-cell tensor quadrature;
// cells with matching signs contribute zero and are skipped
KlResult kl_pair(const FanoConfig& cfg, const SignVector& alpha,
                 const SignVector& alpha_prime);

struct PackingSet {
  int j_size = 0;
  std::vector<SignVector> codewords;
};

// Greedy Gilbert-Varshamov packing: random sign vectors kept when at Hamming
// distance >= j_size/4 from all kept ones, until ceil(e^{j_size/16}) found.
// Throws BudgetExceeded when the draw budget runs out.
PackingSet gv_packing(int j_size, Rng& rng);

long hamming(const SignVector& a, const SignVector& b);

struct ExcessReference {
  double constant = 0.0;  // frozen c in  rhs = c * H / m^{beta+d}
};

// one-time calibration at (m = 2, full flip); the constant is then held
// fixed across m and sign pairs
ExcessReference calibrate_excess(int dim, double beta, double c1, int n_mc,
                                 std::uint64_t seed);

struct ExcessCheck {
  double lhs = 0.0;     // empirical W1 between the two pushforwards
  double rhs = 0.0;     // frozen constant * H / m^{beta+d}
  double mc_se = 0.0;
};

// excess-mass lower-bound check: empirical W1 against the frozen rate shape.
// matched_latents couples the two clouds through common z draws, removing
// the two-sample noise floor.
ExcessCheck w1_excess_check(const FanoConfig& cfg, const SignVector& alpha,
                            const SignVector& alpha_prime, int n_mc,
                            std::uint64_t seed, const ExcessReference& ref,
                            bool matched_latents = true);

// Fano evaluation: m = ceil(n^{1/(d+2(beta-1))}) and
//   (c1 c3 / m^beta) * max(0, 1 - (n c1^2 C m^{-2(beta-1)} + log 2)/(m^d/16)),
// with C calibrated once from kl_pair at m = 2 and c3 from the excess
// calibration.  Numeric evaluation is supported for dim <= 2.
double fano_bound(long n, double beta, int dim, double c1);

// the n-exponent implied by the construction's m-selection
double fano_bound_exponent(double beta, int dim);

// Largest amplitude in {2^-k} that passes the Jacobian floor and keeps the
// Fano bracket asymptotically positive (16 c1^2 C < 1/2); the bound needs a
// smaller c1 than the construction alone.
double bound_feasible_c1(double beta, int dim);

struct RateExponents {
  double gan = 0.0;    // -beta/(2 beta + t)
  double mle = 0.0;    // -beta/(2 (beta + t))
  double lower = 0.0;  // -beta/(2 beta + d - 2)
  bool lower_flagged = false;  // degenerate Fano regime (e.g. d = 1, beta = 1)
};

RateExponents rate_exponents(double beta_star, double t_star, int dim);

}  // namespace ganlab::fano
