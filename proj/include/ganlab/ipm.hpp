#pragma once
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ganlab/errors.hpp"
#include "ganlab/measures.hpp"
#include "ganlab/netgen.hpp"
#include "ganlab/ot.hpp"
#include "ganlab/rng.hpp"

namespace ganlab::ipm {

using measures::EmpiricalMeasure;
using measures::Generator;

// Twice-differentiable bounded feature with certified derivative bounds.
// Fourier features keep the class finitely representable; the quadratic
// feature realizes f(x) = |x|_2^2 exactly for the noise-scaling identities.
struct SmoothFeature {
  enum class Kind { fourier, quadratic, linear };
  Kind kind = Kind::fourier;
  double amplitude = 1.0;            // fourier, linear
  std::vector<double> frequency;     // fourier frequency / linear coefficients
  double phase = 0.0;                // fourier
  int dim = 0;                       // quadratic
  double domain_radius = 1.0;        // quadratic: |x|_2 <= radius assumed

  double eval(std::span<const double> x) const;
  std::vector<double> grad(std::span<const double> x) const;
  double lipschitz_bound() const;   // sup |grad f|
  double hessian_bound() const;     // sup of the Hessian spectral norm
};

// finite class of 1-Lipschitz potentials
struct FiniteSet {
  std::vector<ot::PotentialFn> members;
  std::string to_json() const;
  static FiniteSet from_json(const std::string& text);
};

// scalar-output ReLU net whose Lipschitz constant is certified by the
// product of per-layer Frobenius norms
struct LipschitzNet {
  netgen::SparseReluNet net;
  double lipschitz_cap = 1.0;  // C_1
  double certified_bound() const;
  void validate() const;  // certified bound <= cap
};

struct SmoothFeatureSet {
  std::vector<SmoothFeature> features;
  std::string to_json() const;
};

using DiscriminatorClass = std::variant<FiniteSet, LipschitzNet, SmoothFeatureSet>;

// d_F(mu, nu) = sup_{f in F} |mu f - nu f|.  Finite classes maximize exactly;
// a LipschitzNet reports the value at its supplied parameters (the sup over
// the class is an optimization problem owned by the estimators module).
double ipm(const DiscriminatorClass& F, const EmpiricalMeasure& mu,
           const EmpiricalMeasure& nu);

struct BuildInfo {
  std::vector<int> net_indices;                  // eps-net members
  std::vector<EmpiricalMeasure> pushforwards;    // per candidate, common latents
  EmpiricalMeasure latents;
};

// Greedy farthest-point eps-net over the candidates under the empirical
// L2(P_Z) distance on m_atoms common latent points, then one Kantorovich
// potential per ordered pair of netted pushforwards, recentered to f(0) = 0.
// The same latent set backs the net distances and the pushforwards, so the
// cover radius seen by the potentials is the measured one.
FiniteSet build_constructed_discriminator(const std::vector<Generator>& candidates,
                                          int m_atoms, double eps,
                                          std::uint64_t seed,
                                          BuildInfo* info = nullptr);

// max |W1 - d_F| over the supplied measure pairs (the empirical epsilon_4)
double deviation_check(const FiniteSet& F,
                       const std::vector<std::pair<EmpiricalMeasure,
                                                   EmpiricalMeasure>>& pairs);

struct GapPoint {
  double sigma = 0.0;
  double gap = 0.0;
  double stderr_ = 0.0;
};

// Monte Carlo |E f(Y + sigma xi) - E f(Y)| per sigma with matched pairs and
// a first-order control variate (the gradient term has exact mean zero).
std::vector<GapPoint> smooth_gap_curve(const Generator& g,
                                       const SmoothFeature& f,
                                       const std::vector<double>& sigma_grid,
                                       int n_mc, std::uint64_t seed);

struct LipGapPoint {
  double sigma = 0.0;
  double w1 = 0.0;            // exact W1 between matched clouds
  double matched_bound = 0.0; // sigma * mean |xi|_2, the coupling bound
};

// W1 between matched-latent samples of g(Z) + sigma xi and g(Z); the matched
// coupling gives the upper bound sigma E|xi|_2.
std::vector<LipGapPoint> lipschitz_gap_curve(const Generator& g,
                                             const std::vector<double>& sigma_grid,
                                             int n_mc, std::uint64_t seed);

}  // namespace ganlab::ipm
