#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ganlab/errors.hpp"

namespace ganlab::composite {

// One multiplicative trigonometric term w * prod_j trig(freq_j * u_j), where
// trig is cos (use_sin = 0) or sin (use_sin = 1), acting on the component's
// active inputs.
struct TrigTerm {
  double weight = 0.0;
  std::vector<double> freqs;        // one per active input, >= 0
  std::vector<std::uint8_t> use_sin;  // one per active input
};

// A scalar component h of one composite layer.  The representation is
// constant + linear + bounded-frequency trigonometric terms, for which the
// Holder norm admits a closed-form certified upper bound from the
// coefficients; see certified_holder_norm().
struct HolderComponent {
  int arity = 0;           // number of active inputs
  double smoothness = 1.0;  // beta
  double bound = 1.0;       // K
  std::vector<int> active_indices;  // into the parent layer, size = arity
  double constant = 0.0;
  std::vector<double> linear;  // size = arity; coefficient on u_j itself
  std::vector<TrigTerm> terms;

  // h(u) for the full parent-layer output; picks out active indices.
  double eval(std::span<const double> layer_input) const;

  // Upper bound for the beta-Holder norm (sums of sup-norms of partial
  // derivatives up to order floor'(beta) plus the Holder seminorms of the top
  // derivatives), computable exactly from the coefficients.
  double certified_holder_norm() const;

  // sup_u |grad h(u)|_2 upper bound
  double certified_gradient_bound() const;

  // certified enclosure of the range of h over [0,1]^arity
  std::pair<double, double> certified_range() const;

  void validate() const;  // throws InfeasibleSpec on malformed data
};

// (q, d, t, beta, K): the shape of the structured generator class.
struct CompositeSpec {
  int depth = 0;                      // q
  std::vector<int> widths;            // d_0 .. d_{q+1}
  std::vector<int> arities;           // t_0 .. t_q
  std::vector<double> smoothnesses;   // beta_0 .. beta_q
  double bound = 1.0;                 // K

  int latent_dim() const { return widths.front(); }
  int ambient_dim() const { return widths.back(); }
  void validate() const;  // throws InfeasibleSpec

  std::string to_json() const;
  static CompositeSpec from_json(const std::string& text);
};

struct EffectiveSmoothness {
  int j_star = 0;
  double beta_star = 0.0;
  int t_star = 0;
};

// beta~_j = beta_j * prod_{l>j} (beta_l ^ 1); j* = argmax t_j / beta~_j with
// ties broken toward the smallest index.
EffectiveSmoothness effective_smoothness(const CompositeSpec& spec);

class CompositeFunction {
 public:
  CompositeFunction() = default;
  CompositeFunction(CompositeSpec spec,
                    std::vector<std::vector<HolderComponent>> layers);

  const CompositeSpec& spec() const { return spec_; }
  const std::vector<std::vector<HolderComponent>>& layers() const {
    return layers_;
  }

  // Layer-by-layer evaluation on z in [0,1]^d.  Intermediates are clamped to
  // the declared [0,1] range; an overshoot beyond 1e-9 raises RangeViolation,
  // a z outside the domain cube raises DomainError.
  std::vector<double> eval(std::span<const double> z) const;

  // Product of per-layer l2 Lipschitz bounds; finite whenever every
  // component certifies a gradient bound.
  double certified_lipschitz_bound() const;

  void validate() const;

  std::string to_json() const;
  static CompositeFunction from_json(const std::string& text);

 private:
  CompositeSpec spec_;
  std::vector<std::vector<HolderComponent>> layers_;
};

// Deterministic-in-seed draw of a class member whose certified Holder norm is
// within bound and whose component ranges stay strictly inside (0,1).
// Throws InfeasibleSpec when K < 1 (the representation centers components at
// 1/2 on the unit interval, so smaller K admits no nonconstant member).
CompositeFunction make_synthetic_truth(std::uint64_t seed,
                                       const CompositeSpec& spec);

}  // namespace ganlab::composite
