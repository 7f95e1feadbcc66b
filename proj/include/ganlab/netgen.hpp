#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ganlab/errors.hpp"
#include "ganlab/rng.hpp"

namespace ganlab::netgen {

// Member of D(L, p, s, F): depth L, widths p_0..p_{L+1}, at most s nonzero
// parameters among the hidden-and-output layers (j >= 1), every entry in
// [-1,1], outputs clamped to [-F, F] coordinatewise.
//
// f(z) = clamp(W_L rho_{v_L} W_{L-1} ... W_1 rho_{v_1} W_0 z), where
// weights[j] is W_j (p_{j+1} x p_j row-major) and shifts[i] is v_{i+1}
// (length p_{i+1}).  The input layer W_0 is outside the sparsity budget.
struct SparseReluNet {
  int depth = 0;                         // L
  std::vector<int> widths;               // p_0 .. p_{L+1}
  long sparsity_budget = 0;              // s
  double sup_bound = 1.0;                // F
  std::vector<std::vector<double>> weights;  // L+1 matrices
  std::vector<std::vector<double>> shifts;   // L vectors

  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }
  long parameter_count() const;
  long nonzero_count() const;  // over layers j >= 1 only
  double max_entry() const;

  void validate_shapes() const;        // throws ShapeMismatch
  bool satisfies_constraints() const;  // max-entry, nonzeros, shape

  std::string to_json() const;
  static SparseReluNet from_json(const std::string& text);
};

// zero-initialized net of the given architecture
SparseReluNet make_net(int depth, std::vector<int> widths, long sparsity,
                       double sup_bound);

// entries ~ uniform[-scale, scale], then projected onto the constraint set
SparseReluNet random_net(int depth, std::vector<int> widths, long sparsity,
                         double sup_bound, Rng& rng, double scale = 1.0);

std::vector<double> forward(const SparseReluNet& net,
                            std::span<const double> z);

// Per-layer activations retained for reverse mode.
struct ForwardCache {
  std::vector<std::vector<double>> pre;   // pre-activation a_j entering rho
  std::vector<std::vector<double>> post;  // rho output per hidden layer
  std::vector<double> out_raw;            // output before the clamp
  std::vector<double> out;                // clamped output
};
ForwardCache forward_cache(const SparseReluNet& net, std::span<const double> z);

struct NetGrads {
  std::vector<std::vector<double>> d_weights;
  std::vector<std::vector<double>> d_shifts;
  void scale(double a);
  void add(const NetGrads& other);
};
NetGrads zero_grads(const SparseReluNet& net);

// Exact reverse-mode gradients of z |-> <upstream, f(z)> with subgradient 0
// at ReLU kinks; the clamp passes gradient inside (-F, F) and blocks it
// outside.  Accumulates into `into`.
void backward(const SparseReluNet& net, std::span<const double> z,
              std::span<const double> upstream, NetGrads& into);
NetGrads backward(const SparseReluNet& net, std::span<const double> z,
                  std::span<const double> upstream);

// Clip every entry to [-1,1], then keep only the s largest-magnitude entries
// over the layers j >= 1 (weights and shifts jointly); idempotent.
SparseReluNet project(SparseReluNet net);

// in-place gradient step followed by projection
void apply_step(SparseReluNet& net, const NetGrads& grads, double step);

struct SizeConstants {
  double c_depth = 1.0;
  double c_width = 1.0;
  double c_sparsity = 1.0;
};
struct NetSize {
  long depth;
  long width;
  long sparsity;
};

// Theory-driven sizing: L = ceil(c_L log n), hidden width and sparsity
// ceil(c n^{t*/(2 beta* + t*)} log n).
NetSize size_for(long n, double beta_star, double t_star,
                 const SizeConstants& constants = {});

std::vector<int> make_widths(int in_dim, int out_dim, long depth, long width);

// (s+1) * { log 2 + log(1/eps) + log(L+1) + 2 sum_l log(p_l + 1) }:
// metric-entropy bound for D(L, p, s, .) at sup-norm radius eps.
double covering_bound(long depth, const std::vector<int>& widths, long sparsity,
                      double eps);

}  // namespace ganlab::netgen
