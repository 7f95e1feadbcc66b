#pragma once
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ganlab/composite.hpp"
#include "ganlab/errors.hpp"
#include "ganlab/netgen.hpp"
#include "ganlab/rng.hpp"

namespace ganlab::measures {

// latent law: uniform on [0,1]^dim
struct LatentSpec {
  int dim = 1;
};

// Weighted point cloud in R^dim; the common currency of sampling, transport
// and IPM evaluation.  Weights sum to one (uniform 1/n by default).
struct EmpiricalMeasure {
  int dim = 0;
  std::vector<double> points;   // n * dim, row-major
  std::vector<double> weights;  // size n

  int size() const { return static_cast<int>(weights.size()); }
  std::span<const double> row(int i) const {
    return {points.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  void push_row(std::span<const double> x, double w);
  double integrate(const std::function<double(std::span<const double>)>& f) const;
  void validate() const;  // weight sum 1 +- 1e-12, finite coordinates

  std::string to_csv() const;  // header w,x1,...,xD
  static EmpiricalMeasure from_csv(const std::string& text);
};

EmpiricalMeasure uniform_cloud(int dim, std::vector<double> points);

// Value wrapper for anything that maps latents to ambient points: a composite
// truth, a ReLU net, a constant, or an ad-hoc callable.
class Generator {
 public:
  Generator() = default;
  Generator(int in_dim, int out_dim,
            std::function<std::vector<double>(std::span<const double>)> fn)
      : in_dim_(in_dim), out_dim_(out_dim), fn_(std::move(fn)) {}

  static Generator from(const composite::CompositeFunction& g);
  static Generator from(const netgen::SparseReluNet& net);
  static Generator constant(int in_dim, std::vector<double> value);
  static Generator identity(int dim);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  std::vector<double> operator()(std::span<const double> z) const {
    return fn_(z);
  }

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  std::function<std::vector<double>(std::span<const double>)> fn_;
};

// g pushed through latent noise: X = g(Z) + sigma * xi
struct NoisyModel {
  Generator generator;
  double noise_sd = 0.0;  // sigma >= 0
};

// n iid uniform points on [0,1]^dim as an EmpiricalMeasure with weights 1/n
EmpiricalMeasure sample_latent(const LatentSpec& spec, int n, Rng& rng);

// law of g(Z): push n latents through g
EmpiricalMeasure pushforward_sample(const Generator& g, int n, Rng& rng);

// law of g(Z) + sigma xi, xi ~ N(0, I_D)
EmpiricalMeasure noisy_sample(const NoisyModel& model, int n, Rng& rng);

// add iid N(0, sigma_tilde^2 I) to every atom, weights unchanged
EmpiricalMeasure perturb(const EmpiricalMeasure& data, double sigma_tilde,
                         Rng& rng);

}  // namespace ganlab::measures
