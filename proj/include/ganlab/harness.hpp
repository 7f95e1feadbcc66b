#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ganlab/composite.hpp"
#include "ganlab/errors.hpp"
#include "ganlab/estimators.hpp"
#include "ganlab/fano.hpp"
#include "ganlab/ot.hpp"
#include "ganlab/series.hpp"

namespace ganlab::harness {

enum class Mode { rates, gan, mle, fano, ot_bench, audit };

struct TruthConfig {
  composite::CompositeSpec spec;
  double sigma0 = 0.0;
  std::uint64_t seed = 7;
};

struct RatesConfig {
  std::vector<int> dims{1, 3};
  // auto: population proxy (64 x max n) in one dimension, paired same-size
  // samples otherwise (exact solves at feasible cost)
  std::string proxy = "auto";
  long proxy_multiple = 64;
};

struct SizeConstantsConfig {
  double depth = 0.45;
  double width = 0.12;
  double sparsity = 8.0;
};

struct GanModeConfig {
  SizeConstantsConfig size_constants;
  int outer_steps = 260;
  double step_size = 0.004;
  int m_latent = 256;
  int restarts = 2;
  int eval_latents = 3072;
  bool write_traces = true;
  int n_eval = 8192;
};

struct MleModeConfig {
  SizeConstantsConfig size_constants;
  int steps = 220;
  double step_size = 0.01;
  int m_latent = 192;
  int restarts = 2;
  double sigma_tilde_scale = 0.5;  // sigma~ = scale * n^{-1/4}
  int n_eval = 8192;
};

struct FanoModeConfig {
  int dim = 2;
  double beta = 2.0;
  std::vector<int> m_list{2, 4, 8};
  int packing_j = 64;
  std::vector<long> bound_n_grid{1000, 10000, 100000, 1000000};
  int n_mc = 4096;
};

struct AuditModeConfig {
  int instances = 50;
  est::AuditInstanceConfig instance;
};

struct OtBenchConfig {
  int instances = 200;
  int max_atoms = 6;
  int max_dim = 3;
  int gap_atoms = 256;
};

struct ExperimentConfig {
  Mode mode = Mode::rates;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int threads = 1;
  bool plot = false;
  TruthConfig truth;
  std::vector<long> n_grid{128, 256, 512, 1024, 2048, 4096, 8192};
  int replicates = 20;
  RatesConfig rates;
  GanModeConfig gan;
  MleModeConfig mle;
  FanoModeConfig fano;
  AuditModeConfig audit;
  OtBenchConfig ot_bench;

  void validate() const;  // throws ConfigError with a field path
  static ExperimentConfig from_json_text(const std::string& text);
};

// Runs the configured experiment, writing CSV rows incrementally in a
// deterministic order plus a JSON summary (timestamps live only in its meta
// block) and optional SVG plots.  Returns the summary JSON text.
std::string run(const ExperimentConfig& config);

// rate-trend experiments behind the gan/mle modes; exposed for the
// acceptance suite
RateSeries gan_rate_experiment(const ExperimentConfig& config,
                               std::vector<std::string>* rows_out = nullptr);
RateSeries mle_rate_experiment(const ExperimentConfig& config,
                               std::vector<std::string>* rows_out = nullptr);

// log-log least squares on arbitrary positive abscissae
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ganlab::harness
