#include "ganlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "ganlab/measures.hpp"
#include "ganlab/pool.hpp"
#include "ganlab/svg.hpp"
#include "ganlab/util.hpp"
#include "json.hpp"

namespace ganlab::harness {

using nlohmann::json;

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw DegenerateFit("fit_loglog: need at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DegenerateFit("fit_loglog: nonpositive value");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const auto k = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateFit("fit_loglog: degenerate abscissae");
  double slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double resid = ly[i] - my - slope * (lx[i] - mx);
    rss += resid * resid;
  }
  double se = lx.size() > 2 ? std::sqrt(rss / (k - 2.0) / sxx) : 0.0;
  return {slope, se};
}

SlopeFit fit_exponent(const RateSeries& series) {
  std::map<long, std::pair<double, long>> groups;  // n -> (sum, count)
  for (const RateRow& row : series.rows) {
    auto& g = groups[row.n];
    g.first += row.value;
    g.second += 1;
  }
  if (groups.size() < 3)
    throw DegenerateFit("fit_exponent: need at least 3 distinct n");
  std::vector<double> xs, ys;
  for (const auto& [n, g] : groups) {
    double mean = g.first / static_cast<double>(g.second);
    if (!(mean > 0.0))
      throw DegenerateFit("fit_exponent: nonpositive mean value");
    xs.push_back(static_cast<double>(n));
    ys.push_back(mean);
  }
  return fit_loglog(xs, ys);
}

namespace {

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

template <typename T>
T field(const json& j, const std::string& path, const std::string& key,
        const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

template <typename T>
T require(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

Mode parse_mode(const std::string& text) {
  if (text == "rates") return Mode::rates;
  if (text == "gan") return Mode::gan;
  if (text == "mle") return Mode::mle;
  if (text == "fano") return Mode::fano;
  if (text == "ot-bench") return Mode::ot_bench;
  if (text == "audit") return Mode::audit;
  throw ConfigError("mode", "unknown mode '" + text + "'");
}

composite::CompositeSpec parse_spec(const json& j, const std::string& path) {
  composite::CompositeSpec spec;
  spec.depth = require<int>(j, path, "depth");
  spec.widths = require<std::vector<int>>(j, path, "widths");
  spec.arities = require<std::vector<int>>(j, path, "arities");
  spec.smoothnesses = require<std::vector<double>>(j, path, "smoothnesses");
  spec.bound = require<double>(j, path, "bound");
  try {
    spec.validate();
  } catch (const InfeasibleSpec& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

SizeConstantsConfig parse_size_constants(const json& j, const std::string& path) {
  SizeConstantsConfig c;
  c.depth = field<double>(j, path, "depth", c.depth);
  c.width = field<double>(j, path, "width", c.width);
  c.sparsity = field<double>(j, path, "sparsity", c.sparsity);
  return c;
}

// ordered, incremental, crash-safe emission: rows append in index order as
// soon as every earlier row is done
void ordered_emit(long count, int threads,
                  const std::function<std::string(long)>& make_row,
                  std::ofstream& out) {
  if (count <= 0) return;
  if (threads <= 1) {
    for (long i = 0; i < count; ++i) {
      out << make_row(i);
      out.flush();
    }
    return;
  }
  std::vector<std::string> rows(static_cast<std::size_t>(count));
  std::vector<std::atomic<bool>> done(static_cast<std::size_t>(count));
  for (auto& d : done) d.store(false);
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      rows[static_cast<std::size_t>(i)] = make_row(i);
      done[static_cast<std::size_t>(i)].store(true, std::memory_order_release);
    }
  };
  std::vector<std::thread> crew;
  int nthreads = static_cast<int>(std::min<long>(threads, count));
  crew.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) crew.emplace_back(worker);
  long watermark = 0;
  while (watermark < count) {
    if (done[static_cast<std::size_t>(watermark)].load(std::memory_order_acquire)) {
      out << rows[static_cast<std::size_t>(watermark)];
      out.flush();
      rows[static_cast<std::size_t>(watermark)].clear();
      ++watermark;
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }
  for (auto& th : crew) th.join();
}

json meta_block(const ExperimentConfig& config) {
  json meta;
  meta["seed"] = config.seed;
  meta["threads"] = config.threads;
  auto now = std::chrono::system_clock::now().time_since_epoch();
  meta["timestamp_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  return meta;
}

json exponents_block(const ExperimentConfig& config) {
  auto eff = composite::effective_smoothness(config.truth.spec);
  auto theory = fano::rate_exponents(eff.beta_star, eff.t_star,
                                     config.truth.spec.latent_dim());
  json out;
  out["beta_star"] = eff.beta_star;
  out["t_star"] = eff.t_star;
  out["gan"] = theory.gan;
  out["mle"] = theory.mle;
  out["lower"] = theory.lower;
  out["lower_flagged"] = theory.lower_flagged;
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NumericalFailure("cannot open output file " + path.string());
  out << text;
}

void maybe_plot(const ExperimentConfig& config, const RateSeries& series,
                const std::string& name, const std::string& title) {
  if (!config.plot || !series.fit) return;
  std::map<long, std::pair<double, long>> groups;
  for (const RateRow& row : series.rows) {
    groups[row.n].first += row.value;
    groups[row.n].second += 1;
  }
  std::vector<double> x, y;
  double mx = 0, my = 0;
  for (const auto& [n, g] : groups) {
    x.push_back(static_cast<double>(n));
    y.push_back(g.first / static_cast<double>(g.second));
    mx += std::log(x.back());
    my += std::log(y.back());
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double intercept = my - series.fit->slope * mx;
  write_file(config.out / (name + ".svg"),
             render_loglog_svg(title, x, y, series.fit->slope, intercept));
}

std::string series_csv_header() { return "n,rep,value\n"; }

std::string series_row(const RateRow& row) {
  return std::to_string(row.n) + "," + std::to_string(row.rep) + "," +
         fmt_double(row.value) + "\n";
}

json series_summary(const RateSeries& series) {
  json out;
  if (series.fit) {
    out["slope"] = series.fit->slope;
    out["stderr"] = series.fit->stderr_;
  } else {
    out["slope"] = nullptr;
    out["degenerate_fit"] = true;
  }
  return out;
}

netgen::SizeConstants to_netgen(const SizeConstantsConfig& c) {
  return {c.depth, c.width, c.sparsity};
}

// ---------------------------------------------------------------------------
// mode runners
// ---------------------------------------------------------------------------

json run_rates(const ExperimentConfig& config) {
  json summary;
  for (int dim : config.rates.dims) {
    ot::RateTableOptions options;
    options.proxy_multiple = config.rates.proxy_multiple;
    options.seed = Rng::mix(config.seed ^ static_cast<std::uint64_t>(dim));
    options.threads = config.threads;
    if (config.rates.proxy == "population") {
      options.proxy = ot::ProxyMode::population;
    } else if (config.rates.proxy == "paired") {
      options.proxy = ot::ProxyMode::paired;
    } else {
      options.proxy =
          dim == 1 ? ot::ProxyMode::population : ot::ProxyMode::paired;
    }

    const long cells = static_cast<long>(config.n_grid.size()) *
                       config.replicates;
    std::ofstream out(config.out /
                      ("rates_d" + std::to_string(dim) + ".csv"));
    out << series_csv_header();
    // per-cell streams are shared with ot::empirical_rate_table, so this mode
    // reproduces the module op while appending rows as they complete
    RateSeries series;
    series.rows.assign(static_cast<std::size_t>(cells), {});
    ordered_emit(cells, config.threads, [&](long cell) {
      const auto gi = static_cast<std::size_t>(cell / config.replicates);
      const int rep = static_cast<int>(cell % config.replicates);
      double value = ot::rate_table_cell(dim, config.n_grid,
                                         config.replicates, options, cell);
      series.rows[static_cast<std::size_t>(cell)] = {config.n_grid[gi], rep,
                                                     value};
      return series_row(series.rows[static_cast<std::size_t>(cell)]);
    }, out);
    if (config.n_grid.size() >= 3) series.fit = fit_exponent(series);
    json block = series_summary(series);
    block["proxy"] =
        options.proxy == ot::ProxyMode::population ? "population" : "paired";
    // the empirical-measure theory exponent
    block["theory"] = dim == 1 ? -0.5 : -1.0 / static_cast<double>(dim);
    summary["d" + std::to_string(dim)] = block;
    maybe_plot(config, series, "rates_d" + std::to_string(dim),
               "empirical measure W1 rate, D=" + std::to_string(dim));
  }
  return summary;
}

struct FitRow {
  long n;
  int rep;
  double value;
  std::string trace;
};

}  // namespace

RateSeries gan_rate_experiment(const ExperimentConfig& config,
                               std::vector<std::string>* rows_out) {
  const auto& spec = config.truth.spec;
  auto g0 = composite::make_synthetic_truth(config.truth.seed, spec);
  measures::NoisyModel truth{measures::Generator::from(g0),
                             config.truth.sigma0};
  auto eff = composite::effective_smoothness(spec);

  const long cells = static_cast<long>(config.n_grid.size()) *
                     config.replicates;
  RateSeries series;
  series.rows.assign(static_cast<std::size_t>(cells), {});
  std::vector<std::string> traces(static_cast<std::size_t>(cells));
  Rng root(config.seed, 0x6a9fu);
  parallel_for(cells, config.threads, [&](long cell) {
    const auto gi = static_cast<std::size_t>(cell / config.replicates);
    const int rep = static_cast<int>(cell % config.replicates);
    const long n = config.n_grid[gi];
    Rng rng = root.split(static_cast<std::uint64_t>(cell));
    Rng data_rng = rng.split(1);
    measures::EmpiricalMeasure data =
        measures::noisy_sample(truth, static_cast<int>(n), data_rng);

    netgen::NetSize size = netgen::size_for(
        n, eff.beta_star, eff.t_star, to_netgen(config.gan.size_constants));
    est::GanConfig cfg;
    cfg.depth = static_cast<int>(size.depth);
    cfg.widths = netgen::make_widths(spec.latent_dim(), spec.ambient_dim(),
                                     size.depth, std::max(4L, size.width));
    cfg.sparsity = size.sparsity;
    cfg.sup_bound = std::max(1.0, spec.bound);
    cfg.inner = est::InnerSup::w1_best_response;
    cfg.outer_steps = config.gan.outer_steps;
    cfg.step_size = config.gan.step_size;
    cfg.m_latent = config.gan.m_latent;
    cfg.restarts = config.gan.restarts;
    cfg.eval_latents = config.gan.eval_latents;
    Rng fit_rng = rng.split(2);
    est::GanFit fit = est::gan_fit(data, cfg, fit_rng);
    Rng eval_rng = rng.split(3);
    double value = est::evaluate_estimator(measures::Generator::from(fit.net),
                                           truth, config.gan.n_eval, eval_rng);
    series.rows[static_cast<std::size_t>(cell)] = {n, rep, value};
    if (config.gan.write_traces) {
      std::string text = "step,objective,nonzeros\n";
      for (const auto& p : fit.trace)
        text += std::to_string(p.step) + "," + fmt_double(p.objective) + "," +
                std::to_string(p.nonzeros) + "\n";
      traces[static_cast<std::size_t>(cell)] = std::move(text);
    }
  });
  if (rows_out) {
    for (long cell = 0; cell < cells; ++cell)
      rows_out->push_back(series_row(series.rows[static_cast<std::size_t>(cell)]));
  }
  if (config.gan.write_traces) {
    for (long cell = 0; cell < cells; ++cell) {
      const auto gi = static_cast<std::size_t>(cell / config.replicates);
      const int rep = static_cast<int>(cell % config.replicates);
      write_file(config.out / ("gan_trace_n" +
                               std::to_string(config.n_grid[gi]) + "_rep" +
                               std::to_string(rep) + ".csv"),
                 traces[static_cast<std::size_t>(cell)]);
    }
  }
  if (config.n_grid.size() >= 3) series.fit = fit_exponent(series);
  return series;
}

RateSeries mle_rate_experiment(const ExperimentConfig& config,
                               std::vector<std::string>* rows_out) {
  const auto& spec = config.truth.spec;
  auto g0 = composite::make_synthetic_truth(config.truth.seed, spec);
  measures::NoisyModel truth{measures::Generator::from(g0),
                             config.truth.sigma0};
  auto eff = composite::effective_smoothness(spec);

  const long cells = static_cast<long>(config.n_grid.size()) *
                     config.replicates;
  RateSeries series;
  series.rows.assign(static_cast<std::size_t>(cells), {});
  Rng root(config.seed, 0x31e5u);
  parallel_for(cells, config.threads, [&](long cell) {
    const auto gi = static_cast<std::size_t>(cell / config.replicates);
    const int rep = static_cast<int>(cell % config.replicates);
    const long n = config.n_grid[gi];
    Rng rng = root.split(static_cast<std::uint64_t>(cell));
    Rng data_rng = rng.split(1);
    measures::EmpiricalMeasure data =
        measures::noisy_sample(truth, static_cast<int>(n), data_rng);

    netgen::NetSize size = netgen::size_for(
        n, eff.beta_star, eff.t_star, to_netgen(config.mle.size_constants));
    est::MleConfig cfg;
    cfg.depth = static_cast<int>(size.depth);
    cfg.widths = netgen::make_widths(spec.latent_dim(), spec.ambient_dim(),
                                     size.depth, std::max(4L, size.width));
    cfg.sparsity = size.sparsity;
    cfg.sup_bound = std::max(1.0, spec.bound);
    cfg.steps = config.mle.steps;
    cfg.step_size = config.mle.step_size;
    cfg.m_latent = config.mle.m_latent;
    cfg.restarts = config.mle.restarts;
    const double sigma_tilde =
        config.mle.sigma_tilde_scale *
        std::pow(static_cast<double>(n), -1.0 / 4.0);
    Rng fit_rng = rng.split(2);
    est::MleFit fit = est::mle_fit(data, sigma_tilde, cfg, fit_rng);
    Rng eval_rng = rng.split(3);
    double value = est::evaluate_estimator(measures::Generator::from(fit.net),
                                           truth, config.mle.n_eval, eval_rng);
    series.rows[static_cast<std::size_t>(cell)] = {n, rep, value};
  });
  if (rows_out) {
    for (long cell = 0; cell < cells; ++cell)
      rows_out->push_back(series_row(series.rows[static_cast<std::size_t>(cell)]));
  }
  if (config.n_grid.size() >= 3) series.fit = fit_exponent(series);
  return series;
}

namespace {

json run_gan(const ExperimentConfig& config) {
  std::vector<std::string> rows;
  RateSeries series = gan_rate_experiment(config, &rows);
  std::ofstream out(config.out / "gan_rates.csv");
  out << series_csv_header();
  for (const std::string& row : rows) {
    out << row;
    out.flush();
  }
  json summary;
  summary["gan"] = series_summary(series);
  maybe_plot(config, series, "gan_rates", "GAN estimator W1 rate");
  return summary;
}

json run_mle(const ExperimentConfig& config) {
  std::vector<std::string> rows;
  RateSeries series = mle_rate_experiment(config, &rows);
  std::ofstream out(config.out / "mle_rates.csv");
  out << series_csv_header();
  for (const std::string& row : rows) {
    out << row;
    out.flush();
  }
  json summary;
  summary["mle"] = series_summary(series);
  maybe_plot(config, series, "mle_rates", "sieve MLE W1 rate");
  return summary;
}

json run_fano(const ExperimentConfig& config) {
  const auto& fc = config.fano;
  json report;
  report["dim"] = fc.dim;
  report["beta"] = fc.beta;
  const double c1 = fano::auto_c1(fc.m_list.front(), fc.dim, fc.beta);
  const double c1_bound = fano::bound_feasible_c1(fc.beta, fc.dim);
  report["c1"] = c1;
  report["c1_bound"] = c1_bound;

  Rng rng(config.seed, 0xfa20u);
  fano::PackingSet packing = fano::gv_packing(fc.packing_j, rng);
  report["packing"] = {{"j", fc.packing_j},
                       {"codewords", packing.codewords.size()},
                       {"min_distance", fc.packing_j / 4}};

  json kl_table = json::array();
  for (int m : fc.m_list) {
    fano::FanoConfig cfg{m, fc.dim, fc.beta, c1};
    auto kl = fano::kl_pair(cfg, fano::all_plus(cfg), fano::all_minus(cfg));
    json row;
    row["m"] = m;
    row["kl"] = kl.kl;
    row["hellinger_sq"] = kl.hellinger_sq;
    row["mass"] = fano::density_mass(cfg, fano::all_plus(cfg));
    kl_table.push_back(std::move(row));
  }
  report["kl_table"] = std::move(kl_table);

  fano::ExcessReference ref =
      fano::calibrate_excess(fc.dim, fc.beta, c1, fc.n_mc, config.seed ^ 0xe5u);
  json w1_table = json::array();
  for (int m : fc.m_list) {
    fano::FanoConfig cfg{m, fc.dim, fc.beta, c1};
    auto chk = fano::w1_excess_check(cfg, fano::all_plus(cfg),
                                     fano::all_minus(cfg), fc.n_mc,
                                     config.seed ^ 0x31u, ref);
    json row;
    row["m"] = m;
    row["w1"] = chk.lhs;
    row["reference"] = chk.rhs;
    row["mc_se"] = chk.mc_se;
    w1_table.push_back(std::move(row));
  }
  report["w1_table"] = std::move(w1_table);

  std::ofstream curve(config.out / "fano_bound.csv");
  curve << "n,bound\n";
  for (long n : fc.bound_n_grid) {
    curve << n << ","
          << fmt_double(fano::fano_bound(n, fc.beta, fc.dim, c1_bound))
          << "\n";
    curve.flush();
  }
  report["bound_exponent"] = fano::fano_bound_exponent(fc.beta, fc.dim);
  write_file(config.out / "fano_report.json", report.dump(2) + "\n");
  return report;
}

json run_ot_bench(const ExperimentConfig& config) {
  const auto& bc = config.ot_bench;
  std::ofstream out(config.out / "ot_bench.csv");
  out << "instance,n,dim,w1,brute,gap\n";
  Rng root(config.seed, 0x07be9c4u);
  double max_dev = 0.0, max_gap = 0.0;
  for (int inst = 0; inst < bc.instances; ++inst) {
    Rng rng = root.split(static_cast<std::uint64_t>(inst));
    int n = 2 + static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(bc.max_atoms - 1)));
    int dim = 1 + static_cast<int>(rng.next_below(
                      static_cast<std::uint64_t>(bc.max_dim)));
    measures::EmpiricalMeasure mu =
        measures::sample_latent({dim}, n, rng);
    measures::EmpiricalMeasure nu =
        measures::sample_latent({dim}, n, rng);
    ot::TransportPlan plan = ot::w1_exact(mu, nu);
    double brute = ot::w1_bruteforce(mu, nu);
    double dual = 0.0;
    for (int i = 0; i < n; ++i)
      dual += mu.weights[static_cast<std::size_t>(i)] *
              plan.source_potential[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      dual -= nu.weights[static_cast<std::size_t>(j)] *
              plan.target_potential[static_cast<std::size_t>(j)];
    double gap = std::abs(plan.cost - dual);
    max_dev = std::max(max_dev, std::abs(plan.cost - brute));
    max_gap = std::max(max_gap, gap);
    out << inst << "," << n << "," << dim << "," << fmt_double(plan.cost)
        << "," << fmt_double(brute) << "," << fmt_double(gap) << "\n";
    out.flush();
  }
  // one large instance for the duality gap at scale
  {
    Rng rng = root.split(999983u);
    measures::EmpiricalMeasure mu =
        measures::sample_latent({3}, bc.gap_atoms, rng);
    measures::EmpiricalMeasure nu =
        measures::sample_latent({3}, bc.gap_atoms, rng);
    ot::TransportPlan plan = ot::w1_exact(mu, nu);
    double dual = 0.0;
    for (int i = 0; i < bc.gap_atoms; ++i)
      dual += mu.weights[static_cast<std::size_t>(i)] *
              plan.source_potential[static_cast<std::size_t>(i)];
    for (int j = 0; j < bc.gap_atoms; ++j)
      dual -= nu.weights[static_cast<std::size_t>(j)] *
              plan.target_potential[static_cast<std::size_t>(j)];
    max_gap = std::max(max_gap, std::abs(plan.cost - dual));
  }
  json summary;
  summary["instances"] = bc.instances;
  summary["max_brute_deviation"] = max_dev;
  summary["max_duality_gap"] = max_gap;
  return summary;
}

json run_audit(const ExperimentConfig& config) {
  const auto& ac = config.audit;
  std::ofstream out(config.out / "audit.csv");
  out << "seed,lhs,rhs,base,eps1,eps2,eps3,eps4,combined_se,eps4_bound,"
         "verdict\n";
  std::atomic<int> verdicts{0};
  std::atomic<int> eps4_ok{0};
  const long count = ac.instances;
  std::vector<est::AuditInstance> results(static_cast<std::size_t>(count));
  parallel_for(count, config.threads, [&](long i) {
    std::uint64_t seed = Rng::mix(config.seed + 0x100u + static_cast<std::uint64_t>(i));
    results[static_cast<std::size_t>(i)] = est::run_audit_instance(seed, ac.instance);
  });
  for (long i = 0; i < count; ++i) {
    const est::AuditInstance& inst = results[static_cast<std::size_t>(i)];
    const est::OracleTerms& t = inst.terms;
    if (t.verdict) verdicts.fetch_add(1);
    if (t.eps4 <= inst.eps4_bound + 1e-3) eps4_ok.fetch_add(1);
    out << i << "," << fmt_double(t.lhs) << "," << fmt_double(t.rhs()) << ","
        << fmt_double(t.base) << "," << fmt_double(t.eps1) << ","
        << fmt_double(t.eps2) << "," << fmt_double(t.eps3) << ","
        << fmt_double(t.eps4) << "," << fmt_double(t.combined_se) << ","
        << fmt_double(inst.eps4_bound) << "," << (t.verdict ? 1 : 0) << "\n";
    out.flush();
  }
  json summary;
  summary["instances"] = ac.instances;
  summary["verdict_fraction"] =
      static_cast<double>(verdicts.load()) / static_cast<double>(count);
  summary["eps4_within_bound_fraction"] =
      static_cast<double>(eps4_ok.load()) / static_cast<double>(count);
  return summary;
}

}  // namespace

void ExperimentConfig::validate() const {
  for (std::size_t k = 1; k < n_grid.size(); ++k)
    if (n_grid[k] <= n_grid[k - 1])
      throw ConfigError("n_grid", "must be strictly increasing");
  if (n_grid.empty()) throw ConfigError("n_grid", "must be nonempty");
  if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  try {
    truth.spec.validate();
  } catch (const InfeasibleSpec& e) {
    throw ConfigError("truth.spec", e.what());
  }
  if (truth.sigma0 < 0) throw ConfigError("truth.sigma0", "must be >= 0");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("invalid json: ") + e.what());
  }
  ExperimentConfig config;
  config.mode = parse_mode(require<std::string>(j, "", "mode"));
  config.seed = field<std::uint64_t>(j, "", "seed", 0);
  config.out = field<std::string>(j, "", "out", "out");
  config.threads = field<int>(j, "", "threads", 1);
  config.plot = field<bool>(j, "", "plot", false);
  if (j.contains("n_grid"))
    config.n_grid = require<std::vector<long>>(j, "", "n_grid");
  config.replicates = field<int>(j, "", "replicates", config.replicates);

  if (j.contains("truth")) {
    const json& jt = j.at("truth");
    config.truth.spec = parse_spec(jt.contains("spec") ? jt.at("spec") : jt,
                                   "truth.spec");
    config.truth.sigma0 = field<double>(jt, "truth", "sigma0", 0.0);
    config.truth.seed = field<std::uint64_t>(jt, "truth", "seed", 7);
  } else {
    config.truth.spec.depth = 0;
    config.truth.spec.widths = {1, 1};
    config.truth.spec.arities = {1};
    config.truth.spec.smoothnesses = {1.0};
    config.truth.spec.bound = 2.0;
  }

  if (j.contains("rates")) {
    const json& jr = j.at("rates");
    config.rates.dims = field<std::vector<int>>(jr, "rates", "dims",
                                                config.rates.dims);
    config.rates.proxy =
        field<std::string>(jr, "rates", "proxy", config.rates.proxy);
    config.rates.proxy_multiple = field<long>(jr, "rates", "proxy_multiple",
                                              config.rates.proxy_multiple);
    if (config.rates.proxy != "auto" && config.rates.proxy != "population" &&
        config.rates.proxy != "paired")
      throw ConfigError("rates.proxy", "must be auto, population or paired");
  }
  if (j.contains("gan")) {
    const json& jg = j.at("gan");
    if (jg.contains("size_constants"))
      config.gan.size_constants =
          parse_size_constants(jg.at("size_constants"), "gan.size_constants");
    config.gan.outer_steps =
        field<int>(jg, "gan", "outer_steps", config.gan.outer_steps);
    config.gan.step_size =
        field<double>(jg, "gan", "step_size", config.gan.step_size);
    config.gan.m_latent = field<int>(jg, "gan", "m_latent", config.gan.m_latent);
    config.gan.restarts = field<int>(jg, "gan", "restarts", config.gan.restarts);
    config.gan.eval_latents =
        field<int>(jg, "gan", "eval_latents", config.gan.eval_latents);
    config.gan.write_traces =
        field<bool>(jg, "gan", "write_traces", config.gan.write_traces);
    config.gan.n_eval = field<int>(jg, "gan", "n_eval", config.gan.n_eval);
  }
  if (j.contains("mle")) {
    const json& jm = j.at("mle");
    if (jm.contains("size_constants"))
      config.mle.size_constants =
          parse_size_constants(jm.at("size_constants"), "mle.size_constants");
    config.mle.steps = field<int>(jm, "mle", "steps", config.mle.steps);
    config.mle.step_size =
        field<double>(jm, "mle", "step_size", config.mle.step_size);
    config.mle.m_latent = field<int>(jm, "mle", "m_latent", config.mle.m_latent);
    config.mle.restarts = field<int>(jm, "mle", "restarts", config.mle.restarts);
    config.mle.sigma_tilde_scale = field<double>(jm, "mle", "sigma_tilde_scale",
                                                 config.mle.sigma_tilde_scale);
    config.mle.n_eval = field<int>(jm, "mle", "n_eval", config.mle.n_eval);
  }
  if (j.contains("fano")) {
    const json& jf = j.at("fano");
    config.fano.dim = field<int>(jf, "fano", "dim", config.fano.dim);
    config.fano.beta = field<double>(jf, "fano", "beta", config.fano.beta);
    config.fano.m_list =
        field<std::vector<int>>(jf, "fano", "m_list", config.fano.m_list);
    config.fano.packing_j =
        field<int>(jf, "fano", "packing_j", config.fano.packing_j);
    config.fano.bound_n_grid = field<std::vector<long>>(
        jf, "fano", "bound_n_grid", config.fano.bound_n_grid);
    config.fano.n_mc = field<int>(jf, "fano", "n_mc", config.fano.n_mc);
  }
  if (j.contains("audit")) {
    const json& ja = j.at("audit");
    config.audit.instances =
        field<int>(ja, "audit", "instances", config.audit.instances);
    config.audit.instance.sigma0 =
        field<double>(ja, "audit", "sigma0", config.audit.instance.sigma0);
    config.audit.instance.n_data =
        field<int>(ja, "audit", "n_data", config.audit.instance.n_data);
    config.audit.instance.n_candidates = field<int>(
        ja, "audit", "candidates", config.audit.instance.n_candidates);
    config.audit.instance.m_atoms =
        field<int>(ja, "audit", "m_atoms", config.audit.instance.m_atoms);
    config.audit.instance.eps_net =
        field<double>(ja, "audit", "eps_net", config.audit.instance.eps_net);
    config.audit.instance.audit.n_eval =
        field<int>(ja, "audit", "n_eval", config.audit.instance.audit.n_eval);
    config.audit.instance.audit.fresh_datasets =
        field<int>(ja, "audit", "fresh_datasets",
                   config.audit.instance.audit.fresh_datasets);
  }
  if (j.contains("ot_bench")) {
    const json& jb = j.at("ot_bench");
    config.ot_bench.instances =
        field<int>(jb, "ot_bench", "instances", config.ot_bench.instances);
    config.ot_bench.max_atoms =
        field<int>(jb, "ot_bench", "max_atoms", config.ot_bench.max_atoms);
    config.ot_bench.max_dim =
        field<int>(jb, "ot_bench", "max_dim", config.ot_bench.max_dim);
    config.ot_bench.gap_atoms =
        field<int>(jb, "ot_bench", "gap_atoms", config.ot_bench.gap_atoms);
  }
  config.validate();
  return config;
}

std::string run(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out);
  json summary;
  switch (config.mode) {
    case Mode::rates:
      summary["rates"] = run_rates(config);
      break;
    case Mode::gan:
      summary["results"] = run_gan(config);
      break;
    case Mode::mle:
      summary["results"] = run_mle(config);
      break;
    case Mode::fano:
      summary["results"] = run_fano(config);
      break;
    case Mode::ot_bench:
      summary["results"] = run_ot_bench(config);
      break;
    case Mode::audit:
      summary["results"] = run_audit(config);
      break;
  }
  summary["theory"] = exponents_block(config);
  summary["meta"] = meta_block(config);
  std::string text = summary.dump(2) + "\n";
  write_file(config.out / "summary.json", text);
  return text;
}

}  // namespace ganlab::harness
