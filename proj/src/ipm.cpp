#include "ganlab/ipm.hpp"

#include <algorithm>
#include <cmath>

#include "ganlab/util.hpp"
#include "json.hpp"

namespace ganlab::ipm {

using nlohmann::json;

double SmoothFeature::eval(std::span<const double> x) const {
  if (kind == Kind::quadratic) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  }
  if (kind == Kind::linear) return amplitude * dot(frequency, x);
  return amplitude * std::cos(dot(frequency, x) + phase);
}

std::vector<double> SmoothFeature::grad(std::span<const double> x) const {
  std::vector<double> g(x.size(), 0.0);
  if (kind == Kind::quadratic) {
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = 2.0 * x[k];
    return g;
  }
  if (kind == Kind::linear) {
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = amplitude * frequency[k];
    return g;
  }
  double s = -amplitude * std::sin(dot(frequency, x) + phase);
  for (std::size_t k = 0; k < x.size(); ++k) g[k] = s * frequency[k];
  return g;
}

double SmoothFeature::lipschitz_bound() const {
  if (kind == Kind::quadratic) return 2.0 * domain_radius;
  return std::abs(amplitude) * norm2(frequency);
}

double SmoothFeature::hessian_bound() const {
  if (kind == Kind::quadratic) return 2.0;
  if (kind == Kind::linear) return 0.0;
  double w = norm2(frequency);
  return std::abs(amplitude) * w * w;
}

double LipschitzNet::certified_bound() const {
  double prod = 1.0;
  for (const auto& w : net.weights) {
    double fro = 0.0;
    for (double x : w) fro += x * x;
    prod *= std::sqrt(fro);
  }
  return prod;
}

void LipschitzNet::validate() const {
  net.validate_shapes();
  if (net.out_dim() != 1)
    throw ShapeMismatch("lipschitz net discriminator must have scalar output");
  if (certified_bound() > lipschitz_cap * (1.0 + 1e-9))
    throw RangeViolation("lipschitz net exceeds its certified cap");
}

namespace {

double mean_under(const EmpiricalMeasure& mu, const ot::PotentialFn& f) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    s += mu.weights[static_cast<std::size_t>(i)] * f.eval(mu.row(i));
  return s;
}

}  // namespace

double ipm(const DiscriminatorClass& F, const EmpiricalMeasure& mu,
           const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  if (std::holds_alternative<FiniteSet>(F)) {
    const auto& set = std::get<FiniteSet>(F);
    if (set.members.empty()) throw EmptyClass("ipm: empty finite class");
    double best = 0.0;
    for (const ot::PotentialFn& f : set.members)
      best = std::max(best, std::abs(mean_under(mu, f) - mean_under(nu, f)));
    return best;
  }
  if (std::holds_alternative<SmoothFeatureSet>(F)) {
    const auto& set = std::get<SmoothFeatureSet>(F);
    if (set.features.empty()) throw EmptyClass("ipm: empty feature class");
    double best = 0.0;
    for (const SmoothFeature& f : set.features) {
      double a = mu.integrate([&](std::span<const double> x) { return f.eval(x); });
      double b = nu.integrate([&](std::span<const double> x) { return f.eval(x); });
      best = std::max(best, std::abs(a - b));
    }
    return best;
  }
  const auto& lip = std::get<LipschitzNet>(F);
  lip.validate();
  auto f = [&](std::span<const double> x) {
    return netgen::forward(lip.net, x)[0];
  };
  return std::abs(mu.integrate(f) - nu.integrate(f));
}

FiniteSet build_constructed_discriminator(const std::vector<Generator>& candidates,
                                          int m_atoms, double eps,
                                          std::uint64_t seed, BuildInfo* info) {
  if (candidates.empty())
    throw EmptyClass("build_constructed_discriminator: no candidates");
  const int d = candidates.front().in_dim();
  for (const Generator& g : candidates)
    if (g.in_dim() != d)
      throw ShapeMismatch("build_constructed_discriminator: latent dims differ");

  Rng rng(seed, 0xd15cu);
  EmpiricalMeasure latents = measures::sample_latent({d}, m_atoms, rng);
  std::vector<EmpiricalMeasure> pushed;
  pushed.reserve(candidates.size());
  for (const Generator& g : candidates) {
    EmpiricalMeasure q;
    q.dim = g.out_dim();
    for (int i = 0; i < m_atoms; ++i) {
      std::vector<double> y = g(latents.row(i));
      q.points.insert(q.points.end(), y.begin(), y.end());
    }
    q.weights.assign(static_cast<std::size_t>(m_atoms),
                     1.0 / static_cast<double>(m_atoms));
    pushed.push_back(std::move(q));
  }

  // empirical L2(P_Z) distance on the common latent atoms
  auto l2dist = [&](int a, int b) {
    double s = 0.0;
    for (int i = 0; i < m_atoms; ++i)
      s += sqdist(pushed[static_cast<std::size_t>(a)].row(i),
                  pushed[static_cast<std::size_t>(b)].row(i));
    return std::sqrt(s / static_cast<double>(m_atoms));
  };

  // greedy farthest-point eps-net
  std::vector<int> net{0};
  std::vector<double> dist_to_net(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    dist_to_net[c] = l2dist(static_cast<int>(c), 0);
  while (true) {
    int far = -1;
    double far_d = eps;
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (dist_to_net[c] > far_d) {
        far_d = dist_to_net[c];
        far = static_cast<int>(c);
      }
    if (far < 0) break;
    net.push_back(far);
    for (std::size_t c = 0; c < candidates.size(); ++c)
      dist_to_net[c] =
          std::min(dist_to_net[c], l2dist(static_cast<int>(c), far));
  }

  FiniteSet out;
  out.members.reserve(net.size() * net.size());
  for (int j : net)
    for (int k : net)
      out.members.push_back(ot::kantorovich_potential(
          pushed[static_cast<std::size_t>(j)], pushed[static_cast<std::size_t>(k)]));
  if (info) {
    info->net_indices = net;
    info->pushforwards = std::move(pushed);
    info->latents = std::move(latents);
  }
  return out;
}

double deviation_check(const FiniteSet& F,
                       const std::vector<std::pair<EmpiricalMeasure,
                                                   EmpiricalMeasure>>& pairs) {
  double worst = 0.0;
  DiscriminatorClass cls = F;
  for (const auto& [mu, nu] : pairs) {
    double w1 = ot::w1_cost(mu, nu);
    double df = ipm(cls, mu, nu);
    worst = std::max(worst, std::abs(w1 - df));
  }
  return worst;
}

std::vector<GapPoint> smooth_gap_curve(const Generator& g,
                                       const SmoothFeature& f,
                                       const std::vector<double>& sigma_grid,
                                       int n_mc, std::uint64_t seed) {
  const int d_out = g.out_dim();
  std::vector<GapPoint> out;
  Rng root(seed, 0x90a9u);
  for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
    const double sigma = sigma_grid[si];
    Rng rng = root.split(si);
    std::vector<double> deltas;
    deltas.reserve(static_cast<std::size_t>(n_mc));
    std::vector<double> y_noisy(static_cast<std::size_t>(d_out));
    for (int i = 0; i < n_mc; ++i) {
      std::vector<double> z(static_cast<std::size_t>(g.in_dim()));
      for (double& v : z) v = rng.uniform();
      std::vector<double> y = g(z);
      std::vector<double> grad = f.grad(y);
      double corr = 0.0;
      for (int k = 0; k < d_out; ++k) {
        double xi = rng.normal();
        y_noisy[static_cast<std::size_t>(k)] =
            y[static_cast<std::size_t>(k)] + sigma * xi;
        corr += grad[static_cast<std::size_t>(k)] * sigma * xi;
      }
      // first-order term has exact mean zero: subtract it as a control variate
      deltas.push_back(f.eval(y_noisy) - f.eval(y) - corr);
    }
    double mean = mean_of(deltas);
    double se = sample_sd(deltas) / std::sqrt(static_cast<double>(n_mc));
    out.push_back({sigma, std::abs(mean), se});
  }
  return out;
}

std::vector<LipGapPoint> lipschitz_gap_curve(const Generator& g,
                                             const std::vector<double>& sigma_grid,
                                             int n_mc, std::uint64_t seed) {
  const int d_out = g.out_dim();
  std::vector<LipGapPoint> out;
  Rng root(seed, 0x11b5u);
  for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
    const double sigma = sigma_grid[si];
    Rng rng = root.split(si);
    EmpiricalMeasure clean, noisy;
    clean.dim = noisy.dim = d_out;
    double xi_norm_sum = 0.0;
    for (int i = 0; i < n_mc; ++i) {
      std::vector<double> z(static_cast<std::size_t>(g.in_dim()));
      for (double& v : z) v = rng.uniform();
      std::vector<double> y = g(z);
      clean.points.insert(clean.points.end(), y.begin(), y.end());
      std::vector<double> xi(static_cast<std::size_t>(d_out));
      for (double& v : xi) v = rng.normal();
      xi_norm_sum += norm2(xi);
      for (int k = 0; k < d_out; ++k)
        y[static_cast<std::size_t>(k)] += sigma * xi[static_cast<std::size_t>(k)];
      noisy.points.insert(noisy.points.end(), y.begin(), y.end());
    }
    clean.weights.assign(static_cast<std::size_t>(n_mc),
                         1.0 / static_cast<double>(n_mc));
    noisy.weights = clean.weights;
    LipGapPoint p;
    p.sigma = sigma;
    p.w1 = sigma == 0.0 ? 0.0 : ot::w1_cost(noisy, clean);
    p.matched_bound = sigma * xi_norm_sum / static_cast<double>(n_mc);
    out.push_back(p);
  }
  return out;
}

// --- serialization ---------------------------------------------------------

std::string FiniteSet::to_json() const {
  json j = json::array();
  for (const ot::PotentialFn& f : members) {
    json m;
    m["dim"] = f.dim;
    m["anchors"] = f.anchors;
    m["values"] = f.values;
    j.push_back(std::move(m));
  }
  return j.dump();
}

FiniteSet FiniteSet::from_json(const std::string& text) {
  FiniteSet out;
  for (const json& m : json::parse(text)) {
    ot::PotentialFn f;
    f.dim = m.at("dim").get<int>();
    f.anchors = m.at("anchors").get<std::vector<double>>();
    f.values = m.at("values").get<std::vector<double>>();
    out.members.push_back(std::move(f));
  }
  return out;
}

std::string SmoothFeatureSet::to_json() const {
  json j = json::array();
  for (const SmoothFeature& f : features) {
    json m;
    m["kind"] = f.kind == SmoothFeature::Kind::quadratic
                    ? "quadratic"
                    : (f.kind == SmoothFeature::Kind::linear ? "linear"
                                                             : "fourier");
    m["amplitude"] = f.amplitude;
    m["frequency"] = f.frequency;
    m["phase"] = f.phase;
    m["dim"] = f.dim;
    m["domain_radius"] = f.domain_radius;
    j.push_back(std::move(m));
  }
  return j.dump();
}

}  // namespace ganlab::ipm
