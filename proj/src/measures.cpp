#include "ganlab/measures.hpp"

#include <cmath>
#include <sstream>

#include "ganlab/util.hpp"

namespace ganlab::measures {

void EmpiricalMeasure::push_row(std::span<const double> x, double w) {
  points.insert(points.end(), x.begin(), x.end());
  weights.push_back(w);
}

double EmpiricalMeasure::integrate(
    const std::function<double(std::span<const double>)>& f) const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += weights[static_cast<std::size_t>(i)] * f(row(i));
  return s;
}

void EmpiricalMeasure::validate() const {
  if (weights.empty()) throw DegenerateInput("empirical measure: no atoms");
  if (points.size() != weights.size() * static_cast<std::size_t>(dim))
    throw ShapeMismatch("empirical measure: points/weights size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DegenerateInput("empirical measure: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw DegenerateInput("empirical measure: weights must sum to 1");
  for (double x : points)
    if (!std::isfinite(x))
      throw DegenerateInput("empirical measure: non-finite coordinate");
}

EmpiricalMeasure uniform_cloud(int dim, std::vector<double> points) {
  EmpiricalMeasure mu;
  mu.dim = dim;
  mu.points = std::move(points);
  auto n = mu.points.size() / static_cast<std::size_t>(dim);
  mu.weights.assign(n, 1.0 / static_cast<double>(n));
  return mu;
}

std::string EmpiricalMeasure::to_csv() const {
  std::ostringstream out;
  out << "w";
  for (int k = 1; k <= dim; ++k) out << ",x" << k;
  out << "\n";
  for (int i = 0; i < size(); ++i) {
    out << fmt_double(weights[static_cast<std::size_t>(i)]);
    for (double x : row(i)) out << "," << fmt_double(x);
    out << "\n";
  }
  return out.str();
}

EmpiricalMeasure from_csv_impl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DegenerateInput("empirical measure csv: empty input");
  int dim = -1;  // from header w,x1,...,xD
  {
    int cols = 1;
    for (char c : line)
      if (c == ',') ++cols;
    dim = cols - 1;
  }
  EmpiricalMeasure mu;
  mu.dim = dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    mu.weights.push_back(std::strtod(cell.c_str(), nullptr));
    for (int k = 0; k < dim; ++k) {
      if (!std::getline(row, cell, ','))
        throw ShapeMismatch("empirical measure csv: short row");
      mu.points.push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  mu.validate();
  return mu;
}

EmpiricalMeasure EmpiricalMeasure::from_csv(const std::string& text) {
  return from_csv_impl(text);
}

Generator Generator::from(const composite::CompositeFunction& g) {
  return Generator(g.spec().latent_dim(), g.spec().ambient_dim(),
                   [g](std::span<const double> z) { return g.eval(z); });
}

Generator Generator::from(const netgen::SparseReluNet& net) {
  return Generator(net.in_dim(), net.out_dim(),
                   [net](std::span<const double> z) {
                     return netgen::forward(net, z);
                   });
}

Generator Generator::constant(int in_dim, std::vector<double> value) {
  int out_dim = static_cast<int>(value.size());
  return Generator(in_dim, out_dim,
                   [value](std::span<const double>) { return value; });
}

Generator Generator::identity(int dim) {
  return Generator(dim, dim, [](std::span<const double> z) {
    return std::vector<double>(z.begin(), z.end());
  });
}

EmpiricalMeasure sample_latent(const LatentSpec& spec, int n, Rng& rng) {
  if (spec.dim < 1) throw DomainError("sample_latent: dim must be >= 1");
  if (n < 1) throw DomainError("sample_latent: n must be >= 1");
  EmpiricalMeasure mu;
  mu.dim = spec.dim;
  mu.points.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(spec.dim));
  for (double& x : mu.points) x = rng.uniform();
  mu.weights.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  return mu;
}

EmpiricalMeasure pushforward_sample(const Generator& g, int n, Rng& rng) {
  LatentSpec spec{g.in_dim()};
  EmpiricalMeasure latents = sample_latent(spec, n, rng);
  EmpiricalMeasure mu;
  mu.dim = g.out_dim();
  mu.points.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(mu.dim));
  for (int i = 0; i < n; ++i) {
    std::vector<double> y = g(latents.row(i));
    mu.points.insert(mu.points.end(), y.begin(), y.end());
  }
  mu.weights.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  return mu;
}

EmpiricalMeasure noisy_sample(const NoisyModel& model, int n, Rng& rng) {
  if (model.noise_sd < 0.0) throw DomainError("noisy_sample: sigma < 0");
  EmpiricalMeasure mu = pushforward_sample(model.generator, n, rng);
  if (model.noise_sd > 0.0)
    for (double& x : mu.points) x += model.noise_sd * rng.normal();
  return mu;
}

EmpiricalMeasure perturb(const EmpiricalMeasure& data, double sigma_tilde,
                         Rng& rng) {
  if (sigma_tilde < 0.0) throw DomainError("perturb: sigma_tilde < 0");
  EmpiricalMeasure out = data;
  if (sigma_tilde > 0.0)
    for (double& x : out.points) x += sigma_tilde * rng.normal();
  return out;
}

}  // namespace ganlab::measures
