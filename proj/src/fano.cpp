#include "ganlab/fano.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "ganlab/measures.hpp"
#include "ganlab/ot.hpp"
#include "ganlab/util.hpp"

namespace ganlab::fano {

namespace bump {

double eval(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  return std::exp(4.0 - 1.0 / (z * (1.0 - z)));
}

double deriv(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  double u = z * (1.0 - z);
  return eval(z) * (1.0 - 2.0 * z) / (u * u);
}

double sup_abs_deriv() {
  static const double value = [] {
    // coarse grid then golden-section polish on (0, 1/2)
    double best_x = 0.2, best = 0.0;
    for (int i = 1; i < 20000; ++i) {
      double x = 0.5 * i / 20000.0;
      double v = std::abs(deriv(x));
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    double lo = best_x - 1e-3, hi = best_x + 1e-3;
    const double phi_ratio = 0.6180339887498949;
    double a = hi - phi_ratio * (hi - lo), b = lo + phi_ratio * (hi - lo);
    for (int it = 0; it < 200; ++it) {
      if (std::abs(deriv(a)) > std::abs(deriv(b))) {
        hi = b;
      } else {
        lo = a;
      }
      a = hi - phi_ratio * (hi - lo);
      b = lo + phi_ratio * (hi - lo);
    }
    return std::abs(deriv(0.5 * (lo + hi)));
  }();
  return value;
}

}  // namespace bump

long FanoConfig::cells() const {
  long total = 1;
  for (int k = 0; k < dim; ++k) total *= m;
  return total;
}

long FanoConfig::cell_of(std::span<const double> point) const {
  long flat = 0, stride = 1;
  for (int k = 0; k < dim; ++k) {
    int jk = std::clamp(static_cast<int>(std::floor(point[static_cast<std::size_t>(k)] * m)),
                        0, m - 1);
    flat += stride * jk;
    stride *= m;
  }
  return flat;
}

double FanoConfig::jacobian_floor() const {
  // cells are translates of one another: one cell grid suffices
  const int grid = 64;
  double worst = 0.0;
  // max over u1 of |phi'| times max over the other axes of phi
  double max_phi = 0.0, max_dphi = 0.0;
  for (int i = 0; i < grid; ++i) {
    double u = (i + 0.5) / grid;
    max_phi = std::max(max_phi, bump::eval(u));
    max_dphi = std::max(max_dphi, std::abs(bump::deriv(u)));
  }
  double prod = max_dphi;
  for (int k = 1; k < dim; ++k) prod *= max_phi;
  worst = c1 * std::pow(static_cast<double>(m), 1.0 - beta) * prod;
  return 1.0 - worst;
}

void FanoConfig::validate() const {
  if (m < 1 || dim < 1 || beta <= 0.0 || c1 < 0.0)
    throw DomainError("fano config: bad parameters");
  if (jacobian_floor() < 0.5)
    throw AmplitudeTooLarge(
        "fano config: c1 breaks the 1/2 Jacobian floor on the check grid");
}

double auto_c1(int m, int dim, double beta) {
  for (double c = 1.0; c > 1e-12; c *= 0.5) {
    FanoConfig cfg{m, dim, beta, c};
    if (cfg.jacobian_floor() >= 0.5) return c;
  }
  throw AmplitudeTooLarge("auto_c1: no feasible amplitude found");
}

SignVector all_plus(const FanoConfig& cfg) {
  return SignVector(static_cast<std::size_t>(cfg.cells()), +1);
}

SignVector all_minus(const FanoConfig& cfg) {
  return SignVector(static_cast<std::size_t>(cfg.cells()), -1);
}

namespace {

struct CellTerm {
  long cell;
  double prod_tail;  // phi factors over coordinates 2..d at the point
  double u1;         // first in-cell coordinate, in (0,1)
};

CellTerm cell_term(const FanoConfig& cfg, std::span<const double> point) {
  CellTerm t;
  t.cell = cfg.cell_of(point);
  t.prod_tail = 1.0;
  long rem = t.cell;
  for (int k = 0; k < cfg.dim; ++k) {
    int jk = static_cast<int>(rem % cfg.m);
    rem /= cfg.m;
    double u = point[static_cast<std::size_t>(k)] * cfg.m - jk;
    if (k == 0) {
      t.u1 = u;
    } else {
      t.prod_tail *= bump::eval(u);
    }
  }
  return t;
}

double amplitude(const FanoConfig& cfg) {
  return cfg.c1 * std::pow(static_cast<double>(cfg.m), -cfg.beta);
}

// --- Gauss-Legendre nodes on [0,1], cached per order ------------------------

struct GlRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GlRule& gl_rule(int order) {
  static std::map<int, GlRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  GlRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    // Newton iteration on P_order from the Chebyshev initial guess
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = order * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[static_cast<std::size_t>(order - 1 - i)] = 0.5 * (x + 1.0);
    rule.weights[static_cast<std::size_t>(order - 1 - i)] =
        1.0 / ((1.0 - x * x) * pp * pp);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

// tensor quadrature of fn over one cell in y-space
template <typename Fn>
double cell_integral(const FanoConfig& cfg, long cell, int order, Fn&& fn) {
  const GlRule& rule = gl_rule(order);
  std::vector<int> jk(static_cast<std::size_t>(cfg.dim));
  long rem = cell;
  for (int k = 0; k < cfg.dim; ++k) {
    jk[static_cast<std::size_t>(k)] = static_cast<int>(rem % cfg.m);
    rem /= cfg.m;
  }
  const double h = 1.0 / cfg.m;
  std::vector<int> idx(static_cast<std::size_t>(cfg.dim), 0);
  std::vector<double> y(static_cast<std::size_t>(cfg.dim));
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int k = 0; k < cfg.dim; ++k) {
      y[static_cast<std::size_t>(k)] =
          (jk[static_cast<std::size_t>(k)] +
           rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]) * h;
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] * h;
    }
    total += w * fn(std::span<const double>{y});
    int k = 0;
    for (; k < cfg.dim; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < order) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k == cfg.dim) break;
  }
  return total;
}

}  // namespace

std::vector<double> fano_g(const FanoConfig& cfg, const SignVector& alpha,
                           std::span<const double> z) {
  cfg.validate();
  if (static_cast<long>(alpha.size()) != cfg.cells())
    throw ShapeMismatch("fano_g: sign vector size != cell count");
  if (static_cast<int>(z.size()) != cfg.dim)
    throw ShapeMismatch("fano_g: input dimension mismatch");
  CellTerm t = cell_term(cfg, z);
  std::vector<double> y(z.begin(), z.end());
  double sign = static_cast<double>(alpha[static_cast<std::size_t>(t.cell)]);
  y[0] += amplitude(cfg) * sign * bump::eval(t.u1) * t.prod_tail;
  return y;
}

double fano_density(const FanoConfig& cfg, const SignVector& alpha,
                    std::span<const double> y) {
  cfg.validate();
  for (double v : y)
    if (v < 0.0 || v > 1.0) return 0.0;
  // cells map onto themselves; bisect the monotone first coordinate
  CellTerm t = cell_term(cfg, y);
  long rem = t.cell;
  int j1 = static_cast<int>(rem % cfg.m);
  double lo = static_cast<double>(j1) / cfg.m;
  double hi = static_cast<double>(j1 + 1) / cfg.m;
  const double a = amplitude(cfg) *
                   static_cast<double>(alpha[static_cast<std::size_t>(t.cell)]) *
                   t.prod_tail;
  const double target = y[0];
  auto value = [&](double z1) {
    return z1 + a * bump::eval(z1 * cfg.m - j1) - target;
  };
  double flo = value(lo);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    double fmid = value(mid);
    if ((flo <= 0.0) == (fmid <= 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  double z1 = 0.5 * (lo + hi);
  double jac = 1.0 + a * cfg.m * bump::deriv(z1 * cfg.m - j1);
  return 1.0 / jac;
}

std::pair<double, double> density_bounds(const FanoConfig& cfg) {
  double u = cfg.c1 * std::pow(static_cast<double>(cfg.m), 1.0 - cfg.beta) *
             bump::sup_abs_deriv();  // max phi = 1 on the other axes
  return {1.0 / (1.0 + u), 1.0 / (1.0 - u)};
}

double density_mass(const FanoConfig& cfg, const SignVector& alpha) {
  cfg.validate();
  if (cfg.dim > 2) throw QuadratureFailure("density_mass: dim > 2");
  double total = 0.0;
  for (long cell = 0; cell < cfg.cells(); ++cell)
    total += cell_integral(cfg, cell, 32, [&](std::span<const double> y) {
      return fano_density(cfg, alpha, y);
    });
  return total;
}

KlResult kl_pair(const FanoConfig& cfg, const SignVector& alpha,
                 const SignVector& alpha_prime) {
  cfg.validate();
  if (cfg.dim > 2) throw QuadratureFailure("kl_pair: dim > 2");
  if (alpha.size() != alpha_prime.size())
    throw ShapeMismatch("kl_pair: sign vector sizes differ");
  auto integrate = [&](int order) {
    KlResult acc;
    for (long cell = 0; cell < cfg.cells(); ++cell) {
      if (alpha[static_cast<std::size_t>(cell)] ==
          alpha_prime[static_cast<std::size_t>(cell)])
        continue;  // identical densities on this cell
      acc.kl += cell_integral(cfg, cell, order, [&](std::span<const double> y) {
        double qa = fano_density(cfg, alpha, y);
        double qb = fano_density(cfg, alpha_prime, y);
        return qa * std::log(qa / qb);
      });
      acc.hellinger_sq +=
          cell_integral(cfg, cell, order, [&](std::span<const double> y) {
            double d = std::sqrt(fano_density(cfg, alpha, y)) -
                       std::sqrt(fano_density(cfg, alpha_prime, y));
            return d * d;
          });
    }
    return acc;
  };
  KlResult coarse = integrate(16);
  KlResult fine = integrate(24);
  // the per-point density solve floors the attainable accuracy near 1e-9
  double tol = std::max(1e-8, 1e-4 * std::abs(fine.kl));
  if (std::abs(fine.kl - coarse.kl) > tol) {
    KlResult finer = integrate(40);
    if (std::abs(finer.kl - fine.kl) > tol)
      throw QuadratureFailure("kl_pair: refinement budget exceeded");
    return finer;
  }
  return fine;
}

long hamming(const SignVector& a, const SignVector& b) {
  long h = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++h;
  return h;
}

PackingSet gv_packing(int j_size, Rng& rng) {
  if (j_size < 16) throw DomainError("gv_packing: need J >= 16");
  const long target =
      static_cast<long>(std::ceil(std::exp(static_cast<double>(j_size) / 16.0)));
  const double min_dist = static_cast<double>(j_size) / 4.0;
  PackingSet out;
  out.j_size = j_size;
  const long budget = 300000;
  for (long draw = 0; draw < budget; ++draw) {
    SignVector cand(static_cast<std::size_t>(j_size));
    for (auto& s : cand) s = rng.uniform() < 0.5 ? -1 : +1;
    bool ok = true;
    for (const SignVector& kept : out.codewords)
      if (static_cast<double>(hamming(cand, kept)) < min_dist) {
        ok = false;
        break;
      }
    if (ok) {
      out.codewords.push_back(std::move(cand));
      if (static_cast<long>(out.codewords.size()) >= target) return out;
    }
  }
  throw BudgetExceeded("gv_packing: draw budget exhausted; retry a new stream");
}

namespace {

measures::EmpiricalMeasure push_alpha(const FanoConfig& cfg,
                                      const SignVector& alpha, int n_mc,
                                      Rng& rng) {
  measures::EmpiricalMeasure cloud;
  cloud.dim = cfg.dim;
  std::vector<double> z(static_cast<std::size_t>(cfg.dim));
  for (int i = 0; i < n_mc; ++i) {
    for (double& v : z) v = rng.uniform();
    auto y = fano_g(cfg, alpha, z);
    cloud.points.insert(cloud.points.end(), y.begin(), y.end());
  }
  cloud.weights.assign(static_cast<std::size_t>(n_mc),
                       1.0 / static_cast<double>(n_mc));
  return cloud;
}

double excess_w1_once(const FanoConfig& cfg, const SignVector& alpha,
                      const SignVector& alpha_prime, int n_mc, Rng& rng,
                      bool matched) {
  Rng ra = rng.split(1);
  Rng rb = matched ? rng.split(1) : rng.split(2);
  measures::EmpiricalMeasure a = push_alpha(cfg, alpha, n_mc, ra);
  measures::EmpiricalMeasure b = push_alpha(cfg, alpha_prime, n_mc, rb);
  return ot::w1_cost(a, b);
}

}  // namespace

ExcessReference calibrate_excess(int dim, double beta, double c1, int n_mc,
                                 std::uint64_t seed) {
  FanoConfig cfg{2, dim, beta, c1};
  cfg.validate();
  SignVector plus = all_plus(cfg), minus = all_minus(cfg);
  Rng rng(seed, 0xca11u);
  std::vector<double> vals;
  for (int rep = 0; rep < 4; ++rep) {
    Rng rr = rng.split(static_cast<std::uint64_t>(rep));
    vals.push_back(excess_w1_once(cfg, plus, minus, n_mc, rr, true));
  }
  double lhs = mean_of(vals);
  double mpow = std::pow(2.0, beta + dim);
  double h = static_cast<double>(cfg.cells());
  // frozen with a 1/2 margin so the reference stays a lower envelope
  ExcessReference ref;
  ref.constant = 0.5 * lhs * mpow / h;
  return ref;
}

ExcessCheck w1_excess_check(const FanoConfig& cfg, const SignVector& alpha,
                            const SignVector& alpha_prime, int n_mc,
                            std::uint64_t seed, const ExcessReference& ref,
                            bool matched_latents) {
  cfg.validate();
  if (cfg.dim > 2) throw TooLarge("w1_excess_check: dim > 2");
  Rng rng(seed, 0xecce55u);
  std::vector<double> vals;
  for (int rep = 0; rep < 4; ++rep) {
    Rng rr = rng.split(static_cast<std::uint64_t>(rep));
    vals.push_back(
        excess_w1_once(cfg, alpha, alpha_prime, n_mc, rr, matched_latents));
  }
  ExcessCheck out;
  out.lhs = mean_of(vals);
  out.mc_se = sample_sd(vals) / 2.0;
  out.rhs = ref.constant * static_cast<double>(hamming(alpha, alpha_prime)) /
            std::pow(static_cast<double>(cfg.m), cfg.beta + cfg.dim);
  return out;
}

namespace {

// KL prefactor calibrated once per dimension at (beta = 2, m = 2, full flip)
double kl_prefactor(int dim, double c1) {
  static std::map<int, double> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  const double beta = 2.0;
  FanoConfig cfg{2, dim, beta, c1};
  cfg.validate();
  KlResult kl = kl_pair(cfg, all_plus(cfg), all_minus(cfg));
  double c = kl.kl * std::pow(2.0, 2.0 * (beta - 1.0)) / (c1 * c1);
  cache[dim] = c;
  return c;
}

}  // namespace

double fano_bound_exponent(double beta, int dim) {
  return -beta / (static_cast<double>(dim) + 2.0 * (beta - 1.0));
}

double bound_feasible_c1(double beta, int dim) {
  if (dim > 2) throw TooLarge("bound_feasible_c1: needs dim <= 2");
  double c1 = auto_c1(2, dim, beta);
  for (int halvings = 0; halvings < 24; ++halvings) {
    FanoConfig cfg{2, dim, beta, c1};
    KlResult kl = kl_pair(cfg, all_plus(cfg), all_minus(cfg));
    double prefactor = kl.kl * std::pow(2.0, 2.0 * (beta - 1.0)) / (c1 * c1);
    if (16.0 * c1 * c1 * prefactor <= 0.5) return c1;
    c1 *= 0.5;
  }
  throw AmplitudeTooLarge("bound_feasible_c1: no feasible amplitude");
}

double fano_bound(long n, double beta, int dim, double c1) {
  if (n < 2) throw DomainError("fano_bound: n must be >= 2");
  if (dim > 2) throw TooLarge("fano_bound: numeric evaluation needs dim <= 2");
  const double denom = static_cast<double>(dim) + 2.0 * (beta - 1.0);
  if (denom <= 0.0) throw DomainError("fano_bound: degenerate m-selection");
  const long m = std::max<long>(
      2, static_cast<long>(std::ceil(
             std::pow(static_cast<double>(n), 1.0 / denom))));
  const double C = kl_prefactor(dim, c1);
  // c3 from the excess-mass calibration; ref.constant plays c1 * c3
  static std::map<std::pair<int, long>, double> c3_cache;
  static std::mutex mutex;
  double c3;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(dim, static_cast<long>(beta * 1024));
    auto it = c3_cache.find(key);
    if (it == c3_cache.end()) {
      ExcessReference ref = calibrate_excess(dim, beta, c1, 2048, 17);
      it = c3_cache.emplace(key, ref.constant / c1).first;
    }
    c3 = it->second;
  }
  double packing_exponent = std::pow(static_cast<double>(m), dim) / 16.0;
  double kl_term = static_cast<double>(n) * c1 * c1 * C *
                   std::pow(static_cast<double>(m), -2.0 * (beta - 1.0));
  double bracket = 1.0 - (kl_term + std::log(2.0)) / packing_exponent;
  double lead = c1 * c3 / std::pow(static_cast<double>(m), beta);
  return lead * std::max(0.0, bracket);
}

RateExponents rate_exponents(double beta_star, double t_star, int dim) {
  if (beta_star <= 0.0 || t_star <= 0.0 || dim < 1)
    throw DomainError("rate_exponents: positive inputs required");
  RateExponents out;
  out.gan = -beta_star / (2.0 * beta_star + t_star);
  out.mle = -beta_star / (2.0 * (beta_star + t_star));
  out.lower = -beta_star / (2.0 * beta_star + static_cast<double>(dim) - 2.0);
  double denom = static_cast<double>(dim) + 2.0 * (beta_star - 1.0);
  out.lower_flagged = denom <= 1.0 + 1e-12;
  return out;
}

}  // namespace ganlab::fano
