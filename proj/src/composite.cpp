#include "ganlab/composite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ganlab/rng.hpp"
#include "ganlab/util.hpp"
#include "json.hpp"

namespace ganlab::composite {

using nlohmann::json;

namespace {

// largest integer strictly below beta (so beta = 1 -> 0, beta = 2.5 -> 2)
int holder_order(double beta) {
  int r = static_cast<int>(std::ceil(beta - 1e-12)) - 1;
  return r < 0 ? 0 : r;
}

// all multi-indices a in N^t with |a|_1 <= r
void enumerate_orders(int t, int r,
                      const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(static_cast<std::size_t>(t), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == t) {
      fn(a);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      a[static_cast<std::size_t>(pos)] = k;
      rec(pos + 1, left - k);
    }
    a[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, r);
}

}  // namespace

double HolderComponent::eval(std::span<const double> layer_input) const {
  double out = constant;
  for (int j = 0; j < arity; ++j) {
    out += linear[static_cast<std::size_t>(j)] *
           layer_input[static_cast<std::size_t>(active_indices[static_cast<std::size_t>(j)])];
  }
  for (const TrigTerm& term : terms) {
    double prod = term.weight;
    for (int j = 0; j < arity && prod != 0.0; ++j) {
      double u = layer_input[static_cast<std::size_t>(active_indices[static_cast<std::size_t>(j)])];
      double arg = term.freqs[static_cast<std::size_t>(j)] * u;
      prod *= term.use_sin[static_cast<std::size_t>(j)] ? std::sin(arg) : std::cos(arg);
    }
    out += prod;
  }
  return out;
}

double HolderComponent::certified_gradient_bound() const {
  double lin = 0.0;
  for (double w : linear) lin += w * w;
  double g = std::sqrt(lin);
  for (const TrigTerm& term : terms) {
    g += std::abs(term.weight) * norm2(term.freqs);
  }
  return g;
}

std::pair<double, double> HolderComponent::certified_range() const {
  double lo = constant, hi = constant;
  for (double w : linear) {
    lo += std::min(0.0, w);
    hi += std::max(0.0, w);
  }
  double amp = 0.0;
  for (const TrigTerm& term : terms) amp += std::abs(term.weight);
  return {lo - amp, hi + amp};
}

double HolderComponent::certified_holder_norm() const {
  const int r = holder_order(smoothness);
  const double gamma = smoothness - r;
  double norm = 0.0;
  enumerate_orders(arity, r, [&](const std::vector<int>& a) {
    int order = 0;
    for (int k : a) order += k;
    // sup bound of the |a|-th partial derivative
    double sup = 0.0;
    if (order == 0) {
      sup += std::abs(constant);
      for (double w : linear) sup += std::abs(w);
    } else if (order == 1) {
      for (int j = 0; j < arity; ++j)
        if (a[static_cast<std::size_t>(j)] == 1)
          sup += std::abs(linear[static_cast<std::size_t>(j)]);
    }
    for (const TrigTerm& term : terms) {
      double f = std::abs(term.weight);
      for (int j = 0; j < arity; ++j)
        f *= std::pow(term.freqs[static_cast<std::size_t>(j)],
                      a[static_cast<std::size_t>(j)]);
      sup += f;
    }
    norm += sup;
    if (order == r) {
      // gamma-Holder seminorm of the top derivative: a gradient bound covers
      // |x-y| <= 1 and twice the oscillation covers |x-y| > 1.  The additive
      // constant drops out of the oscillation.
      double grad = 0.0;
      if (order == 0) {
        double lin = 0.0;
        for (double w : linear) lin += w * w;
        grad += std::sqrt(lin);
      } else if (order == 1) {
        // linear part has zero second derivatives
      }
      for (const TrigTerm& term : terms) {
        double f = std::abs(term.weight);
        for (int j = 0; j < arity; ++j)
          f *= std::pow(term.freqs[static_cast<std::size_t>(j)],
                        a[static_cast<std::size_t>(j)]);
        grad += f * norm2(term.freqs);
      }
      double osc = order == 0 ? sup - std::abs(constant) : sup;
      norm += std::max(grad, 2.0 * osc) * (gamma > 0 ? 1.0 : 0.0);
    }
  });
  return norm;
}

void HolderComponent::validate() const {
  if (static_cast<int>(active_indices.size()) != arity)
    throw InfeasibleSpec("component: |active_indices| != arity");
  if (static_cast<int>(linear.size()) != arity)
    throw InfeasibleSpec("component: linear coefficient count != arity");
  for (const TrigTerm& term : terms) {
    if (static_cast<int>(term.freqs.size()) != arity ||
        static_cast<int>(term.use_sin.size()) != arity)
      throw InfeasibleSpec("component: term shape != arity");
    for (double f : term.freqs)
      if (f < 0.0) throw InfeasibleSpec("component: negative frequency");
  }
  if (smoothness <= 0.0) throw InfeasibleSpec("component: smoothness <= 0");
  if (certified_holder_norm() > bound * (1.0 + 1e-9))
    throw InfeasibleSpec("component: certified Holder norm exceeds bound");
  auto [lo, hi] = certified_range();
  if (lo < -1e-12 || hi > 1.0 + 1e-12) {
    // the coefficient enclosure is conservative; fall back to sampling the
    // actual range before rejecting
    int per_axis = arity <= 1 ? 257 : (arity == 2 ? 65 : 17);
    std::vector<double> u(static_cast<std::size_t>(arity), 0.0);
    std::vector<double> full;
    long total = 1;
    for (int k = 0; k < arity; ++k) total *= per_axis;
    int max_active = 0;
    for (int idx : active_indices) max_active = std::max(max_active, idx);
    full.assign(static_cast<std::size_t>(max_active) + 1, 0.0);
    for (long it = 0; it < total; ++it) {
      long rem = it;
      for (int k = 0; k < arity; ++k) {
        u[static_cast<std::size_t>(k)] =
            static_cast<double>(rem % per_axis) / (per_axis - 1);
        rem /= per_axis;
      }
      for (int k = 0; k < arity; ++k)
        full[static_cast<std::size_t>(active_indices[static_cast<std::size_t>(k)])] =
            u[static_cast<std::size_t>(k)];
      double val = eval(full);
      if (val < -1e-9 || val > 1.0 + 1e-9)
        throw InfeasibleSpec("component: sampled range leaves [0,1]");
    }
  }
}

void CompositeSpec::validate() const {
  if (depth < 0) throw InfeasibleSpec("spec: depth < 0");
  if (static_cast<int>(widths.size()) != depth + 2)
    throw InfeasibleSpec("spec: widths must have depth+2 entries");
  if (static_cast<int>(arities.size()) != depth + 1)
    throw InfeasibleSpec("spec: arities must have depth+1 entries");
  if (static_cast<int>(smoothnesses.size()) != depth + 1)
    throw InfeasibleSpec("spec: smoothnesses must have depth+1 entries");
  for (int w : widths)
    if (w < 1) throw InfeasibleSpec("spec: widths must be >= 1");
  for (int i = 0; i <= depth; ++i) {
    if (arities[static_cast<std::size_t>(i)] < 1 ||
        arities[static_cast<std::size_t>(i)] > widths[static_cast<std::size_t>(i)])
      throw InfeasibleSpec("spec: arity must satisfy 1 <= t_i <= d_i");
    if (smoothnesses[static_cast<std::size_t>(i)] <= 0.0)
      throw InfeasibleSpec("spec: smoothness must be positive");
  }
  if (bound <= 0.0) throw InfeasibleSpec("spec: bound must be positive");
}

EffectiveSmoothness effective_smoothness(const CompositeSpec& spec) {
  spec.validate();
  const int q = spec.depth;
  std::vector<double> beta_tilde(static_cast<std::size_t>(q) + 1);
  for (int j = 0; j <= q; ++j) {
    double prod = 1.0;
    for (int l = j + 1; l <= q; ++l)
      prod *= std::min(spec.smoothnesses[static_cast<std::size_t>(l)], 1.0);
    beta_tilde[static_cast<std::size_t>(j)] =
        spec.smoothnesses[static_cast<std::size_t>(j)] * prod;
  }
  int j_star = 0;
  double best = static_cast<double>(spec.arities[0]) / beta_tilde[0];
  for (int j = 1; j <= q; ++j) {
    double ratio = static_cast<double>(spec.arities[static_cast<std::size_t>(j)]) /
                   beta_tilde[static_cast<std::size_t>(j)];
    if (ratio > best) {
      best = ratio;
      j_star = j;
    }
  }
  return {j_star, beta_tilde[static_cast<std::size_t>(j_star)],
          spec.arities[static_cast<std::size_t>(j_star)]};
}

CompositeFunction::CompositeFunction(
    CompositeSpec spec, std::vector<std::vector<HolderComponent>> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  validate();
}

void CompositeFunction::validate() const {
  spec_.validate();
  if (static_cast<int>(layers_.size()) != spec_.depth + 1)
    throw InfeasibleSpec("composite: layer count != depth+1");
  for (int i = 0; i <= spec_.depth; ++i) {
    const auto& layer = layers_[static_cast<std::size_t>(i)];
    if (static_cast<int>(layer.size()) != spec_.widths[static_cast<std::size_t>(i) + 1])
      throw InfeasibleSpec("composite: layer width mismatch");
    for (const HolderComponent& comp : layer) {
      if (comp.arity != spec_.arities[static_cast<std::size_t>(i)])
        throw InfeasibleSpec("composite: component arity != spec arity");
      for (int idx : comp.active_indices)
        if (idx < 0 || idx >= spec_.widths[static_cast<std::size_t>(i)])
          throw InfeasibleSpec("composite: active index out of range");
      comp.validate();
    }
  }
}

std::vector<double> CompositeFunction::eval(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != spec_.latent_dim())
    throw DomainError("eval_composite: input dimension mismatch");
  for (double v : z)
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw DomainError("eval_composite: input outside the domain cube");
  std::vector<double> cur(z.begin(), z.end());
  for (double& v : cur) v = std::clamp(v, 0.0, 1.0);
  std::vector<double> next;
  for (const auto& layer : layers_) {
    next.assign(layer.size(), 0.0);
    for (std::size_t j = 0; j < layer.size(); ++j) {
      double v = layer[j].eval(cur);
      if (v < 0.0 || v > 1.0) {
        double overshoot = std::max(-v, v - 1.0);
        if (overshoot > 1e-9)
          throw RangeViolation("eval_composite: component left its range");
        v = std::clamp(v, 0.0, 1.0);
      }
      next[j] = v;
    }
    cur.swap(next);
  }
  return cur;
}

double CompositeFunction::certified_lipschitz_bound() const {
  double total = 1.0;
  for (const auto& layer : layers_) {
    double sq = 0.0;
    for (const HolderComponent& comp : layer) {
      double g = comp.certified_gradient_bound();
      sq += g * g;
    }
    total *= std::sqrt(sq);
  }
  return total;
}

CompositeFunction make_synthetic_truth(std::uint64_t seed,
                                       const CompositeSpec& spec) {
  spec.validate();
  if (spec.bound < 1.0)
    throw InfeasibleSpec(
        "make_synthetic_truth: bound < 1 admits no nonconstant member on the "
        "unit interval");
  Rng root(seed, 0xc0317u);
  std::vector<std::vector<HolderComponent>> layers;
  for (int i = 0; i <= spec.depth; ++i) {
    const int t = spec.arities[static_cast<std::size_t>(i)];
    const int d_in = spec.widths[static_cast<std::size_t>(i)];
    const int d_out = spec.widths[static_cast<std::size_t>(i) + 1];
    std::vector<HolderComponent> layer;
    for (int j = 0; j < d_out; ++j) {
      Rng rng = root.split(static_cast<std::uint64_t>(i) * 4096u +
                           static_cast<std::uint64_t>(j));
      HolderComponent comp;
      comp.arity = t;
      comp.smoothness = spec.smoothnesses[static_cast<std::size_t>(i)];
      comp.bound = spec.bound;
      comp.constant = 0.5;
      comp.linear.assign(static_cast<std::size_t>(t), 0.0);
      // active inputs: a random t-subset of the parent layer
      std::vector<int> pool(static_cast<std::size_t>(d_in));
      for (int k = 0; k < d_in; ++k) pool[static_cast<std::size_t>(k)] = k;
      for (int k = 0; k < t; ++k) {
        int pick = k + static_cast<int>(rng.next_below(
                           static_cast<std::uint64_t>(d_in - k)));
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
      }
      comp.active_indices.assign(pool.begin(), pool.begin() + t);
      std::sort(comp.active_indices.begin(), comp.active_indices.end());

      const int n_terms = 3;
      for (int a = 0; a < n_terms; ++a) {
        TrigTerm term;
        term.weight = rng.normal();
        term.freqs.resize(static_cast<std::size_t>(t));
        term.use_sin.resize(static_cast<std::size_t>(t));
        bool any = false;
        for (int k = 0; k < t; ++k) {
          int f = static_cast<int>(rng.next_below(3));  // 0, 1 or 2 half-periods
          if (k == t - 1 && !any && f == 0) f = 1;
          term.freqs[static_cast<std::size_t>(k)] =
              3.14159265358979323846 * static_cast<double>(f);
          any = any || f > 0;
          term.use_sin[static_cast<std::size_t>(k)] =
              (f > 0 && rng.uniform() < 0.5) ? 1 : 0;
        }
        comp.terms.push_back(std::move(term));
      }
      // scale the oscillating part so the certified norm fits under K and
      // the range stays inside (0,1)
      double amp = 0.0;
      HolderComponent probe = comp;
      probe.constant = 0.0;
      for (const TrigTerm& term : comp.terms) amp += std::abs(term.weight);
      double unit_norm = probe.certified_holder_norm();
      double scale = std::min(0.42 / amp, 0.98 * (spec.bound - 0.5) / unit_norm);
      for (TrigTerm& term : comp.terms) term.weight *= scale;
      comp.validate();
      layer.push_back(std::move(comp));
    }
    layers.push_back(std::move(layer));
  }
  return CompositeFunction(spec, std::move(layers));
}

// --- serialization ---------------------------------------------------------

std::string CompositeSpec::to_json() const {
  json j;
  j["depth"] = depth;
  j["widths"] = widths;
  j["arities"] = arities;
  j["smoothnesses"] = smoothnesses;
  j["bound"] = bound;
  return j.dump();
}

CompositeSpec CompositeSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  CompositeSpec spec;
  spec.depth = j.at("depth").get<int>();
  spec.widths = j.at("widths").get<std::vector<int>>();
  spec.arities = j.at("arities").get<std::vector<int>>();
  spec.smoothnesses = j.at("smoothnesses").get<std::vector<double>>();
  spec.bound = j.at("bound").get<double>();
  spec.validate();
  return spec;
}

namespace {

// flat coefficient layout per component:
// [constant, linear (t), n_terms, then per term: weight, freqs (t), sins (t)]
std::vector<double> component_coefficients(const HolderComponent& comp) {
  std::vector<double> out;
  out.push_back(comp.constant);
  out.insert(out.end(), comp.linear.begin(), comp.linear.end());
  out.push_back(static_cast<double>(comp.terms.size()));
  for (const TrigTerm& term : comp.terms) {
    out.push_back(term.weight);
    out.insert(out.end(), term.freqs.begin(), term.freqs.end());
    for (std::uint8_t s : term.use_sin) out.push_back(static_cast<double>(s));
  }
  return out;
}

HolderComponent component_from(const std::vector<int>& active, int arity,
                               double beta, double bound,
                               const std::vector<double>& c) {
  HolderComponent comp;
  comp.arity = arity;
  comp.smoothness = beta;
  comp.bound = bound;
  comp.active_indices = active;
  std::size_t pos = 0;
  comp.constant = c.at(pos++);
  comp.linear.assign(c.begin() + static_cast<long>(pos),
                     c.begin() + static_cast<long>(pos) + arity);
  pos += static_cast<std::size_t>(arity);
  int n_terms = static_cast<int>(c.at(pos++));
  for (int a = 0; a < n_terms; ++a) {
    TrigTerm term;
    term.weight = c.at(pos++);
    term.freqs.assign(c.begin() + static_cast<long>(pos),
                      c.begin() + static_cast<long>(pos) + arity);
    pos += static_cast<std::size_t>(arity);
    for (int k = 0; k < arity; ++k)
      term.use_sin.push_back(c.at(pos++) != 0.0 ? 1 : 0);
    comp.terms.push_back(std::move(term));
  }
  return comp;
}

}  // namespace

std::string CompositeFunction::to_json() const {
  json j;
  j["spec"] = json::parse(spec_.to_json());
  json layers = json::array();
  for (const auto& layer : layers_) {
    json row = json::array();
    for (const HolderComponent& comp : layer) {
      json c;
      c["active_indices"] = comp.active_indices;
      c["coefficients"] = component_coefficients(comp);
      row.push_back(std::move(c));
    }
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

CompositeFunction CompositeFunction::from_json(const std::string& text) {
  json j = json::parse(text);
  CompositeSpec spec = CompositeSpec::from_json(j.at("spec").dump());
  std::vector<std::vector<HolderComponent>> layers;
  const json& jl = j.at("layers");
  for (int i = 0; i <= spec.depth; ++i) {
    std::vector<HolderComponent> layer;
    for (const json& jc : jl.at(static_cast<std::size_t>(i))) {
      layer.push_back(component_from(
          jc.at("active_indices").get<std::vector<int>>(),
          spec.arities[static_cast<std::size_t>(i)],
          spec.smoothnesses[static_cast<std::size_t>(i)], spec.bound,
          jc.at("coefficients").get<std::vector<double>>()));
    }
    layers.push_back(std::move(layer));
  }
  return CompositeFunction(spec, std::move(layers));
}

}  // namespace ganlab::composite
