#pragma once
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace ganlab {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double sqdist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// mean of chi(D): E|xi|_2 for xi ~ N(0, I_D)
inline double chi_mean(int dim) {
  return std::sqrt(2.0) *
         std::exp(std::lgamma(0.5 * (dim + 1)) - std::lgamma(0.5 * dim));
}

// Canonical shortest-roundtrip text for doubles; used everywhere a value ends
// up in a CSV so that byte-level determinism is a property of the value alone.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer a shorter representation when it round-trips
  for (int prec = 1; prec <= 16; ++prec) {
    char tmp[40];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
    double back = std::strtod(tmp, nullptr);
    if (back == v) return std::string(tmp);
  }
  return std::string(buf);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace ganlab
