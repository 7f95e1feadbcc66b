#pragma once
#include <optional>
#include <vector>

namespace ganlab::harness {

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

struct RateRow {
  long n = 0;
  int rep = 0;
  double value = 0.0;
};

// (n, replicate, value) rows plus the fitted log-log slope.  `fit` is empty
// when fewer than 3 distinct n are present (degenerate fit, flagged rather
// than fabricated).
struct RateSeries {
  std::vector<RateRow> rows;
  std::optional<SlopeFit> fit;
};

// OLS of log(mean value per n) on log n; throws DegenerateFit for fewer than
// 3 distinct n or nonpositive means.
SlopeFit fit_exponent(const RateSeries& series);

}  // namespace ganlab::harness
