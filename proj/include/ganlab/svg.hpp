#pragma once
#include <string>
#include <vector>

namespace ganlab::harness {

// Minimal log-log scatter plot with a fitted line; no plotting dependency.
std::string render_loglog_svg(const std::string& title,
                              const std::vector<double>& x,
                              const std::vector<double>& y, double slope,
                              double intercept_log);

}  // namespace ganlab::harness
