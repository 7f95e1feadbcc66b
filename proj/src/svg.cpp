#include "ganlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ganlab/util.hpp"

namespace ganlab::harness {

namespace {

double map_coord(double v, double lo, double hi, double out_lo, double out_hi) {
  if (hi <= lo) return 0.5 * (out_lo + out_hi);
  return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
}

}  // namespace

std::string render_loglog_svg(const std::string& title,
                              const std::vector<double>& x,
                              const std::vector<double>& y, double slope,
                              double intercept_log) {
  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double lx_min = 1e300, lx_max = -1e300, ly_min = 1e300, ly_max = -1e300;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    lx.push_back(std::log10(x[i]));
    ly.push_back(std::log10(y[i]));
    lx_min = std::min(lx_min, lx.back());
    lx_max = std::max(lx_max, lx.back());
    ly_min = std::min(ly_min, ly.back());
    ly_max = std::max(ly_max, ly.back());
  }
  if (lx.empty()) {
    lx_min = ly_min = 0;
    lx_max = ly_max = 1;
  }
  double pad_x = 0.05 * std::max(1e-9, lx_max - lx_min);
  double pad_y = 0.10 * std::max(1e-9, ly_max - ly_min);
  lx_min -= pad_x;
  lx_max += pad_x;
  ly_min -= pad_y;
  ly_max += pad_y;

  auto px = [&](double v) { return map_coord(v, lx_min, lx_max, ml, width - mr); };
  auto py = [&](double v) { return map_coord(v, ly_min, ly_max, height - mb, mt); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  // decade ticks
  for (int d = static_cast<int>(std::floor(lx_min)); d <= static_cast<int>(std::ceil(lx_max)); ++d) {
    if (d < lx_min || d > lx_max) continue;
    out << "<line x1=\"" << px(d) << "\" y1=\"" << height - mb << "\" x2=\""
        << px(d) << "\" y2=\"" << height - mb + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(d) << "\" y=\"" << height - mb + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::floor(ly_min)); d <= static_cast<int>(std::ceil(ly_max)); ++d) {
    if (d < ly_min || d > ly_max) continue;
    out << "<line x1=\"" << ml - 6 << "\" y1=\"" << py(d) << "\" x2=\"" << ml
        << "\" y2=\"" << py(d) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 10 << "\" y=\"" << py(d) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">1e" << d << "</text>\n";
  }
  // fitted line y = slope * log10(x) + intercept (both in natural logs; the
  // caller passes log-e intercept, converted here)
  {
    const double l10 = std::log(10.0);
    auto fit_y = [&](double lxv) {
      return (slope * (lxv * l10) + intercept_log) / l10;
    };
    out << "<line x1=\"" << px(lx_min) << "\" y1=\"" << py(fit_y(lx_min))
        << "\" x2=\"" << px(lx_max) << "\" y2=\"" << py(fit_y(lx_max))
        << "\" stroke=\"#c33\" stroke-width=\"1.5\"/>\n";
  }
  for (std::size_t i = 0; i < lx.size(); ++i)
    out << "<circle cx=\"" << px(lx[i]) << "\" cy=\"" << py(ly[i])
        << "\" r=\"3\" fill=\"#236\"/>\n";
  out << "<text x=\"" << width - mr << "\" y=\"" << mt + 14
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << "slope " << fmt_double(slope) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace ganlab::harness
