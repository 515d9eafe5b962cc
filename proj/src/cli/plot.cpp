#include "spatial/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "spatial/common.hpp"

namespace spatial::cli {

namespace {

struct Extent {
  double lo = 0, hi = 1;
  double map(double v, double a, double b) const {
    if (hi == lo) return (a + b) / 2;
    return a + (v - lo) / (hi - lo) * (b - a);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series, const std::string& stamp) {
  const int W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
  Extent xe, ye;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xe.lo = xe.hi = s.x[i];
        ye.lo = s.lo[i];
        ye.hi = s.hi[i];
        first = false;
      }
      xe.lo = std::min(xe.lo, s.x[i]);
      xe.hi = std::max(xe.hi, s.x[i]);
      ye.lo = std::min(ye.lo, s.lo[i]);
      ye.hi = std::max(ye.hi, s.hi[i]);
    }
  }
  const double ypad = (ye.hi - ye.lo) * 0.08 + 1e-9;
  ye.lo -= ypad;
  ye.hi += ypad;
  const double xpad = (xe.hi - xe.lo) * 0.05 + 1e-9;
  xe.lo -= xpad;
  xe.hi += xpad;

  auto px = [&](double v) { return xe.map(v, L, W - R); };
  auto py = [&](double v) { return ye.map(v, H - B, T); };

  std::ofstream out(path);
  if (!out) data_fail("cannot write plot: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<!-- " << stamp << " -->\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title << "</text>\n";

  // axes + gridlines
  for (int i = 0; i <= 5; ++i) {
    const double v = ye.lo + (ye.hi - ye.lo) * i / 5.0;
    out << "<line x1='" << L << "' y1='" << py(v) << "' x2='" << W - R << "' y2='" << py(v)
        << "' stroke='#dddddd' stroke-dasharray='4,3'/>\n";
    out << "<text x='" << L - 6 << "' y='" << py(v) + 4 << "' text-anchor='end' font-size='11'>" << fmt(v)
        << "</text>\n";
  }
  for (int i = 0; i <= 6; ++i) {
    const double v = xe.lo + (xe.hi - xe.lo) * i / 6.0;
    out << "<text x='" << px(v) << "' y='" << H - B + 18 << "' text-anchor='middle' font-size='11'>" << fmt(v)
        << "</text>\n";
  }
  out << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
      << "' stroke='black'/>\n";
  out << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B << "' stroke='black'/>\n";
  out << "<text x='" << (L + W - R) / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='13'>"
      << xlabel << "</text>\n";
  out << "<text x='18' y='" << (T + H - B) / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
      << (T + H - B) / 2 << ")'>" << ylabel << "</text>\n";

  int legend_y = T + 8;
  for (const auto& s : series) {
    // min/max whiskers, mean markers, connecting line
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double cx = px(s.x[i]);
      out << "<line x1='" << cx << "' y1='" << py(s.lo[i]) << "' x2='" << cx << "' y2='" << py(s.hi[i])
          << "' stroke='" << s.color << "'/>\n";
      for (double v : {s.lo[i], s.hi[i]})
        out << "<line x1='" << cx - 4 << "' y1='" << py(v) << "' x2='" << cx + 4 << "' y2='" << py(v)
            << "' stroke='" << s.color << "'/>\n";
      pts += fmt(cx) + "," + fmt(py(s.mean[i])) + " ";
    }
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='" << pts << "'/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << "<rect x='" << px(s.x[i]) - 3 << "' y='" << py(s.mean[i]) - 3
          << "' width='6' height='6' fill='none' stroke='" << s.color << "'/>\n";
    out << "<text x='" << W - R - 8 << "' y='" << legend_y << "' text-anchor='end' font-size='12' fill='"
        << s.color << "'>" << s.name << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

}  // namespace spatial::cli
