#pragma once

#include <string>
#include <vector>

namespace spatial::cli {

// Line series with min/max whiskers and mean markers.
struct PlotSeries {
  std::string name;
  std::string color = "#222222";
  std::vector<double> x, mean, lo, hi;
};

void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series,
                    const std::string& stamp);

}  // namespace spatial::cli
