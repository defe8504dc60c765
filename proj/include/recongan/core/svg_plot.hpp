#pragma once

#include <string>
#include <utility>
#include <vector>

namespace recongan::plot {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y), plotted in order
};

/// Minimal static line chart (axes, ticks, legend). Single-point series are
/// drawn as markers.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

}  // namespace recongan::plot
