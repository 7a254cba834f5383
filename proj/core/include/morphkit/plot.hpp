#pragma once

#include <string>
#include <utility>
#include <vector>

namespace morphkit {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    // Axis ranges; when lo == hi the range is taken from the data.
    double x_lo = 0.0, x_hi = 0.0;
    double y_lo = 0.0, y_hi = 0.0;
    int width = 640;
    int height = 420;
};

// Self-contained SVG line chart with markers, axes, ticks and a legend.
std::string svg_line_chart(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace morphkit
