#ifndef CMRL_SVG_PLOT_HPP
#define CMRL_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace cmrl {

/// One line with an optional shaded band (mean +/- band at each x).
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> band;  // empty or same length as x
};

struct PlotPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

/// Renders side-by-side panels as a deterministic SVG document: fixed
/// palette, fixed tick layout, fixed number formatting, no timestamps.
/// Identical input yields byte-identical output. Panels with no data are a
/// contract error.
std::string render_svg(const std::vector<PlotPanel>& panels);

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels);

}  // namespace cmrl

#endif
