#include "cmrl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmrl/error.hpp"

namespace cmrl {

namespace {

constexpr double kPanelW = 560.0;
constexpr double kPanelH = 420.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 20.0;
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fnum(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string fpix(double v) {
    return fnum(v, "%.2f");
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range span(const std::vector<double>& values) {
    Range r;
    r.lo = *std::min_element(values.begin(), values.end());
    r.hi = *std::max_element(values.begin(), values.end());
    if (r.hi <= r.lo) {
        r.hi = r.lo + 1.0;
    }
    double pad = 0.05 * (r.hi - r.lo);
    r.lo -= pad;
    r.hi += pad;
    return r;
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels) {
    require(!panels.empty(), "render_svg: no panels");
    for (const PlotPanel& p : panels) {
        require(!p.series.empty(), "render_svg: panel '" + p.title + "' has no series");
        for (const PlotSeries& s : p.series) {
            require(!s.x.empty(), "render_svg: series '" + s.label + "' is empty");
            require(s.x.size() == s.y.size(), "render_svg: x/y length mismatch");
            require(s.band.empty() || s.band.size() == s.x.size(),
                    "render_svg: band length mismatch");
        }
    }

    double total_w = kPanelW * static_cast<double>(panels.size());
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fnum(total_w) << "\" height=\""
        << fnum(kPanelH) << "\" viewBox=\"0 0 " << fnum(total_w) << " " << fnum(kPanelH)
        << "\">\n";
    svg << "<rect width=\"" << fnum(total_w) << "\" height=\"" << fnum(kPanelH)
        << "\" fill=\"white\"/>\n";

    for (size_t pi = 0; pi < panels.size(); ++pi) {
        const PlotPanel& panel = panels[pi];
        double ox = kPanelW * static_cast<double>(pi);
        double plot_x0 = ox + kMarginL;
        double plot_y0 = kMarginT;
        double plot_w = kPanelW - kMarginL - kMarginR;
        double plot_h = kPanelH - kMarginT - kMarginB;

        std::vector<double> all_x;
        std::vector<double> all_y;
        for (const PlotSeries& s : panel.series) {
            all_x.insert(all_x.end(), s.x.begin(), s.x.end());
            for (size_t i = 0; i < s.y.size(); ++i) {
                double b = s.band.empty() ? 0.0 : s.band[i];
                all_y.push_back(s.y[i] - b);
                all_y.push_back(s.y[i] + b);
            }
        }
        Range xr = span(all_x);
        Range yr = span(all_y);
        auto px = [&](double v) { return plot_x0 + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
        auto py = [&](double v) { return plot_y0 + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h; };

        svg << "<rect x=\"" << fpix(plot_x0) << "\" y=\"" << fpix(plot_y0) << "\" width=\""
            << fpix(plot_w) << "\" height=\"" << fpix(plot_h)
            << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fpix(ox + kPanelW / 2) << "\" y=\"22\" font-family=\"sans-serif\""
            << " font-size=\"15\" text-anchor=\"middle\">" << panel.title << "</text>\n";
        svg << "<text x=\"" << fpix(ox + kPanelW / 2) << "\" y=\"" << fpix(kPanelH - 12)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
            << panel.x_label << "</text>\n";
        svg << "<text x=\"" << fpix(ox + 16) << "\" y=\"" << fpix(plot_y0 + plot_h / 2)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\""
            << " transform=\"rotate(-90 " << fpix(ox + 16) << " " << fpix(plot_y0 + plot_h / 2)
            << ")\">" << panel.y_label << "</text>\n";

        const int kTicks = 5;
        for (int i = 0; i <= kTicks; ++i) {
            double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
            double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
            double tx = px(fx);
            double ty = py(fy);
            svg << "<line x1=\"" << fpix(tx) << "\" y1=\"" << fpix(plot_y0 + plot_h) << "\" x2=\""
                << fpix(tx) << "\" y2=\"" << fpix(plot_y0 + plot_h + 5)
                << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
            svg << "<text x=\"" << fpix(tx) << "\" y=\"" << fpix(plot_y0 + plot_h + 18)
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
                << fnum(fx, "%.4g") << "</text>\n";
            svg << "<line x1=\"" << fpix(plot_x0 - 5) << "\" y1=\"" << fpix(ty) << "\" x2=\""
                << fpix(plot_x0) << "\" y2=\"" << fpix(ty)
                << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
            svg << "<text x=\"" << fpix(plot_x0 - 8) << "\" y=\"" << fpix(ty + 3)
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
                << fnum(fy, "%.4g") << "</text>\n";
        }

        for (size_t si = 0; si < panel.series.size(); ++si) {
            const PlotSeries& s = panel.series[si];
            const char* color = kPalette[si % 6];
            if (!s.band.empty()) {
                svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\""
                    << " points=\"";
                for (size_t i = 0; i < s.x.size(); ++i) {
                    svg << fpix(px(s.x[i])) << "," << fpix(py(s.y[i] + s.band[i])) << " ";
                }
                for (size_t i = s.x.size(); i-- > 0;) {
                    svg << fpix(px(s.x[i])) << "," << fpix(py(s.y[i] - s.band[i]));
                    if (i > 0) {
                        svg << " ";
                    }
                }
                svg << "\"/>\n";
            }
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\""
                << " points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                svg << fpix(px(s.x[i])) << "," << fpix(py(s.y[i]));
                if (i + 1 < s.x.size()) {
                    svg << " ";
                }
            }
            svg << "\"/>\n";
            if (s.x.size() == 1) {
                svg << "<circle cx=\"" << fpix(px(s.x[0])) << "\" cy=\"" << fpix(py(s.y[0]))
                    << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
            double ly = plot_y0 + 14.0 + 16.0 * static_cast<double>(si);
            svg << "<line x1=\"" << fpix(plot_x0 + plot_w - 130) << "\" y1=\"" << fpix(ly - 4)
                << "\" x2=\"" << fpix(plot_x0 + plot_w - 110) << "\" y2=\"" << fpix(ly - 4)
                << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << fpix(plot_x0 + plot_w - 105) << "\" y=\"" << fpix(ly)
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels) {
    std::string doc = render_svg(panels);
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open SVG for writing: " + path);
    out << doc;
}

}  // namespace cmrl
