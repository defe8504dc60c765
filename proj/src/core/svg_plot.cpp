#include "recongan/core/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace recongan::plot {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginL = 70, kMarginR = 150, kMarginT = 40, kMarginB = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) throw std::invalid_argument("write_line_plot: no points");
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double px0 = kMarginL, px1 = kWidth - kMarginR;
    const double py0 = kHeight - kMarginB, py1 = kMarginT;
    auto sx = [&](double x) { return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0); };
    auto sy = [&](double y) { return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("failed to write plot: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' font-family='sans-serif' font-size='12'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
        << "</text>\n";

    // axes + ticks
    out << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px1 << "' y2='" << py0
        << "' stroke='black'/>\n";
    out << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px0 << "' y2='" << py1
        << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        out << "<line x1='" << sx(fx) << "' y1='" << py0 << "' x2='" << sx(fx) << "' y2='"
            << py0 + 4 << "' stroke='black'/>\n";
        out << "<text x='" << sx(fx) << "' y='" << py0 + 18 << "' text-anchor='middle'>" << fmt(fx)
            << "</text>\n";
        out << "<line x1='" << px0 - 4 << "' y1='" << sy(fy) << "' x2='" << px0 << "' y2='"
            << sy(fy) << "' stroke='black'/>\n";
        out << "<text x='" << px0 - 8 << "' y='" << sy(fy) + 4 << "' text-anchor='end'>" << fmt(fy)
            << "</text>\n";
    }
    out << "<text x='" << (px0 + px1) / 2 << "' y='" << kHeight - 12
        << "' text-anchor='middle'>" << x_label << "</text>\n";
    out << "<text x='16' y='" << (py0 + py1) / 2 << "' text-anchor='middle' transform='rotate(-90 16 "
        << (py0 + py1) / 2 << ")'>" << y_label << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const auto& pts = series[si].points;
        if (pts.size() > 1) {
            out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
            for (const auto& [x, y] : pts) out << sx(x) << "," << sy(y) << " ";
            out << "'/>\n";
        }
        for (const auto& [x, y] : pts)
            out << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='3' fill='" << color
                << "'/>\n";
        const double ly = kMarginT + 16.0 * static_cast<double>(si);
        out << "<rect x='" << px1 + 10 << "' y='" << ly - 9 << "' width='10' height='10' fill='"
            << color << "'/>\n";
        out << "<text x='" << px1 + 26 << "' y='" << ly << "'>" << series[si].label
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace recongan::plot
