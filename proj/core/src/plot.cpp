#include "morphkit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace morphkit {

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::pair<double, double> data_range(const std::vector<PlotSeries>& series, bool x) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series)
        for (const auto& [px, py] : s.points) {
            const double v = x ? px : py;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (lo == hi) return {lo - 0.5, hi + 0.5};
    return {lo, hi};
}

}  // namespace

std::string svg_line_chart(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    auto [x_lo, x_hi] = spec.x_lo == spec.x_hi ? data_range(series, true) : std::pair{spec.x_lo, spec.x_hi};
    auto [y_lo, y_hi] = spec.y_lo == spec.y_hi ? data_range(series, false) : std::pair{spec.y_lo, spec.y_hi};
    const double left = 64, right = 20, top = 40, bottom = 56;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;
    auto sx = [&](double v) { return left + (v - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double v) { return top + ph - (v - y_lo) / (y_hi - y_lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape_xml(spec.title) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / kTicks;
        const double yv = y_lo + (y_hi - y_lo) * i / kTicks;
        os << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(xv)) << "\" y2=\""
           << num(top + ph + 5) << "\" stroke=\"#444\"/>";
        os << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(xv) << "</text>\n";
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(yv)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
           << num(sy(yv)) << "\" stroke=\"#ddd\"/>";
        os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">"
           << tick_label(yv) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 12.0) << "\" text-anchor=\"middle\">"
       << escape_xml(spec.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape_xml(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        if (!s.points.empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
            for (const auto& [x, y] : s.points) os << num(sx(x)) << "," << num(sy(y)) << " ";
            os << "\"/>\n";
            for (const auto& [x, y] : s.points)
                os << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"3\" fill=\"" << s.color
                   << "\"/>\n";
        }
        const double ly = top + 14 + 16.0 * static_cast<double>(k);
        os << "<line x1=\"" << num(left + pw - 150) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw - 130)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
        os << "<text x=\"" << num(left + pw - 124) << "\" y=\"" << num(ly + 4) << "\">" << escape_xml(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace morphkit
