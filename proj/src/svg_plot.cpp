#include "polypseg/svg_plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace polypseg::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_plot(const std::string& title, const std::vector<int>& xs, const std::vector<Series>& series) {
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto px = [&](std::size_t i) {
        return xs.size() < 2 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / (xs.size() - 1);
    };
    const auto py = [&](double v) { return kTop + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title) << "</text>\n";

    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        svg << "<line x1=\"" << num(kLeft) << "\" x2=\"" << num(kLeft + plot_w) << "\" y1=\"" << num(py(v))
            << "\" y2=\"" << num(py(v)) << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        svg << "<text x=\"" << num(px(i)) << "\" y=\"" << num(kTop + plot_h + 18) << "\" text-anchor=\"middle\">"
            << xs[i] << "</text>\n";
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
        << "\" text-anchor=\"middle\">superpixels (k)</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const Series& sr = series[s];
        std::string path;
        for (std::size_t i = 0; i < xs.size() && i < sr.values.size(); ++i) {
            if (!sr.values[i]) continue;
            path += (path.empty() ? "M" : " L") + num(px(i)) + " " + num(py(*sr.values[i]));
        }
        if (!path.empty())
            svg << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < xs.size() && i < sr.values.size(); ++i) {
            if (!sr.values[i]) continue;
            const double v = *sr.values[i];
            if (i < sr.errors.size() && sr.errors[i]) {
                const double e = *sr.errors[i];
                svg << "<line x1=\"" << num(px(i)) << "\" x2=\"" << num(px(i)) << "\" y1=\"" << num(py(v - e))
                    << "\" y2=\"" << num(py(v + e)) << "\" stroke=\"" << sr.color << "\"/>\n";
            }
            svg << "<circle cx=\"" << num(px(i)) << "\" cy=\"" << num(py(v)) << "\" r=\"3\" fill=\"" << sr.color
                << "\"/>\n";
        }
        const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
        svg << "<line x1=\"" << num(kWidth - kRight + 15) << "\" x2=\"" << num(kWidth - kRight + 35) << "\" y1=\""
            << num(ly) << "\" y2=\"" << num(ly) << "\" stroke=\"" << sr.color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(kWidth - kRight + 40) << "\" y=\"" << num(ly + 4) << "\">" << escape(sr.name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace polypseg::svg
