#include "snapkit/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "snapkit/errors.hpp"

namespace snapkit::cli {

namespace {

const char* const kPalette[] = {"#2ca02c", "#d62728", "#17becf", "#e377c2",
                                "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(v) < 5e-4 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::string render_svg(const Framework& fw, const std::vector<SvgLayer>& layers, double width) {
    if (fw.dimension() != 2) throw ValidationError("plot supports planar frameworks only (n = 2)");
    if (layers.empty()) throw ValidationError("plot needs at least one configuration");
    for (const auto& l : layers) validate_configuration(fw, l.cfg);

    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    for (const auto& l : layers) {
        xmin = std::min(xmin, l.cfg.col(0).minCoeff());
        xmax = std::max(xmax, l.cfg.col(0).maxCoeff());
        ymin = std::min(ymin, l.cfg.col(1).minCoeff());
        ymax = std::max(ymax, l.cfg.col(1).maxCoeff());
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
    const double margin = 40.0;
    const double scale = (width - 2.0 * margin) / span;
    const double height = (ymax - ymin) * scale + 2.0 * margin;
    auto px = [&](double x) { return margin + (x - xmin) * scale; };
    auto py = [&](double y) { return height - margin - (y - ymin) * scale; };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
    s << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const SvgLayer& l = layers[li];
        const std::string color =
            l.color.empty() ? kPalette[li % (sizeof kPalette / sizeof kPalette[0])] : l.color;
        s << "  <g class=\"layer\" id=\"layer-" << li << "\" data-name=\"" << escape(l.name)
          << "\" stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        for (const Plate& p : fw.plates()) {
            s << "    <polygon class=\"plate\" fill-opacity=\"0.25\" stroke-width=\"1\" points=\"";
            for (int k : {p.i, p.j, p.k})
                s << num(px(l.cfg(k, 0))) << "," << num(py(l.cfg(k, 1))) << (k == p.k ? "" : " ");
            s << "\"/>\n";
        }
        for (int e = 0; e < fw.num_edges(); ++e) {
            const Edge& edge = fw.edges()[e];
            s << "    <line class=\"" << (fw.is_plate_edge(e) ? "plate-edge" : "bar")
              << "\" stroke-width=\"2\" x1=\"" << num(px(l.cfg(edge.i, 0))) << "\" y1=\""
              << num(py(l.cfg(edge.i, 1))) << "\" x2=\"" << num(px(l.cfg(edge.j, 0)))
              << "\" y2=\"" << num(py(l.cfg(edge.j, 1))) << "\"/>\n";
        }
        for (int k = 0; k < fw.num_knots(); ++k) {
            const bool pinned = fw.knots()[k].pinned;
            s << "    <circle class=\"knot" << (pinned ? " pinned" : "") << "\" r=\""
              << (pinned ? "5" : "4") << "\" cx=\"" << num(px(l.cfg(k, 0))) << "\" cy=\""
              << num(py(l.cfg(k, 1))) << "\"" << (pinned ? " fill=\"black\" stroke=\"black\"" : "")
              << "/>\n";
        }
        s << "  </g>\n";
    }
    s << "  <g class=\"labels\" font-family=\"sans-serif\" font-size=\"13\" fill=\"black\">\n";
    const Configuration& first = layers.front().cfg;
    for (int k = 0; k < fw.num_knots(); ++k) {
        s << "    <text class=\"knot-label\" x=\"" << num(px(first(k, 0)) + 7.0) << "\" y=\""
          << num(py(first(k, 1)) - 7.0) << "\">k" << fw.knots()[k].id << "</text>\n";
    }
    s << "  </g>\n</svg>\n";
    return s.str();
}

}  // namespace snapkit::cli
