#include <rodflat/svg.hh>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rodflat {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string escape(const std::string &s) {
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

} // namespace

std::string ramp_color(double t) {
    if (!std::isfinite(t)) t = 0;
    t = std::clamp(t, 0.0, 1.0);
    const int r = int(std::lround(255 * t)), b = int(std::lround(255 * (1 - t)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x00%02x", r, b);
    return buf;
}

std::string export_svg(const PlanarEmbedding &emb, std::span<const Edge> edges, const SvgOptions &opts) {
    if (!opts.edge_values.empty() && opts.edge_values.size() != edges.size())
        throw InputError("svg: " + std::to_string(opts.edge_values.size()) + " edge values for " +
                         std::to_string(edges.size()) + " rods");
    Vec2 lo = Vec2::Zero(), hi = Vec2::Zero();
    if (!emb.coords.empty()) {
        lo = hi = emb.coords[0];
        for (const auto &p : emb.coords) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }
    }
    double w = hi[0] - lo[0], h = hi[1] - lo[1];
    const double extent = std::max({w, h, 0.0}) > 0 ? std::max(w, h) : 1.0;
    const double margin = 0.05 * extent;
    const double vx = lo[0] - margin, vy = -hi[1] - margin;
    const double vw = w + 2 * margin, vh = h + 2 * margin;
    const double stroke = 0.002 * extent;
    const double heightPx = opts.width_px * vh / vw;

    double vmax = 0;
    for (double v : opts.edge_values)
        if (std::isfinite(v)) vmax = std::max(vmax, v);

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(opts.width_px) << "\" height=\""
        << num(heightPx) << "\" viewBox=\"" << num(vx) << ' ' << num(vy) << ' ' << num(vw) << ' ' << num(vh)
        << "\">\n";
    if (!opts.title.empty()) out << "  <title>" << escape(opts.title) << "</title>\n";
    out << "  <g stroke-width=\"" << num(stroke) << "\" stroke-linecap=\"round\" fill=\"none\">\n";
    for (size_t k = 0; k < edges.size(); ++k) {
        const Vec2 &a = emb.coords[size_t(edges[k][0])], &b = emb.coords[size_t(edges[k][1])];
        std::string color = "#000000";
        if (!opts.edge_values.empty()) color = ramp_color(vmax > 0 ? opts.edge_values[k] / vmax : 0.0);
        out << "    <line x1=\"" << num(a[0]) << "\" y1=\"" << num(-a[1]) << "\" x2=\"" << num(b[0]) << "\" y2=\""
            << num(-b[1]) << "\" stroke=\"" << color << '"';
        if (k < opts.fill_edges.size() && opts.fill_edges[k])
            out << " stroke-dasharray=\"" << num(4 * stroke) << ' ' << num(2 * stroke) << '"';
        out << "/>\n";
    }
    out << "  </g>\n</svg>\n";
    return out.str();
}

} // namespace rodflat
