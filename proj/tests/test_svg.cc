#include <doctest.h>

#include <regex>

#include <rodflat/svg.hh>

using namespace rodflat;

namespace {

PlanarEmbedding unit_square() {
    PlanarEmbedding e;
    e.coords = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    return e;
}

const std::vector<Edge> kSquare = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};

int count(const std::string &text, const std::string &needle) {
    int n = 0;
    for (size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

} // namespace

TEST_CASE("color ramp end points") {
    CHECK(ramp_color(0.0) == "#0000ff");
    CHECK(ramp_color(1.0) == "#ff0000");
    CHECK(ramp_color(-3.0) == "#0000ff");
    CHECK(ramp_color(7.0) == "#ff0000");
    CHECK(std::regex_match(ramp_color(0.5), std::regex("#[0-9a-f]{6}")));
}

TEST_CASE("unit square document") {
    const auto svg = export_svg(unit_square(), kSquare);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(count(svg, "<line") == 4);
    CHECK(svg.find("viewBox=\"-0.050000 -1.050000 1.100000 1.100000\"") != std::string::npos);
    // y is flipped: the vertex at (0, 1) is drawn at y = -1
    CHECK(svg.find("y1=\"-1.000000\"") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") == std::string::npos);
}

TEST_CASE("edge values and fill rods") {
    SvgOptions o;
    o.edge_values = {0.0, 0.5, 2.0, 0.0};
    o.fill_edges = {0, 0, 0, 1};
    const auto svg = export_svg(unit_square(), kSquare, o);
    CHECK(count(svg, "#ff0000") == 1);
    CHECK(count(svg, "#0000ff") == 2);
    CHECK(count(svg, "stroke-dasharray") == 1);

    o.edge_values = {1.0};
    CHECK_THROWS_AS(export_svg(unit_square(), kSquare, o), InputError);
}

TEST_CASE("output is byte-for-byte reproducible") {
    SvgOptions o;
    o.title = "square";
    o.edge_values = {0.1, 0.2, 0.3, 0.4};
    CHECK(export_svg(unit_square(), kSquare, o) == export_svg(unit_square(), kSquare, o));
}
