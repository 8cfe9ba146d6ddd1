#include <doctest.h>

#include <set>

#include <rodflat/generators.hh>
#include <rodflat/hybrid.hh>

#include "oracles.hh"

using namespace rodflat;

namespace {

RodStructure quad_with_region() {
    RodStructure s;
    s.name = "quad";
    s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    s.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    s.surface_regions = {{0, 1, 2, 3}};
    return s;
}

} // namespace

TEST_CASE("planar quad region gains one diagonal") {
    auto s = quad_with_region();
    REQUIRE(needs_meshing(s));
    HybridReport rep;
    auto out = mesh_surface_regions(s, {}, &rep);
    CHECK(rep.regions == 1);
    CHECK(rep.added_edges == 1);
    CHECK(rep.added_vertices == 0);
    REQUIRE(out.numEdges() == 5);
    const Edge d = out.edges[4];
    CHECK(((d == Edge{0, 2}) || (d == Edge{1, 3})));
    CHECK(out.fill_edge == std::vector<char>{0, 0, 0, 0, 1});
    CHECK_FALSE(needs_meshing(out));
    CHECK(out.metadata["surface_regions_meshed"] == true);
}

TEST_CASE("region whose edges all exist leaves the structure unchanged") {
    RodStructure s;
    s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0.2)};
    s.edges = {{0, 1}, {1, 2}, {2, 0}};
    s.surface_regions = {{0, 1, 2}};
    auto out = mesh_surface_regions(s);
    CHECK(serialize_structure(out) == serialize_structure(s));

    auto quad = mesh_surface_regions(quad_with_region());
    CHECK(serialize_structure(mesh_surface_regions(quad)) == serialize_structure(quad));
}

TEST_CASE("dome patch region is filled with a valid mesh") {
    auto s = load_structure(oracle::data_path("dome_patch.json"));
    REQUIRE(s.surface_regions.size() == 1);
    const auto &loop = s.surface_regions[0];
    CHECK(loop.size() > 8);
    HybridReport rep;
    auto out = mesh_surface_regions(s, {}, &rep);
    CHECK(rep.added_vertices > 0);
    CHECK(rep.added_edges > 0);
    CHECK_NOTHROW(validate(out));
    CHECK(parse_structure(serialize_structure(out)).fill_edge == out.fill_edge);

    // core rods and vertices keep their indices
    for (size_t k = 0; k < s.edges.size(); ++k) {
        CHECK(out.edges[k] == s.edges[k]);
        CHECK_FALSE(out.fill_edge[k]);
    }
    for (size_t v = 0; v < s.vertices.size(); ++v) CHECK(out.vertices[v] == s.vertices[v]);
    for (size_t k = s.edges.size(); k < out.edges.size(); ++k) CHECK(out.fill_edge[k]);

    // fill rods stay inside the region: every endpoint is on the loop or new
    std::set<int> allowed(loop.begin(), loop.end());
    for (int v = s.numVertices(); v < out.numVertices(); ++v) allowed.insert(v);
    for (size_t k = s.edges.size(); k < out.edges.size(); ++k) {
        CHECK(allowed.count(out.edges[k][0]));
        CHECK(allowed.count(out.edges[k][1]));
        const double l = (out.vertices[size_t(out.edges[k][0])] - out.vertices[size_t(out.edges[k][1])]).norm();
        CHECK(l > 0);
    }
}

TEST_CASE("strongly folded region is rejected") {
    RodStructure s;
    const int k = 6;
    for (int i = 0; i < k; ++i) {
        const double t = 2 * M_PI * i / k;
        s.vertices.emplace_back(std::cos(t), std::sin(t), i % 2 ? -2.0 : 2.0);
    }
    for (int i = 0; i < k; ++i) s.edges.push_back({i, (i + 1) % k});
    s.surface_regions = {{0, 1, 2, 3, 4, 5}};
    CHECK_THROWS_AS(mesh_surface_regions(s), InputError);
}

TEST_CASE("regions referencing missing vertices fail validation") {
    const char *text = R"({"vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0]],
                           "edges": [[0,1],[1,2],[2,3],[3,0]], "surface_regions": [[0,1,7]]})";
    CHECK_THROWS_AS(parse_structure(text), ParseError);
}
