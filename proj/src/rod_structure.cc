#include <rodflat/rod_structure.hh>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace rodflat {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string &where, const std::string &what) {
    throw ParseError(where + ": " + what);
}

double number_at(const json &j, const std::string &where) {
    if (!j.is_number()) fail(where, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "non-finite value");
    return v;
}

int index_at(const json &j, const std::string &where) {
    if (!j.is_number_integer()) fail(where, "expected an integer index");
    auto v = j.get<long long>();
    if (v < 0 || v > std::numeric_limits<int>::max()) fail(where, "index out of range");
    return int(v);
}

std::vector<int> index_list(const json &j, const std::string &where) {
    if (!j.is_array()) fail(where, "expected an array of vertex indices");
    std::vector<int> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(index_at(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

void check_simple_loop(const std::vector<int> &loop, int m, const std::string &where) {
    if (loop.size() < 3) fail(where, "loop needs at least 3 vertices");
    std::set<int> seen;
    for (size_t i = 0; i < loop.size(); ++i) {
        if (loop[i] >= m)
            fail(where + "[" + std::to_string(i) + "]",
                 "dangling index " + std::to_string(loop[i]) + " (m=" + std::to_string(m) + ")");
        if (!seen.insert(loop[i]).second)
            fail(where + "[" + std::to_string(i) + "]", "vertex " + std::to_string(loop[i]) + " repeats; loop is not simple");
    }
}

} // namespace

std::vector<int> vertex_degrees(const RodStructure &s) {
    std::vector<int> deg(s.vertices.size(), 0);
    for (const auto &e : s.edges) { ++deg[e[0]]; ++deg[e[1]]; }
    return deg;
}

std::vector<std::vector<int>> adjacency(const RodStructure &s) {
    std::vector<std::vector<int>> adj(s.vertices.size());
    for (const auto &e : s.edges) {
        adj[e[0]].push_back(e[1]);
        adj[e[1]].push_back(e[0]);
    }
    for (auto &a : adj) std::sort(a.begin(), a.end());
    return adj;
}

std::vector<std::vector<std::pair<int, int>>> incident_edges(const RodStructure &s) {
    std::vector<std::vector<std::pair<int, int>>> inc(s.vertices.size());
    for (int k = 0; k < s.numEdges(); ++k) {
        inc[s.edges[k][0]].emplace_back(s.edges[k][1], k);
        inc[s.edges[k][1]].emplace_back(s.edges[k][0], k);
    }
    for (auto &a : inc) std::sort(a.begin(), a.end());
    return inc;
}

bool is_connected(int m, const std::vector<Edge> &edges) {
    if (m == 0) return true;
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int components = m;
    for (const auto &e : edges) {
        int a = find(e[0]), b = find(e[1]);
        if (a != b) { parent[a] = b; --components; }
    }
    return components == 1;
}

void validate(const RodStructure &s) {
    const int m = s.numVertices();
    if (m == 0) fail("vertices", "structure has no vertices");
    for (int i = 0; i < m; ++i)
        if (!s.vertices[i].allFinite()) fail("vertices[" + std::to_string(i) + "]", "non-finite coordinate");

    std::set<std::pair<int, int>> seen;
    for (int k = 0; k < s.numEdges(); ++k) {
        const auto &e = s.edges[k];
        for (int c = 0; c < 2; ++c)
            if (e[c] < 0 || e[c] >= m)
                fail("edges[" + std::to_string(k) + "][" + std::to_string(c) + "]",
                     "dangling index " + std::to_string(e[c]) + " (m=" + std::to_string(m) + ")");
        if (e[0] == e[1]) fail("edges[" + std::to_string(k) + "]", "self-loop on vertex " + std::to_string(e[0]));
        if (!seen.emplace(std::min(e[0], e[1]), std::max(e[0], e[1])).second)
            fail("edges[" + std::to_string(k) + "]", "duplicate edge");
    }
    if (!is_connected(m, s.edges)) fail("edges", "the rod graph is disconnected");

    if (!s.boundary.empty()) {
        check_simple_loop(s.boundary, m, "boundary");
        const size_t k = s.boundary.size();
        for (size_t i = 0; i < k; ++i) {
            int a = s.boundary[i], b = s.boundary[(i + 1) % k];
            if (!seen.count({std::min(a, b), std::max(a, b)}))
                fail("boundary[" + std::to_string(i) + "]",
                     "consecutive boundary vertices " + std::to_string(a) + "," + std::to_string(b) +
                     " are not joined by an edge; boundary is not a cycle of the graph");
        }
    }
    for (size_t r = 0; r < s.surface_regions.size(); ++r)
        check_simple_loop(s.surface_regions[r], m, "surface_regions[" + std::to_string(r) + "]");

    if (!s.fill_edge.empty() && s.fill_edge.size() != s.edges.size())
        fail("fill_edges", "augmentation flags do not match the edge count");
}

RodStructure parse_structure(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw ParseError("byte " + std::to_string(e.byte) + ": malformed JSON (" + e.what() + ")");
    }
    if (!doc.is_object()) fail("$", "expected a JSON object");

    RodStructure s;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) fail("name", "expected a string");
        s.name = doc["name"].get<std::string>();
    }
    if (doc.contains("units")) {
        if (!doc["units"].is_string()) fail("units", "expected a string");
        s.units = doc["units"].get<std::string>();
    }

    if (!doc.contains("vertices") || !doc["vertices"].is_array()) fail("vertices", "missing vertex array");
    const auto &jv = doc["vertices"];
    s.vertices.reserve(jv.size());
    for (size_t i = 0; i < jv.size(); ++i) {
        const std::string where = "vertices[" + std::to_string(i) + "]";
        if (!jv[i].is_array() || jv[i].size() != 3) fail(where, "expected [x, y, z]");
        s.vertices.emplace_back(number_at(jv[i][0], where + "[0]"),
                                number_at(jv[i][1], where + "[1]"),
                                number_at(jv[i][2], where + "[2]"));
    }

    if (!doc.contains("edges") || !doc["edges"].is_array()) fail("edges", "missing edge array");
    const auto &je = doc["edges"];
    s.edges.reserve(je.size());
    for (size_t k = 0; k < je.size(); ++k) {
        const std::string where = "edges[" + std::to_string(k) + "]";
        if (!je[k].is_array() || je[k].size() != 2) fail(where, "expected [i, j]");
        s.edges.push_back({index_at(je[k][0], where + "[0]"), index_at(je[k][1], where + "[1]")});
    }

    if (doc.contains("boundary") && !doc["boundary"].is_null())
        s.boundary = index_list(doc["boundary"], "boundary");

    if (doc.contains("surface_regions") && !doc["surface_regions"].is_null()) {
        const auto &jr = doc["surface_regions"];
        if (!jr.is_array()) fail("surface_regions", "expected an array of loops");
        for (size_t r = 0; r < jr.size(); ++r)
            s.surface_regions.push_back(index_list(jr[r], "surface_regions[" + std::to_string(r) + "]"));
    }

    if (doc.contains("fill_edges")) {
        auto fill = index_list(doc["fill_edges"], "fill_edges");
        s.fill_edge.assign(s.edges.size(), 0);
        for (size_t i = 0; i < fill.size(); ++i) {
            if (fill[i] >= s.numEdges())
                fail("fill_edges[" + std::to_string(i) + "]", "dangling edge index " + std::to_string(fill[i]));
            s.fill_edge[fill[i]] = 1;
        }
    }

    if (doc.contains("metadata")) {
        if (!doc["metadata"].is_object()) fail("metadata", "expected an object");
        s.metadata = doc["metadata"];
    }

    validate(s);
    return s;
}

std::string serialize_structure(const RodStructure &s) {
    // One vertex / edge per line so files diff cleanly.
    std::ostringstream out;
    out << "{\n";
    out << "  \"name\": " << json(s.name).dump() << ",\n";
    if (!s.units.empty()) out << "  \"units\": " << json(s.units).dump() << ",\n";
    out << "  \"vertices\": [";
    for (size_t i = 0; i < s.vertices.size(); ++i) {
        const auto &v = s.vertices[i];
        out << (i ? ",\n    " : "\n    ") << json::array({v[0], v[1], v[2]}).dump();
    }
    out << "\n  ],\n  \"edges\": [";
    for (size_t k = 0; k < s.edges.size(); ++k)
        out << (k ? ",\n    " : "\n    ") << json::array({s.edges[k][0], s.edges[k][1]}).dump();
    out << "\n  ]";
    if (!s.boundary.empty()) out << ",\n  \"boundary\": " << json(s.boundary).dump();
    if (!s.surface_regions.empty()) out << ",\n  \"surface_regions\": " << json(s.surface_regions).dump();
    if (s.isAugmented()) {
        std::vector<int> fill;
        for (size_t k = 0; k < s.fill_edge.size(); ++k)
            if (s.fill_edge[k]) fill.push_back(int(k));
        out << ",\n  \"fill_edges\": " << json(fill).dump();
    }
    if (!s.metadata.empty()) out << ",\n  \"metadata\": " << s.metadata.dump();
    out << "\n}\n";
    return out.str();
}

RodStructure load_structure(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_structure(buf.str());
    } catch (const ParseError &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_structure(const RodStructure &s, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << serialize_structure(s);
}

ChainDecomposition decompose_chains(const RodStructure &s) {
    ChainDecomposition d;
    d.degree = vertex_degrees(s);
    const auto inc = incident_edges(s);
    for (int v = 0; v < s.numVertices(); ++v)
        if (d.degree[v] >= 3) d.joints.push_back(v);

    std::vector<char> used(s.edges.size(), 0);
    auto other = [&](int e, int v) { return s.edges[e][0] == v ? s.edges[e][1] : s.edges[e][0]; };

    // Walk from e out of `start` through degree-2 vertices.
    auto walk = [&](int start, int e) {
        Chain c;
        c.vertices.push_back(start);
        int v = start;
        while (true) {
            used[e] = 1;
            c.edges.push_back(e);
            v = other(e, v);
            c.vertices.push_back(v);
            if (d.degree[v] != 2 || v == start) break;
            int next = -1;
            for (auto [nb, ek] : inc[v])
                if (!used[ek]) { next = ek; break; }
            if (next < 0) break;
            e = next;
        }
        c.closed = (c.vertices.back() == start) && d.degree[start] == 2;
        return c;
    };

    for (int v = 0; v < s.numVertices(); ++v) {
        if (d.degree[v] == 2) continue;
        for (auto [nb, e] : inc[v])
            if (!used[e]) d.chains.push_back(walk(v, e));
    }
    // Whatever remains are closed loops made only of degree-2 vertices.
    for (int v = 0; v < s.numVertices(); ++v)
        for (auto [nb, e] : inc[v])
            if (!used[e]) d.chains.push_back(walk(v, e));
    return d;
}

namespace {

// Counterclockwise hull of the xy projection keeping collinear points on hull edges.
std::vector<int> projected_hull(const RodStructure &s) {
    const int m = s.numVertices();
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto &pa = s.vertices[a], &pb = s.vertices[b];
        if (pa[0] != pb[0]) return pa[0] < pb[0];
        if (pa[1] != pb[1]) return pa[1] < pb[1];
        return a < b;
    });
    double diag = 0;
    {
        Eigen::Vector2d lo(INFINITY, INFINITY), hi(-INFINITY, -INFINITY);
        for (const auto &v : s.vertices) { lo = lo.cwiseMin(v.head<2>()); hi = hi.cwiseMax(v.head<2>()); }
        diag = (hi - lo).norm();
    }
    const double tol = 1e-12 * diag * diag;
    auto cross = [&](int o, int a, int b) {
        Vec2 po = s.vertices[o].head<2>(), pa = s.vertices[a].head<2>(), pb = s.vertices[b].head<2>();
        Vec2 u = pa - po, w = pb - po;
        return u[0] * w[1] - u[1] * w[0];
    };
    std::vector<int> hull(2 * m);
    int k = 0;
    for (int i = 0; i < m; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], order[i]) < -tol) --k;
        hull[k++] = order[i];
    }
    for (int i = m - 2, t = k + 1; i >= 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], order[i]) < -tol) --k;
        hull[k++] = order[i];
    }
    hull.resize(std::max(k - 1, 0));
    return hull;
}

} // namespace

std::vector<int> boundary_loop(const RodStructure &s) {
    if (!s.boundary.empty()) return s.boundary;

    const auto hull = projected_hull(s);
    if (hull.size() < 3)
        throw InputError("boundary: projected hull is degenerate; supply an explicit boundary");
    for (size_t i = 0; i < hull.size(); ++i)
        for (size_t j = i + 1; j < hull.size(); ++j)
            if (hull[i] == hull[j])
                throw InputError("boundary: projected hull repeats vertex " + std::to_string(hull[i]) +
                                 "; supply an explicit boundary");

    const auto adj = adjacency(s);
    const auto chains = decompose_chains(s);
    std::vector<int> loop;
    for (size_t i = 0; i < hull.size(); ++i) {
        int a = hull[i], b = hull[(i + 1) % hull.size()];
        loop.push_back(a);
        if (std::binary_search(adj[a].begin(), adj[a].end(), b)) continue;
        // Not adjacent: accept a chain running from a to b.
        const Chain *link = nullptr;
        bool reversed = false;
        for (const auto &c : chains.chains) {
            if (c.closed) continue;
            if (c.vertices.front() == a && c.vertices.back() == b) { link = &c; reversed = false; break; }
            if (c.vertices.front() == b && c.vertices.back() == a) { link = &c; reversed = true; break; }
        }
        if (!link)
            throw InputError("boundary: hull vertices " + std::to_string(a) + " and " + std::to_string(b) +
                             " are not connected by an edge or chain; supply an explicit boundary");
        std::vector<int> mid(link->vertices.begin() + 1, link->vertices.end() - 1);
        if (reversed) std::reverse(mid.begin(), mid.end());
        loop.insert(loop.end(), mid.begin(), mid.end());
    }
    std::set<int> uniq(loop.begin(), loop.end());
    if (uniq.size() != loop.size())
        throw InputError("boundary: derived boundary is not a simple cycle; supply an explicit boundary");

    auto first = std::min_element(loop.begin(), loop.end());
    std::rotate(loop.begin(), first, loop.end());
    return loop;
}

} // namespace rodflat
