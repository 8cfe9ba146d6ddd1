#include <rodflat/geometry.hh>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace rodflat {

std::vector<Edge> Triangulation::edges() const {
    std::set<std::pair<int, int>> uniq;
    for (const auto &t : triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            uniq.emplace(std::min(a, b), std::max(a, b));
        }
    std::vector<Edge> out;
    out.reserve(uniq.size());
    for (auto [a, b] : uniq) out.push_back({a, b});
    return out;
}

bool polygon_is_simple(std::span<const Vec2> points, std::span<const int> loop) {
    const size_t k = loop.size();
    if (k < 3) return false;
    std::vector<Vec2> ring;
    for (int v : loop) ring.push_back(points[v]);
    const double tol = 1e-12 * bbox_diagonal(ring);
    for (size_t i = 0; i < k; ++i) {
        const Vec2 &a = ring[i], &b = ring[(i + 1) % k], &c = ring[(i + 2) % k];
        if ((b - a).norm() <= tol) return false;
        // A zero-angle turn folds the boundary back on itself.
        if (orient2d(a, b, c) == 0 && (c - b).dot(a - b) > 0) return false;
        for (size_t j = i + 2; j < k; ++j) {
            if (i == 0 && j == k - 1) continue;
            if (segments_intersect(a, b, ring[j], ring[(j + 1) % k], tol)) return false;
        }
    }
    return true;
}

int point_in_polygon(const Vec2 &p, std::span<const Vec2> points, std::span<const int> loop, double tol) {
    const size_t k = loop.size();
    int winding = 0;
    for (size_t i = 0; i < k; ++i) {
        const Vec2 &a = points[loop[i]], &b = points[loop[(i + 1) % k]];
        if (segments_intersect(a, b, p, p, tol)) return 0;
        if (a[1] <= p[1]) {
            if (b[1] > p[1] && orient2d(a, b, p) > 0) ++winding;
        } else {
            if (b[1] <= p[1] && orient2d(a, b, p) < 0) --winding;
        }
    }
    return winding != 0 ? 1 : -1;
}

namespace {

// Positive when d lies inside the circumcircle of the counterclockwise triangle (a, b, c).
long double incircle(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d) {
    const long double adx = a[0] - d[0], ady = a[1] - d[1];
    const long double bdx = b[0] - d[0], bdy = b[1] - d[1];
    const long double cdx = c[0] - d[0], cdy = c[1] - d[1];
    const long double alift = adx * adx + ady * ady;
    const long double blift = bdx * bdx + bdy * bdy;
    const long double clift = cdx * cdx + cdy * cdy;
    return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
}

class Cdt {
public:
    Cdt(std::span<const Vec2> pts, std::span<const int> loop) : m_pts(pts) {
        const size_t k = loop.size();
        for (size_t i = 0; i < k; ++i) addConstraint(loop[i], loop[(i + 1) % k]);
        double diag = bbox_diagonal(pts);
        m_incircleTol = 1e-13 * diag * diag * diag * diag;
        earClip(loop);
        legalizeAll();
    }

    void insert(int v) {
        const Vec2 &p = m_pts[v];
        for (size_t t = 0; t < m_tris.size(); ++t) {
            if (m_tris[t][0] < 0) continue;
            const auto tri = m_tris[t];
            int o[3];
            for (int e = 0; e < 3; ++e) o[e] = orient2d(m_pts[tri[e]], m_pts[tri[(e + 1) % 3]], p);
            if (o[0] < 0 || o[1] < 0 || o[2] < 0) continue;
            int zeros = (o[0] == 0) + (o[1] == 0) + (o[2] == 0);
            if (zeros >= 2) throw InputError("triangulation: vertex " + std::to_string(v) + " coincides with vertex");
            if (zeros == 0) { splitTriangle(int(t), v); return; }
            int e = o[0] == 0 ? 0 : (o[1] == 0 ? 1 : 2);
            splitEdge(int(t), e, v);
            return;
        }
        throw InputError("triangulation: vertex " + std::to_string(v) + " lies outside the boundary polygon");
    }

    void legalizeAll() {
        bool changed = true;
        int guard = 0;
        while (changed && guard++ < 1000) {
            changed = false;
            for (size_t t = 0; t < m_tris.size(); ++t) {
                if (m_tris[t][0] < 0) continue;
                for (int e = 0; e < 3; ++e) {
                    if (m_tris[t][0] < 0) break;
                    int u = m_tris[t][e], w = m_tris[t][(e + 1) % 3];
                    if (tryFlip(u, w)) { changed = true; break; }
                }
            }
        }
    }

    std::vector<std::array<int, 3>> triangles() const {
        std::vector<std::array<int, 3>> out;
        for (const auto &t : m_tris)
            if (t[0] >= 0) out.push_back(t);
        // Canonical order: rotate so the smallest index leads, then sort.
        for (auto &t : out) {
            int r = int(std::min_element(t.begin(), t.end()) - t.begin());
            std::rotate(t.begin(), t.begin() + r, t.end());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static long long key(int u, int v) { return (static_cast<long long>(u) << 32) | static_cast<unsigned>(v); }

    void addConstraint(int u, int v) { m_constraints.insert(key(std::min(u, v), std::max(u, v))); }
    bool isConstraint(int u, int v) const { return m_constraints.count(key(std::min(u, v), std::max(u, v))); }

    int addTriangle(int a, int b, int c) {
        int t = int(m_tris.size());
        m_tris.push_back({a, b, c});
        m_half[key(a, b)] = t; m_half[key(b, c)] = t; m_half[key(c, a)] = t;
        return t;
    }
    void removeTriangle(int t) {
        auto tri = m_tris[t];
        for (int e = 0; e < 3; ++e) m_half.erase(key(tri[e], tri[(e + 1) % 3]));
        m_tris[t] = {-1, -1, -1};
    }
    int opposite(int t, int u, int v) const {
        for (int e = 0; e < 3; ++e)
            if (m_tris[t][e] != u && m_tris[t][e] != v) return m_tris[t][e];
        return -1;
    }

    void earClip(std::span<const int> loop) {
        std::vector<int> poly(loop.begin(), loop.end());
        while (poly.size() > 3) {
            const size_t n = poly.size();
            size_t best = n;
            for (size_t i = 0; i < n && best == n; ++i) {
                int a = poly[(i + n - 1) % n], b = poly[i], c = poly[(i + 1) % n];
                if (orient2d(m_pts[a], m_pts[b], m_pts[c]) <= 0) continue;
                bool blocked = false;
                for (size_t j = 0; j < n && !blocked; ++j) {
                    int q = poly[j];
                    if (q == a || q == b || q == c) continue;
                    if (orient2d(m_pts[a], m_pts[b], m_pts[q]) >= 0 && orient2d(m_pts[b], m_pts[c], m_pts[q]) >= 0 &&
                        orient2d(m_pts[c], m_pts[a], m_pts[q]) >= 0)
                        blocked = true;
                }
                if (!blocked) best = i;
            }
            if (best == n) throw InputError("triangulation: no ear found; boundary polygon is not simple");
            addTriangle(poly[(best + n - 1) % n], poly[best], poly[(best + 1) % n]);
            poly.erase(poly.begin() + long(best));
        }
        if (orient2d(m_pts[poly[0]], m_pts[poly[1]], m_pts[poly[2]]) <= 0)
            throw InputError("triangulation: degenerate final ear");
        addTriangle(poly[0], poly[1], poly[2]);
    }

    // Flips edge u->v if it is an illegal, unconstrained interior edge. Returns true on flip.
    bool tryFlip(int u, int v) {
        if (isConstraint(u, v)) return false;
        auto i1 = m_half.find(key(u, v)), i2 = m_half.find(key(v, u));
        if (i1 == m_half.end() || i2 == m_half.end()) return false;
        int t1 = i1->second, t2 = i2->second;
        int w = opposite(t1, u, v), z = opposite(t2, v, u);
        // t1 = (u, v, w), t2 = (v, u, z) counterclockwise.
        if (incircle(m_pts[u], m_pts[v], m_pts[w], m_pts[z]) <= m_incircleTol) return false;
        if (orient2d(m_pts[u], m_pts[z], m_pts[w]) <= 0 || orient2d(m_pts[z], m_pts[v], m_pts[w]) <= 0) return false;
        removeTriangle(t1);
        removeTriangle(t2);
        addTriangle(u, z, w);
        addTriangle(z, v, w);
        return true;
    }

    void legalizeAround(int v, std::vector<std::pair<int, int>> edges) {
        while (!edges.empty()) {
            auto [a, b] = edges.back();
            edges.pop_back();
            // Edge a->b belongs to a triangle containing v; check its far side.
            auto it = m_half.find(key(b, a));
            if (it == m_half.end()) continue;
            int z = opposite(it->second, b, a);
            if (tryFlip(a, b)) {
                edges.emplace_back(a, z);
                edges.emplace_back(z, b);
            }
        }
        (void)v;
    }

    void splitTriangle(int t, int v) {
        auto [a, b, c] = m_tris[t];
        removeTriangle(t);
        addTriangle(a, b, v);
        addTriangle(b, c, v);
        addTriangle(c, a, v);
        legalizeAround(v, {{a, b}, {b, c}, {c, a}});
    }

    void splitEdge(int t, int e, int v) {
        int a = m_tris[t][e], b = m_tris[t][(e + 1) % 3];
        if (isConstraint(a, b))
            throw InputError("triangulation: vertex " + std::to_string(v) + " lies on the boundary polygon");
        int c = opposite(t, a, b);
        auto it = m_half.find(key(b, a));
        removeTriangle(t);
        addTriangle(a, v, c);
        addTriangle(v, b, c);
        std::vector<std::pair<int, int>> check = {{b, c}, {c, a}};
        if (it != m_half.end()) {
            int t2 = it->second;
            int d = opposite(t2, b, a);
            removeTriangle(t2);
            addTriangle(b, v, d);
            addTriangle(v, a, d);
            check.emplace_back(a, d);
            check.emplace_back(d, b);
        }
        legalizeAround(v, check);
    }

    std::span<const Vec2> m_pts;
    std::vector<std::array<int, 3>> m_tris;
    std::unordered_map<long long, int> m_half;
    std::unordered_set<long long> m_constraints;
    long double m_incircleTol = 0;
};

} // namespace

std::vector<std::array<int, 3>> triangulate_polygon(std::span<const Vec2> points, std::span<const int> loop,
                                                    std::span<const int> interior) {
    if (!polygon_is_simple(points, loop)) throw InputError("triangulation: boundary polygon is not simple");
    std::vector<int> ccw(loop.begin(), loop.end());
    {
        std::vector<Vec2> ring;
        for (int v : ccw) ring.push_back(points[v]);
        if (shoelace_area_and_grad(ring).area < 0) std::reverse(ccw.begin(), ccw.end());
    }
    Cdt cdt(points, ccw);
    for (int v : interior) cdt.insert(v);
    cdt.legalizeAll();
    return cdt.triangles();
}

Triangulation build_triangulation(const PlanarEmbedding &initial, std::span<const int> loop) {
    const auto &pts = initial.coords;
    const int m = initial.numVertices();
    if (!polygon_is_simple(pts, loop)) throw InputError("triangulation: boundary polygon is not simple");

    Triangulation tri;
    tri.construction_stage = initial.stage;
    tri.boundary.assign(loop.begin(), loop.end());
    {
        std::vector<Vec2> ring;
        for (int v : tri.boundary) ring.push_back(pts[v]);
        if (shoelace_area_and_grad(ring).area < 0) std::reverse(tri.boundary.begin(), tri.boundary.end());
    }

    std::vector<char> onLoop(m, 0);
    for (int v : tri.boundary) onLoop[v] = 1;
    std::vector<int> interior;
    const double tol = 1e-12 * bbox_diagonal(pts);
    for (int v = 0; v < m; ++v) {
        if (onLoop[v]) continue;
        if (point_in_polygon(pts[v], pts, tri.boundary, tol) <= 0)
            throw InputError("triangulation: vertex " + std::to_string(v) + " is not strictly inside the boundary");
        interior.push_back(v);
    }
    tri.triangles = triangulate_polygon(pts, tri.boundary, interior);
    return tri;
}

} // namespace rodflat
