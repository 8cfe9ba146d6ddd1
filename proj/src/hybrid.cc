#include <rodflat/hybrid.hh>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>

#include <rodflat/geometry.hh>

namespace rodflat {

bool needs_meshing(const RodStructure &s) {
    return !s.surface_regions.empty() && !s.metadata.value("surface_regions_meshed", false);
}

namespace {

double median_rod_length(const RodStructure &s) {
    std::vector<double> L;
    for (const auto &e : s.edges) L.push_back((s.vertices[size_t(e[0])] - s.vertices[size_t(e[1])]).norm());
    std::sort(L.begin(), L.end());
    const size_t n = L.size();
    return n % 2 ? L[n / 2] : 0.5 * (L[n / 2 - 1] + L[n / 2]);
}

double distance_to_segment(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

struct RegionMesh {
    std::vector<Vec3> steiner;              // new vertex positions
    std::vector<std::array<int, 2>> edges;  // local indices: loop first, then steiner
};

RegionMesh mesh_region(const RodStructure &s, const std::vector<int> &loop, size_t regionIndex, double target,
                       const HybridOptions &opts) {
    const std::string where = "surface_regions[" + std::to_string(regionIndex) + "]";
    const size_t k = loop.size();
    if (k < 3) throw InputError(where + ": needs at least 3 vertices");

    Vec3 centroid = Vec3::Zero();
    for (int v : loop) centroid += s.vertices[size_t(v)];
    centroid /= double(k);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Vec3 newell = Vec3::Zero();
    for (size_t i = 0; i < k; ++i) {
        const Vec3 d = s.vertices[size_t(loop[i])] - centroid;
        cov += d * d.transpose();
        newell += s.vertices[size_t(loop[i])].cross(s.vertices[size_t(loop[(i + 1) % k])]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Vec3 n = eig.eigenvectors().col(0);
    if (n.dot(newell) < 0) n = -n;

    const Vec3 e0 = s.vertices[size_t(loop[1])] - s.vertices[size_t(loop[0])];
    Vec3 u = e0 - e0.dot(n) * n;
    if (!(u.norm() > 0)) throw InputError(where + ": first edge is perpendicular to the region plane");
    u.normalize();
    const Vec3 w = n.cross(u);

    std::vector<Vec2> pts;
    for (int v : loop) {
        const Vec3 d = s.vertices[size_t(v)] - centroid;
        pts.emplace_back(d.dot(u), d.dot(w));
    }
    std::vector<int> ring(k);
    for (size_t i = 0; i < k; ++i) ring[i] = int(i);
    if (!polygon_is_simple(pts, ring))
        throw InputError(where + ": loop is not simple in its best-fit plane (region too folded)");

    std::vector<int> interior;
    if (int(k) > opts.steiner_threshold && target > 0) {
        Vec2 lo = pts[0], hi = pts[0];
        for (const auto &p : pts) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }
        const Vec2 origin = pts[0];
        const int i0 = int(std::floor((lo[0] - origin[0]) / target)), i1 = int(std::ceil((hi[0] - origin[0]) / target));
        const int j0 = int(std::floor((lo[1] - origin[1]) / target)), j1 = int(std::ceil((hi[1] - origin[1]) / target));
        const double tol = 1e-12 * bbox_diagonal(pts);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const Vec2 q = origin + target * Vec2(i, j);
                if (point_in_polygon(q, pts, ring, tol) <= 0) continue;
                double dmin = std::numeric_limits<double>::infinity();
                for (size_t a = 0; a < k; ++a) dmin = std::min(dmin, distance_to_segment(q, pts[a], pts[(a + 1) % k]));
                if (dmin < 0.5 * target) continue;
                interior.push_back(int(pts.size()));
                pts.push_back(q);
            }
    }

    const auto tris = triangulate_polygon(pts, ring, interior);
    std::set<std::pair<int, int>> uniq;
    for (const auto &t : tris)
        for (int a = 0; a < 3; ++a) uniq.emplace(std::min(t[a], t[(a + 1) % 3]), std::max(t[a], t[(a + 1) % 3]));

    // Interior points take harmonic 3D positions with the loop held fixed.
    RegionMesh out;
    const int ns = int(interior.size());
    if (ns > 0) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(ns, ns);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ns, 3);
        for (auto [a, b] : uniq) {
            for (auto [p, q] : {std::pair{a, b}, std::pair{b, a}}) {
                if (p < int(k)) continue;
                const int r = p - int(k);
                L(r, r) += 1;
                if (q < int(k)) rhs.row(r) += s.vertices[size_t(loop[size_t(q)])].transpose();
                else L(r, q - int(k)) -= 1;
            }
        }
        const Eigen::MatrixXd X = L.ldlt().solve(rhs);
        for (int r = 0; r < ns; ++r) out.steiner.emplace_back(X(r, 0), X(r, 1), X(r, 2));
    }

    auto pos3 = [&](int local) {
        return local < int(k) ? s.vertices[size_t(loop[size_t(local)])] : out.steiner[size_t(local - int(k))];
    };
    const double limit = std::cos(opts.max_normal_deviation_deg * std::numbers::pi / 180.0);
    for (const auto &t : tris) {
        Vec3 tn = (pos3(t[1]) - pos3(t[0])).cross(pos3(t[2]) - pos3(t[0]));
        if (!(tn.norm() > 0) || tn.normalized().dot(n) < limit)
            throw InputError(where + ": triangle normal deviates more than " +
                             std::to_string(int(opts.max_normal_deviation_deg)) + " degrees from the region plane");
    }
    for (auto [a, b] : uniq) out.edges.push_back({a, b});
    return out;
}

} // namespace

RodStructure mesh_surface_regions(const RodStructure &s, const HybridOptions &opts, HybridReport *report) {
    RodStructure out = s;
    HybridReport rep;
    if (!needs_meshing(s)) {
        if (report) *report = rep;
        return out;
    }
    const double target = median_rod_length(s);
    std::set<std::pair<int, int>> existing;
    for (const auto &e : s.edges) existing.emplace(std::min(e[0], e[1]), std::max(e[0], e[1]));

    std::vector<char> fill = s.fill_edge;
    fill.resize(s.edges.size(), 0);
    for (size_t r = 0; r < s.surface_regions.size(); ++r) {
        const auto &loop = s.surface_regions[r];
        const auto mesh = mesh_region(s, loop, r, target, opts);
        const int base = out.numVertices();
        for (const auto &p : mesh.steiner) out.vertices.push_back(p);
        auto global = [&](int local) { return local < int(loop.size()) ? loop[size_t(local)] : base + local - int(loop.size()); };
        for (auto [a, b] : mesh.edges) {
            const int ga = global(a), gb = global(b);
            if (!existing.emplace(std::min(ga, gb), std::max(ga, gb)).second) continue;
            out.edges.push_back({std::min(ga, gb), std::max(ga, gb)});
            fill.push_back(1);
            ++rep.added_edges;
        }
        rep.added_vertices += int(mesh.steiner.size());
        ++rep.regions;
    }
    if (rep.added_edges > 0) {
        out.fill_edge = std::move(fill);
        out.metadata["surface_regions_meshed"] = true;
    }
    validate(out);
    if (report) *report = rep;
    return out;
}

} // namespace rodflat
