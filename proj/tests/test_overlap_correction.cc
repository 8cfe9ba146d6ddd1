#include <doctest.h>

#include <numbers>

#include <rodflat/generators.hh>
#include <rodflat/overlap_correction.hh>

#include "oracles.hh"

using namespace rodflat;

namespace {

// Six-rod loop laid out as a 2x1 rectangle in 3D. Folding vertex 1 up and
// to the right makes rod 0-1 cross rod 3-4 and nothing else.
struct Hexagon {
    RodStructure s;
    PlanarEmbedding emb;
};

Hexagon folded_hexagon() {
    Hexagon h;
    h.s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(2, 1, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    h.s.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}};
    for (const auto &v : h.s.vertices) h.emb.coords.emplace_back(v[0], v[1]);
    h.emb.coords[1] = Vec2(2.5, 1.5);
    return h;
}

// Rods 0-1 and 2-3 lie on top of each other along the x axis; the picture is
// symmetric under y -> -y.
Hexagon collinear_zigzag() {
    Hexagon h;
    h.s.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(2, 1, 0), Vec3(4, 1, 0)};
    h.s.edges = {{0, 1}, {1, 2}, {2, 3}};
    h.emb.coords = {Vec2(0, 0), Vec2(2, 0), Vec2(1, 0), Vec2(3, 0)};
    return h;
}

std::vector<Vec2> ring(const Vec2 &center, const Vec2 &start, int K) {
    const double r = (start - center).norm(), t0 = std::atan2(start[1] - center[1], start[0] - center[0]);
    std::vector<Vec2> out;
    out.push_back(start);
    for (int k = 1; k < K; ++k) {
        const double t = t0 + 2 * std::numbers::pi * k / K;
        out.push_back(center + r * Vec2(std::cos(t), std::sin(t)));
    }
    return out;
}

double rel(double L, double l) { return std::abs(L - l) / l; }

struct GridScan {
    double best = std::numeric_limits<double>::infinity();
    int i = -1, j = -1;
    int feasible = 0;
    int ties = 0;
};

// Exhaustive scan over every pair of circle samples. A pair is feasible when
// no two non-adjacent rods cross; its cost is the relative length error of
// the rods joining the moved points to the rest of the path.
GridScan scan_pairs(const Hexagon &h, const OverlapPath &path, int K,
                    const std::function<double(const std::vector<Vec2> &)> &cost) {
    const auto &c = h.emb.coords;
    const int P1 = path.P[0], P2 = path.P[1], P3 = path.P[2], P4 = path.P[3];
    const auto A = ring(c[size_t(P1)], c[size_t(P2)], K), B = ring(c[size_t(P4)], c[size_t(P3)], K);
    GridScan g;
    std::vector<std::pair<double, std::pair<int, int>>> all;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            auto moved = c;
            moved[size_t(P2)] = A[size_t(i)];
            moved[size_t(P3)] = B[size_t(j)];
            if (!oracle::brute_force_crossings(moved, h.s.edges).empty()) continue;
            ++g.feasible;
            const double v = cost(moved);
            all.push_back({v, {i, j}});
            if (v < g.best - 1e-12) { g.best = v; g.i = i; g.j = j; }
        }
    for (const auto &[v, ij] : all) g.ties += std::abs(v - g.best) <= 1e-12 * (1 + g.best);
    // later samples may undercut the kept one by less than the tie tolerance
    return g;
}

} // namespace

TEST_CASE("overlap-free input is returned unchanged") {
    GeneratorParams p;
    p.kind = "grid";
    p.n = 4;
    auto s = generate(p);
    PlanarEmbedding emb;
    for (const auto &v : s.vertices) emb.coords.emplace_back(v[0], v[1]);
    auto r = correct_overlaps_detailed(emb, s);
    CHECK(r.sweeps == 0);
    CHECK(r.relocations == 0);
    CHECK(r.embedding.coords == emb.coords);
    CHECK(r.embedding.stage == emb.stage);
}

TEST_CASE("single crossing of two chains is removed") {
    auto h = folded_hexagon();
    REQUIRE(count_overlaps(h.emb.coords, h.s.edges) == 1);
    auto r = correct_overlaps_detailed(h.emb, h.s);
    CHECK(r.initial_overlaps == 1);
    CHECK(r.final_overlaps == 0);
    CHECK(r.sweeps <= 10);
    CHECK(oracle::brute_force_crossings(r.embedding.coords, h.s.edges).empty());
    CHECK(r.embedding.stage == EmbeddingStage::corrected);

    // Only the relocated points moved; every rod away from them keeps its length.
    int moved = 0;
    std::vector<char> changed(h.s.vertices.size(), 0);
    for (size_t v = 0; v < changed.size(); ++v) {
        changed[v] = r.embedding.coords[v] != h.emb.coords[v];
        moved += changed[v];
    }
    CHECK(moved >= 1);
    CHECK(moved <= 2);
    for (const auto &e : h.s.edges) {
        if (changed[size_t(e[0])] || changed[size_t(e[1])]) continue;
        const double before = (h.emb.coords[size_t(e[0])] - h.emb.coords[size_t(e[1])]).norm();
        const double after = (r.embedding.coords[size_t(e[0])] - r.embedding.coords[size_t(e[1])]).norm();
        CHECK(std::abs(before - after) <= 1e-12);
    }
}

TEST_CASE("relocation follows the circles and minimizes the length error") {
    auto h = folded_hexagon();
    CorrectionContext ctx(h.s, h.emb.coords);
    const auto recs = detect_overlaps(h.emb, h.s.edges);
    REQUIRE(recs.size() == 1);
    const auto path = overlap_path(ctx, recs[0]);

    // the walk connects the four endpoints through rods
    CHECK(path.vertices.front() == path.P[0]);
    CHECK(path.vertices[1] == path.P[1]);
    CHECK(path.vertices[path.vertices.size() - 2] == path.P[2]);
    CHECK(path.vertices.back() == path.P[3]);
    for (size_t k = 0; k + 1 < path.vertices.size(); ++k) {
        const int a = path.vertices[k], b = path.vertices[k + 1];
        bool linked = false;
        for (const auto &e : h.s.edges) linked |= (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a);
        CHECK(linked);
    }
    double r = 0;
    for (int v : recs[0].vertices) r = std::max(r, (h.emb.coords[size_t(v)] - recs[0].point).norm());
    CHECK(path.radius == doctest::Approx(r).epsilon(1e-15));

    auto reloc = resolve_single_overlap(ctx, recs[0]);
    REQUIRE(reloc);
    CHECK_FALSE(reloc->fallback);
    const auto &c = h.emb.coords;
    const int P1 = path.P[0], P4 = path.P[3];
    CHECK(std::abs((reloc->p2_position - c[size_t(P1)]).norm() - (c[size_t(reloc->p2)] - c[size_t(P1)]).norm()) <= 1e-12);
    CHECK(std::abs((reloc->p3_position - c[size_t(P4)]).norm() - (c[size_t(reloc->p3)] - c[size_t(P4)]).norm()) <= 1e-12);

    const int n2 = path.vertices[2], n3 = path.vertices[path.vertices.size() - 3];
    auto restOf = [&](int a, int b) { return (h.s.vertices[size_t(a)] - h.s.vertices[size_t(b)]).norm(); };
    auto cost = [&](const std::vector<Vec2> &m) {
        return rel((m[size_t(reloc->p2)] - m[size_t(n2)]).norm(), restOf(reloc->p2, n2)) +
               rel((m[size_t(reloc->p3)] - m[size_t(n3)]).norm(), restOf(reloc->p3, n3));
    };
    const auto scan = scan_pairs(h, path, ctx.options.samples, cost);
    REQUIRE(scan.feasible > 0);
    CHECK(reloc->cost == doctest::Approx(scan.best).epsilon(1e-12));
    CHECK(reloc->sample_a == scan.i);
    CHECK(reloc->sample_b == scan.j);
}

TEST_CASE("empty search circle checks only the path rods") {
    // Rods whose midpoints lie outside the search circle do not change the outcome.
    auto h = folded_hexagon();
    h.s.vertices.push_back(Vec3(30, 0, 0));
    h.s.vertices.push_back(Vec3(31, 0, 0));
    h.s.edges.push_back({2, 6});
    h.s.edges.push_back({6, 7});
    h.emb.coords.push_back(Vec2(30, 0));
    h.emb.coords.push_back(Vec2(31, 0));
    CorrectionContext ctx(h.s, h.emb.coords);
    const auto recs = detect_overlaps(h.emb, h.s.edges);
    REQUIRE(recs.size() == 1);
    auto reloc = resolve_single_overlap(ctx, recs[0]);
    REQUIRE(reloc);
    auto base = folded_hexagon();
    CorrectionContext ctx0(base.s, base.emb.coords);
    auto ref = resolve_single_overlap(ctx0, detect_overlaps(base.emb, base.s.edges)[0]);
    REQUIRE(ref);
    CHECK(reloc->sample_a == ref->sample_a);
    CHECK(reloc->sample_b == ref->sample_b);
}

TEST_CASE("ties go to the lowest sample index") {
    auto h = collinear_zigzag();
    CorrectionContext ctx(h.s, h.emb.coords);
    const auto recs = detect_overlaps(h.emb, h.s.edges);
    REQUIRE(recs.size() == 1);
    const auto path = overlap_path(ctx, recs[0]);
    CHECK(path.P == std::array<int, 4>{0, 1, 2, 3});
    auto reloc = resolve_single_overlap(ctx, recs[0]);
    REQUIRE(reloc);
    const int K = ctx.options.samples;
    auto cost = [&](const std::vector<Vec2> &m) { return rel((m[1] - m[2]).norm(), 1.0); };
    const auto scan = scan_pairs(h, path, K, cost);
    // the mirror image of every optimum is an optimum too
    CHECK(scan.ties >= 2);
    CHECK(reloc->cost == doctest::Approx(scan.best).epsilon(1e-12));
    CHECK(reloc->sample_a == scan.i);
    CHECK(reloc->sample_b == scan.j);
    CHECK(reloc->sample_a <= K / 2);
}

TEST_CASE("crowded folds never get worse") {
    GeneratorParams p;
    p.kind = "grid";
    p.n = 4;
    p.sub = 3;
    auto s = generate(p);
    PlanarEmbedding base;
    for (const auto &v : s.vertices) base.coords.emplace_back(v[0], v[1]);
    const double diag = bbox_diagonal(base.coords);
    oracle::Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        auto emb = base;
        for (int k = 0; k < 3; ++k) {
            const int v = rng.integer(0, s.numVertices() - 1);
            emb.coords[size_t(v)] += 0.2 * diag * rng.point();
        }
        const int before = count_overlaps(emb.coords, s.edges);
        auto r = correct_overlaps_detailed(emb, s);
        CHECK(r.final_overlaps <= before);
        CHECK(r.final_overlaps == count_overlaps(r.embedding.coords, s.edges));
        CHECK(r.sweeps <= 10);
        int changed = 0;
        for (size_t v = 0; v < emb.coords.size(); ++v) changed += r.embedding.coords[v] != emb.coords[v];
        CHECK(changed <= 2 * r.relocations);
    }
}
