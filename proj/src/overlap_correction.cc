#include <rodflat/overlap_correction.hh>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace rodflat {

CorrectionContext::CorrectionContext(const RodStructure &s, std::vector<Vec2> positions, CorrectionOptions opts)
    : structure(&s), coords(std::move(positions)), incident(incident_edges(s)), options(opts) {
    rest_lengths.reserve(s.edges.size());
    for (const auto &e : s.edges) rest_lengths.push_back((s.vertices[e[0]] - s.vertices[e[1]]).norm());
    touch_tol = 1e-12 * bbox_diagonal(coords);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest walk src -> dst weighted by current 2D lengths, avoiding `banned`.
std::vector<int> shortest_walk(const CorrectionContext &ctx, int src, int dst, const std::vector<int> &banned,
                               double *length) {
    const size_t m = ctx.coords.size();
    std::vector<double> dist(m, kInf);
    std::vector<int> prev(m, -1);
    std::vector<char> blocked(m, 0);
    for (int b : banned) if (b != src && b != dst) blocked[size_t(b)] = 1;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[size_t(src)] = 0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[size_t(v)]) continue;
        if (v == dst) break;
        for (auto [w, e] : ctx.incident[size_t(v)]) {
            (void)e;
            if (blocked[size_t(w)]) continue;
            const double nd = d + (ctx.coords[size_t(v)] - ctx.coords[size_t(w)]).norm();
            if (nd < dist[size_t(w)] || (nd == dist[size_t(w)] && v < prev[size_t(w)])) {
                dist[size_t(w)] = nd;
                prev[size_t(w)] = v;
                pq.emplace(nd, w);
            }
        }
    }
    if (!std::isfinite(dist[size_t(dst)])) return {};
    std::vector<int> walk;
    for (int v = dst; v != -1; v = prev[size_t(v)]) walk.push_back(v);
    std::reverse(walk.begin(), walk.end());
    if (length) *length = dist[size_t(dst)];
    return walk;
}

int edge_between(const CorrectionContext &ctx, int a, int b) {
    for (auto [w, e] : ctx.incident[size_t(a)])
        if (w == b) return e;
    return -1;
}

bool shares_vertex(const Edge &a, const Edge &b) {
    return a[0] == b[0] || a[0] == b[1] || a[1] == b[0] || a[1] == b[1];
}

double relative_error(double L, double l) { return l > 0 ? std::abs(L - l) / l : std::abs(L); }

struct SearchProblem {
    const CorrectionContext *ctx;
    int p2, p3;
    std::vector<int> moved2, moved3;   // edges following only P2 / only P3
    int shared = -1;                   // edge P2-P3, when present
    std::vector<int> fixed;            // checked edges that do not move
    int next2 = -1, next3 = -1;        // path neighbors defining the cost

    Vec2 position(int v, const Vec2 &a, const Vec2 &b) const {
        if (v == p2) return a;
        if (v == p3) return b;
        return ctx->coords[size_t(v)];
    }

    bool crosses(int e, int f, const Vec2 &a, const Vec2 &b) const {
        const auto &E = ctx->structure->edges;
        if (shares_vertex(E[size_t(e)], E[size_t(f)])) return false;
        return segments_intersect(position(E[size_t(e)][0], a, b), position(E[size_t(e)][1], a, b),
                                  position(E[size_t(f)][0], a, b), position(E[size_t(f)][1], a, b), ctx->touch_tol);
    }

    bool clear_of_fixed(const std::vector<int> &moved, const Vec2 &a, const Vec2 &b) const {
        for (int e : moved)
            for (int f : fixed)
                if (crosses(e, f, a, b)) return false;
        return true;
    }

    double cost(const Vec2 &a, const Vec2 &b) const {
        const auto &L = ctx->rest_lengths;
        if (shared >= 0 && next2 == p3) return relative_error((a - b).norm(), L[size_t(shared)]);
        double c = 0;
        if (next2 >= 0) c += relative_error((a - ctx->coords[size_t(next2)]).norm(), L[size_t(edge_between(*ctx, p2, next2))]);
        if (next3 >= 0) c += relative_error((b - ctx->coords[size_t(next3)]).norm(), L[size_t(edge_between(*ctx, next3, p3))]);
        return c;
    }

    std::optional<std::tuple<int, int, double>> search(const std::vector<Vec2> &A, const std::vector<Vec2> &B) const {
        const Vec2 b0 = ctx->coords[size_t(p3)], a0 = ctx->coords[size_t(p2)];
        std::vector<char> okA(A.size()), okB(B.size());
        for (size_t i = 0; i < A.size(); ++i) okA[i] = clear_of_fixed(moved2, A[i], b0);
        for (size_t j = 0; j < B.size(); ++j) okB[j] = clear_of_fixed(moved3, a0, B[j]);

        std::optional<std::tuple<int, int, double>> best;
        double bestCost = kInf;
        for (size_t i = 0; i < A.size(); ++i) {
            if (!okA[i]) continue;
            for (size_t j = 0; j < B.size(); ++j) {
                if (!okB[j]) continue;
                const double c = cost(A[i], B[j]);
                if (!(c < bestCost - 1e-12 * (1 + std::abs(bestCost))) && best) continue;
                if (!pair_feasible(A[i], B[j])) continue;
                bestCost = c;
                best = std::make_tuple(int(i), int(j), c);
            }
        }
        return best;
    }

    bool pair_feasible(const Vec2 &a, const Vec2 &b) const {
        for (int e : moved2)
            for (int f : moved3)
                if (crosses(e, f, a, b)) return false;
        if (shared >= 0) {
            for (int f : fixed)
                if (crosses(shared, f, a, b)) return false;
        }
        return true;
    }
};

std::vector<Vec2> circle_samples(const Vec2 &center, const Vec2 &start, int K) {
    const Vec2 d = start - center;
    const double r = d.norm(), theta0 = std::atan2(d[1], d[0]);
    std::vector<Vec2> out;
    out.resize(size_t(K));
    out[0] = start;
    for (int k = 1; k < K; ++k) {
        const double t = theta0 + 2 * std::numbers::pi * k / K;
        out[size_t(k)] = center + r * Vec2(std::cos(t), std::sin(t));
    }
    return out;
}

Vec2 bisector(const Vec2 &O, const Vec2 &u, const Vec2 &v) {
    Vec2 a = u - O, b = v - O;
    if (a.norm() > 0) a.normalize();
    if (b.norm() > 0) b.normalize();
    Vec2 d = a + b;
    if (d.norm() < 1e-12) d = Vec2(-a[1], a[0]);
    return d.normalized();
}

std::vector<Vec2> ray_samples(const Vec2 &O, const Vec2 &dir, double r, int count) {
    std::vector<Vec2> out;
    out.resize(size_t(count));
    for (int k = 0; k < count; ++k) out[size_t(k)] = O + (2 * r * (k + 1) / count) * dir;
    return out;
}

} // namespace

OverlapPath overlap_path(const CorrectionContext &ctx, const OverlapRecord &record) {
    const auto &v = record.vertices;
    const std::array<std::array<int, 4>, 4> labelings = {{
        {v[0], v[1], v[2], v[3]}, {v[0], v[1], v[3], v[2]},
        {v[1], v[0], v[2], v[3]}, {v[1], v[0], v[3], v[2]},
    }};
    OverlapPath best;
    double bestLen = kInf;
    for (bool avoid : {true, false}) {
        for (const auto &P : labelings) {
            double len = kInf;
            auto leg = shortest_walk(ctx, P[1], P[2], avoid ? std::vector<int>{P[0], P[3]} : std::vector<int>{}, &len);
            if (leg.empty() || !(len < bestLen)) continue;
            bestLen = len;
            best.P = P;
            best.vertices.assign(1, P[0]);
            best.vertices.insert(best.vertices.end(), leg.begin(), leg.end());
            best.vertices.push_back(P[3]);
        }
        if (std::isfinite(bestLen)) break;
    }
    if (!std::isfinite(bestLen)) {
        best.P = labelings[0];
        best.vertices = {v[0], v[1], v[2], v[3]};
    }
    const auto &c = ctx.coords;
    best.center = record.point;
    for (int k = 0; k < 4; ++k)
        best.radius = std::max(best.radius, (c[size_t(record.vertices[size_t(k)])] - best.center).norm());
    return best;
}

std::optional<Relocation> resolve_single_overlap(const CorrectionContext &ctx, const OverlapRecord &record) {
    const auto path = overlap_path(ctx, record);
    const auto &E = ctx.structure->edges;
    const int P1 = path.P[0], P2 = path.P[1], P3 = path.P[2], P4 = path.P[3];

    SearchProblem sp{&ctx, P2, P3, {}, {}, -1, {}, -1, -1};
    const auto &pv = path.vertices;
    if (pv.size() >= 4) {
        sp.next2 = pv[2];
        sp.next3 = pv[pv.size() - 3];
        if (pv.size() == 4) sp.next3 = -1;
    }

    std::vector<char> checked(E.size(), 0);
    for (size_t k = 0; k + 1 < pv.size(); ++k) {
        int e = edge_between(ctx, pv[k], pv[k + 1]);
        if (e >= 0) checked[size_t(e)] = 1;
    }
    const double reach = path.radius + 1e-12;
    for (size_t e = 0; e < E.size(); ++e) {
        const Vec2 mid = 0.5 * (ctx.coords[size_t(E[e][0])] + ctx.coords[size_t(E[e][1])]);
        if ((mid - path.center).norm() <= reach) checked[e] = 1;
    }
    for (size_t e = 0; e < E.size(); ++e) {
        const bool on2 = E[e][0] == P2 || E[e][1] == P2, on3 = E[e][0] == P3 || E[e][1] == P3;
        if (on2 && on3) sp.shared = int(e);
        else if (on2) sp.moved2.push_back(int(e));
        else if (on3) sp.moved3.push_back(int(e));
        else if (checked[e]) sp.fixed.push_back(int(e));
    }

    Relocation out;
    out.p2 = P2;
    out.p3 = P3;
    const auto &c = ctx.coords;
    auto A = circle_samples(c[size_t(P1)], c[size_t(P2)], ctx.options.samples);
    auto B = circle_samples(c[size_t(P4)], c[size_t(P3)], ctx.options.samples);
    auto hit = sp.search(A, B);
    if (!hit) {
        A = ray_samples(path.center, bisector(path.center, c[size_t(P1)], c[size_t(P3)]), path.radius,
                        ctx.options.bisector_samples);
        B = ray_samples(path.center, bisector(path.center, c[size_t(P4)], c[size_t(P2)]), path.radius,
                        ctx.options.bisector_samples);
        hit = sp.search(A, B);
        out.fallback = true;
    }
    if (!hit) return std::nullopt;
    auto [i, j, cost] = *hit;
    out.sample_a = i;
    out.sample_b = j;
    out.cost = cost;
    out.p2_position = A[size_t(i)];
    out.p3_position = B[size_t(j)];
    return out;
}

CorrectionResult correct_overlaps_detailed(const PlanarEmbedding &emb, const RodStructure &s,
                                           const CorrectionOptions &opts) {
    CorrectionResult res;
    res.embedding = emb;
    std::vector<Vec2> coords = emb.coords;
    int current = count_overlaps(coords, s.edges);
    res.initial_overlaps = current;

    for (int sweep = 0; current > 0 && sweep < opts.max_sweeps; ++sweep) {
        CorrectionContext ctx(s, coords, opts);
        const auto records = detect_overlaps(std::span<const Vec2>(ctx.coords), s.edges);
        int moved = 0, unresolved = 0;
        for (auto rec : records) {
            const auto &e = s.edges[size_t(rec.edge_a)], &f = s.edges[size_t(rec.edge_b)];
            Vec2 where;
            if (!segments_intersect(ctx.coords[size_t(e[0])], ctx.coords[size_t(e[1])], ctx.coords[size_t(f[0])],
                                    ctx.coords[size_t(f[1])], ctx.touch_tol, &where))
                continue;
            rec.point = where;
            if (auto r = resolve_single_overlap(ctx, rec)) {
                ctx.coords[size_t(r->p2)] = r->p2_position;
                ctx.coords[size_t(r->p3)] = r->p3_position;
                ++moved;
            } else {
                ++unresolved;
            }
        }
        const int after = count_overlaps(ctx.coords, s.edges);
        if (after > current) {
            res.stopped_on_increase = true;
            break;
        }
        coords = std::move(ctx.coords);
        current = after;
        res.sweeps = sweep + 1;
        res.relocations += moved;
        res.unresolved = unresolved;
        if (moved == 0) break;
    }
    if (res.sweeps > 0) {
        res.embedding.coords = std::move(coords);
        res.embedding.stage = EmbeddingStage::corrected;
    }
    res.final_overlaps = current;
    return res;
}

PlanarEmbedding correct_overlaps(const PlanarEmbedding &emb, const RodStructure &s, const CorrectionOptions &opts) {
    return correct_overlaps_detailed(emb, s, opts).embedding;
}

} // namespace rodflat
