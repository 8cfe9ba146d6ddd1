#include <rodflat/geometry.hh>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>
#include <tuple>

#include <gmpxx.h>

namespace rodflat {

LengthGrad segment_length_and_grad(const Vec2 &p, const Vec2 &q) {
    LengthGrad out;
    const Vec2 d = p - q;
    out.length = d.norm();
    if (!(out.length > 0)) {
        out.degenerate = true;
        return out;
    }
    out.grad = {d[0] / out.length, d[1] / out.length, -d[0] / out.length, -d[1] / out.length};
    return out;
}

CosineGrad cos_angle_and_grad(const Vec2 &apex, const Vec2 &b, const Vec2 &c) {
    CosineGrad out;
    const Vec2 va = b - apex, vb = c - apex;
    const double na = va.norm(), nb = vb.norm();
    if (!(na > 0) || !(nb > 0)) {
        out.degenerate = true;
        return out;
    }
    const double dot = va.dot(vb);
    out.cosine = std::clamp(dot / (na * nb), -1.0, 1.0);

    // Quotient rule on dot / (|a| |b|), one coordinate at a time.
    const double x1 = apex[0], y1 = apex[1], x2 = b[0], y2 = b[1], x3 = c[0], y3 = c[1];
    const std::array<double, 6> d_dot = {2 * x1 - x2 - x3, 2 * y1 - y2 - y3,
                                         x3 - x1, y3 - y1,
                                         x2 - x1, y2 - y1};
    const std::array<double, 6> d_na = {(x1 - x2) / na, (y1 - y2) / na,
                                        (x2 - x1) / na, (y2 - y1) / na,
                                        0, 0};
    const std::array<double, 6> d_nb = {(x1 - x3) / nb, (y1 - y3) / nb,
                                        0, 0,
                                        (x3 - x1) / nb, (y3 - y1) / nb};
    const double denom = na * na * nb * nb;
    for (int k = 0; k < 6; ++k)
        out.grad[k] = (d_dot[k] * na * nb - dot * (d_na[k] * nb + d_nb[k] * na)) / denom;
    return out;
}

double cos_angle_3d(const Vec3 &apex, const Vec3 &b, const Vec3 &c) {
    const Vec3 va = b - apex, vb = c - apex;
    const double na = va.norm(), nb = vb.norm();
    if (!(na > 0) || !(nb > 0)) throw DegeneracyError("zero-length arm in 3D angle");
    return std::clamp(va.dot(vb) / (na * nb), -1.0, 1.0);
}

AreaGrad heron_area_and_grad(const Vec2 &p1, const Vec2 &p2, const Vec2 &p3) {
    AreaGrad out;
    const auto g12 = segment_length_and_grad(p1, p2);
    const auto g23 = segment_length_and_grad(p2, p3);
    const auto g31 = segment_length_and_grad(p3, p1);
    const double L12 = g12.length, L23 = g23.length, L31 = g31.length;

    // Kahan's ordering keeps the value accurate for needle-shaped triangles.
    std::array<double, 3> s = {L12, L23, L31};
    std::sort(s.begin(), s.end(), std::greater<>());
    const double a = s[0], b = s[1], c = s[2];
    const double P = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));   // 16 Area^2
    out.area = P > 0 ? 0.25 * std::sqrt(P) : 0.0;
    out.singular = !(P > kHeronAreaFloor);

    const double denom = 8 * std::sqrt(std::max(P, 0.0) + kHeronAreaFloor);
    const double c12 = 4 * L12 * (L23 * L23 + L31 * L31 - L12 * L12) / denom;
    const double c23 = 4 * L23 * (L31 * L31 + L12 * L12 - L23 * L23) / denom;
    const double c31 = 4 * L31 * (L12 * L12 + L23 * L23 - L31 * L31) / denom;
    // dL12/d(p1, p2), dL23/d(p2, p3), dL31/d(p3, p1)
    out.grad = {c12 * g12.grad[0] + c31 * g31.grad[2],
                c12 * g12.grad[1] + c31 * g31.grad[3],
                c12 * g12.grad[2] + c23 * g23.grad[0],
                c12 * g12.grad[3] + c23 * g23.grad[1],
                c23 * g23.grad[2] + c31 * g31.grad[0],
                c23 * g23.grad[3] + c31 * g31.grad[1]};
    return out;
}

PolygonAreaGrad shoelace_area_and_grad(std::span<const Vec2> loop) {
    PolygonAreaGrad out;
    const size_t s = loop.size();
    if (s < 3) throw InputError("shoelace area needs at least 3 points");
    out.grad.assign(2 * s, 0.0);
    double twice = 0;
    for (size_t k = 0; k < s; ++k) {
        const Vec2 &cur = loop[k], &next = loop[(k + 1) % s], &prev = loop[(k + s - 1) % s];
        twice += cur[0] * next[1] - next[0] * cur[1];
        out.grad[2 * k]     = 0.5 * (next[1] - prev[1]);
        out.grad[2 * k + 1] = 0.5 * (prev[0] - next[0]);
    }
    out.area = 0.5 * twice;
    return out;
}

double signed_area(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

int orient2d(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    const double detleft  = (a[0] - c[0]) * (b[1] - c[1]);
    const double detright = (a[1] - c[1]) * (b[0] - c[0]);
    const double det = detleft - detright;
    // Static filter from Shewchuk's orient2d; exact rational fallback below it.
    constexpr double eps = std::numeric_limits<double>::epsilon() * 0.5;
    const double bound = (3.0 + 16.0 * eps) * eps * (std::abs(detleft) + std::abs(detright));
    if (det > bound) return 1;
    if (-det > bound) return -1;

    const mpq_class ax(a[0]), ay(a[1]), bx(b[0]), by(b[1]), cx(c[0]), cy(c[1]);
    const mpq_class exact = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
    return sgn(exact);
}

namespace {

double point_segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b, Vec2 *closest) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    Vec2 c = a + t * ab;
    if (closest) *closest = c;
    return (p - c).norm();
}

} // namespace

bool segments_intersect(const Vec2 &p1, const Vec2 &p2, const Vec2 &q1, const Vec2 &q2,
                        double touch_tol, Vec2 *where) {
    const int o1 = orient2d(p1, p2, q1), o2 = orient2d(p1, p2, q2);
    const int o3 = orient2d(q1, q2, p1), o4 = orient2d(q1, q2, p2);
    if (o1 * o2 < 0 && o3 * o4 < 0) {
        if (where) {
            const Vec2 r = p2 - p1, s = q2 - q1;
            const double denom = r[0] * s[1] - r[1] * s[0];
            const Vec2 qp = q1 - p1;
            const double t = (qp[0] * s[1] - qp[1] * s[0]) / denom;
            *where = p1 + std::clamp(t, 0.0, 1.0) * r;
        }
        return true;
    }
    // Not a proper crossing; check for touching (including collinear overlap).
    double best = std::numeric_limits<double>::infinity();
    Vec2 bp = p1, bq = q1, c;
    auto consider = [&](double d, const Vec2 &x, const Vec2 &y) {
        if (d < best) { best = d; bp = x; bq = y; }
    };
    consider(point_segment_distance(p1, q1, q2, &c), p1, c);
    consider(point_segment_distance(p2, q1, q2, &c), p2, c);
    consider(point_segment_distance(q1, p1, p2, &c), c, q1);
    consider(point_segment_distance(q2, p1, p2, &c), c, q2);
    if (best <= touch_tol) {
        if (where) *where = 0.5 * (bp + bq);
        return true;
    }
    return false;
}

double bbox_diagonal(std::span<const Vec2> pts) {
    if (pts.empty()) return 0;
    Vec2 lo = pts[0], hi = pts[0];
    for (const auto &p : pts) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }
    return (hi - lo).norm();
}

int configured_threads() {
    if (const char *env = std::getenv("RODFLAT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return std::min(n, 64);
    }
    return 1;
}

std::vector<OverlapRecord> detect_overlaps(std::span<const Vec2> coords, std::span<const Edge> edges) {
    const double tol = 1e-12 * bbox_diagonal(coords);
    const int p = int(edges.size());

    struct Box { Vec2 lo, hi; };
    std::vector<Box> boxes(p);
    for (int k = 0; k < p; ++k) {
        const Vec2 &a = coords[edges[k][0]], &b = coords[edges[k][1]];
        boxes[k] = {a.cwiseMin(b).array() - tol, a.cwiseMax(b).array() + tol};
    }

    auto scan = [&](int first, int stride, std::vector<OverlapRecord> &out) {
        for (int i = first; i < p; i += stride) {
            const Edge &ei = edges[i];
            for (int j = i + 1; j < p; ++j) {
                const Edge &ej = edges[j];
                if (ei[0] == ej[0] || ei[0] == ej[1] || ei[1] == ej[0] || ei[1] == ej[1]) continue;
                if ((boxes[i].hi.array() < boxes[j].lo.array()).any() ||
                    (boxes[j].hi.array() < boxes[i].lo.array()).any()) continue;
                Vec2 where;
                if (segments_intersect(coords[ei[0]], coords[ei[1]], coords[ej[0]], coords[ej[1]], tol, &where))
                    out.push_back({i, j, where, {ei[0], ei[1], ej[0], ej[1]}});
            }
        }
    };

    std::vector<OverlapRecord> records;
    const int threads = std::min(configured_threads(), std::max(1, p / 256));
    if (threads <= 1) {
        scan(0, 1, records);
    } else {
        std::vector<std::vector<OverlapRecord>> parts(threads);
        {
            std::vector<std::jthread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&, t] { scan(t, threads, parts[t]); });
        }
        for (auto &part : parts) records.insert(records.end(), part.begin(), part.end());
    }
    std::sort(records.begin(), records.end(), [](const OverlapRecord &a, const OverlapRecord &b) {
        return std::tie(a.edge_a, a.edge_b) < std::tie(b.edge_a, b.edge_b);
    });
    return records;
}

int count_overlaps(std::span<const Vec2> coords, std::span<const Edge> edges) {
    return int(detect_overlaps(coords, edges).size());
}

} // namespace rodflat
