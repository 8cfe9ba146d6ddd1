// Independent reference computations used by the tests.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <rodflat/types.hh>

namespace oracle {

using rodflat::Edge;
using rodflat::Vec2;
using rodflat::Vec3;

inline std::string data_path(const std::string &name) { return std::string(RODFLAT_DATA_DIR) + "/" + name; }

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * (double(gen() >> 11) * 0x1.0p-53); }
    int integer(int lo, int hi) { return lo + int(gen() % std::uint64_t(hi - lo + 1)); }
    Vec2 point(double r = 1.0) { return {uniform(-r, r), uniform(-r, r)}; }
};

// Central differences of a scalar function of a flat vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd &)> &f, const Eigen::VectorXd &x,
                                   double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double orig = xp[k];
        xp[k] = orig + h;
        const double fp = f(xp);
        xp[k] = orig - h;
        const double fm = f(xp);
        xp[k] = orig;
        g[k] = (fp - fm) / (2 * h);
    }
    return g;
}

// Relative error of an analytic gradient against a reference, with the
// reference norm as the scale.
inline double rel_error(const Eigen::VectorXd &analytic, const Eigen::VectorXd &reference) {
    const double scale = std::max(reference.norm(), 1e-8);
    return (analytic - reference).norm() / scale;
}

// Orientation sign with long double arithmetic; adequate for random inputs.
inline int orient(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    const long double d = (long double)(b[0] - a[0]) * (c[1] - a[1]) - (long double)(b[1] - a[1]) * (c[0] - a[0]);
    return (d > 0) - (d < 0);
}

inline bool on_segment(const Vec2 &a, const Vec2 &b, const Vec2 &p) {
    return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
           p[1] <= std::max(a[1], b[1]);
}

// Textbook closed-segment intersection test.
inline bool segments_cross(const Vec2 &p1, const Vec2 &p2, const Vec2 &q1, const Vec2 &q2) {
    const int d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2), d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

// All crossing pairs (i < j) of non-adjacent edges, O(p^2).
inline std::vector<std::pair<int, int>> brute_force_crossings(const std::vector<Vec2> &c, const std::vector<Edge> &e) {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < e.size(); ++i)
        for (size_t j = i + 1; j < e.size(); ++j) {
            if (e[i][0] == e[j][0] || e[i][0] == e[j][1] || e[i][1] == e[j][0] || e[i][1] == e[j][1]) continue;
            if (segments_cross(c[size_t(e[i][0])], c[size_t(e[i][1])], c[size_t(e[j][0])], c[size_t(e[j][1])]))
                out.emplace_back(int(i), int(j));
        }
    return out;
}

// Triangle area from the cross product.
inline double triangle_area(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

inline double polygon_area(const std::vector<Vec2> &pts) {
    double s = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const Vec2 &a = pts[i], &b = pts[(i + 1) % pts.size()];
        s += a[0] * b[1] - b[0] * a[1];
    }
    return 0.5 * s;
}

inline double angle_between(const Vec3 &apex, const Vec3 &a, const Vec3 &b) {
    const Vec3 u = a - apex, v = b - apex;
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

} // namespace oracle
