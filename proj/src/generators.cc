#include <rodflat/generators.hh>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace rodflat {

using nlohmann::json;

const std::vector<std::string> &generator_kinds() {
    static const std::vector<std::string> kinds = {"dome", "saddle", "multipeak", "grid", "dome_patch"};
    return kinds;
}

namespace {

double default_height(const std::string &kind) {
    if (kind == "grid") return 0.0;
    if (kind == "multipeak") return 0.4;
    return 0.5;
}

// Uniform double in [0, 1) from the raw 64-bit stream, identical on every platform.
double unit(std::mt19937_64 &rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct Peak {
    double cx, cy, amp, sigma;
};

} // namespace

RodStructure generate(const GeneratorParams &p) {
    const auto &kinds = generator_kinds();
    if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end())
        throw InputError("unknown generator '" + p.kind + "'");
    if (p.n < 3) throw InputError("grid resolution must be at least 3");
    const int sub = p.sub.value_or(p.kind == "grid" ? 1 : 3);
    if (sub < 1) throw InputError("subdivision must be at least 1");
    const double h = p.height.value_or(default_height(p.kind));
    if (!(h >= 0) || !std::isfinite(h)) throw InputError("height must be finite and non-negative");
    if (p.kind == "multipeak" && p.peaks < 1) throw InputError("multipeak needs at least one peak");
    if (p.kind == "dome_patch" && p.n < 4) throw InputError("dome_patch needs at least 4 grid lines");

    std::function<double(double, double)> z;
    std::vector<Peak> peaks;
    if (p.kind == "dome" || p.kind == "dome_patch") {
        z = [h](double x, double y) { return h * (1 - 0.5 * (x * x + y * y)); };
    } else if (p.kind == "saddle") {
        z = [h](double x, double y) { return 0.5 * h * (x * x - y * y); };
    } else if (p.kind == "multipeak") {
        std::mt19937_64 rng(p.seed);
        for (int k = 0; k < p.peaks; ++k) {
            Peak pk;
            pk.cx = -0.6 + 1.2 * unit(rng);
            pk.cy = -0.6 + 1.2 * unit(rng);
            pk.amp = h * (0.5 + 0.5 * unit(rng));
            pk.sigma = 0.35 + 0.15 * unit(rng);
            peaks.push_back(pk);
        }
        z = [peaks](double x, double y) {
            double s = 0;
            for (const auto &pk : peaks) {
                const double dx = x - pk.cx, dy = y - pk.cy;
                s += pk.amp * std::exp(-(dx * dx + dy * dy) / (2 * pk.sigma * pk.sigma));
            }
            return s;
        };
    } else {
        z = [](double, double) { return 0.0; };
    }

    const int N = (p.n - 1) * sub + 1;
    std::vector<int> index(size_t(N) * size_t(N), -1);
    auto at = [&](int a, int b) -> int & { return index[size_t(b) * size_t(N) + size_t(a)]; };

    RodStructure s;
    s.name = p.kind + "-n" + std::to_string(p.n);
    s.units = "model";
    for (int b = 0; b < N; ++b)
        for (int a = 0; a < N; ++a) {
            if (a % sub != 0 && b % sub != 0) continue;
            const double x = -1.0 + 2.0 * a / (N - 1), y = -1.0 + 2.0 * b / (N - 1);
            at(a, b) = s.numVertices();
            s.vertices.emplace_back(x, y, z(x, y));
        }
    for (int b = 0; b < N; ++b)
        for (int a = 0; a < N; ++a) {
            if (at(a, b) < 0) continue;
            if (a + 1 < N && b % sub == 0) s.edges.push_back({at(a, b), at(a + 1, b)});
            if (b + 1 < N && a % sub == 0) s.edges.push_back({at(a, b), at(a, b + 1)});
        }

    std::vector<int> rim;
    for (int a = 0; a < N - 1; ++a) rim.push_back(at(a, 0));
    for (int b = 0; b < N - 1; ++b) rim.push_back(at(N - 1, b));
    for (int a = N - 1; a > 0; --a) rim.push_back(at(a, N - 1));
    for (int b = N - 1; b > 0; --b) rim.push_back(at(0, b));
    if (p.with_boundary) s.boundary = rim;

    if (p.kind == "dome_patch") {
        // One grid cell next to the apex becomes a surface region.
        const int c0 = (p.n - 1) / 2 - 1, a0 = c0 * sub, a1 = (c0 + 1) * sub;
        std::vector<int> loop;
        for (int a = a0; a < a1; ++a) loop.push_back(at(a, a0));
        for (int b = a0; b < a1; ++b) loop.push_back(at(a1, b));
        for (int a = a1; a > a0; --a) loop.push_back(at(a, a1));
        for (int b = a1; b > a0; --b) loop.push_back(at(a0, b));
        s.surface_regions.push_back(loop);
    }

    const auto deg = vertex_degrees(s);
    int joints = 0, jointAngles = 0, bends = 0;
    for (int d : deg) {
        if (d >= 3) { ++joints; jointAngles += d; }
        if (d == 2) ++bends;
    }
    json gen{{"kind", p.kind}, {"n", p.n}, {"sub", sub}, {"height", h}, {"seed", p.seed}};
    if (p.kind == "multipeak") {
        json pk = json::array();
        for (const auto &q : peaks) pk.push_back({{"center", {q.cx, q.cy}}, {"amplitude", q.amp}, {"sigma", q.sigma}});
        gen["peaks"] = pk;
    }
    s.metadata = json{{"generator", gen},
                      {"rim", rim},
                      {"expected", {{"vertices", s.numVertices()}, {"edges", s.numEdges()}, {"joints", joints},
                                    {"joint_angles", jointAngles}, {"bend_angles", bends}}}};
    validate(s);
    return s;
}

} // namespace rodflat
