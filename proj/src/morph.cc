#include <rodflat/morph.hh>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include <Eigen/SVD>

namespace rodflat {

using nlohmann::json;

SpringEval spring_energy_and_grad(std::span<const Vec3> coords, std::span<const Edge> edges,
                                  std::span<const double> rest, double k) {
    SpringEval out;
    out.gradient = Eigen::VectorXd::Zero(Eigen::Index(3 * coords.size()));
    for (size_t e = 0; e < edges.size(); ++e) {
        const int i = edges[e][0], j = edges[e][1];
        const Vec3 d = coords[size_t(i)] - coords[size_t(j)];
        const double L = d.norm(), s = L - rest[e];
        out.energy += k * s * s;
        if (!(L > 0)) {
            out.degenerate = true;
            continue;
        }
        const Vec3 g = (2 * k * s / L) * d;
        out.gradient.segment<3>(3 * i) += g;
        out.gradient.segment<3>(3 * j) -= g;
    }
    return out;
}

std::vector<double> rest_lengths_3d(const RodStructure &s) {
    std::vector<double> rest;
    rest.reserve(s.edges.size());
    for (const auto &e : s.edges) rest.push_back((s.vertices[size_t(e[0])] - s.vertices[size_t(e[1])]).norm());
    return rest;
}

std::vector<Vec3> planar_start(const RodStructure &s, const PlanarEmbedding &emb, bool align) {
    const size_t m = emb.coords.size();
    std::vector<Vec3> out(m);
    if (!align || m == 0) {
        for (size_t i = 0; i < m; ++i) out[i] = Vec3(emb.coords[i][0], emb.coords[i][1], 0);
        return out;
    }
    Vec2 pc = Vec2::Zero(), qc = Vec2::Zero();
    for (size_t i = 0; i < m; ++i) {
        pc += emb.coords[i];
        qc += s.vertices[i].head<2>();
    }
    pc /= double(m);
    qc /= double(m);
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    for (size_t i = 0; i < m; ++i) H += (emb.coords[i] - pc) * (s.vertices[i].head<2>() - qc).transpose();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2d R = svd.matrixV() * svd.matrixU().transpose();
    for (size_t i = 0; i < m; ++i) {
        const Vec2 p = R * (emb.coords[i] - pc) + qc;
        out[i] = Vec3(p[0], p[1], 0);
    }
    return out;
}

namespace {

struct InnerResult {
    bool converged = false;
    int iterations = 0;
    double energy = 0;
};

// L-BFGS with monotone Armijo backtracking over the free vertices.
InnerResult relax(std::vector<Vec3> &coords, const std::vector<int> &freeVerts, std::span<const Edge> edges,
                  std::span<const double> rest, double k, double gtol, double stepScale, int maxIter,
                  std::vector<double> *trace) {
    const Eigen::Index n = Eigen::Index(3 * freeVerts.size());
    InnerResult res;
    auto gather = [&](const Eigen::VectorXd &full) {
        Eigen::VectorXd g(n);
        for (size_t f = 0; f < freeVerts.size(); ++f) g.segment<3>(Eigen::Index(3 * f)) = full.segment<3>(3 * freeVerts[f]);
        return g;
    };
    auto place = [&](const Eigen::VectorXd &x) {
        for (size_t f = 0; f < freeVerts.size(); ++f) coords[size_t(freeVerts[f])] = x.segment<3>(Eigen::Index(3 * f));
    };
    Eigen::VectorXd x(n);
    for (size_t f = 0; f < freeVerts.size(); ++f) x.segment<3>(Eigen::Index(3 * f)) = coords[size_t(freeVerts[f])];

    auto e0 = spring_energy_and_grad(coords, edges, rest, k);
    double E = e0.energy;
    Eigen::VectorXd g = gather(e0.gradient);
    if (trace) trace->push_back(E);
    res.energy = E;
    if (n == 0 || g.lpNorm<Eigen::Infinity>() <= gtol) {
        res.converged = true;
        return res;
    }

    constexpr size_t memory = 10;
    std::deque<Eigen::VectorXd> S, Y;
    std::deque<double> rho;
    for (int it = 0; it < maxIter; ++it) {
        Eigen::VectorXd d;
        if (S.empty()) {
            d = -g * (stepScale / g.lpNorm<Eigen::Infinity>());
        } else {
            Eigen::VectorXd q = g;
            std::vector<double> alpha(S.size());
            for (size_t i = S.size(); i-- > 0;) {
                alpha[i] = rho[i] * S[i].dot(q);
                q -= alpha[i] * Y[i];
            }
            q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
            for (size_t i = 0; i < S.size(); ++i) {
                const double beta = rho[i] * Y[i].dot(q);
                q += (alpha[i] - beta) * S[i];
            }
            d = -q;
        }
        double slope = g.dot(d);
        if (!(slope < 0)) {
            S.clear(); Y.clear(); rho.clear();
            d = -g * (stepScale / g.lpNorm<Eigen::Infinity>());
            slope = g.dot(d);
        }

        double step = 1.0, Enew = E;
        Eigen::VectorXd xnew, gnew;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xnew = x + step * d;
            place(xnew);
            auto ev = spring_energy_and_grad(coords, edges, rest, k);
            if (std::isfinite(ev.energy) && ev.energy <= E + 1e-4 * step * slope) {
                Enew = ev.energy;
                gnew = gather(ev.gradient);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++res.iterations;
        if (!accepted) {
            place(x);
            break;
        }
        const Eigen::VectorXd s = xnew - x, y = gnew - g;
        x = std::move(xnew);
        g = std::move(gnew);
        E = Enew;
        if (trace) trace->push_back(E);
        if (s.dot(y) > 1e-300) {
            S.push_back(s);
            Y.push_back(y);
            rho.push_back(1.0 / s.dot(y));
            if (S.size() > memory) { S.pop_front(); Y.pop_front(); rho.pop_front(); }
        }
        if (g.lpNorm<Eigen::Infinity>() <= gtol) {
            res.converged = true;
            break;
        }
    }
    res.energy = E;
    return res;
}

} // namespace

DeployTrajectory deploy(const RodStructure &s, const PlanarEmbedding &emb, const DeployConfig &cfg) {
    const int m = s.numVertices();
    if (emb.numVertices() != m)
        throw InputError("embedding has " + std::to_string(emb.numVertices()) + " vertices, structure has " +
                         std::to_string(m));
    if (cfg.steps < 1) throw InputError("deploy needs at least one step");
    if (!(cfg.stiffness > 0)) throw InputError("spring stiffness must be positive");

    DeployTrajectory traj;
    traj.pulled = cfg.pulled;
    if (traj.pulled.empty()) {
        const auto deg = vertex_degrees(s);
        for (int v = 0; v < m; ++v)
            if (deg[size_t(v)] >= 3) traj.pulled.push_back(v);
    }
    std::sort(traj.pulled.begin(), traj.pulled.end());
    traj.pulled.erase(std::unique(traj.pulled.begin(), traj.pulled.end()), traj.pulled.end());
    if (traj.pulled.empty()) throw InputError("no pulled vertices (structure has no joints)");
    for (int v : traj.pulled)
        if (v < 0 || v >= m) throw InputError("pulled vertex " + std::to_string(v) + " does not exist");

    std::vector<char> isPulled(size_t(m), 0);
    for (int v : traj.pulled) isPulled[size_t(v)] = 1;
    std::vector<int> freeVerts;
    for (int v = 0; v < m; ++v)
        if (!isPulled[size_t(v)]) freeVerts.push_back(v);

    const auto rest = rest_lengths_3d(s);
    std::vector<double> sorted = rest;
    std::sort(sorted.begin(), sorted.end());
    const double scale = sorted.empty() ? 1.0 : sorted[sorted.size() / 2];
    const double gtol = cfg.tolerance * cfg.stiffness * scale;

    std::vector<Vec3> coords = planar_start(s, emb, cfg.align);
    const std::vector<Vec3> start = coords;
    traj.frames.push_back(coords);
    traj.energy.push_back(spring_energy_and_grad(coords, s.edges, rest, cfg.stiffness).energy);
    traj.converged.push_back(1);
    traj.inner_iterations.push_back(0);

    for (int t = 1; t <= cfg.steps; ++t) {
        const double tau = double(t) / cfg.steps;
        for (int v : traj.pulled) {
            const auto sv = size_t(v);
            coords[sv] = t == cfg.steps ? s.vertices[sv] : Vec3((1 - tau) * start[sv] + tau * s.vertices[sv]);
        }
        std::vector<double> trace;
        const auto r = relax(coords, freeVerts, s.edges, rest, cfg.stiffness, gtol, 0.1 * scale, cfg.max_inner,
                             cfg.record_traces ? &trace : nullptr);
        traj.frames.push_back(coords);
        traj.energy.push_back(r.energy);
        traj.converged.push_back(r.converged ? 1 : 0);
        traj.inner_iterations.push_back(r.iterations);
        if (cfg.record_traces) traj.traces.push_back(std::move(trace));
    }
    return traj;
}

json trajectory_to_json(const DeployTrajectory &t, const RodStructure &s) {
    json j;
    j["name"] = s.name;
    j["steps"] = int(t.frames.size()) - 1;
    j["pulled"] = t.pulled;
    json edges = json::array();
    for (const auto &e : s.edges) edges.push_back({e[0], e[1]});
    j["edges"] = edges;
    json frames = json::array();
    const int steps = std::max(1, int(t.frames.size()) - 1);
    for (size_t f = 0; f < t.frames.size(); ++f) {
        json coords = json::array();
        for (const auto &p : t.frames[f]) coords.push_back({p[0], p[1], p[2]});
        frames.push_back({{"t", double(f) / steps}, {"energy", t.energy[f]}, {"converged", bool(t.converged[f])},
                          {"inner_iterations", t.inner_iterations[f]}, {"coords", coords}});
    }
    j["frames"] = frames;
    return j;
}

std::string frame_obj(const std::vector<Vec3> &frame, std::span<const Edge> edges, const std::string &comment) {
    std::ostringstream out;
    if (!comment.empty()) out << "# " << comment << '\n';
    for (const auto &p : frame) out << "v " << json(p[0]).dump() << ' ' << json(p[1]).dump() << ' ' << json(p[2]).dump() << '\n';
    for (const auto &e : edges) out << "l " << e[0] + 1 << ' ' << e[1] + 1 << '\n';
    return out.str();
}

} // namespace rodflat
