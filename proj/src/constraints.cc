#include <rodflat/constraints.hh>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rodflat {

ReferenceQuantities derive_references(const RodStructure &s, const ChainDecomposition &d,
                                      const PlanarEmbedding &initial) {
    ReferenceQuantities refs;
    refs.num_vertices = s.numVertices();
    refs.edges = s.edges;
    refs.rest_lengths.reserve(s.edges.size());
    for (const auto &e : s.edges) {
        double l = (s.vertices[e[0]] - s.vertices[e[1]]).norm();
        if (!(l > 0))
            throw DegeneracyError("edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) + " has zero 3D length");
        refs.rest_lengths.push_back(l);
    }

    const auto adj = adjacency(s);
    for (int v = 0; v < s.numVertices(); ++v) {
        const auto &nbrs = adj[v];
        if (d.degree[v] >= 3) {
            // Arms in counterclockwise order around v in the initial embedding.
            std::vector<std::pair<double, int>> order;
            for (int w : nbrs) {
                Vec2 dir = initial.coords[w] - initial.coords[v];
                order.emplace_back(std::atan2(dir[1], dir[0]), w);
            }
            std::sort(order.begin(), order.end());
            const size_t k = order.size();
            for (size_t i = 0; i < k; ++i) {
                int a = order[i].second, b = order[(i + 1) % k].second;
                refs.joint_angles.push_back({v, a, b, cos_angle_3d(s.vertices[v], s.vertices[a], s.vertices[b])});
            }
        } else if (d.degree[v] == 2) {
            int a = nbrs[0], b = nbrs[1];
            refs.bend_angles.push_back({v, a, b, cos_angle_3d(s.vertices[v], s.vertices[a], s.vertices[b])});
        }
    }
    return refs;
}

RowBlock eval_lengths(const Eigen::VectorXd &x, const ReferenceQuantities &refs) {
    const int m = refs.num_vertices;
    const size_t p = refs.edges.size();
    RowBlock out;
    out.residuals.resize(Eigen::Index(p));
    out.rows.resize(p);
    for (size_t i = 0; i < p; ++i) {
        const auto [a, b] = refs.edges[i];
        const double l = refs.rest_lengths[i];
        const auto g = segment_length_and_grad(point_at(x, m, a), point_at(x, m, b));
        out.residuals[Eigen::Index(i)] = g.length / l - 1.0;
        out.degenerate |= g.degenerate;
        out.rows[i].entries = {{xvar(a), g.grad[0] / l}, {xvar(b), g.grad[2] / l},
                               {yvar(a, m), g.grad[1] / l}, {yvar(b, m), g.grad[3] / l}};
    }
    return out;
}

namespace {

RowBlock eval_cosine_rows(const Eigen::VectorXd &x, int m, const std::vector<AngleTriple> &angles) {
    RowBlock out;
    out.residuals.resize(Eigen::Index(angles.size()));
    out.rows.resize(angles.size());
    for (size_t j = 0; j < angles.size(); ++j) {
        const auto &t = angles[j];
        const auto g = cos_angle_and_grad(point_at(x, m, t.apex), point_at(x, m, t.arm1), point_at(x, m, t.arm2));
        out.residuals[Eigen::Index(j)] = g.cosine - t.ref_cos;
        out.degenerate |= g.degenerate;
        out.rows[j].entries = {{xvar(t.apex), g.grad[0]}, {xvar(t.arm1), g.grad[2]}, {xvar(t.arm2), g.grad[4]},
                               {yvar(t.apex, m), g.grad[1]}, {yvar(t.arm1, m), g.grad[3]}, {yvar(t.arm2, m), g.grad[5]}};
    }
    return out;
}

} // namespace

RowBlock eval_angles(const Eigen::VectorXd &x, const ReferenceQuantities &refs) {
    return eval_cosine_rows(x, refs.num_vertices, refs.joint_angles);
}

RowBlock eval_objective_terms(const Eigen::VectorXd &x, const ReferenceQuantities &refs) {
    return eval_cosine_rows(x, refs.num_vertices, refs.bend_angles);
}

ScalarGrad eval_objective(const Eigen::VectorXd &x, const ReferenceQuantities &refs) {
    const auto terms = eval_objective_terms(x, refs);
    ScalarGrad out;
    out.gradient = Eigen::VectorXd::Zero(x.size());
    out.degenerate = terms.degenerate;
    for (Eigen::Index i = 0; i < terms.residuals.size(); ++i) {
        const double r = terms.residuals[i];
        out.value += r * r;
        for (auto [k, v] : terms.rows[size_t(i)].entries) out.gradient[k] += 2 * r * v;
    }
    return out;
}

ScalarGrad eval_overlap_constraint(const Eigen::VectorXd &x, const Triangulation &tri) {
    const int m = int(x.size() / 2);
    ScalarGrad out;
    out.gradient = Eigen::VectorXd::Zero(x.size());

    double H = 0;
    for (const auto &t : tri.triangles) {
        const auto g = heron_area_and_grad(point_at(x, m, t[0]), point_at(x, m, t[1]), point_at(x, m, t[2]));
        H += g.area;
        if (g.singular) ++out.slivers;
        for (int k = 0; k < 3; ++k) {
            out.gradient[xvar(t[k])]    += g.grad[2 * k];
            out.gradient[yvar(t[k], m)] += g.grad[2 * k + 1];
        }
    }

    std::vector<Vec2> ring;
    ring.reserve(tri.boundary.size());
    for (int v : tri.boundary) ring.push_back(point_at(x, m, v));
    const auto S = shoelace_area_and_grad(ring);
    for (size_t k = 0; k < tri.boundary.size(); ++k) {
        out.gradient[xvar(tri.boundary[k])]    -= S.grad[2 * k];
        out.gradient[yvar(tri.boundary[k], m)] -= S.grad[2 * k + 1];
    }
    out.value = H - S.area;
    return out;
}

ConstraintEval evaluate_all(const Eigen::VectorXd &x, const ReferenceQuantities &refs, const Triangulation &tri,
                            bool include_overlap) {
    ConstraintEval out;
    auto lengths = eval_lengths(x, refs);
    auto angles = eval_angles(x, refs);
    const Eigen::Index p = lengths.residuals.size(), q = angles.residuals.size();
    out.residuals.resize(p + q + (include_overlap ? 1 : 0));
    out.residuals.head(p) = lengths.residuals;
    out.residuals.segment(p, q) = angles.residuals;
    out.rows = std::move(lengths.rows);
    out.rows.insert(out.rows.end(), std::make_move_iterator(angles.rows.begin()),
                    std::make_move_iterator(angles.rows.end()));
    out.degenerate = lengths.degenerate || angles.degenerate;
    if (include_overlap) {
        const auto eo = eval_overlap_constraint(x, tri);
        out.residuals[p + q] = eo.value;
        SparseRow row;
        for (Eigen::Index k = 0; k < eo.gradient.size(); ++k)
            if (eo.gradient[k] != 0.0) row.entries.emplace_back(int(k), eo.gradient[k]);
        out.rows.push_back(std::move(row));
    }
    const auto obj = eval_objective(x, refs);
    out.objective = obj.value;
    out.objective_gradient = obj.gradient;
    out.degenerate |= obj.degenerate;
    return out;
}

} // namespace rodflat
