#include <rodflat/initial_embedding.hh>

#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>

namespace rodflat {

std::string to_string(EmbeddingStage stage) {
    switch (stage) {
        case EmbeddingStage::initial:   return "initial";
        case EmbeddingStage::corrected: return "corrected";
        case EmbeddingStage::optimized: return "optimized";
    }
    return "initial";
}

EmbeddingStage stage_from_string(const std::string &s) {
    if (s == "initial")   return EmbeddingStage::initial;
    if (s == "corrected") return EmbeddingStage::corrected;
    if (s == "optimized") return EmbeddingStage::optimized;
    throw InputError("unknown embedding stage '" + s + "'");
}

Eigen::VectorXd PlanarEmbedding::variables() const {
    const int m = numVertices();
    Eigen::VectorXd x(2 * m);
    for (int i = 0; i < m; ++i) {
        x[i]     = coords[i][0];
        x[m + i] = coords[i][1];
    }
    return x;
}

PlanarEmbedding PlanarEmbedding::fromVariables(const Eigen::VectorXd &x, std::string name, EmbeddingStage stage) {
    const int m = int(x.size() / 2);
    PlanarEmbedding e;
    e.coords.resize(m);
    for (int i = 0; i < m; ++i) e.coords[i] = point_at(x, m, i);
    e.structure_name = std::move(name);
    e.stage = stage;
    return e;
}

std::vector<BoundaryPin> boundary_circle_positions(const RodStructure &s, std::span<const int> loop) {
    const size_t k = loop.size();
    if (k < 3) throw InputError("boundary loop needs at least 3 vertices");
    std::vector<double> cumulative(k + 1, 0.0);
    for (size_t i = 0; i < k; ++i) {
        double len = (s.vertices[loop[(i + 1) % k]] - s.vertices[loop[i]]).norm();
        if (!(len > 0))
            throw DegeneracyError("boundary edge " + std::to_string(loop[i]) + "-" +
                                  std::to_string(loop[(i + 1) % k]) + " has zero length");
        cumulative[i + 1] = cumulative[i] + len;
    }
    const double total = cumulative[k];
    const double radius = total / (2 * std::numbers::pi);
    std::vector<BoundaryPin> pins(k);
    for (size_t i = 0; i < k; ++i) {
        double theta = 2 * std::numbers::pi * cumulative[i] / total;
        pins[i] = {loop[i], Vec2(radius * std::cos(theta), radius * std::sin(theta))};
    }
    return pins;
}

PlanarEmbedding tutte_embed(const RodStructure &s, std::span<const BoundaryPin> pins) {
    const int m = s.numVertices();
    std::vector<int> pinned(m, -1);
    for (size_t i = 0; i < pins.size(); ++i) {
        if (pins[i].vertex < 0 || pins[i].vertex >= m) throw InputError("boundary pin refers to a missing vertex");
        pinned[pins[i].vertex] = int(i);
    }

    // Interior unknowns get consecutive slots.
    std::vector<int> slot(m, -1);
    int n = 0;
    for (int v = 0; v < m; ++v)
        if (pinned[v] < 0) slot[v] = n++;

    PlanarEmbedding emb;
    emb.structure_name = s.name;
    emb.stage = EmbeddingStage::initial;
    emb.coords.assign(m, Vec2::Zero());
    for (const auto &p : pins) emb.coords[p.vertex] = p.position;
    if (n == 0) return emb;

    // Every interior component must reach a pinned vertex or the system is singular.
    const auto adj = adjacency(s);
    {
        std::vector<char> reached(m, 0);
        std::vector<int> stack;
        for (const auto &p : pins) { reached[p.vertex] = 1; stack.push_back(p.vertex); }
        while (!stack.empty()) {
            int v = stack.back(); stack.pop_back();
            for (int w : adj[v])
                if (!reached[w]) { reached[w] = 1; stack.push_back(w); }
        }
        for (int v = 0; v < m; ++v)
            if (!reached[v])
                throw DegeneracyError("Tutte system is singular: vertex " + std::to_string(v) +
                                      " is not connected to the boundary");
    }

    // Positive form of the interior Laplacian block: degree on the diagonal, -1 per neighbor.
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (int v = 0; v < m; ++v) {
        if (slot[v] < 0) continue;
        trip.emplace_back(slot[v], slot[v], double(adj[v].size()));
        for (int w : adj[v]) {
            if (slot[w] >= 0) trip.emplace_back(slot[v], slot[w], -1.0);
            else rhs.row(slot[v]) += emb.coords[w].transpose();
        }
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) throw DegeneracyError("Tutte system factorization failed");
    Eigen::MatrixXd sol = solver.solve(rhs);
    // One refinement step keeps the interior residual near machine precision.
    sol += solver.solve(rhs - L * sol);
    for (int v = 0; v < m; ++v)
        if (slot[v] >= 0) emb.coords[v] = sol.row(slot[v]).transpose();
    return emb;
}

PlanarEmbedding project_xy(const RodStructure &s) {
    PlanarEmbedding emb;
    emb.structure_name = s.name;
    emb.stage = EmbeddingStage::initial;
    emb.coords.reserve(s.vertices.size());
    for (const auto &v : s.vertices) emb.coords.emplace_back(v[0], v[1]);
    return emb;
}

} // namespace rodflat
