#pragma once

#include <span>
#include <string>
#include <vector>

#include "rod_structure.hh"

namespace rodflat {

enum class EmbeddingStage { initial, corrected, optimized };
std::string to_string(EmbeddingStage stage);
EmbeddingStage stage_from_string(const std::string &s);

struct PlanarEmbedding {
    std::vector<Vec2> coords;
    std::string structure_name;
    EmbeddingStage stage = EmbeddingStage::initial;

    int numVertices() const { return int(coords.size()); }

    // Flat variable vector (x_0..x_{m-1}, y_0..y_{m-1}).
    Eigen::VectorXd variables() const;
    static PlanarEmbedding fromVariables(const Eigen::VectorXd &x, std::string name, EmbeddingStage stage);
};

struct BoundaryPin {
    int vertex;
    Vec2 position;
};

// Places the loop on a circle whose circumference equals the loop's 3D
// length, with angular gaps proportional to the 3D chord lengths.
std::vector<BoundaryPin> boundary_circle_positions(const RodStructure &s, std::span<const int> loop);

// Uniform-weight Tutte embedding: interior vertices satisfy L v = 0 for the
// graph Laplacian, boundary vertices are pinned.
PlanarEmbedding tutte_embed(const RodStructure &s, std::span<const BoundaryPin> pins);

PlanarEmbedding project_xy(const RodStructure &s);

} // namespace rodflat
