////////////////////////////////////////////////////////////////////////////////
// constraints.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Length, joint-angle and no-overlap constraints plus the bend-angle
//  objective, evaluated with analytic sparse gradients in the flat variable
//  layout (x_0..x_{m-1}, y_0..y_{m-1}).
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <vector>

#include "geometry.hh"
#include "rod_structure.hh"

namespace rodflat {

// Angle at `apex` between the arms to `arm1` and `arm2`.
struct AngleTriple {
    int apex, arm1, arm2;
    double ref_cos;   // cosine of the same angle in the 3D structure
};

struct ReferenceQuantities {
    int num_vertices = 0;
    std::vector<Edge> edges;
    std::vector<double> rest_lengths;       // 3D length per edge
    std::vector<AngleTriple> joint_angles;  // constrained: consecutive arm pairs at degree >= 3 vertices
    std::vector<AngleTriple> bend_angles;   // objective: the single angle at each degree-2 vertex
};

// `initial` fixes the cyclic order of the arms around each joint.
ReferenceQuantities derive_references(const RodStructure &s, const ChainDecomposition &d,
                                      const PlanarEmbedding &initial);

// Residual block with one sparse gradient row per residual.
struct RowBlock {
    Eigen::VectorXd residuals;
    std::vector<SparseRow> rows;
    bool degenerate = false;
};

RowBlock eval_lengths(const Eigen::VectorXd &x, const ReferenceQuantities &refs);
RowBlock eval_angles(const Eigen::VectorXd &x, const ReferenceQuantities &refs);

struct ScalarGrad {
    double value = 0;
    Eigen::VectorXd gradient;   // length 2m
    bool degenerate = false;
    int slivers = 0;            // triangles that needed the Heron area floor
};

// E_O = (Heron area sum over the fixed triangulation) - (shoelace area of the boundary).
ScalarGrad eval_overlap_constraint(const Eigen::VectorXd &x, const Triangulation &tri);

// E = sum_i (cos phi_2D_i - cos phi_3D_i)^2 over the bend angles.
ScalarGrad eval_objective(const Eigen::VectorXd &x, const ReferenceQuantities &refs);
// Same objective as residuals r_i = cos phi_2D_i - cos phi_3D_i (E = |r|^2) with
// their gradient rows; used by the Gauss-Newton solver.
RowBlock eval_objective_terms(const Eigen::VectorXd &x, const ReferenceQuantities &refs);

// Stacked constraints: lengths, joint angles, then (optionally) the
// no-overlap row.
struct ConstraintEval {
    Eigen::VectorXd residuals;
    std::vector<SparseRow> rows;
    double objective = 0;
    Eigen::VectorXd objective_gradient;
    bool degenerate = false;
};
ConstraintEval evaluate_all(const Eigen::VectorXd &x, const ReferenceQuantities &refs, const Triangulation &tri,
                            bool include_overlap);

} // namespace rodflat
