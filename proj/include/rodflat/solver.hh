////////////////////////////////////////////////////////////////////////////////
// solver.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Equality-constrained least-squares minimizer:
//
//      minimize  E(x) = |r(x)|^2   subject to  c(x) = 0
//
//  using an augmented Lagrangian outer loop whose subproblems are solved by a
//  Levenberg-Marquardt (Gauss-Newton) inner loop built from the analytic
//  residual Jacobians alone. Rows with many nonzeros (the no-overlap row) are
//  handled as low-rank corrections so the normal equations stay sparse.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "types.hh"

namespace rodflat {

struct ResidualEval {
    Eigen::VectorXd values;
    std::vector<SparseRow> rows;
    bool degenerate = false;
};

struct NlpProblem {
    int dimension = 0;
    std::function<ResidualEval(const Eigen::VectorXd &)> objective;    // residuals r, E = |r|^2
    std::function<ResidualEval(const Eigen::VectorXd &)> constraints;  // c(x) = 0
    std::vector<char> active;          // per constraint row; empty means every row
    int max_iterations = 500;
    double feasibility_tol = 1e-6;     // on |c|_inf
    double stationarity_tol = 1e-6;    // on |grad E + J^T y|_inf / (1 + |E|)
    std::optional<std::uint64_t> restart_seed;   // perturbed restart after a line-search failure
};

enum class Termination { converged, max_iterations, line_search_failure, degeneracy_signal };
std::string to_string(Termination t);

struct SolveReport {
    Eigen::VectorXd x;
    double objective = 0;
    double constraint_violation = 0;   // |c|_inf over active rows
    double stationarity = 0;           // |grad E + J^T y|_inf with least-squares multipliers
    int iterations = 0;                // Levenberg-Marquardt steps attempted
    int multiplier_updates = 0;
    Termination reason = Termination::max_iterations;
};

SolveReport minimize_constrained(const NlpProblem &problem, const Eigen::VectorXd &x0);

// Objective value and gradient recovered from its residual form.
double residual_objective(const ResidualEval &r, Eigen::VectorXd *gradient, int dimension);

} // namespace rodflat
