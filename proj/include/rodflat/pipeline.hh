////////////////////////////////////////////////////////////////////////////////
// pipeline.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  The flattening driver: initial embedding, alternating constrained solves
//  with and without the no-overlap constraint, overlap correction between
//  rounds, and distortion metrics for the result.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "constraints.hh"
#include "overlap_correction.hh"
#include "solver.hh"

namespace rodflat {

enum class InitMethod { tutte, project };
std::string to_string(InitMethod m);
InitMethod init_from_string(const std::string &s);

struct FlattenConfig {
    InitMethod init = InitMethod::tutte;
    double length_tol = 1e-4;          // loop threshold on the mean relative length error
    double angle_tol = 1e-4;           // loop threshold on the mean joint-angle error (radians)
    int max_outer = 10;
    int max_solver_iterations = 500;
    double feasibility_tol = 1e-6;
    double stationarity_tol = 1e-6;
    int correction_samples = 360;
    std::optional<std::uint64_t> seed;  // enables seeded solver restarts and jitter

    void check() const;
};

struct Stats {
    double mean = 0, sd = 0, max = 0;
    int count = 0;
};
Stats summarize(const std::vector<double> &values);

struct EdgeMetric {
    int edge;
    double length_2d, rest_length, abs_error, rel_error;
    bool fill;
};

struct AngleMetric {
    int apex, arm1, arm2;
    double angle_2d, angle_3d, error;
};

struct JointMetric {
    int vertex;
    int angles;
    double mean_error, max_error;
};

struct RoundLog {
    int round;
    bool with_overlap_constraint;
    bool corrected;
    std::string solver_reason;
    int solver_iterations;
    double length_error, angle_error;
    int overlaps;
};

struct MetricsReport {
    Stats length;            // relative |L - l| / l over rods
    Stats length_abs;        // |L - l| in model units
    Stats angle;             // |theta_2D - theta_3D| over joint angles
    Stats joint;             // per-joint mean angle error
    std::optional<Stats> core_length, fill_length;
    int overlaps = 0;
    std::vector<EdgeMetric> edges;
    std::vector<AngleMetric> angles;
    std::vector<JointMetric> joints;

    int outer_iterations = 0;
    int solver_calls = 0;
    int correction_passes = 0;
    int degeneracy_retries = 0;
    std::vector<RoundLog> rounds;
    double wall_time_seconds = 0;   // not serialized
};

MetricsReport compute_metrics(const RodStructure &s, const PlanarEmbedding &emb, const ReferenceQuantities &refs);

struct FlattenResult {
    PlanarEmbedding embedding;
    PlanarEmbedding initial;
    MetricsReport metrics;
    ReferenceQuantities refs;
    Triangulation triangulation;
};

FlattenResult flatten(const RodStructure &s, const FlattenConfig &cfg = {});

// Initial embedding and everything derived from it, shared by flatten and tests.
struct FlattenSetup {
    std::vector<int> loop;
    ChainDecomposition chains;
    PlanarEmbedding initial;
    ReferenceQuantities refs;
    Triangulation triangulation;
};
FlattenSetup prepare_flatten(const RodStructure &s, InitMethod init);

// Constraint problem over refs/tri; the last constraint row is E_O.
NlpProblem make_problem(const ReferenceQuantities &refs, const Triangulation &tri, bool with_overlap,
                        const FlattenConfig &cfg);

bool passes_quality_gate(const MetricsReport &r, double threshold);

nlohmann::json metrics_to_json(const MetricsReport &r);
std::string metrics_csv(const MetricsReport &r);

nlohmann::json embedding_to_json(const PlanarEmbedding &emb, const RodStructure &s);
PlanarEmbedding embedding_from_json(const nlohmann::json &j);

} // namespace rodflat
