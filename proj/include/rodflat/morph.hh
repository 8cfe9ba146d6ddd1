////////////////////////////////////////////////////////////////////////////////
// morph.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Quasi-static deployment of a flattened structure: rods are springs with
//  their 3D rest lengths, selected vertices are pulled linearly from the
//  plane to their 3D targets, and the remaining vertices relax at each step.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "initial_embedding.hh"

namespace rodflat {

struct SpringEval {
    double energy = 0;
    Eigen::VectorXd gradient;   // (x_0, y_0, z_0, x_1, ...)
    bool degenerate = false;    // a rod with coincident endpoints
};

// E = sum_e k (|p_i - p_j| - l_e)^2
SpringEval spring_energy_and_grad(std::span<const Vec3> coords, std::span<const Edge> edges,
                                  std::span<const double> rest, double k);

std::vector<double> rest_lengths_3d(const RodStructure &s);

struct DeployConfig {
    std::vector<int> pulled;        // empty: every joint (degree >= 3)
    int steps = 50;
    double tolerance = 1e-9;        // on |grad|_inf / (k * median rest length)
    double stiffness = 1.0;
    int max_inner = 5000;
    bool align = true;              // rigidly align the embedding with the 3D footprint first
    bool record_traces = false;     // keep per-iteration energies of every step
};

struct DeployTrajectory {
    std::vector<int> pulled;
    std::vector<std::vector<Vec3>> frames;   // steps + 1 frames, frame 0 planar
    std::vector<double> energy;              // spring energy per frame
    std::vector<char> converged;             // per frame; frame 0 is always true
    std::vector<int> inner_iterations;
    std::vector<std::vector<double>> traces; // per step when recorded
};

DeployTrajectory deploy(const RodStructure &s, const PlanarEmbedding &emb, const DeployConfig &cfg = {});

// Frame 0 placement: the embedding rigidly fitted (reflection allowed) to the
// xy footprint of the structure, at z = 0.
std::vector<Vec3> planar_start(const RodStructure &s, const PlanarEmbedding &emb, bool align);

nlohmann::json trajectory_to_json(const DeployTrajectory &t, const RodStructure &s);
std::string frame_obj(const std::vector<Vec3> &frame, std::span<const Edge> edges, const std::string &comment);

} // namespace rodflat
