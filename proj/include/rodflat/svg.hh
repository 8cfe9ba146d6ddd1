#pragma once

#include <span>
#include <string>
#include <vector>

#include "initial_embedding.hh"

namespace rodflat {

struct SvgOptions {
    std::vector<double> edge_values;   // optional per-edge scalar for the color ramp (e.g. length error)
    std::vector<char> fill_edges;      // drawn dashed when set
    double width_px = 800;
    std::string title;
};

// Ramp from blue (0) to red (1) as "#rrggbb".
std::string ramp_color(double t);

// One <line> per rod. The y axis points up; the view box bounds the
// embedding with a 5% margin. Output depends only on the inputs.
std::string export_svg(const PlanarEmbedding &emb, std::span<const Edge> edges, const SvgOptions &opts = {});

} // namespace rodflat
