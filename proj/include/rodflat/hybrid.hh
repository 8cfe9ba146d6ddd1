#pragma once

#include "rod_structure.hh"

namespace rodflat {

struct HybridOptions {
    double max_normal_deviation_deg = 60.0;
    int steiner_threshold = 8;     // regions with more loop vertices get interior points
};

struct HybridReport {
    int regions = 0;
    int added_vertices = 0;
    int added_edges = 0;
};

// Fill every surface region with a triangle mesh of extra rods. Added rods are
// flagged in fill_edge; the original rods and vertices keep their indices.
// Throws InputError for regions that cannot be projected onto a plane.
RodStructure mesh_surface_regions(const RodStructure &s, const HybridOptions &opts = {},
                                  HybridReport *report = nullptr);

// True when s has surface regions that have not been meshed yet.
bool needs_meshing(const RodStructure &s);

} // namespace rodflat
