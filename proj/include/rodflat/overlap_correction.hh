////////////////////////////////////////////////////////////////////////////////
// overlap_correction.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Geometric untangling between optimization rounds. Each crossing of two
//  rods is removed by moving one endpoint of each rod, first along circles
//  that keep the rods' lengths, then along the bisectors of the crossing.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <optional>
#include <vector>

#include "geometry.hh"

namespace rodflat {

struct CorrectionOptions {
    int samples = 360;            // positions per circle
    int bisector_samples = 64;    // radii per bisector in (0, 2r]
    int max_sweeps = 10;
};

struct CorrectionContext {
    const RodStructure *structure = nullptr;
    std::vector<Vec2> coords;
    std::vector<std::vector<std::pair<int, int>>> incident;   // (neighbor, edge) per vertex
    std::vector<double> rest_lengths;
    double touch_tol = 0;
    CorrectionOptions options;

    CorrectionContext(const RodStructure &s, std::vector<Vec2> positions, CorrectionOptions opts = {});
};

// The four endpoints of a crossing in path order P1-P2 ... P3-P4, with the
// shortest connecting walk between them and the search circle.
struct OverlapPath {
    std::array<int, 4> P{};
    std::vector<int> vertices;   // P1, P2, ..., P3, P4
    Vec2 center = Vec2::Zero();
    double radius = 0;
};
OverlapPath overlap_path(const CorrectionContext &ctx, const OverlapRecord &record);

struct Relocation {
    int p2 = -1, p3 = -1;
    Vec2 p2_position, p3_position;
    int sample_a = -1, sample_b = -1;   // indices into the two candidate sets
    double cost = 0;
    bool fallback = false;              // found along the bisectors
};

// Best feasible relocation of P2 and P3, or nullopt when neither search finds one.
std::optional<Relocation> resolve_single_overlap(const CorrectionContext &ctx, const OverlapRecord &record);

struct CorrectionResult {
    PlanarEmbedding embedding;
    int initial_overlaps = 0;
    int final_overlaps = 0;
    int sweeps = 0;                 // sweeps whose changes were kept
    int relocations = 0;
    int unresolved = 0;
    bool stopped_on_increase = false;
};

CorrectionResult correct_overlaps_detailed(const PlanarEmbedding &emb, const RodStructure &s,
                                           const CorrectionOptions &opts = {});
PlanarEmbedding correct_overlaps(const PlanarEmbedding &emb, const RodStructure &s,
                                 const CorrectionOptions &opts = {});

} // namespace rodflat
