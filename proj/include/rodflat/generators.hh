#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rod_structure.hh"

namespace rodflat {

// Synthetic gridshell fixtures on [-1,1]^2: n joint lines per direction, each
// span between joint lines split into `sub` rods, lifted by a height field.
struct GeneratorParams {
    std::string kind = "dome";     // dome | saddle | multipeak | grid | dome_patch
    int n = 15;
    std::optional<int> sub;        // default 3, or 1 for grid
    std::optional<double> height;  // default depends on kind
    std::uint64_t seed = 1;
    int peaks = 3;
    bool with_boundary = false;    // write the rim as the explicit boundary field
};

const std::vector<std::string> &generator_kinds();
RodStructure generate(const GeneratorParams &params);

} // namespace rodflat
