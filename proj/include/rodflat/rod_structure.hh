////////////////////////////////////////////////////////////////////////////////
// rod_structure.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Data model for 3D rod-based structures: a node set joined by straight rod
//  segments, an optional boundary loop and optional surface regions.
//  Includes JSON I/O, validation and the chain/joint decomposition.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "types.hh"

namespace rodflat {

struct RodStructure {
    std::string name;
    std::string units;
    std::vector<Vec3> vertices;
    std::vector<Edge> edges;
    std::vector<int> boundary;                        // empty when not supplied
    std::vector<std::vector<int>> surface_regions;
    // Per-edge flag marking rods appended by surface-region meshing. Empty
    // for structures that were never augmented.
    std::vector<char> fill_edge;
    nlohmann::json metadata = nlohmann::json::object();

    int numVertices() const { return int(vertices.size()); }
    int numEdges()    const { return int(edges.size()); }
    bool isAugmented() const { return !fill_edge.empty(); }
};

// Thrown for syntax errors and invariant violations. what() carries the
// location (JSON path or byte offset) of the offending item.
struct ParseError : public InputError {
    using InputError::InputError;
};

RodStructure parse_structure(std::string_view text);
std::string  serialize_structure(const RodStructure &s);

RodStructure load_structure(const std::filesystem::path &path);
void         save_structure(const RodStructure &s, const std::filesystem::path &path);

// Checks every RodStructure invariant; throws ParseError naming the first
// violation found.
void validate(const RodStructure &s);

std::vector<int> vertex_degrees(const RodStructure &s);
// Sorted neighbor lists.
std::vector<std::vector<int>> adjacency(const RodStructure &s);
// For each vertex, (neighbor, edge index) pairs sorted by neighbor.
std::vector<std::vector<std::pair<int, int>>> incident_edges(const RodStructure &s);
bool is_connected(int m, const std::vector<Edge> &edges);

struct Chain {
    std::vector<int> vertices; // walk order; closed chains repeat the first vertex at the end
    std::vector<int> edges;
    bool closed = false;
};

struct ChainDecomposition {
    std::vector<int> joints;   // vertices of degree >= 3, ascending
    std::vector<Chain> chains;
    std::vector<int> degree;
};

ChainDecomposition decompose_chains(const RodStructure &s);

// The structure's outer vertex cycle. Returns the supplied boundary verbatim
// when present; otherwise derives it from the convex hull of the xy
// projection (counterclockwise, starting at the smallest vertex index) and
// requires consecutive hull vertices to be linked by an edge or a chain.
std::vector<int> boundary_loop(const RodStructure &s);

} // namespace rodflat
