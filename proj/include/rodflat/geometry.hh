////////////////////////////////////////////////////////////////////////////////
// geometry.hh
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Planar geometric primitives with analytic gradients, robust segment
//  intersection, overlap detection and the fixed triangulation used by the
//  no-overlap constraint.
//
//  Gradient arrays list the coordinates of the arguments in call order,
//  x before y for each point.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <array>
#include <span>
#include <vector>

#include "initial_embedding.hh"

namespace rodflat {

// Floor added under the square root of the Heron gradient denominator so
// transient slivers do not divide by zero.
constexpr double kHeronAreaFloor = 1e-14;

struct LengthGrad {
    double length = 0;
    std::array<double, 4> grad{};   // d/d(p.x, p.y, q.x, q.y)
    bool degenerate = false;        // coincident points
};
LengthGrad segment_length_and_grad(const Vec2 &p, const Vec2 &q);

struct CosineGrad {
    double cosine = 0;
    std::array<double, 6> grad{};   // d/d(apex, b, c)
    bool degenerate = false;        // a zero-length arm
};
// Cosine of the angle at `apex` between the arms apex->b and apex->c.
CosineGrad cos_angle_and_grad(const Vec2 &apex, const Vec2 &b, const Vec2 &c);

// Same angle in 3D; no gradient needed for reference quantities.
double cos_angle_3d(const Vec3 &apex, const Vec3 &b, const Vec3 &c);

struct AreaGrad {
    double area = 0;
    std::array<double, 6> grad{};
    bool singular = false;          // collinear: the Heron gradient denominator vanishes
};
// Unsigned triangle area by Heron's formula and its gradient.
AreaGrad heron_area_and_grad(const Vec2 &p1, const Vec2 &p2, const Vec2 &p3);

struct PolygonAreaGrad {
    double area = 0;                // signed, positive for counterclockwise
    std::vector<double> grad;       // 2s entries: (x_0, y_0, x_1, y_1, ...)
};
PolygonAreaGrad shoelace_area_and_grad(std::span<const Vec2> loop);

double signed_area(const Vec2 &a, const Vec2 &b, const Vec2 &c);

////////////////////////////////////////////////////////////////////////////////
// Predicates
////////////////////////////////////////////////////////////////////////////////
// Sign of the orientation determinant of (a, b, c), exact.
int orient2d(const Vec2 &a, const Vec2 &b, const Vec2 &c);

// True when the closed segments [p1,p2] and [q1,q2] cross or come within
// `touch_tol` of each other. `where` receives a representative point.
bool segments_intersect(const Vec2 &p1, const Vec2 &p2, const Vec2 &q1, const Vec2 &q2,
                        double touch_tol, Vec2 *where = nullptr);

double bbox_diagonal(std::span<const Vec2> pts);

////////////////////////////////////////////////////////////////////////////////
// Overlaps
////////////////////////////////////////////////////////////////////////////////
struct OverlapRecord {
    int edge_a = -1, edge_b = -1;    // edge_a < edge_b
    Vec2 point = Vec2::Zero();
    std::array<int, 4> vertices{};   // endpoints of edge_a, then of edge_b
};

// Exhaustive pairwise test over non-adjacent edge pairs; records are sorted by
// (edge_a, edge_b). Touching within 1e-12 * bbox diagonal counts.
std::vector<OverlapRecord> detect_overlaps(std::span<const Vec2> coords, std::span<const Edge> edges);
inline std::vector<OverlapRecord> detect_overlaps(const PlanarEmbedding &emb, std::span<const Edge> edges) {
    return detect_overlaps(std::span<const Vec2>(emb.coords), edges);
}
int count_overlaps(std::span<const Vec2> coords, std::span<const Edge> edges);

// Worker threads for pairwise detection, from RODFLAT_THREADS (default 1).
int configured_threads();

////////////////////////////////////////////////////////////////////////////////
// Triangulation
////////////////////////////////////////////////////////////////////////////////
struct Triangulation {
    std::vector<std::array<int, 3>> triangles;  // counterclockwise at construction
    std::vector<int> boundary;                  // counterclockwise at construction
    EmbeddingStage construction_stage = EmbeddingStage::initial;

    std::vector<Edge> edges() const;            // unique, sorted
};

// Constrained Delaunay triangulation of `points` inside the simple polygon
// `loop` (indices into points). Every index in `interior` must lie strictly
// inside the polygon and becomes a triangulation vertex; the polygon edges
// are kept as constraints.
std::vector<std::array<int, 3>> triangulate_polygon(std::span<const Vec2> points, std::span<const int> loop,
                                                    std::span<const int> interior);

bool polygon_is_simple(std::span<const Vec2> points, std::span<const int> loop);

// 1: inside, 0: within tol of the boundary, -1: outside.
int point_in_polygon(const Vec2 &p, std::span<const Vec2> points, std::span<const int> loop, double tol);

// Triangulation over every node of the embedding, clipped to the boundary
// polygon. Throws InputError when the boundary polygon is not simple or a
// node lies outside it.
Triangulation build_triangulation(const PlanarEmbedding &initial, std::span<const int> loop);

} // namespace rodflat
