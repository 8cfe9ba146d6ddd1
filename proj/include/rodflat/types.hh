#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rodflat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Edge = std::array<int, 2>;

// Flat optimization variables use the blocked layout (x_0..x_{m-1}, y_0..y_{m-1}).
inline int xvar(int vertex)              { return vertex; }
inline int yvar(int vertex, int m)       { return m + vertex; }
inline Vec2 point_at(const Eigen::VectorXd &x, int m, int i) { return Vec2(x[i], x[m + i]); }

// One sparse row of a Jacobian, indexed in the flat variable layout.
struct SparseRow {
    std::vector<std::pair<int, double>> entries;
    size_t nnz() const { return entries.size(); }
};

struct Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (structure files, embeddings, parameters).
struct InputError : public Error {
    using Error::Error;
};

// A geometric configuration where a quantity or its gradient is undefined.
struct DegeneracyError : public Error {
    using Error::Error;
};

} // namespace rodflat
