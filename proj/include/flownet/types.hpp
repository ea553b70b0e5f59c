#pragma once

#include <cstddef>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace flownet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Zero-based cell index. File formats and the CLI use 1-based ids.
using CellIndex = std::size_t;

/// Ordered pair (from, to) of adjacent cells.
using CellPair = std::pair<CellIndex, CellIndex>;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

inline bool same_values(const Matrix &a, const Matrix &b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline bool same_values(const Vector &a, const Vector &b)
{
    return a.size() == b.size() && (a.array() == b.array()).all();
}

} // namespace flownet
