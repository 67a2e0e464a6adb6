#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scglove/common.hpp"

namespace scglove {

/// Lower Cholesky factor of a symmetric positive-definite matrix, or
/// nullopt when a pivot is not strictly positive.
std::optional<RowMatrix> cholesky(const RowMatrix& spd);

/// Solves L L^T x = rhs given the factor from `cholesky`.
std::vector<double> cholesky_solve(const RowMatrix& lower, std::span<const double> rhs);

double trace(const RowMatrix& square);

}  // namespace scglove
