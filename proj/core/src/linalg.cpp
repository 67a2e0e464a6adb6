#include "scglove/linalg.hpp"

#include <cmath>

namespace scglove {

std::optional<RowMatrix> cholesky(const RowMatrix& spd) {
  const std::size_t n = spd.rows;
  RowMatrix lower(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return std::nullopt;
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sum = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= lower(i, k) * lower(j, k);
      lower(i, j) = sum / diag;
    }
  }
  return lower;
}

std::vector<double> cholesky_solve(const RowMatrix& lower, std::span<const double> rhs) {
  const std::size_t n = lower.rows;
  std::vector<double> x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= lower(i, k) * x[k];
    x[i] /= lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= lower(k, i) * x[k];
    x[i] /= lower(i, i);
  }
  return x;
}

double trace(const RowMatrix& square) {
  double sum = 0.0;
  for (std::size_t i = 0; i < square.rows; ++i) sum += square(i, i);
  return sum;
}

}  // namespace scglove
