#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scglove {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad files, ids out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation could not produce a defined result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const RowMatrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Uniform integer in [0, n) from the raw engine output. Unlike the
/// std distributions this is identical across standard library vendors.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Uniform real in [0, 1) built from the top 53 bits of one engine draw.
double uniform_unit(std::mt19937_64& rng);

/// In-place Fisher-Yates shuffle using uniform_index.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t k = items.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(uniform_index(rng, k));
    std::swap(items[k - 1], items[pick]);
  }
}

}  // namespace scglove
