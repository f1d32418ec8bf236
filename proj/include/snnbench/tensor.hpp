#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snnbench {

// Dense row-major matrix of doubles. Weight matrices are stored
// fan_out x fan_in so that row i holds the afferent weights of unit i.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix&) const = default;
};

}  // namespace snnbench
