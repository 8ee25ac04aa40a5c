#pragma once

#include <cstddef>
#include <vector>

namespace reid {

// Dense row-major matrix; just enough for the classifier layers.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  bool operator==(const Matrix&) const = default;
};

}  // namespace reid
