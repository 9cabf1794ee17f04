#pragma once

#include <random>

#include "pencilstruct/types.hpp"

namespace pstest {

using pencilstruct::Complex;
using pencilstruct::ComplexMatrix;
using pencilstruct::Index;

inline ComplexMatrix random_complex(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(d(rng), d(rng)) / std::sqrt(2.0);
  return m;
}

inline ComplexMatrix random_real(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(d(rng), 0.0);
  return m;
}

inline double unitarity_error(const ComplexMatrix& q) {
  if (q.rows() == 0) return 0.0;
  return (q.adjoint() * q - ComplexMatrix::Identity(q.cols(), q.cols())).norm();
}

inline bool is_upper_triangular(const ComplexMatrix& m, double tol = 0.0) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > tol) return false;
  return true;
}

inline Complex random_point(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  return Complex(d(rng), d(rng));
}

}  // namespace pstest
