#pragma once

#include <random>
#include <string>
#include <vector>

#include "pencilstruct/analysis.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

// Recipe for a random pencil with a planted staircase structure at 0.
struct GeneratorSpec {
  std::vector<Index> s, t;  // t1 >= s1 >= t2 >= ... >= sk >= 0
  std::uint64_t seed = 0;
  bool disguise = false;          // hide the structure behind a random unitary equivalence
  std::string fill = "randn";     // "randn" (real Gaussian) or "crandn" (complex Gaussian)
};

namespace detail {

class GaussianFill {
 public:
  GaussianFill(std::uint64_t seed, bool complex_fill) : rng_(seed), complex_(complex_fill) {}

  Complex entry() {
    if (complex_) return Complex(dist_(rng_), dist_(rng_)) / std::sqrt(2.0);
    return Complex(dist_(rng_), 0.0);
  }

  // Bounded away from zero for stair diagonals.
  Complex pivot() {
    Complex g = entry();
    const double mag = std::abs(g);
    if (mag == 0.0) return Complex(1.0, 0.0);
    return g * ((0.3 + mag) / mag);
  }

  ComplexMatrix matrix(Index rows, Index cols) {
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = entry();
    return m;
  }

  // Upper triangular with guaranteed-nonzero diagonal.
  ComplexMatrix upper_triangular(Index nsize) {
    ComplexMatrix m = ComplexMatrix::Zero(nsize, nsize);
    for (Index i = 0; i < nsize; ++i) {
      m(i, i) = pivot();
      for (Index j = i + 1; j < nsize; ++j) m(i, j) = entry();
    }
    return m;
  }

  ComplexMatrix haar_unitary(Index nsize) {
    ComplexMatrix g(nsize, nsize);
    for (Index i = 0; i < nsize; ++i)
      for (Index j = 0; j < nsize; ++j) g(i, j) = Complex(dist_(rng_), dist_(rng_));
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(nsize, nsize);
    ComplexMatrix r = qr.matrixQR();
    for (Index i = 0; i < nsize; ++i) {
      const Complex d = r(i, i);
      if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
    }
    return q;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
  bool complex_;
};

}  // namespace detail

// Random pencil in triangular-stair staircase form (the matlabex-style zero
// pattern): stairs have invertible upper triangular cores, every other
// staircase-allowed position is Gaussian fill. Normalized; optionally
// disguised by a random unitary equivalence.
inline Pencil generate_pencil(const GeneratorSpec& spec) {
  std::vector<Index> s = spec.s;
  const std::vector<Index>& t = spec.t;
  if (spec.fill != "randn" && spec.fill != "crandn")
    throw InputError("generate_pencil: unknown fill '" + spec.fill + "'");
  if (s.size() + 1 == t.size()) s.push_back(0);
  if (s.size() != t.size()) throw InputError("generate_pencil: s and t length mismatch");
  const size_t k = t.size();
  for (size_t i = 0; i < k; ++i) {
    if (t[i] < s[i] || s[i] < 0)
      throw InputError("generate_pencil: need t_i >= s_i >= 0");
    if (i + 1 < k && s[i] < t[i + 1])
      throw InputError("generate_pencil: need s_i >= t_{i+1}");
    if (t[i] == 0) throw InputError("generate_pencil: t_i must be positive");
  }

  std::vector<Index> ro(k + 1, 0), co(k + 1, 0);
  for (size_t i = 0; i < k; ++i) {
    ro[i + 1] = ro[i] + s[i];
    co[i + 1] = co[i] + t[i];
  }
  const Index m = ro[k], n = co[k];

  detail::GaussianFill fill(spec.seed, spec.fill == "crandn");
  ComplexMatrix A = ComplexMatrix::Zero(m, n);
  ComplexMatrix E = ComplexMatrix::Zero(m, n);
  for (size_t i = 0; i < k; ++i) {
    if (s[i] > 0) {
      E.block(ro[i], co[i] + (t[i] - s[i]), s[i], s[i]) = fill.upper_triangular(s[i]);
      if (i + 1 < k && t[i + 1] > 0)
        A.block(ro[i], co[i + 1], t[i + 1], t[i + 1]) = fill.upper_triangular(t[i + 1]);
    }
    for (size_t j = i + 1; j < k; ++j) {
      E.block(ro[i], co[j], s[i], t[j]) = fill.matrix(s[i], t[j]);
      if (j > i + 1) A.block(ro[i], co[j], s[i], t[j]) = fill.matrix(s[i], t[j]);
    }
  }

  if (spec.disguise) {
    const ComplexMatrix Q = fill.haar_unitary(m);
    const ComplexMatrix W = fill.haar_unitary(n);
    A = (Q * A * W).eval();
    E = (Q * E * W).eval();
  }
  return make_pencil(A, E);
}

}  // namespace pencilstruct
