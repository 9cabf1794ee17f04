#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace pencilstruct {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

// User-facing input problems (bad files, non-finite entries, shape mismatches).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariants (rank-deficient stairs, non-monotone index
// sequences); these indicate the pencil violated a precondition mid-pipeline.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline void require_finite(const ComplexMatrix& m, const char* name) {
  if (!all_finite(m)) throw InputError(std::string(name) + ": non-finite entries");
}

// Outcome of a numerical rank decision on singular values.
struct RankDecision {
  Index rank = 0;
  double tolerance_used = 0.0;
  double smallest_accepted = 0.0;  // sigma_rank (0 if rank == 0)
  double largest_rejected = 0.0;   // sigma_{rank+1} (0 if rank is full)
};

// An m x n pencil L(lambda) = L0 + lambda*L1, stored normalized so that
// max(||L0||_2, ||L1||_2) = 1; norm_scale records the factor divided out.
struct Pencil {
  ComplexMatrix L0;
  ComplexMatrix L1;
  double norm_scale = 1.0;

  Index rows() const { return L0.rows(); }
  Index cols() const { return L0.cols(); }

  ComplexMatrix eval(Complex lambda) const { return L0 + lambda * L1; }
};

// The same pencil re-expanded around lambda0:
//   L0 + lambda*L1 = Lhat0 + (lambda - lambda0)*Lhat1,  Lhat0 = L(lambda0).
struct ShiftedPencil {
  Pencil base;
  Complex lambda0{0.0, 0.0};
  ComplexMatrix Lhat0;
  ComplexMatrix Lhat1;

  Index rows() const { return Lhat0.rows(); }
  Index cols() const { return Lhat0.cols(); }
};

// Matrix polynomial in the shifted variable mu = lambda - lambda0,
// coeffs[i] multiplying mu^i.
struct PolyMatrix {
  std::vector<ComplexMatrix> coeffs;
  Complex lambda0{0.0, 0.0};

  PolyMatrix() = default;
  PolyMatrix(std::vector<ComplexMatrix> c, Complex l0) : coeffs(std::move(c)), lambda0(l0) {}

  static PolyMatrix zero(Index rows, Index cols, Complex lambda0 = Complex(0, 0)) {
    return PolyMatrix({ComplexMatrix::Zero(rows, cols)}, lambda0);
  }

  Index rows() const { return coeffs.empty() ? 0 : coeffs.front().rows(); }
  Index cols() const { return coeffs.empty() ? 0 : coeffs.front().cols(); }
  Index degree() const { return static_cast<Index>(coeffs.size()) - 1; }

  ComplexMatrix eval_shifted(Complex mu) const {
    if (coeffs.empty()) return ComplexMatrix();
    ComplexMatrix acc = coeffs.back();
    for (Index i = degree() - 1; i >= 0; --i) acc = coeffs[static_cast<size_t>(i)] + mu * acc;
    return acc;
  }

  // Value at lambda in the original variable.
  ComplexMatrix eval(Complex lambda) const { return eval_shifted(lambda - lambda0); }

  PolyMatrix column(Index j) const {
    std::vector<ComplexMatrix> c;
    c.reserve(coeffs.size());
    for (const auto& m : coeffs) c.push_back(m.col(j));
    return PolyMatrix(std::move(c), lambda0);
  }

  double max_coeff_norm() const {
    double mx = 0.0;
    for (const auto& m : coeffs) mx = std::max(mx, m.norm());
    return mx;
  }

  // Drops trailing coefficients with norm <= tol * max coefficient norm.
  void trim(double tol) {
    const double cutoff = tol * max_coeff_norm();
    while (coeffs.size() > 1 && coeffs.back().norm() <= cutoff) coeffs.pop_back();
  }
};

// Re-expands from powers of (lambda - lambda0) to monomials in lambda:
//   sum_j C_j (lambda-l0)^j = sum_i lambda^i sum_{j>=i} C_j binom(j,i) (-l0)^{j-i}.
inline PolyMatrix to_monomial_basis(const PolyMatrix& p) {
  if (p.coeffs.empty() || p.lambda0 == Complex(0, 0)) {
    PolyMatrix q = p;
    q.lambda0 = Complex(0, 0);
    return q;
  }
  const size_t d = p.coeffs.size();
  std::vector<ComplexMatrix> out(d, ComplexMatrix::Zero(p.rows(), p.cols()));
  for (size_t j = 0; j < d; ++j) {
    Complex w(1.0, 0.0);  // binom(j,i) * (-l0)^{j-i}, built from i=j downwards
    for (size_t i = j + 1; i-- > 0;) {
      out[i] += w * p.coeffs[j];
      if (i > 0) w *= -p.lambda0 * static_cast<double>(i) / static_cast<double>(j - i + 1);
    }
  }
  return PolyMatrix(std::move(out), Complex(0, 0));
}

// Minimal indices and local multiplicity data of a pencil at one point.
struct StructuralIndices {
  std::vector<int> right_minimal;           // epsilon_i, ascending
  std::vector<int> left_minimal;            // eta_i, ascending
  std::vector<int> partial_multiplicities;  // sigma_i >= 1, ascending
  Index normal_rank = -1;                   // -1 until the caller fills it in
};

}  // namespace pencilstruct
