#pragma once

#include <vector>

#include "pencilstruct/extract.hpp"
#include "pencilstruct/linalg.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

// Structure counts recovered from block-Toeplitz nullities and ranks,
// independent of the staircase pipeline. Second differences of the
// sequences give the index counts, with boundary terms set to zero.
struct ToeplitzReport {
  std::vector<Index> mu;  // mu_k, right nullity of That_k, k = 1..kmax
  std::vector<Index> nu;  // nu_k, left nullity of Ttilde_k
  std::vector<Index> r;   // r_k, rank of T_k, k = 0..kmax
  std::vector<int> m_counts;  // m_j: right minimal indices equal to j, j = 0..
  std::vector<int> n_counts;  // n_j: left minimal indices equal to j
  std::vector<int> e_counts;  // e_i: elementary divisors of degree i, i = 1..
  Index normal_rank = 0;
  bool complete = false;  // counts stabilized within kmax

  std::vector<int> right_minimal() const {
    std::vector<int> out;
    for (size_t j = 0; j < m_counts.size(); ++j)
      for (int c = 0; c < m_counts[j]; ++c) out.push_back(static_cast<int>(j));
    return out;
  }
  std::vector<int> left_minimal() const {
    std::vector<int> out;
    for (size_t j = 0; j < n_counts.size(); ++j)
      for (int c = 0; c < n_counts[j]; ++c) out.push_back(static_cast<int>(j));
    return out;
  }
  std::vector<int> partial_multiplicities() const {
    std::vector<int> out;
    for (size_t i = 0; i < e_counts.size(); ++i)
      for (int c = 0; c < e_counts[i]; ++c) out.push_back(static_cast<int>(i) + 1);
    return out;
  }
};

namespace detail {

// [L1; L0 L1; ...; L0] in m(k+1) x nk block bidiagonal layout.
inline ComplexMatrix toeplitz_hat(const ComplexMatrix& L0, const ComplexMatrix& L1, Index k) {
  const Index m = L0.rows(), n = L0.cols();
  ComplexMatrix T = ComplexMatrix::Zero(m * (k + 1), n * k);
  for (Index j = 0; j < k; ++j) {
    T.block(m * j, n * j, m, n) = L1;
    T.block(m * (j + 1), n * j, m, n) = L0;
  }
  return T;
}

// [L0 L1; ... ; L0 L1] in mk x n(k+1) layout.
inline ComplexMatrix toeplitz_tilde(const ComplexMatrix& L0, const ComplexMatrix& L1, Index k) {
  const Index m = L0.rows(), n = L0.cols();
  ComplexMatrix T = ComplexMatrix::Zero(m * k, n * (k + 1));
  for (Index j = 0; j < k; ++j) {
    T.block(m * j, n * j, m, n) = L0;
    T.block(m * j, n * (j + 1), m, n) = L1;
  }
  return T;
}

// Upper block bidiagonal [L0 L1; L0 ...; L0] in m(k+1) x n(k+1) layout.
inline ComplexMatrix toeplitz_square(const ComplexMatrix& L0, const ComplexMatrix& L1, Index k) {
  const Index m = L0.rows(), n = L0.cols();
  ComplexMatrix T = ComplexMatrix::Zero(m * (k + 1), n * (k + 1));
  for (Index j = 0; j <= k; ++j) {
    T.block(m * j, n * j, m, n) = L0;
    if (j < k) T.block(m * j, n * (j + 1), m, n) = L1;
  }
  return T;
}

inline int second_difference(const std::vector<Index>& seq, size_t idx) {
  // seq is 1-based in k with seq[0] meaning k=1; values for k <= 0 are zero.
  auto at = [&](long k) -> Index {
    if (k <= 0) return 0;
    return seq[static_cast<size_t>(k - 1)];
  };
  const long j = static_cast<long>(idx);
  return static_cast<int>(at(j - 1) - 2 * at(j) + at(j + 1));
}

}  // namespace detail

// Brute-force structure oracle per the three block-Toeplitz nullity/rank
// theorems; all ranks via singular values at the given tolerance.
inline ToeplitzReport toeplitz_structure(const ShiftedPencil& sp, Index kmax, double tol) {
  if (kmax < 1) throw InputError("toeplitz_structure: kmax must be >= 1");
  const ComplexMatrix& L0 = sp.Lhat0;
  const ComplexMatrix& L1 = sp.Lhat1;
  const Index m = L0.rows(), n = L0.cols();

  ToeplitzReport rep;
  // Normal rank via fixed generic evaluation points (a.s. exact).
  Index nr = 0;
  for (int trial = 0; trial < 2; ++trial) {
    const Complex mu(0.31 + 0.17 * trial, 0.41 - 0.23 * trial);
    nr = std::max(nr, numerical_rank(L0 + mu * L1, tol));
  }
  rep.normal_rank = nr;

  for (Index k = 1; k <= kmax; ++k) {
    const ComplexMatrix That = detail::toeplitz_hat(L0, L1, k);
    rep.mu.push_back(n * k - numerical_rank(That, tol));
    const ComplexMatrix Ttil = detail::toeplitz_tilde(L0, L1, k);
    rep.nu.push_back(m * k - numerical_rank(Ttil, tol));
  }
  for (Index k = 0; k <= kmax; ++k)
    rep.r.push_back(numerical_rank(detail::toeplitz_square(L0, L1, k), tol));

  // m_j needs mu_{j+1}: j ranges 0..kmax-1. Same for n_j. e_i uses r_i, i=1..kmax.
  for (size_t j = 0; j + 1 <= rep.mu.size(); ++j)
    rep.m_counts.push_back(detail::second_difference(rep.mu, j));
  for (size_t j = 0; j + 1 <= rep.nu.size(); ++j)
    rep.n_counts.push_back(detail::second_difference(rep.nu, j));
  for (size_t i = 1; i < rep.r.size(); ++i) {
    // r is 0-based in k here: r[k] = rank(T_k), r_{-1} = r_{-2} = 0.
    auto at = [&](long k) -> Index { return k < 0 ? 0 : rep.r[static_cast<size_t>(k)]; };
    rep.e_counts.push_back(static_cast<int>(at(static_cast<long>(i) - 2) -
                                            2 * at(static_cast<long>(i) - 1) +
                                            at(static_cast<long>(i))));
  }

  int sum_m = 0, sum_n = 0;
  for (int c : rep.m_counts) sum_m += c;
  for (int c : rep.n_counts) sum_n += c;
  const bool ranks_settled =
      rep.r.size() >= 3 && (rep.r[rep.r.size() - 1] - rep.r[rep.r.size() - 2] == nr) &&
      (rep.r[rep.r.size() - 2] - rep.r[rep.r.size() - 3] == nr);
  rep.complete = (sum_m == static_cast<int>(n - nr)) && (sum_n == static_cast<int>(m - nr)) &&
                 (ranks_settled || kmax >= std::min(m, n) + 1);
  while (!rep.m_counts.empty() && rep.m_counts.back() == 0) rep.m_counts.pop_back();
  while (!rep.n_counts.empty() && rep.n_counts.back() == 0) rep.n_counts.pop_back();
  while (!rep.e_counts.empty() && rep.e_counts.back() == 0) rep.e_counts.pop_back();
  return rep;
}

struct ZeroDirectionCheck {
  bool is_zero_direction = false;
  ComplexVector quotient_value;  // v(lambda0) when the order is exactly k
};

// Checks P(lambda) x(lambda) = (lambda-lambda0)^k v(lambda) with v(lambda0) != 0
// and x(lambda0) != 0, by convolution through order k.
inline ZeroDirectionCheck verify_zero_direction(const Pencil& p, const PolyMatrix& x,
                                                Complex lambda0, Index k, double tol) {
  if (x.cols() != 1) throw InputError("verify_zero_direction: x must be a single column");
  ShiftedPencil sp = make_shifted(p, lambda0);
  PolyMatrix y = pencil_times_poly(sp.Lhat0, sp.Lhat1, x);

  ZeroDirectionCheck out;
  const double xscale = std::max(x.max_coeff_norm(), 1e-300);
  const double yscale = std::max(x.max_coeff_norm() * std::max(sp.Lhat0.norm(), sp.Lhat1.norm()), 1e-300);
  if (x.coeffs.empty() || x.coeffs.front().norm() <= tol * xscale) return out;  // x(lambda0) = 0
  for (Index j = 0; j < k && j < static_cast<Index>(y.coeffs.size()); ++j) {
    if (y.coeffs[static_cast<size_t>(j)].norm() > tol * yscale) return out;
  }
  if (k >= static_cast<Index>(y.coeffs.size())) return out;  // vanishes beyond order k
  const ComplexMatrix& vk = y.coeffs[static_cast<size_t>(k)];
  if (vk.norm() <= tol * yscale) return out;
  out.is_zero_direction = true;
  out.quotient_value = vk.col(0);
  return out;
}

// The seven Table-1 style diagnostics of a completed run.
struct ResidualReport {
  double eps_kappa = 0.0;  // eps * ||S'||_2 ||T'^{-1}||_2
  double back = 0.0;       // reconstruction residual of the Kronecker form
  double off = 0.0;        // deviation of the Kronecker form from its exact 0/1 pattern
  double resN = 0.0;       // || (L0 + lambda L1) n_i ||_F over all coefficients
  double normN = 0.0;
  double resR = 0.0;       // || (L0 + lambda L1) r_i mod mu^{l_i} ||_F
  double normR = 0.0;
};

inline ResidualReport residual_report(const ShiftedPencil& sp, const KroneckerForm& kf,
                                      const TriangularStairForm& tf,
                                      const MinimalBasis& lifted_basis,
                                      const RootPolynomialSet& lifted_roots) {
  ResidualReport rr;
  const double eps = std::numeric_limits<double>::epsilon();
  const ComplexMatrix Tinv =
      kf.Tprime.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(kf.Tprime.rows(), kf.Tprime.cols()));
  rr.eps_kappa = eps * spectral_norm(kf.Sprime) * spectral_norm(Tinv);

  rr.back = (kf.Sprime * kf.A_K * Tinv - tf.A).norm() + (kf.Sprime * kf.E_K * Tinv - tf.E).norm();
  {
    auto [idealA, idealE] = ideal_kronecker_pattern(kf.s, kf.t);
    const Index ml = idealA.rows(), nl = idealA.cols();
    rr.off = (kf.A_K.topLeftCorner(ml, nl) - idealA).norm() +
             (kf.E_K.topLeftCorner(ml, nl) - idealE).norm();
  }

  rr.normN = 0.0;
  double res_sq = 0.0;
  for (const auto& c : lifted_basis.N.coeffs) rr.normN += c.squaredNorm();
  rr.normN = std::sqrt(rr.normN);
  {
    PolyMatrix res = pencil_times_poly(sp.Lhat0, sp.Lhat1, lifted_basis.N);
    for (const auto& c : res.coeffs) res_sq += c.squaredNorm();
  }
  rr.resN = std::sqrt(res_sq);

  double nr_sq = 0.0, rr_sq = 0.0;
  for (size_t i = 0; i < lifted_roots.vectors.size(); ++i) {
    const PolyMatrix& q = lifted_roots.vectors[i];
    for (const auto& c : q.coeffs) nr_sq += c.squaredNorm();
    PolyMatrix res = pencil_times_poly(sp.Lhat0, sp.Lhat1, q);
    const Index ell = lifted_roots.orders[i];
    for (Index j = 0; j < ell && j < static_cast<Index>(res.coeffs.size()); ++j)
      rr_sq += res.coeffs[static_cast<size_t>(j)].squaredNorm();
  }
  rr.normR = std::sqrt(nr_sq);
  rr.resR = std::sqrt(rr_sq);
  return rr;
}

}  // namespace pencilstruct
