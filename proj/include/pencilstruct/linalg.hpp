#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "pencilstruct/types.hpp"

namespace pencilstruct {

struct SvdFactors {
  ComplexMatrix U;         // rows x rows, unitary
  ComplexMatrix V;         // cols x cols, unitary
  Eigen::VectorXd sigma;   // min(rows,cols), descending
};

inline SvdFactors full_svd(const ComplexMatrix& m) {
  SvdFactors f;
  if (m.rows() == 0 || m.cols() == 0) {
    f.U = ComplexMatrix::Identity(m.rows(), m.rows());
    f.V = ComplexMatrix::Identity(m.cols(), m.cols());
    f.sigma = Eigen::VectorXd::Zero(0);
    return f;
  }
  if (std::max(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.U = svd.matrixU();
    f.V = svd.matrixV();
    f.sigma = svd.singularValues();
  } else {
    Eigen::BDCSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    f.U = svd.matrixU();
    f.V = svd.matrixV();
    f.sigma = svd.singularValues();
  }
  return f;
}

inline Eigen::VectorXd singular_values(const ComplexMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return Eigen::VectorXd::Zero(0);
  if (std::max(m.rows(), m.cols()) <= 16) return Eigen::JacobiSVD<ComplexMatrix>(m).singularValues();
  return Eigen::BDCSVD<ComplexMatrix>(m).singularValues();
}

inline double spectral_norm(const ComplexMatrix& m) {
  const Eigen::VectorXd s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(0);
}

inline RankDecision decide_rank(const Eigen::VectorXd& sigma, double tol) {
  RankDecision d;
  d.tolerance_used = tol;
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol) ++r;
  d.rank = r;
  d.smallest_accepted = r > 0 ? sigma(r - 1) : 0.0;
  d.largest_rejected = r < sigma.size() ? sigma(r) : 0.0;
  return d;
}

inline Index numerical_rank(const ComplexMatrix& m, double tol) {
  return decide_rank(singular_values(m), tol).rank;
}

// Default rank tolerance for an m x n pencil: max(m,n) * eps * max(||L0||,||L1||).
inline double default_tolerance(Index rows, Index cols, double max_norm) {
  const double eps = std::numeric_limits<double>::epsilon();
  return static_cast<double>(std::max<Index>({rows, cols, 1})) * eps * max_norm;
}

struct RowCompression {
  ComplexMatrix Q;  // rows x rows, unitary
  ComplexMatrix R;  // Q^* M with the rows below the numerical rank zeroed
  RankDecision decision;
};

// Q^* M = [M1; 0] with M1 of full numerical row rank at tol.
inline RowCompression row_compress(const ComplexMatrix& m, double tol) {
  require_finite(m, "row_compress");
  RowCompression out;
  SvdFactors f = full_svd(m);
  out.decision = decide_rank(f.sigma, tol);
  out.Q = f.U;
  out.R = out.Q.adjoint() * m;
  if (out.decision.rank < m.rows()) {
    out.R.bottomRows(m.rows() - out.decision.rank).setZero();
  }
  return out;
}

struct ColCompression {
  ComplexMatrix V;  // cols x cols, unitary
  ComplexMatrix C;  // M V = [0 M1] with M1 of full numerical column rank
  RankDecision decision;
};

// M V = [0 M1]: the numerical null directions come first.
inline ColCompression col_compress(const ComplexMatrix& m, double tol) {
  require_finite(m, "col_compress");
  ColCompression out;
  SvdFactors f = full_svd(m);
  out.decision = decide_rank(f.sigma, tol);
  const Index r = out.decision.rank;
  const Index n = m.cols();
  out.V = ComplexMatrix(n, n);
  out.V.leftCols(n - r) = f.V.rightCols(n - r);
  out.V.rightCols(r) = f.V.leftCols(r);
  out.C = m * out.V;
  out.C.leftCols(n - r).setZero();
  return out;
}

namespace detail {

// Hermitian reflector carrying u to beta*e_last on its leading `len` entries.
// Applied from the right as H = G^T, i.e. M <- M - (M conj(w)) * (2/w^*w) w^T.
struct RightReflector {
  ComplexVector w;
  double wsq = 0.0;
  Complex beta{0.0, 0.0};
  bool active = false;
};

inline RightReflector make_right_reflector(const ComplexVector& u) {
  RightReflector h;
  const Index c = u.size();
  const double nrm = u.norm();
  if (c == 0 || nrm == 0.0) return h;
  const Complex last = u(c - 1);
  const Complex phase = std::abs(last) > 0.0 ? last / std::abs(last) : Complex(1.0, 0.0);
  h.beta = -phase * nrm;
  h.w = u;
  h.w(c - 1) -= h.beta;
  h.wsq = h.w.squaredNorm();
  if (h.wsq <= 0.0) return h;
  h.active = true;
  return h;
}

inline void apply_right_reflector(ComplexMatrix& m, const RightReflector& h, Index col0, Index len) {
  if (!h.active || m.rows() == 0) return;
  ComplexVector t = m.middleCols(col0, len) * h.w.conjugate();
  m.middleCols(col0, len).noalias() -= (2.0 / h.wsq) * t * h.w.transpose();
}

}  // namespace detail

struct RqUpper {
  ComplexMatrix V;     // t x t unitary
  ComplexMatrix Ehat;  // s x s upper triangular, real positive diagonal
};

// E V = [0 Ehat] for a full-row-rank s x t block (s <= t), by Householder
// reflectors applied from the right, sweeping rows bottom-up.
inline RqUpper rq_upper(const ComplexMatrix& e, double tol) {
  require_finite(e, "rq_upper");
  const Index s = e.rows(), t = e.cols();
  if (s > t) throw ContractViolation("rq_upper: more rows than columns");
  RqUpper out;
  out.V = ComplexMatrix::Identity(t, t);
  ComplexMatrix f = e;
  for (Index i = s; i >= 1; --i) {
    const Index c = t - s + i;  // target column (1-based) for row i
    ComplexVector u = f.row(i - 1).head(c).transpose();
    detail::RightReflector h = detail::make_right_reflector(u);
    detail::apply_right_reflector(f, h, 0, c);
    detail::apply_right_reflector(out.V, h, 0, c);
    f.row(i - 1).head(c - 1).setZero();
  }
  // Phase-normalize the diagonal of Ehat to be real positive.
  for (Index i = 0; i < s; ++i) {
    const Index j = t - s + i;
    const Complex d = f(i, j);
    if (std::abs(d) > 0.0) {
      const Complex ph = std::conj(d / std::abs(d));
      f.col(j) *= ph;
      out.V.col(j) *= ph;
    }
  }
  out.Ehat = f.rightCols(s);
  for (Index i = 0; i < s; ++i) out.Ehat.col(i).tail(s - 1 - i).setZero();
  const double floor = tol * e.norm();
  for (Index i = 0; i < s; ++i) {
    if (!(std::abs(out.Ehat(i, i)) >= floor))
      throw ContractViolation("rq_upper: stair block numerically rank deficient");
  }
  return out;
}

struct QlUpper {
  ComplexMatrix U;     // s x s unitary
  ComplexMatrix Ahat;  // t x t upper triangular, real positive diagonal
};

// U^* A = [Ahat; 0] for a full-column-rank s x t block (s >= t),
// a Householder QR with the diagonal phases folded into U.
inline QlUpper ql_upper(const ComplexMatrix& a, double tol) {
  require_finite(a, "ql_upper");
  const Index s = a.rows(), t = a.cols();
  if (t > s) throw ContractViolation("ql_upper: more columns than rows");
  QlUpper out;
  Eigen::HouseholderQR<ComplexMatrix> qr(a);
  out.U = qr.householderQ() * ComplexMatrix::Identity(s, s);
  ComplexMatrix r = out.U.adjoint() * a;
  for (Index i = 0; i < t; ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0.0) {
      const Complex ph = d / std::abs(d);
      out.U.col(i) *= ph;
      r.row(i) *= std::conj(ph);
    }
  }
  out.Ahat = r.topRows(t);
  for (Index j = 0; j < t; ++j) out.Ahat.col(j).tail(t - 1 - j).setZero();
  const double floor = tol * a.norm();
  for (Index i = 0; i < t; ++i) {
    if (!(std::abs(out.Ahat(i, i)) >= floor))
      throw ContractViolation("ql_upper: stair block numerically rank deficient");
  }
  return out;
}

}  // namespace pencilstruct
