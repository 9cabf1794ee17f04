#pragma once

#include <numeric>
#include <vector>

#include "pencilstruct/linalg.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

inline ShiftedPencil make_shifted(const Pencil& p, Complex lambda0) {
  require_finite(p.L0, "make_shifted.L0");
  require_finite(p.L1, "make_shifted.L1");
  if (!(std::isfinite(lambda0.real()) && std::isfinite(lambda0.imag())))
    throw InputError("make_shifted: non-finite lambda0");
  ShiftedPencil sp;
  sp.base = p;
  sp.lambda0 = lambda0;
  sp.Lhat0 = p.L0 + lambda0 * p.L1;
  sp.Lhat1 = p.L1;
  return sp;
}

// Right minimal indices and partial multiplicities encoded by a staircase
// index sequence: t_i - s_i indices equal to i-1, s_i - t_{i+1} divisors of
// degree i (t_{k+1} := 0). left_minimal and normal_rank are left unset.
inline StructuralIndices indices_from_staircase(const std::vector<Index>& s,
                                                const std::vector<Index>& t) {
  if (s.size() != t.size())
    throw ContractViolation("indices_from_staircase: s and t length mismatch");
  const size_t k = s.size();
  for (size_t i = 0; i < k; ++i) {
    if (t[i] < s[i] || s[i] < 0)
      throw ContractViolation("indices_from_staircase: need t_i >= s_i >= 0");
    const Index t_next = (i + 1 < k) ? t[i + 1] : 0;
    if (s[i] < t_next)
      throw ContractViolation("indices_from_staircase: need s_i >= t_{i+1}");
  }
  StructuralIndices out;
  for (size_t i = 0; i < k; ++i) {
    for (Index c = 0; c < t[i] - s[i]; ++c) out.right_minimal.push_back(static_cast<int>(i));
    const Index t_next = (i + 1 < k) ? t[i + 1] : 0;
    for (Index c = 0; c < s[i] - t_next; ++c)
      out.partial_multiplicities.push_back(static_cast<int>(i) + 1);
  }
  std::sort(out.right_minimal.begin(), out.right_minimal.end());
  std::sort(out.partial_multiplicities.begin(), out.partial_multiplicities.end());
  return out;
}

// Unitary condensation U^*(Lhat0 + mu Lhat1)V = A + mu E with the leading
// part in staircase form and a full-column-rank tail A_r + mu E_r.
struct StaircaseForm {
  ComplexMatrix U, V;  // m x m, n x n unitary
  ComplexMatrix A, E;  // transformed pencil, staircase zero pattern exact
  std::vector<Index> s, t;
  Index tail_rows = 0, tail_cols = 0;
  double tol = 0.0;
  std::vector<RankDecision> col_decisions;  // kernel steps (t_i)
  std::vector<RankDecision> row_decisions;  // image steps (s_i)
  RankDecision tail_decision;               // full-column-rank test that ended the sweep

  Index k() const { return static_cast<Index>(s.size()); }
  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
  Index leading_rows() const { return A.rows() - tail_rows; }
  Index leading_cols() const { return A.cols() - tail_cols; }

  std::vector<Index> row_offsets() const {
    std::vector<Index> off(s.size() + 1, 0);
    for (size_t i = 0; i < s.size(); ++i) off[i + 1] = off[i] + s[i];
    return off;
  }
  std::vector<Index> col_offsets() const {
    std::vector<Index> off(t.size() + 1, 0);
    for (size_t i = 0; i < t.size(); ++i) off[i + 1] = off[i] + t[i];
    return off;
  }
};

// Staircase reduction of the shifted pencil: alternates a column compression
// against ker(Lhat0-part) with a row compression of its image under the
// Lhat1-part, deflating one (t_i, s_i) block per sweep.
inline StaircaseForm staircase_reduce(const ShiftedPencil& sp, double tol) {
  require_finite(sp.Lhat0, "staircase_reduce.Lhat0");
  require_finite(sp.Lhat1, "staircase_reduce.Lhat1");
  if (tol < 0) throw InputError("staircase_reduce: negative tolerance");

  const Index m = sp.rows(), n = sp.cols();
  StaircaseForm sf;
  sf.tol = tol;
  sf.U = ComplexMatrix::Identity(m, m);
  sf.V = ComplexMatrix::Identity(n, n);
  sf.A = sp.Lhat0;
  sf.E = sp.Lhat1;

  Index r0 = 0, c0 = 0;
  while (true) {
    const Index mi = m - r0, ni = n - c0;
    if (ni == 0) {
      sf.tail_decision = RankDecision{0, tol, 0.0, 0.0};
      break;
    }
    ColCompression cc = col_compress(sf.A.block(r0, c0, mi, ni), tol);
    const Index ti = ni - cc.decision.rank;
    if (ti == 0) {
      sf.tail_decision = cc.decision;
      break;
    }
    if (!sf.s.empty() && ti > sf.s.back())
      throw ContractViolation("staircase_reduce: index monotonicity violated (borderline rank)");
    sf.col_decisions.push_back(cc.decision);

    sf.A.block(0, c0, m, ni) = (sf.A.block(0, c0, m, ni) * cc.V).eval();
    sf.E.block(0, c0, m, ni) = (sf.E.block(0, c0, m, ni) * cc.V).eval();
    sf.V.middleCols(c0, ni) = (sf.V.middleCols(c0, ni) * cc.V).eval();
    sf.A.block(r0, c0, mi, ti).setZero();

    RowCompression rc = row_compress(sf.E.block(r0, c0, mi, ti), tol);
    const Index si = rc.decision.rank;
    sf.row_decisions.push_back(rc.decision);

    sf.A.block(r0, 0, mi, n) = (rc.Q.adjoint() * sf.A.block(r0, 0, mi, n)).eval();
    sf.E.block(r0, 0, mi, n) = (rc.Q.adjoint() * sf.E.block(r0, 0, mi, n)).eval();
    sf.U.middleCols(r0, mi) = (sf.U.middleCols(r0, mi) * rc.Q).eval();
    sf.E.block(r0 + si, c0, mi - si, ti).setZero();
    sf.A.block(r0, c0, mi, ti).setZero();

    sf.s.push_back(si);
    sf.t.push_back(ti);
    r0 += si;
    c0 += ti;
  }
  sf.tail_rows = m - r0;
  sf.tail_cols = n - c0;
  return sf;
}

// Dimensions of the nested Wong chains spanned by the leading columns of U, V.
struct WongChain {
  std::vector<Index> dims_U;  // sigma_k = sum_{i<=k} s_i
  std::vector<Index> dims_V;  // tau_k = sum_{i<=k} t_i
};

inline WongChain wong_chain(const StaircaseForm& sf) {
  WongChain wc;
  Index su = 0, sv = 0;
  for (size_t i = 0; i < sf.s.size(); ++i) {
    su += sf.s[i];
    sv += sf.t[i];
    wc.dims_U.push_back(su);
    wc.dims_V.push_back(sv);
  }
  return wc;
}

}  // namespace pencilstruct
