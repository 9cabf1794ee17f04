#pragma once

#include <utility>
#include <vector>

#include "pencilstruct/linalg.hpp"
#include "pencilstruct/staircase.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

// Staircase form whose stairs have been shaped to E_{i,i} = [0 Ehat],
// A_{i,i+1} = [Ahat; 0] with upper triangular invertible Ehat, Ahat.
struct TriangularStairForm {
  ComplexMatrix U, V;  // updated total unitaries
  ComplexMatrix A, E;  // full m x n transformed pencil
  std::vector<Index> s, t;
  Index tail_rows = 0, tail_cols = 0;
  double tol = 0.0;

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

  // Upper triangular part of the A stair at (i, i+1), 0-based i < k-1.
  ComplexMatrix a_stair(Index i) const {
    const auto ro = row_offsets(), co = col_offsets();
    return A.block(ro[i], co[i + 1], t[i + 1], t[i + 1]);
  }
  // Upper triangular part of the E stair at (i, i), 0-based.
  ComplexMatrix e_stair(Index i) const {
    const auto ro = row_offsets(), co = col_offsets();
    return E.block(ro[i], co[i] + (t[i] - s[i]), s[i], s[i]);
  }
};

// Backward sweep of the stair triangularization: V_{k,k} first, then
// alternating left/right factors up to block row 1.
inline TriangularStairForm triangularize_stairs(const StaircaseForm& sf) {
  TriangularStairForm tf;
  tf.U = sf.U;
  tf.V = sf.V;
  tf.A = sf.A;
  tf.E = sf.E;
  tf.s = sf.s;
  tf.t = sf.t;
  tf.tail_rows = sf.tail_rows;
  tf.tail_cols = sf.tail_cols;
  tf.tol = sf.tol;

  const Index k = tf.k();
  if (k == 0) return tf;
  const auto ro = tf.row_offsets();
  const auto co = tf.col_offsets();
  const Index m = tf.rows(), n = tf.cols();

  auto shape_e_stair = [&](Index i) {  // 0-based block i
    const Index si = tf.s[static_cast<size_t>(i)], ti = tf.t[static_cast<size_t>(i)];
    if (si == 0) return;
    RqUpper rq = rq_upper(tf.E.block(ro[i], co[i], si, ti), tf.tol);
    tf.A.middleCols(co[i], ti) = (tf.A.middleCols(co[i], ti) * rq.V).eval();
    tf.E.middleCols(co[i], ti) = (tf.E.middleCols(co[i], ti) * rq.V).eval();
    tf.V.middleCols(co[i], ti) = (tf.V.middleCols(co[i], ti) * rq.V).eval();
    tf.E.block(ro[i], co[i], si, ti - si).setZero();
    tf.E.block(ro[i], co[i] + (ti - si), si, si) = rq.Ehat;
    tf.E.block(ro[i] + si, co[i], m - ro[i] - si, ti).setZero();
    tf.A.block(ro[i], co[i], m - ro[i], ti).setZero();
  };

  shape_e_stair(k - 1);
  for (Index i = k - 2; i >= 0; --i) {
    const Index si = tf.s[static_cast<size_t>(i)], tn = tf.t[static_cast<size_t>(i + 1)];
    if (si > 0 && tn > 0) {
      QlUpper ql = ql_upper(tf.A.block(ro[i], co[i + 1], si, tn), tf.tol);
      tf.A.middleRows(ro[i], si) = (ql.U.adjoint() * tf.A.middleRows(ro[i], si)).eval();
      tf.E.middleRows(ro[i], si) = (ql.U.adjoint() * tf.E.middleRows(ro[i], si)).eval();
      tf.U.middleCols(ro[i], si) = (tf.U.middleCols(ro[i], si) * ql.U).eval();
      tf.A.block(ro[i], co[i + 1], si, tn).setZero();
      tf.A.block(ro[i], co[i + 1], tn, tn) = ql.Ahat;
    }
    shape_e_stair(i);
  }
  return tf;
}

namespace detail {

// Block layout helpers for the leading staircase part.
struct BlockGrid {
  std::vector<Index> s, t, ro, co;
  Index k = 0, mlead = 0, nlead = 0;

  explicit BlockGrid(const std::vector<Index>& s_, const std::vector<Index>& t_) : s(s_), t(t_) {
    k = static_cast<Index>(s.size());
    ro.assign(s.size() + 1, 0);
    co.assign(t.size() + 1, 0);
    for (size_t i = 0; i < s.size(); ++i) ro[i + 1] = ro[i] + s[i];
    for (size_t i = 0; i < t.size(); ++i) co[i + 1] = co[i] + t[i];
    mlead = ro.back();
    nlead = co.back();
  }
};

// Leading-part matrices containing only the rank-carrying stairs.
inline std::pair<ComplexMatrix, ComplexMatrix> stairs_only(const TriangularStairForm& tf) {
  const BlockGrid g(tf.s, tf.t);
  ComplexMatrix A = ComplexMatrix::Zero(g.mlead, g.nlead);
  ComplexMatrix E = ComplexMatrix::Zero(g.mlead, g.nlead);
  for (Index i = 0; i < g.k; ++i) {
    const Index si = g.s[static_cast<size_t>(i)], ti = g.t[static_cast<size_t>(i)];
    if (si > 0) E.block(g.ro[i], g.co[i] + (ti - si), si, si) = tf.e_stair(i);
    if (i + 1 < g.k) {
      const Index tn = g.t[static_cast<size_t>(i + 1)];
      if (si > 0 && tn > 0) A.block(g.ro[i], g.co[i + 1], tn, tn) = tf.a_stair(i);
    }
  }
  return {std::move(A), std::move(E)};
}

// Back-substitution for the elimination system
//   S_u A_d - (A_d + A_u) T_u = rhsA,   S_u E_d - (E_d + E_u) T_u = rhsE
// with the stated sparsity S_{i,j} = [Shat 0], T_{i,j} = [0; That].
// Coefficients come from the triangular stair form; the right-hand sides
// live in the off-stair block positions. Returns strictly upper (Su, Tu).
inline std::pair<ComplexMatrix, ComplexMatrix> solve_elimination(const TriangularStairForm& tf,
                                                                 const ComplexMatrix& rhsA,
                                                                 const ComplexMatrix& rhsE) {
  const BlockGrid g(tf.s, tf.t);
  const ComplexMatrix Alead = tf.A.topLeftCorner(g.mlead, g.nlead);
  const ComplexMatrix Elead = tf.E.topLeftCorner(g.mlead, g.nlead);
  ComplexMatrix Su = ComplexMatrix::Zero(g.mlead, g.mlead);
  ComplexMatrix Tu = ComplexMatrix::Zero(g.nlead, g.nlead);
  if (g.k <= 1) return {std::move(Su), std::move(Tu)};

  auto sb = [&](Index i) { return g.s[static_cast<size_t>(i)]; };
  auto tb = [&](Index i) { return g.t[static_cast<size_t>(i)]; };

  for (Index i = g.k - 2; i >= 0; --i) {
    const Index si = sb(i);
    // S-row i from the A-equations at (i, j), j >= i+2.
    for (Index j = i + 2; j < g.k; ++j) {
      const Index tj = tb(j);
      if (si == 0 || tj == 0) continue;
      ComplexMatrix rhs = rhsA.block(g.ro[i], g.co[j], si, tj);
      for (Index l = i + 1; l <= j - 1; ++l) {
        if (sb(l) == 0) continue;
        rhs.noalias() += Alead.block(g.ro[i], g.co[l], si, tb(l)) * Tu.block(g.co[l], g.co[j], tb(l), tj);
      }
      const ComplexMatrix Ahat = tf.a_stair(j - 1);  // tj x tj upper triangular
      Su.block(g.ro[i], g.ro[j - 1], si, tj) =
          Ahat.triangularView<Eigen::Upper>().transpose().solve(rhs.transpose()).transpose();
    }
    // T-row i from the E-equations at (i, j), j >= i+1.
    for (Index j = i + 1; j < g.k; ++j) {
      const Index tj = tb(j);
      if (si == 0 || tj == 0) continue;
      ComplexMatrix acc = -rhsE.block(g.ro[i], g.co[j], si, tj);
      if (sb(j) > 0)
        acc.noalias() += Su.block(g.ro[i], g.ro[j], si, sb(j)) * Elead.block(g.ro[j], g.co[j], sb(j), tj);
      for (Index l = i + 1; l <= j - 1; ++l) {
        if (tb(l) == 0) continue;
        acc.noalias() -= Elead.block(g.ro[i], g.co[l], si, tb(l)) * Tu.block(g.co[l], g.co[j], tb(l), tj);
      }
      const ComplexMatrix Ehat = tf.e_stair(i);  // si x si upper triangular
      Tu.block(g.co[i] + (tb(i) - si), g.co[j], si, tj) =
          Ehat.triangularView<Eigen::Upper>().solve(acc);
    }
  }
  return {std::move(Su), std::move(Tu)};
}

// Residual of the elimination system for the current (Su, Tu), restricted to
// the off-stair positions: (rhs - [Su A_d - (A_d+A_u) Tu], likewise for E).
inline std::pair<ComplexMatrix, ComplexMatrix> elimination_residual(const TriangularStairForm& tf,
                                                                    const ComplexMatrix& rhsA,
                                                                    const ComplexMatrix& rhsE,
                                                                    const ComplexMatrix& Su,
                                                                    const ComplexMatrix& Tu) {
  const BlockGrid g(tf.s, tf.t);
  const ComplexMatrix Alead = tf.A.topLeftCorner(g.mlead, g.nlead);
  const ComplexMatrix Elead = tf.E.topLeftCorner(g.mlead, g.nlead);
  auto [Ad, Ed] = stairs_only(tf);
  ComplexMatrix resA = rhsA - (Su * Ad - Alead * Tu);
  ComplexMatrix resE = rhsE - (Su * Ed - Elead * Tu);
  // Mask to the block positions the system actually constrains.
  for (Index i = 0; i < g.k; ++i) {
    resA.block(g.ro[i], 0, g.s[static_cast<size_t>(i)], std::min(g.co[std::min<Index>(i + 2, g.k)], g.nlead)).setZero();
    resE.block(g.ro[i], 0, g.s[static_cast<size_t>(i)], g.co[i + 1]).setZero();
  }
  return {std::move(resA), std::move(resE)};
}

}  // namespace detail

// Unit upper triangular pair (S, T) with S^{-1}(Atilde + lambda Etilde)T in
// block bidiagonal form; off_norm measures the blocks required to vanish.
struct BidiagonalForm {
  TriangularStairForm base;
  ComplexMatrix S, T;  // unit upper triangular, leading sizes m' x m', n' x n'
  double off_norm = 0.0;
  double off_norm_initial = 0.0;
  int refinement_iterations = 0;
  bool diverged = false;

  Index k() const { return base.k(); }
};

// Off-bidiagonal residual of S^{-1} (lead pencil) T: Frobenius norms of all
// blocks outside the kept stairs, summed over the A and E parts.
inline double off_bidiagonal_norm(const TriangularStairForm& tf, const ComplexMatrix& S,
                                  const ComplexMatrix& T) {
  const detail::BlockGrid g(tf.s, tf.t);
  if (g.mlead == 0 || g.nlead == 0) return 0.0;
  const ComplexMatrix Alead = tf.A.topLeftCorner(g.mlead, g.nlead);
  const ComplexMatrix Elead = tf.E.topLeftCorner(g.mlead, g.nlead);
  ComplexMatrix BA = S.triangularView<Eigen::Upper>().solve(Alead * T);
  ComplexMatrix BE = S.triangularView<Eigen::Upper>().solve(Elead * T);
  for (Index i = 0; i < g.k; ++i) {
    const Index si = g.s[static_cast<size_t>(i)], ti = g.t[static_cast<size_t>(i)];
    if (si > 0) BE.block(g.ro[i], g.co[i] + (ti - si), si, si).setZero();
    if (i + 1 < g.k) {
      const Index tn = g.t[static_cast<size_t>(i + 1)];
      if (si > 0 && tn > 0) BA.block(g.ro[i], g.co[i + 1], tn, tn).setZero();
    }
  }
  return BA.norm() + BE.norm();
}

inline BidiagonalForm block_bidiagonalize(const TriangularStairForm& tf) {
  BidiagonalForm bf;
  bf.base = tf;
  const detail::BlockGrid g(tf.s, tf.t);
  auto [Ad, Ed] = detail::stairs_only(tf);
  const ComplexMatrix rhsA = tf.A.topLeftCorner(g.mlead, g.nlead) - Ad;
  const ComplexMatrix rhsE = tf.E.topLeftCorner(g.mlead, g.nlead) - Ed;
  auto [Su, Tu] = detail::solve_elimination(tf, rhsA, rhsE);
  bf.S = ComplexMatrix::Identity(g.mlead, g.mlead) + Su;
  bf.T = ComplexMatrix::Identity(g.nlead, g.nlead) + Tu;
  bf.off_norm = off_bidiagonal_norm(tf, bf.S, bf.T);
  bf.off_norm_initial = bf.off_norm;
  return bf;
}

// Iterative refinement of the elimination system. Keeps the best iterate;
// flags divergence after two consecutive increases of the off-norm.
inline BidiagonalForm refine(const BidiagonalForm& input, int max_iters) {
  BidiagonalForm bf = input;
  const detail::BlockGrid g(bf.base.s, bf.base.t);
  if (g.k <= 1 || max_iters <= 0) return bf;

  auto [Ad, Ed] = detail::stairs_only(bf.base);
  const ComplexMatrix rhsA = bf.base.A.topLeftCorner(g.mlead, g.nlead) - Ad;
  const ComplexMatrix rhsE = bf.base.E.topLeftCorner(g.mlead, g.nlead) - Ed;

  const double pencil_norm =
      std::max(bf.base.A.topLeftCorner(g.mlead, g.nlead).norm(), bf.base.E.topLeftCorner(g.mlead, g.nlead).norm());
  const double eps = std::numeric_limits<double>::epsilon();
  const double target = eps * pencil_norm * static_cast<double>(bf.base.rows() + bf.base.cols());

  ComplexMatrix Su = bf.S - ComplexMatrix::Identity(g.mlead, g.mlead);
  ComplexMatrix Tu = bf.T - ComplexMatrix::Identity(g.nlead, g.nlead);
  ComplexMatrix bestS = bf.S, bestT = bf.T;
  double best_off = bf.off_norm;
  double prev_off = bf.off_norm;
  int increases = 0;

  for (int it = 0; it < max_iters; ++it) {
    if (prev_off <= target) break;
    auto [resA, resE] = detail::elimination_residual(bf.base, rhsA, rhsE, Su, Tu);
    auto [dSu, dTu] = detail::solve_elimination(bf.base, resA, resE);
    Su += dSu;
    Tu += dTu;
    bf.refinement_iterations++;
    const ComplexMatrix S = ComplexMatrix::Identity(g.mlead, g.mlead) + Su;
    const ComplexMatrix T = ComplexMatrix::Identity(g.nlead, g.nlead) + Tu;
    const double off = off_bidiagonal_norm(bf.base, S, T);
    if (off < best_off) {
      best_off = off;
      bestS = S;
      bestT = T;
    }
    if (off > prev_off) {
      if (++increases >= 2) {
        bf.diverged = true;
        break;
      }
    } else {
      increases = 0;
    }
    prev_off = off;
  }
  bf.S = bestS;
  bf.T = bestT;
  bf.off_norm = best_off;
  return bf;
}

// Decoupled block upper triangular form: the Kronecker (right-singular) part,
// the nilpotent regular part at lambda0, and the full-column-rank tail.
struct SeparatedForm {
  ComplexMatrix Shat, That;  // total transforms: Shat^{-1} Lhat That = G
  ComplexMatrix WS, WT;      // unit upper triangular parts before permutation
  ComplexMatrix G_A, G_E;    // computed separated pencil (m x n)
  Eigen::VectorXi perm_rows, perm_cols;  // new position -> old position
  std::vector<Index> s, t;               // parent staircase indices
  std::vector<Index> s_red, t_red, s_blue, t_blue;
  ComplexMatrix epsA, epsE;    // A_eps + mu E_eps, exact stair assembly
  ComplexMatrix zeroA, zeroE;  // A_0 + mu E_0, exact stair assembly
  std::vector<ComplexMatrix> red_e_stairs, red_a_stairs;    // Ehat cores / Ahat cores
  std::vector<ComplexMatrix> blue_e_stairs, blue_a_stairs;  // Ehat cores / Ahat cores
  Index tail_rows = 0, tail_cols = 0;
  Index red_rows = 0, red_cols = 0, blue_dim = 0;
  double tol = 0.0;
};

namespace detail {

struct RedBlueSplit {
  std::vector<Index> sr, tr, sb, tbv;
};

inline RedBlueSplit red_blue_indices(const std::vector<Index>& s, const std::vector<Index>& t) {
  const Index k = static_cast<Index>(s.size());
  RedBlueSplit rb;
  rb.sr.assign(s.size(), 0);
  rb.tr.assign(s.size(), 0);
  rb.sb.assign(s.size(), 0);
  rb.tbv.assign(s.size(), 0);
  for (Index i = k - 1; i >= 0; --i) {
    rb.sr[i] = (i == k - 1) ? 0 : rb.tr[i + 1];
    rb.sb[i] = s[static_cast<size_t>(i)] - rb.sr[i];
    rb.tbv[i] = rb.sb[i];
    rb.tr[i] = t[static_cast<size_t>(i)] - rb.tbv[i];
    if (rb.tr[i] < 0 || rb.sb[i] < 0)
      throw ContractViolation("split_structure: inconsistent staircase indices");
  }
  return rb;
}

}  // namespace detail

// Splits the bidiagonal form into the right-singular (red) and nilpotent
// regular (blue) parts: zeroes the red x blue corner of every stair by unit
// upper triangular updates, then permutes rows/columns to decouple.
inline SeparatedForm split_structure(const BidiagonalForm& bf) {
  const TriangularStairForm& tf = bf.base;
  const detail::BlockGrid g(tf.s, tf.t);
  const Index k = g.k;
  const Index m = tf.rows(), n = tf.cols();

  SeparatedForm sep;
  sep.s = tf.s;
  sep.t = tf.t;
  sep.tail_rows = tf.tail_rows;
  sep.tail_cols = tf.tail_cols;
  sep.tol = tf.tol;

  const auto rb = (k > 0) ? detail::red_blue_indices(tf.s, tf.t) : detail::RedBlueSplit{};
  sep.s_red = rb.sr;
  sep.t_red = rb.tr;
  sep.s_blue = rb.sb;
  sep.t_blue = rb.tbv;

  // Corner elimination: within each stair, zero the red-row x blue-col part.
  // M_i mixes blue rows into red rows of block i, N_i red cols into blue cols.
  std::vector<ComplexMatrix> M(static_cast<size_t>(k)), N(static_cast<size_t>(k));
  std::vector<ComplexMatrix> eHat(static_cast<size_t>(k)), aHat(static_cast<size_t>(k));
  for (Index i = 0; i < k; ++i) {
    eHat[static_cast<size_t>(i)] = tf.e_stair(i);
    if (i + 1 < k) aHat[static_cast<size_t>(i)] = tf.a_stair(i);
  }
  for (Index i = k - 1; i >= 0; --i) {
    const Index sr = rb.sr[i], sbl = rb.sb[i], tr = rb.tr[i], tbl = rb.tbv[i];
    if (i == k - 1) {
      M[static_cast<size_t>(i)] = ComplexMatrix::Zero(sr, sbl);
    } else {
      const Index trn = rb.tr[i + 1], tbn = rb.tbv[i + 1];
      const ComplexMatrix& Ah = aHat[static_cast<size_t>(i)];
      ComplexMatrix Mi = ComplexMatrix::Zero(sr, sbl);
      if (sr > 0 && tbn > 0) {
        const ComplexMatrix Arr = Ah.topLeftCorner(trn, trn);
        const ComplexMatrix Arb = Ah.topRightCorner(trn, tbn);
        const ComplexMatrix Abb = Ah.bottomRightCorner(tbn, tbn);
        ComplexMatrix rhs = -(Arb + Arr * N[static_cast<size_t>(i + 1)]);
        Mi.leftCols(tbn) =
            Abb.triangularView<Eigen::Upper>().transpose().solve(rhs.transpose()).transpose();
      }
      M[static_cast<size_t>(i)] = std::move(Mi);
    }
    ComplexMatrix Ni = ComplexMatrix::Zero(tr, tbl);
    if (sr > 0 && tbl > 0) {
      const ComplexMatrix& Eh = eHat[static_cast<size_t>(i)];
      const ComplexMatrix Err = Eh.topLeftCorner(sr, sr);
      const ComplexMatrix Erb = Eh.topRightCorner(sr, sbl);
      const ComplexMatrix Ebb = Eh.bottomRightCorner(sbl, sbl);
      ComplexMatrix acc = -(Erb + M[static_cast<size_t>(i)] * Ebb);
      Ni.bottomRows(sr) = Err.triangularView<Eigen::Upper>().solve(acc);
    }
    N[static_cast<size_t>(i)] = std::move(Ni);
  }

  // Fold the corner elimination into the triangular pair.
  ComplexMatrix S2 = ComplexMatrix::Identity(g.mlead, g.mlead);
  ComplexMatrix T2 = ComplexMatrix::Identity(g.nlead, g.nlead);
  for (Index i = 0; i < k; ++i) {
    const Index sr = rb.sr[i], sbl = rb.sb[i], tr = rb.tr[i], tbl = rb.tbv[i];
    if (sr > 0 && sbl > 0) S2.block(g.ro[i], g.ro[i] + sr, sr, sbl) = -M[static_cast<size_t>(i)];
    if (tr > 0 && tbl > 0) T2.block(g.co[i], g.co[i] + tr, tr, tbl) = N[static_cast<size_t>(i)];
  }
  const ComplexMatrix Slead = bf.S * S2;  // S * (I - M_embed)
  const ComplexMatrix Tlead = bf.T * T2;

  // Decoupled stair cores.
  sep.red_e_stairs.resize(static_cast<size_t>(k));
  sep.red_a_stairs.resize(static_cast<size_t>(k));
  sep.blue_e_stairs.resize(static_cast<size_t>(k));
  sep.blue_a_stairs.resize(static_cast<size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const Index sr = rb.sr[i], sbl = rb.sb[i];
    const ComplexMatrix& Eh = eHat[static_cast<size_t>(i)];
    sep.red_e_stairs[static_cast<size_t>(i)] = Eh.topLeftCorner(sr, sr);
    sep.blue_e_stairs[static_cast<size_t>(i)] = Eh.bottomRightCorner(sbl, sbl);
    if (i + 1 < k) {
      const Index trn = rb.tr[i + 1], tbn = rb.tbv[i + 1];
      const ComplexMatrix& Ah = aHat[static_cast<size_t>(i)];
      sep.red_a_stairs[static_cast<size_t>(i)] = Ah.topLeftCorner(trn, trn);
      sep.blue_a_stairs[static_cast<size_t>(i)] = Ah.bottomRightCorner(tbn, tbn);
    }
  }

  // Permutations: red rows/cols of every block first, then blue, then tail.
  std::vector<int> rows_red, rows_blue, cols_red, cols_blue;
  for (Index i = 0; i < k; ++i) {
    for (Index r = 0; r < rb.sr[i]; ++r) rows_red.push_back(static_cast<int>(g.ro[i] + r));
    for (Index r = rb.sr[i]; r < g.s[static_cast<size_t>(i)]; ++r)
      rows_blue.push_back(static_cast<int>(g.ro[i] + r));
    for (Index c = 0; c < rb.tr[i]; ++c) cols_red.push_back(static_cast<int>(g.co[i] + c));
    for (Index c = rb.tr[i]; c < g.t[static_cast<size_t>(i)]; ++c)
      cols_blue.push_back(static_cast<int>(g.co[i] + c));
  }
  sep.perm_rows.resize(m);
  sep.perm_cols.resize(n);
  Index p = 0;
  for (int r : rows_red) sep.perm_rows(p++) = r;
  for (int r : rows_blue) sep.perm_rows(p++) = r;
  for (Index r = g.mlead; r < m; ++r) sep.perm_rows(p++) = static_cast<int>(r);
  p = 0;
  for (int c : cols_red) sep.perm_cols(p++) = c;
  for (int c : cols_blue) sep.perm_cols(p++) = c;
  for (Index c = g.nlead; c < n; ++c) sep.perm_cols(p++) = static_cast<int>(c);

  sep.red_rows = static_cast<Index>(rows_red.size());
  sep.red_cols = static_cast<Index>(cols_red.size());
  sep.blue_dim = static_cast<Index>(cols_blue.size());

  // Total transforms and the separated pencil.
  sep.WS = ComplexMatrix::Identity(m, m);
  sep.WS.topLeftCorner(g.mlead, g.mlead) = Slead;
  sep.WT = ComplexMatrix::Identity(n, n);
  sep.WT.topLeftCorner(g.nlead, g.nlead) = Tlead;

  ComplexMatrix MA = sep.WS.triangularView<Eigen::Upper>().solve(tf.A * sep.WT);
  ComplexMatrix ME = sep.WS.triangularView<Eigen::Upper>().solve(tf.E * sep.WT);
  sep.G_A = MA(sep.perm_rows, sep.perm_cols);
  sep.G_E = ME(sep.perm_rows, sep.perm_cols);

  ComplexMatrix Prt = ComplexMatrix::Zero(m, m);  // Pr^T: column j of Pr^T is e_{ir[j]}
  for (Index j = 0; j < m; ++j) Prt(sep.perm_rows(j), j) = 1.0;
  ComplexMatrix Pct = ComplexMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) Pct(sep.perm_cols(j), j) = 1.0;
  sep.Shat = tf.U * sep.WS * Prt;
  sep.That = tf.V * sep.WT * Pct;

  // Exact assembly of the two decoupled diagonal pencils.
  detail::BlockGrid gr(rb.sr, rb.tr);
  sep.epsA = ComplexMatrix::Zero(gr.mlead, gr.nlead);
  sep.epsE = ComplexMatrix::Zero(gr.mlead, gr.nlead);
  for (Index i = 0; i < k; ++i) {
    const Index sr = rb.sr[i], tr = rb.tr[i];
    if (sr > 0) sep.epsE.block(gr.ro[i], gr.co[i] + (tr - sr), sr, sr) = sep.red_e_stairs[static_cast<size_t>(i)];
    if (i + 1 < k && sr > 0)
      sep.epsA.block(gr.ro[i], gr.co[i + 1], sr, sr) = sep.red_a_stairs[static_cast<size_t>(i)];
  }
  detail::BlockGrid gb(rb.sb, rb.tbv);
  sep.zeroA = ComplexMatrix::Zero(gb.mlead, gb.nlead);
  sep.zeroE = ComplexMatrix::Zero(gb.mlead, gb.nlead);
  for (Index i = 0; i < k; ++i) {
    const Index sbl = rb.sb[i];
    if (sbl > 0) sep.zeroE.block(gb.ro[i], gb.co[i], sbl, sbl) = sep.blue_e_stairs[static_cast<size_t>(i)];
    if (i + 1 < k) {
      const Index tbn = rb.tbv[i + 1];
      if (sbl > 0 && tbn > 0)
        sep.zeroA.block(gb.ro[i], gb.co[i + 1], tbn, tbn) = sep.blue_a_stairs[static_cast<size_t>(i)];
    }
  }
  return sep;
}

// Bidiagonal form with all stairs scaled to identities; S', T' are upper
// triangular (no longer unit) and absorb the stair inverses.
struct KroneckerForm {
  ComplexMatrix A_K, E_K;        // computed Kronecker-like pencil, m x n
  ComplexMatrix Sprime, Tprime;  // total triangular transforms, m x m / n x n
  std::vector<Index> s, t;
  Index tail_rows = 0, tail_cols = 0;
};

// Exact 0/1 pattern of the Kronecker-like form for a staircase (s, t):
// E stairs [0 I_{s_i}], A stairs [I_{t_{i+1}}; 0], leading part only.
inline std::pair<ComplexMatrix, ComplexMatrix> ideal_kronecker_pattern(const std::vector<Index>& s,
                                                                       const std::vector<Index>& t) {
  const detail::BlockGrid g(s, t);
  ComplexMatrix A = ComplexMatrix::Zero(g.mlead, g.nlead);
  ComplexMatrix E = ComplexMatrix::Zero(g.mlead, g.nlead);
  for (Index i = 0; i < g.k; ++i) {
    const Index si = g.s[static_cast<size_t>(i)], ti = g.t[static_cast<size_t>(i)];
    if (si > 0)
      E.block(g.ro[i], g.co[i] + (ti - si), si, si) = ComplexMatrix::Identity(si, si);
    if (i + 1 < g.k) {
      const Index tn = g.t[static_cast<size_t>(i + 1)];
      if (tn > 0) A.block(g.ro[i], g.co[i + 1], tn, tn) = ComplexMatrix::Identity(tn, tn);
    }
  }
  return {std::move(A), std::move(E)};
}

inline KroneckerForm kronecker_normalize(const SeparatedForm& sep, const BidiagonalForm& bf) {
  const TriangularStairForm& tf = bf.base;
  const detail::BlockGrid g(tf.s, tf.t);
  const Index k = g.k;
  const Index m = tf.rows(), n = tf.cols();

  // Current stairs after corner decoupling: block diagonal (red, blue) cores.
  std::vector<ComplexMatrix> eHat(static_cast<size_t>(k)), aHat(static_cast<size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const Index sr = sep.s_red[static_cast<size_t>(i)], sbl = sep.s_blue[static_cast<size_t>(i)];
    ComplexMatrix Eh = ComplexMatrix::Zero(sr + sbl, sr + sbl);
    Eh.topLeftCorner(sr, sr) = sep.red_e_stairs[static_cast<size_t>(i)];
    Eh.bottomRightCorner(sbl, sbl) = sep.blue_e_stairs[static_cast<size_t>(i)];
    eHat[static_cast<size_t>(i)] = std::move(Eh);
    if (i + 1 < k) {
      const Index trn = sep.t_red[static_cast<size_t>(i + 1)], tbn = sep.t_blue[static_cast<size_t>(i + 1)];
      ComplexMatrix Ah = ComplexMatrix::Zero(trn + tbn, trn + tbn);
      Ah.topLeftCorner(trn, trn) = sep.red_a_stairs[static_cast<size_t>(i)];
      Ah.bottomRightCorner(tbn, tbn) = sep.blue_a_stairs[static_cast<size_t>(i)];
      aHat[static_cast<size_t>(i)] = std::move(Ah);
    }
  }

  auto check_invertible = [](const ComplexMatrix& x, const char* what) {
    for (Index d = 0; d < x.rows(); ++d)
      if (!(std::abs(x(d, d)) > 0.0)) throw ContractViolation(std::string("kronecker_normalize: ") + what);
  };

  // Backward sweep: make each E stair [0 I] by a column scaling, then the A
  // stair above it [I; 0] by a row scaling. S3inv/T3 collect the block factors.
  ComplexMatrix S3inv = ComplexMatrix::Identity(g.mlead, g.mlead);  // = S3^{-1}, upper triangular
  ComplexMatrix T3 = ComplexMatrix::Identity(g.nlead, g.nlead);
  for (Index i = k - 1; i >= 0; --i) {
    const Index si = g.s[static_cast<size_t>(i)], ti = g.t[static_cast<size_t>(i)];
    if (si > 0) {
      const ComplexMatrix& Eh = eHat[static_cast<size_t>(i)];
      check_invertible(Eh, "singular E stair");
      ComplexMatrix inv = Eh.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(si, si));
      T3.block(g.co[i] + (ti - si), g.co[i] + (ti - si), si, si) = inv;
      if (i > 0 && aHat[static_cast<size_t>(i - 1)].rows() > 0) {
        ComplexMatrix& Ah = aHat[static_cast<size_t>(i - 1)];  // t_i x t_i, on full column block i
        Ah.rightCols(si) = (Ah.rightCols(si) * inv).eval();
      }
    }
    if (i > 0 && aHat[static_cast<size_t>(i - 1)].rows() > 0) {
      ComplexMatrix& Ah = aHat[static_cast<size_t>(i - 1)];
      const Index tn = Ah.rows();  // = t_i <= s_{i-1}
      check_invertible(Ah, "singular A stair");
      S3inv.block(g.ro[i - 1], g.ro[i - 1], tn, tn) = Ah;
      ComplexMatrix inv = Ah.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(tn, tn));
      const Index sp = g.s[static_cast<size_t>(i - 1)];
      ComplexMatrix& Ehp = eHat[static_cast<size_t>(i - 1)];
      Ehp.topRows(tn) = (inv * Ehp.topRows(tn)).eval();
      (void)sp;
    }
  }

  KroneckerForm kf;
  kf.s = tf.s;
  kf.t = tf.t;
  kf.tail_rows = tf.tail_rows;
  kf.tail_cols = tf.tail_cols;

  ComplexMatrix S3inv_full = ComplexMatrix::Identity(m, m);
  S3inv_full.topLeftCorner(g.mlead, g.mlead) = S3inv;
  ComplexMatrix T3_full = ComplexMatrix::Identity(n, n);
  T3_full.topLeftCorner(g.nlead, g.nlead) = T3;

  kf.Sprime = sep.WS * S3inv_full;  // upper triangular, non-unit
  kf.Tprime = sep.WT * T3_full;
  kf.A_K = kf.Sprime.triangularView<Eigen::Upper>().solve(tf.A * kf.Tprime);
  kf.E_K = kf.Sprime.triangularView<Eigen::Upper>().solve(tf.E * kf.Tprime);
  return kf;
}

}  // namespace pencilstruct
