#pragma once

#include <vector>

#include "pencilstruct/bidiagonal.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

enum class Frame { bidiagonal, original };

// Coefficients of (A0 + mu A1) * P(mu).
inline PolyMatrix pencil_times_poly(const ComplexMatrix& A0, const ComplexMatrix& A1,
                                    const PolyMatrix& p) {
  const size_t d = p.coeffs.size();
  std::vector<ComplexMatrix> out(d + 1, ComplexMatrix::Zero(A0.rows(), p.cols()));
  for (size_t j = 0; j < d; ++j) {
    out[j] += A0 * p.coeffs[j];
    out[j + 1] += A1 * p.coeffs[j];
  }
  PolyMatrix q(std::move(out), p.lambda0);
  return q;
}

struct MinimalBasis {
  PolyMatrix N;               // n x (n - r), columns ordered by ascending degree
  std::vector<int> degrees;   // per-column degree = its minimal index
  Frame frame = Frame::bidiagonal;
};

struct RootPolynomialSet {
  std::vector<PolyMatrix> vectors;  // single-column polynomials
  std::vector<int> orders;          // descending
  Complex lambda0{0.0, 0.0};
  Frame frame = Frame::bidiagonal;
};

struct RightInverse {
  PolyMatrix R;
  Frame frame = Frame::bidiagonal;
};

namespace detail {

inline void check_stair_invertible(const ComplexMatrix& x, const char* what) {
  for (Index d = 0; d < x.rows(); ++d)
    if (!(std::abs(x(d, d)) > 0.0)) throw ContractViolation(std::string(what) + ": singular stair");
}

// Z_i = [0  -Ahat_i^{-1} Ehat_i] for the red (right-singular) pencil.
inline std::vector<ComplexMatrix> red_z_blocks(const SeparatedForm& sep) {
  const Index k = static_cast<Index>(sep.t_red.size());
  std::vector<ComplexMatrix> Z;
  for (Index i = 0; i + 1 < k; ++i) {
    const Index sr = sep.s_red[static_cast<size_t>(i)];
    const Index tr = sep.t_red[static_cast<size_t>(i)];
    if (sr == 0) {
      Z.emplace_back(ComplexMatrix::Zero(0, tr));
      continue;
    }
    const ComplexMatrix& Ah = sep.red_a_stairs[static_cast<size_t>(i)];
    const ComplexMatrix& Eh = sep.red_e_stairs[static_cast<size_t>(i)];
    check_stair_invertible(Ah, "minimal_basis");
    ComplexMatrix Zi = ComplexMatrix::Zero(sr, tr);
    Zi.rightCols(sr) = -Ah.triangularView<Eigen::Upper>().solve(Eh);
    Z.push_back(std::move(Zi));
  }
  return Z;
}

}  // namespace detail

// Minimal polynomial basis of the right nullspace of the red pencil:
// N(mu) = [I; Z_1 mu; ...; Z_{k-1}...Z_1 mu^{k-1}], in red coordinates.
inline MinimalBasis minimal_basis(const SeparatedForm& sep, Complex lambda0) {
  const std::vector<Index>& sr = sep.s_red;
  const std::vector<Index>& tr = sep.t_red;
  const Index k = static_cast<Index>(tr.size());
  const detail::BlockGrid g(sr, tr);
  const Index ncols = k > 0 ? tr[0] : 0;

  MinimalBasis mb;
  mb.frame = Frame::bidiagonal;
  if (ncols == 0) {
    mb.N = PolyMatrix::zero(g.nlead, 0, lambda0);
    return mb;
  }

  const auto Z = detail::red_z_blocks(sep);
  std::vector<ComplexMatrix> coeffs;
  ComplexMatrix prod = ComplexMatrix::Identity(ncols, ncols);  // Z_j ... Z_1, starts empty
  for (Index j = 0; j < k; ++j) {
    if (j > 0) {
      if (sr[static_cast<size_t>(j - 1)] == 0) break;  // nilpotent chain exhausted
      prod = (Z[static_cast<size_t>(j - 1)] * prod).eval();
    }
    ComplexMatrix c = ComplexMatrix::Zero(g.nlead, ncols);
    c.block(g.co[j], 0, tr[static_cast<size_t>(j)], ncols) = prod;
    coeffs.push_back(std::move(c));
  }
  mb.N = PolyMatrix(std::move(coeffs), lambda0);

  // Column c (0-based) has degree #{h : s_h > t_1 - (c+1)}.
  for (Index c = 0; c < ncols; ++c) {
    int deg = 0;
    for (Index h = 0; h + 1 < k; ++h)
      if (sr[static_cast<size_t>(h)] > ncols - (c + 1)) ++deg;
    mb.degrees.push_back(deg);
  }
  return mb;
}

// Maximal set of root polynomials of the blue pencil at lambda0, in blue
// coordinates: order class i contributes the rightmost t_i - t_{i+1} columns.
inline RootPolynomialSet root_polynomials(const SeparatedForm& sep, Complex lambda0) {
  const std::vector<Index>& tb = sep.t_blue;
  const Index k = static_cast<Index>(tb.size());
  const detail::BlockGrid g(sep.s_blue, tb);

  RootPolynomialSet rps;
  rps.lambda0 = lambda0;
  rps.frame = Frame::bidiagonal;

  // Zhat_i = -E_{i,i}^{-1} A_{i,i+1}, size t_i x t_{i+1}.
  std::vector<ComplexMatrix> Zh;
  for (Index i = 0; i + 1 < k; ++i) {
    const Index ti = tb[static_cast<size_t>(i)], tn = tb[static_cast<size_t>(i + 1)];
    const ComplexMatrix& Eh = sep.blue_e_stairs[static_cast<size_t>(i)];
    if (ti > 0) detail::check_stair_invertible(Eh, "root_polynomials");
    ComplexMatrix Ai = ComplexMatrix::Zero(ti, tn);
    if (tn > 0) Ai.topRows(tn) = sep.blue_a_stairs[static_cast<size_t>(i)];
    Zh.push_back(ti > 0 ? ComplexMatrix(-Eh.triangularView<Eigen::Upper>().solve(Ai))
                        : ComplexMatrix::Zero(0, tn));
  }

  for (Index ord = k; ord >= 1; --ord) {
    const Index ti = tb[static_cast<size_t>(ord - 1)];
    const Index tn = ord < k ? tb[static_cast<size_t>(ord)] : 0;
    const Index count = ti - tn;
    if (count <= 0) continue;
    // Selection of the rightmost count columns of I_{t_ord}; build the block
    // vector top-down: block row j carries mu^{j-1} (Zhat_j ... Zhat_{ord-1}) Sel.
    std::vector<ComplexMatrix> tails(static_cast<size_t>(ord));
    ComplexMatrix cur = ComplexMatrix::Identity(ti, ti).rightCols(count);
    tails[static_cast<size_t>(ord - 1)] = cur;
    for (Index j = ord - 1; j >= 1; --j) {
      cur = (Zh[static_cast<size_t>(j - 1)] * cur).eval();
      tails[static_cast<size_t>(j - 1)] = cur;
    }
    for (Index c = 0; c < count; ++c) {
      std::vector<ComplexMatrix> coeffs(static_cast<size_t>(ord),
                                        ComplexMatrix::Zero(g.nlead, 1));
      for (Index j = 0; j < ord; ++j)
        coeffs[static_cast<size_t>(j)].block(g.co[j], 0, tb[static_cast<size_t>(j)], 1) =
            tails[static_cast<size_t>(j)].col(c);
      rps.vectors.emplace_back(std::move(coeffs), lambda0);
      rps.orders.push_back(static_cast<int>(ord));
    }
  }
  return rps;
}

// Polynomial right inverse of the red pencil: R_0 = A_eps^dagger,
// R_j = Z R_{j-1} with nilpotent Z, so deg R <= k-1.
inline RightInverse right_inverse(const SeparatedForm& sep, Complex lambda0) {
  const std::vector<Index>& sr = sep.s_red;
  const std::vector<Index>& tr = sep.t_red;
  const Index k = static_cast<Index>(tr.size());
  const detail::BlockGrid g(sr, tr);

  RightInverse ri;
  ri.frame = Frame::bidiagonal;
  if (g.mlead == 0) {
    ri.R = PolyMatrix::zero(g.nlead, 0, lambda0);
    return ri;
  }

  ComplexMatrix Adag = ComplexMatrix::Zero(g.nlead, g.mlead);
  for (Index i = 0; i + 1 < k; ++i) {
    const Index si = sr[static_cast<size_t>(i)];
    if (si == 0) continue;
    const ComplexMatrix& Ah = sep.red_a_stairs[static_cast<size_t>(i)];
    detail::check_stair_invertible(Ah, "right_inverse");
    Adag.block(g.co[i + 1], g.ro[i], si, si) =
        Ah.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(si, si));
  }
  const auto Zb = detail::red_z_blocks(sep);
  ComplexMatrix Zmat = ComplexMatrix::Zero(g.nlead, g.nlead);
  for (Index i = 0; i + 1 < k; ++i) {
    const Index si = sr[static_cast<size_t>(i)];
    if (si == 0) continue;
    Zmat.block(g.co[i + 1], g.co[i], si, tr[static_cast<size_t>(i)]) = Zb[static_cast<size_t>(i)];
  }

  std::vector<ComplexMatrix> coeffs;
  ComplexMatrix cur = Adag;
  coeffs.push_back(cur);
  for (Index j = 1; j < k; ++j) {
    cur = (Zmat * cur).eval();
    if (cur.norm() == 0.0) break;
    coeffs.push_back(cur);
  }
  ri.R = PolyMatrix(std::move(coeffs), lambda0);
  return ri;
}

// Embeds red/blue coordinate vectors into the full column space and maps
// them back through That (and the pencil's unitary part within it).
inline std::pair<MinimalBasis, RootPolynomialSet> lift_to_original(const SeparatedForm& sep,
                                                                   const MinimalBasis& mb,
                                                                   const RootPolynomialSet& rps) {
  if (mb.frame != Frame::bidiagonal || rps.frame != Frame::bidiagonal)
    throw InputError("lift_to_original: inputs must be in bidiagonal frame");
  const Index n = sep.That.rows();

  MinimalBasis out_mb;
  out_mb.frame = Frame::original;
  out_mb.degrees = mb.degrees;
  {
    std::vector<ComplexMatrix> coeffs;
    coeffs.reserve(mb.N.coeffs.size());
    for (const auto& c : mb.N.coeffs) {
      ComplexMatrix padded = ComplexMatrix::Zero(n, c.cols());
      padded.topRows(c.rows()) = c;
      coeffs.push_back(sep.That * padded);
    }
    if (coeffs.empty()) coeffs.push_back(ComplexMatrix::Zero(n, 0));
    out_mb.N = PolyMatrix(std::move(coeffs), mb.N.lambda0);
  }

  RootPolynomialSet out_rps;
  out_rps.frame = Frame::original;
  out_rps.orders = rps.orders;
  out_rps.lambda0 = rps.lambda0;
  for (const auto& q : rps.vectors) {
    std::vector<ComplexMatrix> coeffs;
    coeffs.reserve(q.coeffs.size());
    for (const auto& c : q.coeffs) {
      ComplexMatrix padded = ComplexMatrix::Zero(n, 1);
      padded.block(sep.red_cols, 0, c.rows(), 1) = c;
      coeffs.push_back(sep.That * padded);
    }
    out_rps.vectors.emplace_back(std::move(coeffs), q.lambda0);
  }
  return {std::move(out_mb), std::move(out_rps)};
}

}  // namespace pencilstruct
