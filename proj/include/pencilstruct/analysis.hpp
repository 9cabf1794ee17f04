#pragma once

#include <algorithm>

#include "pencilstruct/bidiagonal.hpp"
#include "pencilstruct/extract.hpp"
#include "pencilstruct/staircase.hpp"
#include "pencilstruct/toeplitz.hpp"
#include "pencilstruct/types.hpp"

namespace pencilstruct {

inline Pencil make_pencil(const ComplexMatrix& L0, const ComplexMatrix& L1) {
  if (L0.rows() != L1.rows() || L0.cols() != L1.cols())
    throw InputError("make_pencil: L0 and L1 must share dimensions");
  require_finite(L0, "make_pencil.L0");
  require_finite(L1, "make_pencil.L1");
  Pencil p;
  const double scale = std::max(spectral_norm(L0), spectral_norm(L1));
  p.norm_scale = scale > 0.0 ? scale : 1.0;
  p.L0 = L0 / p.norm_scale;
  p.L1 = L1 / p.norm_scale;
  return p;
}

struct PipelineOptions {
  Complex lambda0{0.0, 0.0};
  double tol = -1.0;  // < 0: max(m,n) * eps * max(||Lhat0||, ||Lhat1||)
  int refine_iters = 2;
};

// Everything the right-structure pipeline produces for one pencil.
struct PipelineResult {
  ShiftedPencil sp;
  StaircaseForm sf;
  TriangularStairForm tsf;
  BidiagonalForm bf;
  SeparatedForm sep;
  KroneckerForm kf;
  MinimalBasis basis_bidiag, basis;
  RootPolynomialSet roots_bidiag, roots;
  RightInverse rinv;
  double tol_used = 0.0;
};

inline PipelineResult run_right_pipeline(const Pencil& p, const PipelineOptions& opt) {
  PipelineResult r;
  r.sp = make_shifted(p, opt.lambda0);
  r.tol_used = opt.tol >= 0.0
                   ? opt.tol
                   : default_tolerance(p.rows(), p.cols(),
                                       std::max(spectral_norm(r.sp.Lhat0), spectral_norm(r.sp.Lhat1)));
  r.sf = staircase_reduce(r.sp, r.tol_used);
  r.tsf = triangularize_stairs(r.sf);
  r.bf = refine(block_bidiagonalize(r.tsf), opt.refine_iters);
  r.sep = split_structure(r.bf);
  r.kf = kronecker_normalize(r.sep, r.bf);
  r.basis_bidiag = minimal_basis(r.sep, opt.lambda0);
  r.roots_bidiag = root_polynomials(r.sep, opt.lambda0);
  r.rinv = right_inverse(r.sep, opt.lambda0);
  auto lifted = lift_to_original(r.sep, r.basis_bidiag, r.roots_bidiag);
  r.basis = std::move(lifted.first);
  r.roots = std::move(lifted.second);
  return r;
}

struct LeftStructure {
  std::vector<int> left_minimal;
  // Minimal basis Y of the conjugate-transposed pencil L0^* + lambda L1^* at
  // conj(lambda0); its columns y satisfy y(mu)^* (L0 + lambda L1) = 0 after
  // conjugating coefficients.
  MinimalBasis basis;
};

inline LeftStructure left_structure(const Pencil& p, Complex lambda0, const PipelineOptions& base_opt = {}) {
  Pencil adj;
  adj.L0 = p.L0.adjoint();
  adj.L1 = p.L1.adjoint();
  adj.norm_scale = p.norm_scale;
  PipelineOptions opt = base_opt;
  opt.lambda0 = std::conj(lambda0);
  PipelineResult r = run_right_pipeline(adj, opt);
  LeftStructure out;
  StructuralIndices idx = indices_from_staircase(r.sf.s, r.sf.t);
  out.left_minimal = idx.right_minimal;
  out.basis = r.basis;
  return out;
}

struct AnalyzeOptions {
  Complex lambda0{0.0, 0.0};
  double tol = -1.0;
  int refine_iters = 2;
  bool with_oracle = false;
  Index oracle_kmax = -1;  // < 0: min(m,n) + 1
  bool expand_monomial = false;
};

struct StructureReport {
  Index m = 0, n = 0;
  Complex lambda0{0.0, 0.0};
  double norm_scale = 1.0;
  double tol_used = 0.0;

  StructuralIndices indices;
  std::vector<Index> s, t;
  std::vector<Index> s_red, t_red, s_blue, t_blue;

  MinimalBasis basis;       // original coordinates, shifted-variable coefficients
  RootPolynomialSet roots;  // original coordinates
  RightInverse rinv;        // bidiagonal frame of the red part
  MinimalBasis left_basis;  // minimal basis of the conjugate-transposed pencil

  ResidualReport residuals;
  double off_norm_initial = 0.0, off_norm_final = 0.0;
  int refinement_iterations = 0;
  bool refine_diverged = false;

  bool oracle_run = false;
  ToeplitzReport oracle;

  RankDecision tail_decision;
  std::vector<RankDecision> col_decisions, row_decisions;
};

inline StructureReport analyze(const ComplexMatrix& L0, const ComplexMatrix& L1,
                               const AnalyzeOptions& opt = {}) {
  Pencil p = make_pencil(L0, L1);
  PipelineOptions popt;
  popt.lambda0 = opt.lambda0;
  popt.tol = opt.tol;
  popt.refine_iters = opt.refine_iters;
  PipelineResult r = run_right_pipeline(p, popt);

  StructureReport rep;
  rep.m = p.rows();
  rep.n = p.cols();
  rep.lambda0 = opt.lambda0;
  rep.norm_scale = p.norm_scale;
  rep.tol_used = r.tol_used;
  rep.s = r.sf.s;
  rep.t = r.sf.t;
  rep.s_red = r.sep.s_red;
  rep.t_red = r.sep.t_red;
  rep.s_blue = r.sep.s_blue;
  rep.t_blue = r.sep.t_blue;

  rep.indices = indices_from_staircase(r.sf.s, r.sf.t);
  rep.indices.normal_rank = rep.n - static_cast<Index>(rep.indices.right_minimal.size());

  PipelineOptions lopt = popt;
  LeftStructure ls = left_structure(p, opt.lambda0, lopt);
  rep.indices.left_minimal = ls.left_minimal;
  rep.left_basis = std::move(ls.basis);

  rep.basis = std::move(r.basis);
  rep.roots = std::move(r.roots);
  rep.rinv = std::move(r.rinv);

  rep.residuals = residual_report(r.sp, r.kf, r.tsf, rep.basis, rep.roots);
  rep.off_norm_initial = r.bf.off_norm_initial;
  rep.off_norm_final = r.bf.off_norm;
  rep.refinement_iterations = r.bf.refinement_iterations;
  rep.refine_diverged = r.bf.diverged;

  rep.tail_decision = r.sf.tail_decision;
  rep.col_decisions = r.sf.col_decisions;
  rep.row_decisions = r.sf.row_decisions;

  if (opt.with_oracle) {
    const Index kmax = opt.oracle_kmax > 0 ? opt.oracle_kmax : std::min(rep.m, rep.n) + 1;
    rep.oracle = toeplitz_structure(r.sp, kmax, r.tol_used);
    rep.oracle_run = true;
  }
  return rep;
}

}  // namespace pencilstruct
