#include <gtest/gtest.h>

#include <Eigen/QR>

#include "pencilstruct/analysis.hpp"
#include "pencilstruct/bidiagonal.hpp"
#include "pencilstruct/generator.hpp"
#include "test_helpers.hpp"

using namespace pencilstruct;
using pstest::random_complex;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

TriangularStairForm pipeline_tsf(const Pencil& p, Complex lambda0 = {0, 0}) {
  ShiftedPencil sp = make_shifted(p, lambda0);
  const double tol = default_tolerance(p.rows(), p.cols(),
                                       std::max(spectral_norm(sp.Lhat0), spectral_norm(sp.Lhat1)));
  return triangularize_stairs(staircase_reduce(sp, tol));
}

// Triangular stair form assembled directly from matrices already in the
// stair2 pattern (identity transforms), bypassing the unitary reduction.
TriangularStairForm manual_tsf(const ComplexMatrix& A, const ComplexMatrix& E,
                               std::vector<Index> s, std::vector<Index> t, Index tail_rows = 0,
                               Index tail_cols = 0) {
  TriangularStairForm tf;
  tf.U = ComplexMatrix::Identity(A.rows(), A.rows());
  tf.V = ComplexMatrix::Identity(A.cols(), A.cols());
  tf.A = A;
  tf.E = E;
  tf.s = std::move(s);
  tf.t = std::move(t);
  tf.tail_rows = tail_rows;
  tf.tail_cols = tail_cols;
  tf.tol = 1e-12;
  return tf;
}

// Independent dense solve of the elimination system: probes the linear map
// over the sparse (Shat, That) parameter space and solves with column-pivoted QR.
struct DenseEccOracle {
  std::vector<std::pair<Index, Index>> s_params, t_params;  // positions in Su / Tu
  std::vector<std::pair<Index, Index>> a_eqs, e_eqs;        // positions in the A / E parts
  Eigen::MatrixXcd op;
  const TriangularStairForm* tf = nullptr;
  detail::BlockGrid grid{{}, {}};

  explicit DenseEccOracle(const TriangularStairForm& form) : tf(&form), grid(form.s, form.t) {
    const Index k = grid.k;
    for (Index i = 0; i + 2 < k + 1; ++i) {  // i = 0..k-2 (0-based block rows)
      for (Index j = i + 1; j + 1 < k; ++j)  // S blocks (i, j), columns t_{j+1}
        for (Index r = 0; r < grid.s[static_cast<size_t>(i)]; ++r)
          for (Index c = 0; c < grid.t[static_cast<size_t>(j + 1)]; ++c)
            s_params.emplace_back(grid.ro[i] + r, grid.ro[j] + c);
      if (i + 1 >= k) continue;
    }
    for (Index i = 0; i + 1 < k; ++i)
      for (Index j = i + 1; j < k; ++j)
        for (Index r = 0; r < grid.s[static_cast<size_t>(i)]; ++r)
          for (Index c = 0; c < grid.t[static_cast<size_t>(j)]; ++c)
            t_params.emplace_back(grid.co[i] + (grid.t[static_cast<size_t>(i)] - grid.s[static_cast<size_t>(i)]) + r,
                                  grid.co[j] + c);
    for (Index i = 0; i + 2 < k; ++i)
      for (Index j = i + 2; j < k; ++j)
        for (Index r = 0; r < grid.s[static_cast<size_t>(i)]; ++r)
          for (Index c = 0; c < grid.t[static_cast<size_t>(j)]; ++c)
            a_eqs.emplace_back(grid.ro[i] + r, grid.co[j] + c);
    for (Index i = 0; i + 1 < k; ++i)
      for (Index j = i + 1; j < k; ++j)
        for (Index r = 0; r < grid.s[static_cast<size_t>(i)]; ++r)
          for (Index c = 0; c < grid.t[static_cast<size_t>(j)]; ++c)
            e_eqs.emplace_back(grid.ro[i] + r, grid.co[j] + c);

    const Index np = static_cast<Index>(s_params.size() + t_params.size());
    const Index ne = static_cast<Index>(a_eqs.size() + e_eqs.size());
    op.resize(ne, np);
    for (Index pidx = 0; pidx < np; ++pidx) {
      ComplexMatrix Su = ComplexMatrix::Zero(grid.mlead, grid.mlead);
      ComplexMatrix Tu = ComplexMatrix::Zero(grid.nlead, grid.nlead);
      set_params(Su, Tu, Eigen::VectorXcd::Unit(np, pidx));
      op.col(pidx) = apply(Su, Tu);
    }
  }

  void set_params(ComplexMatrix& Su, ComplexMatrix& Tu, const Eigen::VectorXcd& x) const {
    Index idx = 0;
    for (const auto& pos : s_params) Su(pos.first, pos.second) = x(idx++);
    for (const auto& pos : t_params) Tu(pos.first, pos.second) = x(idx++);
  }

  Eigen::VectorXcd apply(const ComplexMatrix& Su, const ComplexMatrix& Tu) const {
    auto [Ad, Ed] = detail::stairs_only(*tf);
    const ComplexMatrix Alead = tf->A.topLeftCorner(grid.mlead, grid.nlead);
    const ComplexMatrix Elead = tf->E.topLeftCorner(grid.mlead, grid.nlead);
    ComplexMatrix FA = Su * Ad - Alead * Tu;
    ComplexMatrix FE = Su * Ed - Elead * Tu;
    Eigen::VectorXcd out(a_eqs.size() + e_eqs.size());
    Index idx = 0;
    for (const auto& pos : a_eqs) out(idx++) = FA(pos.first, pos.second);
    for (const auto& pos : e_eqs) out(idx++) = FE(pos.first, pos.second);
    return out;
  }

  // Solves the system for the actual right-hand side and returns (S, T).
  std::pair<ComplexMatrix, ComplexMatrix> solve() const {
    auto [Ad, Ed] = detail::stairs_only(*tf);
    const ComplexMatrix rhsA = tf->A.topLeftCorner(grid.mlead, grid.nlead) - Ad;
    const ComplexMatrix rhsE = tf->E.topLeftCorner(grid.mlead, grid.nlead) - Ed;
    Eigen::VectorXcd rhs(a_eqs.size() + e_eqs.size());
    Index idx = 0;
    for (const auto& pos : a_eqs) rhs(idx++) = rhsA(pos.first, pos.second);
    for (const auto& pos : e_eqs) rhs(idx++) = rhsE(pos.first, pos.second);
    Eigen::VectorXcd x = op.colPivHouseholderQr().solve(rhs);
    ComplexMatrix Su = ComplexMatrix::Zero(grid.mlead, grid.mlead);
    ComplexMatrix Tu = ComplexMatrix::Zero(grid.nlead, grid.nlead);
    set_params(Su, Tu, x);
    return {ComplexMatrix::Identity(grid.mlead, grid.mlead) + Su,
            ComplexMatrix::Identity(grid.nlead, grid.nlead) + Tu};
  }
};

Pencil matlabex_pencil(std::uint64_t seed, bool disguise = false) {
  GeneratorSpec spec;
  spec.s = {4, 2, 0};
  spec.t = {5, 3, 1};
  spec.seed = seed;
  spec.disguise = disguise;
  return generate_pencil(spec);
}

}  // namespace

TEST(TriangularizeStairs, SingleStairBlock) {
  ComplexMatrix L1(2, 2);
  L1 << 1, 1, 1, 1;
  Pencil p = make_pencil(ComplexMatrix::Zero(2, 2), L1);
  TriangularStairForm tf = pipeline_tsf(p);
  ASSERT_EQ(tf.k(), 1);
  ComplexMatrix eh = tf.e_stair(0);
  EXPECT_GT(eh(0, 0).real(), 0.0);
  EXPECT_NEAR(eh(0, 0).imag(), 0.0, 1e-15);
  ShiftedPencil sp = make_shifted(p, Complex(0, 0));
  EXPECT_LE((tf.U * tf.A * tf.V.adjoint() - sp.Lhat0).norm() +
                (tf.U * tf.E * tf.V.adjoint() - sp.Lhat1).norm(),
            1e-13);
}

TEST(TriangularizeStairs, MatlabexResidualAndDiagonals) {
  Pencil p = matlabex_pencil(3, true);
  ShiftedPencil sp = make_shifted(p, Complex(0, 0));
  TriangularStairForm tf = pipeline_tsf(p);
  ASSERT_EQ(tf.s, (std::vector<Index>{4, 2, 0}));
  for (Index i = 0; i < tf.k(); ++i) {
    ComplexMatrix eh = tf.e_stair(i);
    EXPECT_TRUE(pstest::is_upper_triangular(eh));
    for (Index d = 0; d < eh.rows(); ++d) EXPECT_GE(std::abs(eh(d, d)), tf.tol);
    if (i + 1 < tf.k()) {
      ComplexMatrix ah = tf.a_stair(i);
      EXPECT_TRUE(pstest::is_upper_triangular(ah));
      for (Index d = 0; d < ah.rows(); ++d) EXPECT_GE(std::abs(ah(d, d)), tf.tol);
    }
  }
  EXPECT_LE((tf.U * tf.A * tf.V.adjoint() - sp.Lhat0).norm() +
                (tf.U * tf.E * tf.V.adjoint() - sp.Lhat1).norm(),
            1e-13);
}

TEST(TriangularizeStairs, AlreadyTriangularGivesPhaseUpdatesOnly) {
  Pencil p = matlabex_pencil(11, false);  // generator output is already in stair2 pattern
  StaircaseForm sf;
  sf.U = ComplexMatrix::Identity(6, 6);
  sf.V = ComplexMatrix::Identity(9, 9);
  sf.A = p.L0;
  sf.E = p.L1;
  sf.s = {4, 2, 0};
  sf.t = {5, 3, 1};
  sf.tail_rows = 0;
  sf.tail_cols = 0;
  sf.tol = 1e-12;
  TriangularStairForm tf = triangularize_stairs(sf);
  // The updates U_d = U, V_d = V must be diagonal up to phases.
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      EXPECT_NEAR(std::abs(tf.U(i, j)), i == j ? 1.0 : 0.0, 1e-12);
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 9; ++j)
      EXPECT_NEAR(std::abs(tf.V(i, j)), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(BlockBidiagonalize, SingleBlockKeepsIdentityTransforms) {
  ComplexMatrix L1(2, 2);
  L1 << 1, 1, 1, 1;
  Pencil p = make_pencil(ComplexMatrix::Zero(2, 2), L1);
  BidiagonalForm bf = block_bidiagonalize(pipeline_tsf(p));
  EXPECT_EQ((bf.S - ComplexMatrix::Identity(1, 1)).norm(), 0.0);
  EXPECT_EQ((bf.T - ComplexMatrix::Identity(2, 2)).norm(), 0.0);
  EXPECT_EQ(bf.off_norm, 0.0);
}

TEST(BlockBidiagonalize, TwoBlocksEliminateOffDiagonalE) {
  // k = 2: S stays identity but T_{1,2} must remove E_{1,2}.
  GeneratorSpec spec;
  spec.s = {2, 1};
  spec.t = {3, 2};
  spec.seed = 5;
  Pencil p = generate_pencil(spec);
  TriangularStairForm tf = pipeline_tsf(p);
  ASSERT_EQ(tf.k(), 2);
  BidiagonalForm bf = block_bidiagonalize(tf);
  EXPECT_EQ((bf.S - ComplexMatrix::Identity(3, 3)).norm(), 0.0);
  EXPECT_GT((bf.T - ComplexMatrix::Identity(5, 5)).norm(), 0.0);
  EXPECT_LE(bf.off_norm, 1e-12);
  // Unit diagonals, stored exactly.
  for (Index i = 0; i < 5; ++i) EXPECT_EQ(bf.T(i, i), Complex(1, 0));
}

TEST(BlockBidiagonalize, MatlabexOffNormSmall) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    BidiagonalForm bf = block_bidiagonalize(pipeline_tsf(matlabex_pencil(seed, true)));
    EXPECT_LE(bf.off_norm, 1e-9) << "seed " << seed;  // paper observes 1e-12..1e-9 here
  }
}

TEST(BlockBidiagonalize, MatchesDenseSolveOnIntegerStaircase) {
  // Exact integer pencil in stair2 pattern, k = 3, s = (2,1,0), t = (3,2,1).
  ComplexMatrix A = ComplexMatrix::Zero(3, 6), E = ComplexMatrix::Zero(3, 6);
  E.block(0, 1, 2, 2) << 2, 1, 0, 3;       // E_{1,1} = [0 Ehat]
  E.block(0, 3, 2, 2) << 1, -2, 4, 1;      // E_{1,2}
  E.block(0, 5, 2, 1) << 3, -1;            // E_{1,3}
  E.block(2, 4, 1, 1) << 2;                // E_{2,2} = [0 Ehat]
  E.block(2, 5, 1, 1) << -3;               // E_{2,3}
  A.block(0, 3, 2, 2) << 1, 2, 0, 2;       // A_{1,2} = [Ahat; 0] (square here)
  A.block(0, 5, 2, 1) << 5, -2;            // A_{1,3}
  A.block(2, 5, 1, 1) << 1;                // A_{2,3}
  TriangularStairForm tf = manual_tsf(A, E, {2, 1, 0}, {3, 2, 1});

  BidiagonalForm bf = block_bidiagonalize(tf);
  DenseEccOracle oracle(tf);
  auto [S_ref, T_ref] = oracle.solve();
  EXPECT_LE((bf.S - S_ref).norm(), 1e-12 * (1.0 + S_ref.norm()));
  EXPECT_LE((bf.T - T_ref).norm(), 1e-12 * (1.0 + T_ref.norm()));
  EXPECT_LE(bf.off_norm, 1e-13);
}

TEST(BlockBidiagonalize, MatchesDenseSolveOnRandomMatlabex) {
  for (std::uint64_t seed = 20; seed < 23; ++seed) {
    TriangularStairForm tf = pipeline_tsf(matlabex_pencil(seed, true));
    BidiagonalForm bf = block_bidiagonalize(tf);
    DenseEccOracle oracle(tf);
    auto [S_ref, T_ref] = oracle.solve();
    EXPECT_LE((bf.S - S_ref).norm(), 1e-9 * (1.0 + S_ref.norm())) << "seed " << seed;
    EXPECT_LE((bf.T - T_ref).norm(), 1e-9 * (1.0 + T_ref.norm())) << "seed " << seed;
  }
}

TEST(Refine, ExactFormNeedsNoIterations) {
  ComplexMatrix A = ComplexMatrix::Zero(1, 2), E = ComplexMatrix::Zero(1, 2);
  E(0, 1) = 1.0;
  A(0, 0) = 0.0;
  TriangularStairForm tf = manual_tsf(A, E, {1}, {2});
  BidiagonalForm bf = refine(block_bidiagonalize(tf), 5);
  EXPECT_EQ(bf.refinement_iterations, 0);
  EXPECT_EQ(bf.off_norm, 0.0);
}

TEST(Refine, OffNormNonIncreasingOverSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BidiagonalForm bf0 = block_bidiagonalize(pipeline_tsf(matlabex_pencil(seed, true)));
    BidiagonalForm bf = refine(bf0, 2);
    EXPECT_LE(bf.off_norm, bf0.off_norm) << "seed " << seed;
    EXPECT_FALSE(bf.diverged);
    EXPECT_EQ(bf.off_norm_initial, bf0.off_norm);
  }
}

TEST(Refine, SingleStepShrinksPerturbedSolution) {
  TriangularStairForm tf = pipeline_tsf(matlabex_pencil(77, true));
  BidiagonalForm bf = refine(block_bidiagonalize(tf), 4);

  // Perturb (S, T) inside the admissible sparsity pattern via a structured solve.
  const detail::BlockGrid g(tf.s, tf.t);
  ComplexMatrix noiseA = 1e-6 * random_complex(g.mlead, g.nlead, 99);
  ComplexMatrix noiseE = 1e-6 * random_complex(g.mlead, g.nlead, 100);
  auto [dSu, dTu] = detail::solve_elimination(tf, noiseA, noiseE);
  BidiagonalForm perturbed = bf;
  perturbed.S += dSu;
  perturbed.T += dTu;
  perturbed.off_norm = off_bidiagonal_norm(tf, perturbed.S, perturbed.T);
  ASSERT_GT(perturbed.off_norm, 1e-8);

  BidiagonalForm fixed = refine(perturbed, 1);
  EXPECT_EQ(fixed.refinement_iterations, 1);
  EXPECT_LE(fixed.off_norm, perturbed.off_norm / 10.0);
}

TEST(SplitStructure, MatlabexRedBlueIndices) {
  BidiagonalForm bf = refine(block_bidiagonalize(pipeline_tsf(matlabex_pencil(1, true))), 2);
  SeparatedForm sep = split_structure(bf);
  EXPECT_EQ(sep.t_red, (std::vector<Index>{3, 2, 1}));
  EXPECT_EQ(sep.s_red, (std::vector<Index>{2, 1, 0}));
  EXPECT_EQ(sep.t_blue, (std::vector<Index>{2, 1, 0}));
  EXPECT_EQ(sep.s_blue, (std::vector<Index>{2, 1, 0}));
  // Example permutation: rows [1,2,5 | 3,4,6], columns [1,2,3,6,7,9 | 4,5,8].
  Eigen::VectorXi pr(6), pc(9);
  pr << 0, 1, 4, 2, 3, 5;
  pc << 0, 1, 2, 5, 6, 8, 3, 4, 7;
  EXPECT_EQ(sep.perm_rows, pr);
  EXPECT_EQ(sep.perm_cols, pc);
}

TEST(SplitStructure, PureNilpotentHasEmptyRedPart) {
  GeneratorSpec spec;
  spec.s = {2, 1};
  spec.t = {2, 1};
  spec.seed = 4;
  SeparatedForm sep = split_structure(refine(block_bidiagonalize(pipeline_tsf(generate_pencil(spec))), 2));
  EXPECT_EQ(sep.red_rows, 0);
  EXPECT_EQ(sep.red_cols, 0);
  EXPECT_EQ(sep.blue_dim, 3);
}

TEST(SplitStructure, PureSingularHasEmptyBluePart) {
  GeneratorSpec spec;
  spec.s = {1, 0};
  spec.t = {2, 1};
  spec.seed = 4;
  SeparatedForm sep = split_structure(refine(block_bidiagonalize(pipeline_tsf(generate_pencil(spec))), 2));
  EXPECT_EQ(sep.blue_dim, 0);
  EXPECT_EQ(sep.red_cols, 3);
}

TEST(SplitStructure, SeparatedPencilIsDecoupledBlockTriangular) {
  // Pencil with nontrivial red, blue, and tail parts.
  GeneratorSpec spec;
  spec.s = {3, 1};
  spec.t = {4, 2};
  spec.seed = 9;
  Pencil core = generate_pencil(spec);
  const Index mt = 3;
  ComplexMatrix L0 = ComplexMatrix::Zero(4 + mt, 6 + mt), L1 = ComplexMatrix::Zero(4 + mt, 6 + mt);
  L0.topLeftCorner(4, 6) = core.L0;
  L1.topLeftCorner(4, 6) = core.L1;
  L0.bottomRightCorner(mt, mt) = ComplexMatrix::Identity(mt, mt);
  L1.bottomRightCorner(mt, mt) = random_complex(mt, mt, 31);
  L0.topRightCorner(4, mt) = random_complex(4, mt, 32);  // coupling columns
  L1.topRightCorner(4, mt) = random_complex(4, mt, 33);
  Pencil p = make_pencil(L0, L1);

  ShiftedPencil sp = make_shifted(p, Complex(0, 0));
  const double tol = default_tolerance(p.rows(), p.cols(), 1.0);
  BidiagonalForm bf = refine(block_bidiagonalize(triangularize_stairs(staircase_reduce(sp, tol))), 2);
  SeparatedForm sep = split_structure(bf);

  const Index nr = sep.red_cols, nb = sep.blue_dim, mr = sep.red_rows;
  const Index mb = nb;
  ASSERT_GT(nr, 0);
  ASSERT_GT(nb, 0);
  ASSERT_GT(sep.tail_cols, 0);

  // Total factorization: Shat^{-1} Lhat That = G.
  EXPECT_LE((sep.Shat * sep.G_A * sep.That.inverse() - sp.Lhat0).norm(), 1e-10);
  EXPECT_LE((sep.Shat * sep.G_E * sep.That.inverse() - sp.Lhat1).norm(), 1e-10);

  // Block upper triangular with zero red-blue coupling.
  EXPECT_LE(sep.G_A.block(mr, 0, p.rows() - mr, nr).norm(), 1e-11);
  EXPECT_LE(sep.G_E.block(mr, 0, p.rows() - mr, nr).norm(), 1e-11);
  EXPECT_LE(sep.G_A.block(mr + mb, nr, p.rows() - mr - mb, nb).norm(), 1e-11);
  EXPECT_LE(sep.G_E.block(mr + mb, nr, p.rows() - mr - mb, nb).norm(), 1e-11);
  EXPECT_LE(sep.G_A.block(0, nr, mr, nb).norm(), 1e-11);
  EXPECT_LE(sep.G_E.block(0, nr, mr, nb).norm(), 1e-11);

  // Diagonal blocks match the exact stair assemblies.
  EXPECT_LE((sep.G_A.topLeftCorner(mr, nr) - sep.epsA).norm(), 1e-11);
  EXPECT_LE((sep.G_E.topLeftCorner(mr, nr) - sep.epsE).norm(), 1e-11);
  EXPECT_LE((sep.G_A.block(mr, nr, mb, nb) - sep.zeroA).norm(), 1e-11);
  EXPECT_LE((sep.G_E.block(mr, nr, mb, nb) - sep.zeroE).norm(), 1e-11);
}

TEST(KroneckerNormalize, GoldenMatlabexPattern) {
  Pencil p = matlabex_pencil(2, true);
  BidiagonalForm bf = refine(block_bidiagonalize(pipeline_tsf(p)), 2);
  SeparatedForm sep = split_structure(bf);
  KroneckerForm kf = kronecker_normalize(sep, bf);

  // Hard-coded 6x9 pattern from the worked-out example.
  ComplexMatrix idealA = ComplexMatrix::Zero(6, 9), idealE = ComplexMatrix::Zero(6, 9);
  idealE(0, 1) = idealE(1, 2) = idealE(2, 3) = idealE(3, 4) = 1.0;
  idealA(0, 5) = idealA(1, 6) = idealA(2, 7) = 1.0;
  idealE(4, 6) = idealE(5, 7) = 1.0;
  idealA(4, 8) = 1.0;
  auto [genA, genE] = ideal_kronecker_pattern({4, 2, 0}, {5, 3, 1});
  EXPECT_EQ((genA - idealA).norm(), 0.0);
  EXPECT_EQ((genE - idealE).norm(), 0.0);

  EXPECT_LE((kf.A_K - idealA).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((kf.E_K - idealE).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(pstest::is_upper_triangular(kf.Sprime, 1e-14));
  EXPECT_TRUE(pstest::is_upper_triangular(kf.Tprime, 1e-14));
}

TEST(KroneckerNormalize, IdentityStairsNeedNoTransforms) {
  auto [A, E] = ideal_kronecker_pattern({4, 2, 0}, {5, 3, 1});
  TriangularStairForm tf = manual_tsf(A, E, {4, 2, 0}, {5, 3, 1});
  BidiagonalForm bf = block_bidiagonalize(tf);
  SeparatedForm sep = split_structure(bf);
  KroneckerForm kf = kronecker_normalize(sep, bf);
  EXPECT_EQ((kf.Sprime - ComplexMatrix::Identity(6, 6)).norm(), 0.0);
  EXPECT_EQ((kf.Tprime - ComplexMatrix::Identity(9, 9)).norm(), 0.0);
  EXPECT_EQ((kf.A_K - A).norm(), 0.0);
}

TEST(KroneckerNormalize, CanonicalOneByTwoBlock) {
  // L = [lambda 1] is already canonical: s = (1, 0), t = (1, 1).
  ComplexMatrix A = ComplexMatrix::Zero(1, 2), E = ComplexMatrix::Zero(1, 2);
  A(0, 1) = 1.0;
  E(0, 0) = 1.0;
  TriangularStairForm tf = manual_tsf(A, E, {1, 0}, {1, 1});
  BidiagonalForm bf = block_bidiagonalize(tf);
  SeparatedForm sep = split_structure(bf);
  KroneckerForm kf = kronecker_normalize(sep, bf);
  EXPECT_EQ((kf.A_K - A).norm(), 0.0);
  EXPECT_EQ((kf.E_K - E).norm(), 0.0);
  EXPECT_EQ((kf.Sprime - ComplexMatrix::Identity(1, 1)).norm(), 0.0);
}

TEST(BidiagonalForm, GlobalFactorizationResidual) {
  for (std::uint64_t seed = 40; seed < 43; ++seed) {
    Pencil p = matlabex_pencil(seed, true);
    TriangularStairForm tf = pipeline_tsf(p);
    BidiagonalForm bf = refine(block_bidiagonalize(tf), 2);
    SeparatedForm sep = split_structure(bf);
    KroneckerForm kf = kronecker_normalize(sep, bf);
    const ComplexMatrix Tinv = kf.Tprime.inverse();
    const double kappa = spectral_norm(kf.Sprime) * spectral_norm(Tinv);
    const double back = (kf.Sprime * kf.A_K * Tinv - tf.A).norm() +
                        (kf.Sprime * kf.E_K * Tinv - tf.E).norm();
    EXPECT_LE(back, 100 * kEps * kappa) << "seed " << seed;
  }
}
