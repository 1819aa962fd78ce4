#include <cmath>
#include <limits>
#include <numbers>

#include "linreplay/linalg.hpp"
#include "linreplay/oracle.hpp"
#include "test_util.hpp"

using namespace linreplay;

namespace {

Matrix random_rows(Index n, Index d, Rng& rng) { return rng.gaussian_matrix(n, d); }

}  // namespace

TEST(Subspace, RejectsNonOrthonormalBasis) {
  Matrix b(3, 2);
  b << 1, 1, 0, 1, 0, 0;
  EXPECT_THROW_CODE(Subspace::from_orthonormal(b), ErrorCode::kInvalidParameters);
}

TEST(Subspace, ZeroAndFullAreComplements) {
  const Subspace z = Subspace::zero(4);
  EXPECT_EQ(z.rank(), 0);
  EXPECT_EQ(z.complement().rank(), 4);
  EXPECT_EQ(Subspace::full(4).complement().rank(), 0);
  const Vector v = Vector::LinSpaced(4, 1, 4);
  EXPECT_NEAR((z.project_out(v) - v).norm(), 0.0, 1e-15);
}

TEST(Subspace, ComplementIsOrthogonalAndFillsSpace) {
  Rng rng(1);
  for (Index k = 0; k <= 6; ++k) {
    const Subspace s = orthonormal_basis(random_rows(k, 6, rng));
    const Subspace c = s.complement();
    EXPECT_EQ(s.rank() + c.rank(), 6);
    if (s.rank() > 0 && c.rank() > 0) {
      EXPECT_LT((s.basis().transpose() * c.basis()).norm(), 1e-12);
    }
  }
}

TEST(Subspace, ContainsItsRowsOnly) {
  Rng rng(2);
  const Matrix rows = random_rows(2, 5, rng);
  const Subspace s = orthonormal_basis(rows);
  EXPECT_TRUE(s.contains(rows.row(0).transpose()));
  EXPECT_TRUE(s.contains(3.0 * rows.row(0).transpose() - rows.row(1).transpose()));
  EXPECT_FALSE(s.contains(s.complement().basis().col(0)));
}

TEST(OrthonormalBasis, DropsRedundantRows) {
  Matrix rows(3, 4);
  rows << 1, 2, 0, 0, 2, 4, 0, 0, 0, 0, 1, 0;
  EXPECT_EQ(orthonormal_basis(rows).rank(), 2);
  EXPECT_EQ(numerical_rank(rows), 2);
}

TEST(OrthonormalBasis, EmptyRowsGiveZeroSubspace) {
  EXPECT_EQ(orthonormal_basis(Matrix(0, 5)).rank(), 0);
  EXPECT_EQ(orthonormal_basis(Matrix::Zero(3, 5)).rank(), 0);
}

TEST(OrthonormalBasis, RejectsNonFinite) {
  Matrix rows = Matrix::Identity(2, 3);
  rows(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW_CODE(orthonormal_basis(rows), ErrorCode::kNonFiniteInput);
}

TEST(Projector, SymmetricIdempotentAndComplementary) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(9));
    const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d + 1)));
    const Projector p = projector_onto(orthonormal_basis(random_rows(k, d, rng)));
    const Matrix& m = p.matrix();
    EXPECT_LT((m - m.transpose()).norm(), 1e-12);
    EXPECT_LT((m * m - m).norm(), 1e-12);
    const Matrix q = null_projector(p).matrix();
    EXPECT_LT((m + q - Matrix::Identity(d, d)).norm(), 1e-12);
    EXPECT_LT((m * q).norm(), 1e-12);
    EXPECT_NEAR(m.trace(), static_cast<double>(k), 1e-10);
  }
}

TEST(Projector, FromMatrixValidates) {
  Matrix m(2, 2);
  m << 1, 1, 0, 0;
  EXPECT_THROW_CODE(Projector::from_matrix(m), ErrorCode::kInvalidParameters);
  EXPECT_NO_THROW(Projector::from_matrix(Matrix::Identity(3, 3)));
}

TEST(Projector, MatchesIndependentKernelProjector) {
  Rng rng(4);
  const Matrix rows = random_rows(3, 7, rng);
  const Matrix p = null_projector(projector_onto(orthonormal_basis(rows))).matrix();
  EXPECT_LT((p - testutil::dense_null_projector(rows)).norm(), 1e-10);
}

TEST(PseudoInverse, MoorePenroseConditions) {
  Rng rng(5);
  Matrix x = random_rows(4, 7, rng);
  x.row(3) = x.row(0) + x.row(1);  // rank 3
  const Matrix xp = pseudo_inverse(x);
  EXPECT_LT((x * xp * x - x).norm(), 1e-10);
  EXPECT_LT((xp * x * xp - xp).norm(), 1e-10);
  EXPECT_LT(((x * xp).transpose() - x * xp).norm(), 1e-10);
  EXPECT_LT(((xp * x).transpose() - xp * x).norm(), 1e-10);
}

TEST(MinNormSolve, MatchesKktOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(10));
    const Index n = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    const Matrix x = random_rows(n, d, rng);
    const Vector y = x * rng.gaussian_vector(d);
    const Vector w = min_norm_solve(x, y);
    EXPECT_LT((w - oracle_min_norm(x, y, Vector::Zero(d))).norm(), 1e-9);
  }
}

TEST(MinNormSolve, RejectsInconsistentSystem) {
  Matrix x(2, 3);
  x << 1, 0, 0, 2, 0, 0;
  Vector y(2);
  y << 1, 1;  // would need w_0 = 1 and w_0 = 0.5
  EXPECT_THROW_CODE(min_norm_solve(x, y), ErrorCode::kInconsistentSystem);
}

TEST(MinNormSolve, AcceptsRoundoffLabels) {
  // Labels of a vector orthogonal to the rows are pure roundoff.
  Matrix x(2, 3);
  x << 1, 2, 0, 0, 1, 1;
  Vector w(3);
  w << 2, -1, 1;  // x * w = 0
  const Vector y = x * w + Vector::Constant(2, 1e-17);
  EXPECT_NO_THROW(min_norm_solve(x, y));
}

TEST(MinNormSolve, RejectsNanAndShapeMismatch) {
  Matrix x = Matrix::Identity(2, 3);
  Vector y(2);
  y << 1, std::numeric_limits<double>::infinity();
  EXPECT_THROW_CODE(min_norm_solve(x, y), ErrorCode::kNonFiniteInput);
  EXPECT_THROW_CODE(min_norm_solve(x, Vector::Zero(3)), ErrorCode::kDimensionMismatch);
}

TEST(PrincipalAngles, KnownRotation) {
  const double theta = 0.3;
  Matrix a(3, 1), b(3, 1);
  a << 1, 0, 0;
  b << std::cos(theta), std::sin(theta), 0;
  const auto angles = principal_angles(Subspace::from_orthonormal(a), Subspace::from_orthonormal(b));
  ASSERT_EQ(angles.size(), 1u);
  EXPECT_NEAR(angles[0], theta, 1e-12);
}

TEST(PrincipalAngles, SharedDirectionGivesZeroAngle) {
  Matrix a(3, 2), b(3, 2);
  a << 1, 0, 0, 1, 0, 0;
  b << 1, 0, 0, 0, 0, 1;
  const auto angles = principal_angles(Subspace::from_orthonormal(a), Subspace::from_orthonormal(b));
  ASSERT_EQ(angles.size(), 2u);
  EXPECT_NEAR(angles[0], 0.0, 1e-12);
  EXPECT_NEAR(angles[1], std::numbers::pi / 2, 1e-12);
}

TEST(OpNorm, ProductOfProjectorsIsCosineOfAngle) {
  const double theta = 1.1;
  Matrix a(2, 1), b(2, 1);
  a << 1, 0;
  b << std::cos(theta), std::sin(theta);
  const Matrix pa = projector_onto(Subspace::from_orthonormal(a)).matrix();
  const Matrix pb = projector_onto(Subspace::from_orthonormal(b)).matrix();
  EXPECT_NEAR(op_norm(pb * pa), std::cos(theta), 1e-12);
  EXPECT_EQ(op_norm(Matrix(0, 0)), 0.0);
}

TEST(SpanWithRows, AddsOnlyNewDirections) {
  Matrix a(4, 1);
  a << 1, 0, 0, 0;
  const Subspace s = Subspace::from_orthonormal(a);
  Matrix extra(2, 4);
  extra << 2, 0, 0, 0, 0, 1, 1, 0;
  EXPECT_EQ(span_with_rows(s, extra).rank(), 2);
  EXPECT_EQ(span_with_rows(s, Matrix(0, 4)).rank(), 1);
}
