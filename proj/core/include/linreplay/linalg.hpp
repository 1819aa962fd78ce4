#pragma once

// Dense subspace and projector algebra. Everything here is a value type or a
// pure function; instances can be shared freely across threads.

#include <vector>

#include <Eigen/Dense>

namespace linreplay {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Relative singular-value cutoff shared by rank decisions, pseudoinverses
/// and orthonormalization.
inline constexpr double kRankTolerance = 1e-10;

/// Tolerance for the orthonormality and projector invariants.
inline constexpr double kInvariantTolerance = 1e-10;

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

/// A k-dimensional subspace of R^d stored as a d x k matrix with orthonormal
/// columns. A rank-0 subspace has a d x 0 basis.
class Subspace {
 public:
  /// Validates that the columns of `basis` are orthonormal to 1e-10.
  static Subspace from_orthonormal(Matrix basis);
  static Subspace zero(Index ambient_dim);
  static Subspace full(Index ambient_dim);

  const Matrix& basis() const noexcept { return basis_; }
  Index ambient_dim() const noexcept { return basis_.rows(); }
  Index rank() const noexcept { return basis_.cols(); }

  /// Orthogonal projection of v onto the subspace, W W^T v.
  Vector project(const Vector& v) const;
  /// Component of v orthogonal to the subspace, v - W W^T v.
  Vector project_out(const Vector& v) const;

  /// Orthogonal complement in R^d.
  Subspace complement() const;

  bool contains(const Vector& v, double tol = 1e-9) const;

 private:
  explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}

  Matrix basis_;
};

/// Symmetric idempotent d x d matrix held densely.
class Projector {
 public:
  /// Validates symmetry and idempotence within 1e-10.
  static Projector from_matrix(Matrix m);

  const Matrix& matrix() const noexcept { return matrix_; }
  Index dim() const noexcept { return matrix_.rows(); }
  Vector apply(const Vector& v) const { return matrix_ * v; }

 private:
  friend Projector projector_onto(const Subspace& s);
  friend Projector null_projector(const Projector& p);
  explicit Projector(Matrix m) : matrix_(std::move(m)) {}

  Matrix matrix_;
};

/// SVD of a sample matrix truncated at `tol * sigma_max`. Shared by the
/// pseudoinverse, the minimum-norm solve and the row-span basis so that all
/// three agree on rank.
class TruncatedSvd {
 public:
  explicit TruncatedSvd(const Matrix& x, double tol = kRankTolerance);

  Index rank() const noexcept { return singular_values_.size(); }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  /// Left singular vectors (n x r), singular values (r), right singular
  /// vectors (d x r) for the retained part.
  const Matrix& left() const noexcept { return left_; }
  const Vector& singular_values() const noexcept { return singular_values_; }
  const Matrix& right() const noexcept { return right_; }

  /// X^+ rhs.
  Vector solve(const Vector& rhs) const;
  /// || X X^+ rhs - rhs ||, the part of rhs outside the column span of X.
  double range_residual(const Vector& rhs) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Matrix left_;
  Vector singular_values_;
  Matrix right_;
};

/// Largest range residual accepted as consistent:
/// kConsistencyTolerance * max(||y||, sigma_max).
double consistency_bound(const TruncatedSvd& svd, const Vector& y);

Index numerical_rank(const Matrix& m, double tol = kRankTolerance);
Matrix pseudo_inverse(const Matrix& x, double tol = kRankTolerance);

/// Orthonormal basis for the row span of `rows` (n x d). Singular values at
/// or below tol * sigma_max are dropped.
Subspace orthonormal_basis(const Matrix& rows, double tol = kRankTolerance);

/// Basis of span(s) + rowspan(extra_rows).
Subspace span_with_rows(const Subspace& s, const Matrix& extra_rows,
                        double tol = kRankTolerance);

Projector projector_onto(const Subspace& s);
Projector null_projector(const Projector& p);

/// Principal angles in radians, ascending, length min(rank a, rank b).
std::vector<double> principal_angles(const Subspace& a, const Subspace& b);

/// Largest singular value; 0 for empty or zero matrices.
double op_norm(const Matrix& m);

/// Minimum-norm solution X^+ y. Throws kInconsistentSystem when
/// || X X^+ y - y || exceeds consistency_bound.
Vector min_norm_solve(const Matrix& x, const Vector& y);

inline constexpr double kConsistencyTolerance = 1e-8;

}  // namespace linreplay
