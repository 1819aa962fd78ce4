#include "linreplay/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "linreplay/error.hpp"

namespace linreplay {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace

// ---------------------------------------------------------------- Subspace

Subspace Subspace::from_orthonormal(Matrix basis) {
  require_finite(basis, "subspace basis");
  if (basis.cols() > basis.rows()) {
    throw Error(ErrorCode::kInvalidDimension, "subspace rank exceeds ambient dimension");
  }
  if (basis.cols() > 0) {
    const Matrix gram = basis.transpose() * basis;
    const double dev =
        (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
    if (dev > kInvariantTolerance) {
      throw Error(ErrorCode::kInvalidParameters,
                  "basis columns are not orthonormal (max |W^T W - I| = " +
                      std::to_string(dev) + ")");
    }
  }
  return Subspace(std::move(basis));
}

Subspace Subspace::zero(Index ambient_dim) { return Subspace(Matrix(ambient_dim, 0)); }

Subspace Subspace::full(Index ambient_dim) {
  return Subspace(Matrix::Identity(ambient_dim, ambient_dim));
}

Vector Subspace::project(const Vector& v) const {
  if (v.size() != ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector does not match ambient dimension");
  }
  if (rank() == 0) return Vector::Zero(v.size());
  return basis_ * (basis_.transpose() * v);
}

Vector Subspace::project_out(const Vector& v) const { return v - project(v); }

Subspace Subspace::complement() const {
  const Index d = ambient_dim();
  const Index k = rank();
  if (k == 0) return full(d);
  if (k == d) return zero(d);
  Eigen::HouseholderQR<Matrix> qr(basis_);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return Subspace(q.rightCols(d - k));
}

bool Subspace::contains(const Vector& v, double tol) const {
  return project_out(v).norm() <= tol * std::max(1.0, v.norm());
}

// --------------------------------------------------------------- Projector

Projector Projector::from_matrix(Matrix m) {
  require_finite(m, "projector");
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "projector must be square");
  }
  if (m.size() > 0) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    const double idem = (m * m - m).cwiseAbs().maxCoeff();
    if (asym > kInvariantTolerance || idem > kInvariantTolerance) {
      throw Error(ErrorCode::kInvalidParameters, "matrix is not an orthogonal projector");
    }
  }
  return Projector(std::move(m));
}

// ------------------------------------------------------------ TruncatedSvd

TruncatedSvd::TruncatedSvd(const Matrix& x, double tol) : rows_(x.rows()), cols_(x.cols()) {
  require_finite(x, "matrix");
  if (x.size() == 0) {
    left_ = Matrix(rows_, 0);
    right_ = Matrix(cols_, 0);
    return;
  }
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cutoff && sv(r) > 0.0) ++r;
  left_ = svd.matrixU().leftCols(r);
  singular_values_ = sv.head(r);
  right_ = svd.matrixV().leftCols(r);
}

Vector TruncatedSvd::solve(const Vector& rhs) const {
  if (rhs.size() != rows_) {
    throw Error(ErrorCode::kDimensionMismatch, "right-hand side length does not match rows");
  }
  if (rank() == 0) return Vector::Zero(cols_);
  Vector coeffs = left_.transpose() * rhs;
  coeffs.array() /= singular_values_.array();
  return right_ * coeffs;
}

double TruncatedSvd::range_residual(const Vector& rhs) const {
  if (rank() == 0) return rhs.norm();
  return (rhs - left_ * (left_.transpose() * rhs)).norm();
}

double consistency_bound(const TruncatedSvd& svd, const Vector& y) {
  const double scale = svd.rank() > 0 ? svd.singular_values()(0) : 0.0;
  return kConsistencyTolerance * std::max(y.norm(), scale);
}

Index numerical_rank(const Matrix& m, double tol) { return TruncatedSvd(m, tol).rank(); }

Matrix pseudo_inverse(const Matrix& x, double tol) {
  const TruncatedSvd svd(x, tol);
  if (svd.rank() == 0) return Matrix::Zero(x.cols(), x.rows());
  return svd.right() * svd.singular_values().cwiseInverse().asDiagonal() *
         svd.left().transpose();
}

// -------------------------------------------------------------- operations

Subspace orthonormal_basis(const Matrix& rows, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidParameters, "tolerance must be positive");
  const TruncatedSvd svd(rows, tol);
  return Subspace::from_orthonormal(svd.right());
}

Subspace span_with_rows(const Subspace& s, const Matrix& extra_rows, double tol) {
  if (extra_rows.rows() > 0 && extra_rows.cols() != s.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "extra rows do not match ambient dimension");
  }
  Matrix stacked(s.rank() + extra_rows.rows(), s.ambient_dim());
  stacked << s.basis().transpose(), extra_rows;
  return orthonormal_basis(stacked, tol);
}

Projector projector_onto(const Subspace& s) {
  if (s.rank() == 0) return Projector(Matrix::Zero(s.ambient_dim(), s.ambient_dim()));
  Matrix m = s.basis() * s.basis().transpose();
  // Exact symmetry; roundoff in the product can leave 1 ulp asymmetry.
  m = 0.5 * (m + m.transpose()).eval();
  return Projector(std::move(m));
}

Projector null_projector(const Projector& p) {
  return Projector(Matrix::Identity(p.dim(), p.dim()) - p.matrix());
}

std::vector<double> principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "subspaces live in different ambient spaces");
  }
  const Index count = std::min(a.rank(), b.rank());
  std::vector<double> angles;
  if (count == 0) return angles;
  const Matrix cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Matrix> svd(cross);
  const Vector& cosines = svd.singularValues();  // descending
  angles.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    angles.push_back(std::acos(std::clamp(cosines(i), 0.0, 1.0)));
  }
  return angles;  // ascending because cosines are descending
}

double op_norm(const Matrix& m) {
  require_finite(m, "matrix");
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Vector min_norm_solve(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "label count does not match sample count");
  }
  require_finite(y, "labels");
  const TruncatedSvd svd(x);
  const double residual = svd.range_residual(y);
  if (residual > consistency_bound(svd, y)) {
    throw Error(ErrorCode::kInconsistentSystem,
                "no exact solution (range residual " + std::to_string(residual) + ")");
  }
  return svd.solve(y);
}

}  // namespace linreplay
