#pragma once

// Task and task-sequence constructions: the adversarial worst-case sequence,
// the 3D and high-dimensional average-case pairs, angle-parameterized pairs
// and generic Gaussian subspace tasks.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "linreplay/linalg.hpp"
#include "linreplay/rng.hpp"

namespace linreplay {

/// Realizability tolerance: ||X w* - y|| must not exceed this.
inline constexpr double kRealizabilityTolerance = 1e-9;

struct Task {
  Matrix X;  // n_t x d, one sample per row
  Vector y;  // n_t
  /// Subspace the rows were drawn from, when the task came from a sampler.
  std::optional<Subspace> source_subspace;

  Index rows() const noexcept { return X.rows(); }
  Index dim() const noexcept { return X.cols(); }
  double realizability_residual(const Vector& w_star) const;
};

/// Row index into a task sequence: (task, row), both zero-based.
struct RowRef {
  std::size_t task = 0;
  Index row = 0;
  bool operator==(const RowRef&) const = default;
};

struct TaskSequence {
  std::vector<Task> tasks;
  Vector w_star;
  Index ambient_dim = 0;

  std::size_t size() const noexcept { return tasks.size(); }

  /// Throws unless every task has ambient dimension d and is realized by
  /// w_star. The optional flags additionally assert rank(X_t) < d and
  /// ||w_star|| <= 1.
  void validate(bool require_overparameterized = false,
                bool require_bounded_w_star = false) const;
};

/// Row spans of every task in the sequence.
std::vector<Subspace> task_subspaces(const TaskSequence& seq);

// ------------------------------------------------------------- worst case

struct WorstCaseOptions {
  /// Realizability witness in ambient coordinates; defaults to v2.
  std::optional<Vector> w_star;
  /// Draw the orthonormal basis v1..vd at random instead of the canonical one.
  bool random_rotation = false;
  /// One random unit row in span{v4..vd} per task 1..T-1 (only when d > 3).
  bool filler_rows = true;
};

struct WorstCase {
  TaskSequence sequence;
  Matrix basis;  // columns v1..vd
  Vector x1, x2, x3;
  Vector u;      // sqrt(6/7) v2 - v3/sqrt(7), orthogonal to x1 and x2
  double a = 0;  // u^T w*
  RowRef x1_ref;
  RowRef x2_ref;
  Vector replay_row;  // x2
  double replay_label = 0;

  /// 3 a^2 / (28 (T - 1)).
  double analytic_no_replay() const;
  /// 3 a^2 / 14, independent of T. After replaying x2 the final null space
  /// is (v1 - v2)(v1 - v2)^T / 2, so every x1 row carries a residual of
  /// sqrt(6/7) a / 2.
  double analytic_replay() const;
  /// 9 a^2 / 196, what the residual above gives if it is squared twice.
  /// Reported next to the simulated value, never asserted.
  double analytic_replay_9_196() const;
};

/// Requires T >= 2 and d >= 3. Task layout (zero-based): tasks 0..T-3 hold
/// {x1, filler}, task T-2 holds {x1, x2, filler}, task T-1 holds
/// {x3, v4, ..., vd}. All rows have unit norm.
WorstCase make_worst_case(int T, Index d, const WorstCaseOptions& options, Rng& rng);

// ------------------------------------------------------ average case, 3D

inline const double kAvgCase3DEpsilon = std::sqrt(1.0 / 63.0);

struct AvgCase3D {
  Subspace task1;  // span{v1, u}, u = eps v2 + sqrt(1 - eps^2) v3
  Subspace task2;  // span{v3}
  Vector p1;       // sqrt(1 - eps^2) v2 - eps v3, spans task 1's null space
  double a = 0;    // p1^T w*
  double epsilon = 0;
  Matrix basis;    // columns v1, v2, v3

  /// eps^2 (1 - eps^2) a^2.
  double analytic_no_replay() const;
};

/// With `rotate_if_degenerate`, a basis is chosen so that |p1^T w*| > 1e-9
/// whenever w* != 0 (kDegenerateWStar for w* = 0). Without it the canonical
/// basis is kept and a may be zero.
AvgCase3D make_avg_case_3d(double epsilon, const Vector& w_star,
                           bool rotate_if_degenerate = true);

// --------------------------------------------- average case, high dimension

struct AvgCaseHighDim {
  Subspace task1;  // span{u, v1, v3, ..., v_{d-1}}, u = eps v2 + sqrt(1 - eps^2) v_d
  Subspace task2;  // span{v_d}
  Vector u_perp;   // sqrt(1 - eps^2) v2 - eps v_d
  double a = 0;    // u_perp^T w*
  double epsilon = 0;

  /// a^2 eps^2 (1 - eps^2).
  double analytic_no_replay() const;
};

/// Requires d >= 4 and 0 < epsilon < 1/2. Canonical basis.
AvgCaseHighDim make_avg_case_highdim(Index d, double epsilon, const Vector& w_star);

// ------------------------------------------------------------- angle pair

struct AnglePair {
  Subspace task1;  // orthogonal complement of span{a1}
  Subspace task2;  // orthogonal complement of span{a2}
  Vector a1, a2;   // unit null-space directions, a1^T a2 = cos(theta)
  double theta = 0;
};

/// Requires 0 <= theta <= pi/2 and d >= 2. a1 is w*/||w*|| when w* != 0,
/// else e1.
AnglePair make_angle_pair(double theta, Index d, const Vector& w_star);

// --------------------------------------------------------------- sampling

/// n rows x_j = W z_j with z_j ~ N(0, I_k / k).
Matrix draw_rows(const Subspace& s, Index n, Rng& rng);

/// Task with n rows drawn from `s` and labels X w*. Requires n >= rank(s);
/// re-draws once if the sample matrix is numerically rank deficient.
Task sample_task(const Subspace& s, Index n, const Vector& w_star, Rng& rng);

/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(Index d, Rng& rng);

/// Uniformly random k-dimensional subspace of R^d.
Subspace random_subspace(Index d, Index k, Rng& rng);

// ----------------------------------------------------- construction specs

enum class ConstructionKind { kWorstCase, kAvgCase3D, kAvgCaseHighDim, kGaussianSubspaces, kAnglePair };

std::string_view to_string(ConstructionKind kind);
ConstructionKind construction_kind_from_string(std::string_view name);

/// Declarative description of a task sequence. `epsilon` is the construction
/// parameter: eps for the average-case kinds, theta (radians) for AnglePair
/// and the rank fraction k_t = clamp(round(eps d), 1, d - 1) for
/// GaussianSubspaces. `n_per_task` gives sample counts per task for the
/// sampled kinds; it may be empty for WorstCase.
struct ConstructionSpec {
  ConstructionKind kind = ConstructionKind::kWorstCase;
  int T = 2;
  int d = 3;
  double epsilon = 0.0;
  std::vector<int> n_per_task;
  std::uint64_t seed = 42;

  void validate() const;

  /// JSON object with exactly the fields above; `from_json` rejects unknown
  /// or missing keys.
  std::string to_json() const;
  static ConstructionSpec from_json(std::string_view text);

  bool operator==(const ConstructionSpec&) const = default;
};

struct Construction {
  TaskSequence sequence;
  std::vector<Subspace> subspaces;
};

/// Materializes a spec with its default witness (v2, p1, u_perp, a1, or a
/// random unit vector for GaussianSubspaces).
Construction build_construction(const ConstructionSpec& spec);

}  // namespace linreplay
