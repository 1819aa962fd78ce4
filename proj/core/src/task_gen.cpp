#include "linreplay/task_gen.hpp"

#include <algorithm>
#include <numbers>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "linreplay/error.hpp"

namespace linreplay {

using nlohmann::json;

double Task::realizability_residual(const Vector& w_star) const {
  if (w_star.size() != X.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "w* does not match task dimension");
  }
  return (X * w_star - y).norm();
}

void TaskSequence::validate(bool require_overparameterized, bool require_bounded_w_star) const {
  if (w_star.size() != ambient_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "w* does not match ambient dimension");
  }
  if (require_bounded_w_star && w_star.norm() > 1.0 + 1e-9) {
    throw Error(ErrorCode::kInvalidParameters, "||w*|| exceeds 1");
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    if (task.dim() != ambient_dim || task.y.size() != task.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "task " + std::to_string(t) + " has wrong shape");
    }
    if (task.realizability_residual(w_star) > kRealizabilityTolerance) {
      throw Error(ErrorCode::kInconsistentSystem,
                  "task " + std::to_string(t) + " is not realized by w*");
    }
    if (require_overparameterized && numerical_rank(task.X) >= ambient_dim) {
      throw Error(ErrorCode::kInvalidParameters,
                  "task " + std::to_string(t) + " is not over-parameterized");
    }
  }
}

std::vector<Subspace> task_subspaces(const TaskSequence& seq) {
  std::vector<Subspace> out;
  out.reserve(seq.size());
  for (const Task& task : seq.tasks) out.push_back(orthonormal_basis(task.X));
  return out;
}

namespace {

Task make_task(Matrix X, const Vector& w_star, std::optional<Subspace> source = std::nullopt) {
  Vector y = X * w_star;
  return Task{std::move(X), std::move(y), std::move(source)};
}

Matrix stack_rows(const std::vector<Vector>& rows, Index d) {
  Matrix m(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = rows[i].transpose();
  return m;
}

// Householder reflection mapping unit vector `from` onto unit vector `to`.
Matrix reflection_between(const Vector& from, const Vector& to) {
  const Index d = from.size();
  const Vector v = from - to;
  const double vv = v.squaredNorm();
  if (vv < 1e-24) return Matrix::Identity(d, d);
  return Matrix::Identity(d, d) - 2.0 * v * v.transpose() / vv;
}

}  // namespace

// ------------------------------------------------------------- worst case

double WorstCase::analytic_no_replay() const {
  const auto T = static_cast<double>(sequence.size());
  return 3.0 * a * a / (28.0 * (T - 1.0));
}

double WorstCase::analytic_replay() const { return 3.0 * a * a / 14.0; }
double WorstCase::analytic_replay_9_196() const { return 9.0 * a * a / 196.0; }

WorstCase make_worst_case(int T, Index d, const WorstCaseOptions& options, Rng& rng) {
  if (T < 2) throw Error(ErrorCode::kInvalidDimension, "worst case needs T >= 2");
  if (d < 3) throw Error(ErrorCode::kInvalidDimension, "worst case needs d >= 3");

  Matrix basis = Matrix::Identity(d, d);
  if (options.random_rotation) {
    Rng rot = rng.split(streams::kRotation);
    basis = random_orthogonal(d, rot);
  }
  auto v = [&](Index i) -> Vector { return basis.col(i - 1); };  // 1-based like v1..vd

  const double s2 = std::numbers::sqrt2;
  const double s3 = std::numbers::sqrt3;
  const double s7 = std::sqrt(7.0);
  Vector x1 = v(1);
  Vector x2 = v(1) / (2.0 * s2) + v(2) / (2.0 * s2) + (s3 / 2.0) * v(3);
  Vector x3 = v(3);
  Vector u = std::sqrt(6.0 / 7.0) * v(2) - v(3) / s7;

  Vector w_star = options.w_star.value_or(v(2));
  if (w_star.size() != d) throw Error(ErrorCode::kDimensionMismatch, "w* must have length d");
  const double a = u.dot(w_star);
  if (std::abs(a) < 1e-12) {
    throw Error(ErrorCode::kDegenerateWStar, "u^T w* = 0; forgetting vanishes identically");
  }

  Rng filler_rng = rng.split(streams::kFiller);
  auto filler = [&]() -> std::vector<Vector> {
    if (!options.filler_rows || d <= 3) return {};
    const Vector coeffs = filler_rng.unit_vector(d - 3);
    return {basis.rightCols(d - 3) * coeffs};
  };

  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T - 2; ++t) {
    std::vector<Vector> rows{x1};
    for (Vector& f : filler()) rows.push_back(std::move(f));
    tasks.push_back(make_task(stack_rows(rows, d), w_star));
  }
  {
    std::vector<Vector> rows{x1, x2};
    for (Vector& f : filler()) rows.push_back(std::move(f));
    tasks.push_back(make_task(stack_rows(rows, d), w_star));
  }
  {
    std::vector<Vector> rows{x3};
    for (Index i = 4; i <= d; ++i) rows.push_back(v(i));
    tasks.push_back(make_task(stack_rows(rows, d), w_star));
  }

  const RowRef x2_ref{static_cast<std::size_t>(T - 2), 1};
  const double label = x2.dot(w_star);
  TaskSequence seq{std::move(tasks), w_star, d};
  return WorstCase{std::move(seq), std::move(basis), x1, x2, x3, u, a,
                   RowRef{0, 0}, x2_ref, x2, label};
}

// ------------------------------------------------------ average case, 3D

double AvgCase3D::analytic_no_replay() const {
  return epsilon * epsilon * (1.0 - epsilon * epsilon) * a * a;
}

AvgCase3D make_avg_case_3d(double epsilon, const Vector& w_star, bool rotate_if_degenerate) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidEpsilon, "epsilon must lie in (0, 1)");
  }
  if (w_star.size() != 3) throw Error(ErrorCode::kDimensionMismatch, "w* must live in R^3");
  const double c = std::sqrt(1.0 - epsilon * epsilon);
  const Vector p1_canonical = Vector{{0.0, c, -epsilon}};

  Matrix basis = Matrix::Identity(3, 3);
  if (rotate_if_degenerate && std::abs(p1_canonical.dot(w_star)) <= 1e-9) {
    const double norm = w_star.norm();
    if (norm <= 1e-9) {
      throw Error(ErrorCode::kDegenerateWStar, "no basis gives p1^T w* != 0 for w* = 0");
    }
    basis = reflection_between(p1_canonical, w_star / norm);
  }
  const Vector v1 = basis.col(0), v2 = basis.col(1), v3 = basis.col(2);
  const Vector u = epsilon * v2 + c * v3;
  Vector p1 = c * v2 - epsilon * v3;

  Matrix w1(3, 2);
  w1 << v1, u;
  Matrix w2(3, 1);
  w2 << v3;
  const double a = p1.dot(w_star);
  return AvgCase3D{Subspace::from_orthonormal(std::move(w1)), Subspace::from_orthonormal(std::move(w2)),
                   std::move(p1), a, epsilon, std::move(basis)};
}

// --------------------------------------------- average case, high dimension

double AvgCaseHighDim::analytic_no_replay() const {
  return a * a * epsilon * epsilon * (1.0 - epsilon * epsilon);
}

AvgCaseHighDim make_avg_case_highdim(Index d, double epsilon, const Vector& w_star) {
  if (d < 4) throw Error(ErrorCode::kInvalidDimension, "high-dimensional construction needs d >= 4");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kInvalidEpsilon, "epsilon must lie in (0, 1/2)");
  }
  if (w_star.size() != d) throw Error(ErrorCode::kDimensionMismatch, "w* must have length d");
  const double c = std::sqrt(1.0 - epsilon * epsilon);
  const Matrix eye = Matrix::Identity(d, d);
  // Zero-based: v1 = e0, v2 = e1, v_d = e_{d-1}.
  Matrix w1(d, d - 1);
  w1.col(0) = epsilon * eye.col(1) + c * eye.col(d - 1);
  w1.col(1) = eye.col(0);
  for (Index i = 2; i <= d - 2; ++i) w1.col(i) = eye.col(i);
  Matrix w2 = eye.col(d - 1);
  Vector u_perp = c * eye.col(1) - epsilon * eye.col(d - 1);
  const double a = u_perp.dot(w_star);
  return AvgCaseHighDim{Subspace::from_orthonormal(std::move(w1)),
                        Subspace::from_orthonormal(std::move(w2)), std::move(u_perp), a, epsilon};
}

// ------------------------------------------------------------- angle pair

AnglePair make_angle_pair(double theta, Index d, const Vector& w_star) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2.0 + 1e-15)) {
    throw Error(ErrorCode::kInvalidAngle, "theta must lie in [0, pi/2]");
  }
  if (d < 2) throw Error(ErrorCode::kInvalidDimension, "angle pair needs d >= 2");
  if (w_star.size() != d) throw Error(ErrorCode::kDimensionMismatch, "w* must have length d");

  Vector a1 = Vector::Unit(d, 0);
  if (w_star.norm() > 1e-12) a1 = w_star.normalized();
  // Companion direction: the coordinate axis least aligned with a1, made
  // orthogonal to it.
  Index axis = 0;
  a1.cwiseAbs().minCoeff(&axis);
  Vector b = Vector::Unit(d, axis) - a1(axis) * a1;
  b.normalize();
  Vector a2 = std::cos(theta) * a1 + std::sin(theta) * b;
  a2.normalize();

  Subspace n1 = Subspace::from_orthonormal(Matrix(a1));
  Subspace n2 = Subspace::from_orthonormal(Matrix(a2));
  return AnglePair{n1.complement(), n2.complement(), std::move(a1), std::move(a2), theta};
}

// --------------------------------------------------------------- sampling

Matrix draw_rows(const Subspace& s, Index n, Rng& rng) {
  const Index k = s.rank();
  if (k == 0) return Matrix::Zero(n, s.ambient_dim());
  const Matrix z = rng.gaussian_matrix(n, k, 1.0 / std::sqrt(static_cast<double>(k)));
  return z * s.basis().transpose();
}

Task sample_task(const Subspace& s, Index n, const Vector& w_star, Rng& rng) {
  if (w_star.size() != s.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "w* does not match subspace dimension");
  }
  if (n < s.rank()) {
    throw Error(ErrorCode::kTooFewSamples, "need at least rank(s) = " + std::to_string(s.rank()) +
                                               " samples, got " + std::to_string(n));
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    Matrix X = draw_rows(s, n, rng);
    if (numerical_rank(X) == s.rank()) return make_task(std::move(X), w_star, s);
  }
  throw Error(ErrorCode::kRankDeficiency, "sampled task does not span its subspace");
}

Matrix random_orthogonal(Index d, Rng& rng) {
  const Matrix g = rng.gaussian_matrix(d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

Subspace random_subspace(Index d, Index k, Rng& rng) {
  if (k < 0 || k > d) throw Error(ErrorCode::kInvalidDimension, "rank must lie in [0, d]");
  if (k == 0) return Subspace::zero(d);
  for (;;) {
    Subspace s = orthonormal_basis(rng.gaussian_matrix(k, d));
    if (s.rank() == k) return s;
  }
}

// ----------------------------------------------------- construction specs

std::string_view to_string(ConstructionKind kind) {
  switch (kind) {
    case ConstructionKind::kWorstCase: return "WorstCase";
    case ConstructionKind::kAvgCase3D: return "AvgCase3D";
    case ConstructionKind::kAvgCaseHighDim: return "AvgCaseHighDim";
    case ConstructionKind::kGaussianSubspaces: return "GaussianSubspaces";
    case ConstructionKind::kAnglePair: return "AnglePair";
  }
  return "Unknown";
}

ConstructionKind construction_kind_from_string(std::string_view name) {
  for (auto kind : {ConstructionKind::kWorstCase, ConstructionKind::kAvgCase3D,
                    ConstructionKind::kAvgCaseHighDim, ConstructionKind::kGaussianSubspaces,
                    ConstructionKind::kAnglePair}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown construction kind '" + std::string(name) + "'");
}

namespace {

Index gaussian_rank(const ConstructionSpec& spec) {
  const auto k = static_cast<Index>(std::lround(spec.epsilon * spec.d));
  return std::clamp<Index>(k, 1, spec.d - 1);
}

void require_counts(const ConstructionSpec& spec, const std::vector<Index>& minimum) {
  if (spec.n_per_task.size() != minimum.size()) {
    throw Error(ErrorCode::kInvalidConfig, "n_per_task must list one count per task");
  }
  for (std::size_t t = 0; t < minimum.size(); ++t) {
    if (spec.n_per_task[t] < minimum[t]) {
      throw Error(ErrorCode::kTooFewSamples, "task " + std::to_string(t) + " needs at least " +
                                                 std::to_string(minimum[t]) + " samples");
    }
  }
}

}  // namespace

void ConstructionSpec::validate() const {
  switch (kind) {
    case ConstructionKind::kWorstCase:
      if (T < 2 || d < 3) throw Error(ErrorCode::kInvalidDimension, "WorstCase needs T >= 2, d >= 3");
      return;
    case ConstructionKind::kAvgCase3D:
      if (T != 2 || d != 3) throw Error(ErrorCode::kInvalidDimension, "AvgCase3D needs T = 2, d = 3");
      if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidEpsilon, "epsilon must lie in (0, 1)");
      require_counts(*this, {2, 1});
      return;
    case ConstructionKind::kAvgCaseHighDim:
      if (T != 2 || d < 4) throw Error(ErrorCode::kInvalidDimension, "AvgCaseHighDim needs T = 2, d >= 4");
      if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(ErrorCode::kInvalidEpsilon, "epsilon must lie in (0, 1/2)");
      require_counts(*this, {d - 1, 1});
      return;
    case ConstructionKind::kGaussianSubspaces: {
      if (T < 2 || d < 2) throw Error(ErrorCode::kInvalidDimension, "GaussianSubspaces needs T >= 2, d >= 2");
      if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidEpsilon, "rank fraction must lie in (0, 1)");
      require_counts(*this, std::vector<Index>(static_cast<std::size_t>(T), gaussian_rank(*this)));
      return;
    }
    case ConstructionKind::kAnglePair:
      if (T != 2 || d < 2) throw Error(ErrorCode::kInvalidDimension, "AnglePair needs T = 2, d >= 2");
      if (!(epsilon >= 0.0 && epsilon <= std::numbers::pi / 2.0)) {
        throw Error(ErrorCode::kInvalidAngle, "theta must lie in [0, pi/2]");
      }
      require_counts(*this, {d - 1, d - 1});
      return;
  }
}

std::string ConstructionSpec::to_json() const {
  json j;
  j["kind"] = std::string(to_string(kind));
  j["T"] = T;
  j["d"] = d;
  j["epsilon"] = epsilon;
  j["n_per_task"] = n_per_task;
  j["seed"] = seed;
  return j.dump();
}

ConstructionSpec ConstructionSpec::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "construction spec must be an object");
  static const std::set<std::string> kKeys{"kind", "T", "d", "epsilon", "n_per_task", "seed"};
  for (const auto& item : j.items()) {
    if (!kKeys.contains(item.key())) {
      throw Error(ErrorCode::kInvalidConfig, "unknown key '" + item.key() + "'");
    }
  }
  for (const auto& key : kKeys) {
    if (!j.contains(key)) throw Error(ErrorCode::kInvalidConfig, "missing key '" + key + "'");
  }
  ConstructionSpec spec;
  try {
    spec.kind = construction_kind_from_string(j.at("kind").get<std::string>());
    spec.T = j.at("T").get<int>();
    spec.d = j.at("d").get<int>();
    spec.epsilon = j.at("epsilon").get<double>();
    spec.n_per_task = j.at("n_per_task").get<std::vector<int>>();
    spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad field type: ") + e.what());
  }
  return spec;
}

Construction build_construction(const ConstructionSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Rng task_rng = rng.split(streams::kTasks);
  const Index d = spec.d;

  auto sampled = [&](std::vector<Subspace> subspaces, const Vector& w_star) {
    std::vector<Task> tasks;
    for (std::size_t t = 0; t < subspaces.size(); ++t) {
      tasks.push_back(sample_task(subspaces[t], spec.n_per_task[t], w_star, task_rng));
    }
    return Construction{TaskSequence{std::move(tasks), w_star, d}, std::move(subspaces)};
  };

  switch (spec.kind) {
    case ConstructionKind::kWorstCase: {
      WorstCase wc = make_worst_case(spec.T, d, {}, rng);
      auto subspaces = task_subspaces(wc.sequence);
      return Construction{std::move(wc.sequence), std::move(subspaces)};
    }
    case ConstructionKind::kAvgCase3D: {
      const Vector w_star = make_avg_case_3d(spec.epsilon, Vector::Unit(3, 1)).p1;
      AvgCase3D c = make_avg_case_3d(spec.epsilon, w_star);
      return sampled({c.task1, c.task2}, w_star);
    }
    case ConstructionKind::kAvgCaseHighDim: {
      const Vector w_star = make_avg_case_highdim(d, spec.epsilon, Vector::Zero(d)).u_perp;
      AvgCaseHighDim c = make_avg_case_highdim(d, spec.epsilon, w_star);
      return sampled({c.task1, c.task2}, w_star);
    }
    case ConstructionKind::kGaussianSubspaces: {
      const Index k = gaussian_rank(spec);
      std::vector<Subspace> subspaces;
      for (int t = 0; t < spec.T; ++t) subspaces.push_back(random_subspace(d, k, task_rng));
      const Vector w_star = task_rng.unit_vector(d);
      return sampled(std::move(subspaces), w_star);
    }
    case ConstructionKind::kAnglePair: {
      const Vector w_star = Vector::Unit(d, 0);
      AnglePair p = make_angle_pair(spec.epsilon, d, w_star);
      return sampled({p.task1, p.task2}, w_star);
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unhandled construction kind");
}

}  // namespace linreplay
