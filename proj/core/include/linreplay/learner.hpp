#pragma once

// Sequential minimum-norm learner with optional episodic replay. Two solver
// paths: the closed form w = X^+ y + (I - X^+ X) w_prev, and (stochastic)
// gradient descent started from w_prev, which converges to the same point.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "linreplay/linalg.hpp"
#include "linreplay/rng.hpp"
#include "linreplay/task_gen.hpp"

namespace linreplay {

struct ReplayMemory {
  Matrix rows;  // m x d
  Vector labels;
  std::vector<RowRef> provenance;

  Index size() const noexcept { return rows.rows(); }
  bool empty() const noexcept { return rows.rows() == 0; }

  static ReplayMemory empty_for(Index d) { return ReplayMemory{Matrix(0, d), Vector(0), {}}; }
};

enum class StepRule {
  /// Step size is `learning_rate` as given.
  kFixed,
  /// Step size is learning_rate / lambda_max of the (weighted, normalized)
  /// Gram matrix of the rows being fit; learning_rate must lie in (0, 2).
  kInverseLipschitz,
};

/// Gradient descent on L(w) = (1 / 2b) sum_i c_i (x_i^T w - y_i)^2 over each
/// batch of b task rows, with replayed rows weighted by c_i = b / min(b, m).
/// batch_size == 0 selects full-batch GD.
struct GdConfig {
  double learning_rate = 0.1;
  int epochs = 7000;
  Index batch_size = 0;
  double lr_decay = 1.0;          // per-epoch multiplicative factor
  double convergence_tol = 1e-10; // on the unweighted ||X w - y||
  StepRule step_rule = StepRule::kFixed;

  void validate() const;
};

struct GdResult {
  Vector w;
  bool converged = false;
  int epochs_run = 0;
  double residual = 0.0;
};

/// Closed-form minimum-distance update. Throws kInconsistentSystem when the
/// task has no exact solution.
Vector fit_closed_form(const Vector& w_prev, const Task& task);

/// Runs GD without throwing on non-convergence. Throws kDiverged when the
/// full-batch step exceeds 2 / lambda_max, the loss rises for 10 consecutive
/// epochs, or the iterate stops being finite.
GdResult fit_gd_detailed(const Vector& w_prev, const Task& task, const ReplayMemory& memory,
                         const GdConfig& cfg, Rng& rng);

/// As fit_gd_detailed, but throws kNotConverged when the residual tolerance
/// is not met within cfg.epochs.
Vector fit_gd(const Vector& w_prev, const Task& task, const GdConfig& cfg, Rng& rng);
Vector fit_gd(const Vector& w_prev, const Task& task, const ReplayMemory& memory,
              const GdConfig& cfg, Rng& rng);

struct ReplayPolicy {
  enum class Kind { kUniformWithoutReplacement, kFixed };
  Kind kind = Kind::kUniformWithoutReplacement;
  std::vector<RowRef> fixed_rows;

  static ReplayPolicy uniform() { return {}; }
  static ReplayPolicy fixed(std::vector<RowRef> rows) {
    return ReplayPolicy{Kind::kFixed, std::move(rows)};
  }
};

/// Memory drawn from tasks [0, upto_task). Uniform draws m distinct rows;
/// Fixed copies the listed rows verbatim and ignores m.
ReplayMemory select_replay(const TaskSequence& seq, std::size_t upto_task, Index m,
                           const ReplayPolicy& policy, Rng& rng);

/// Task rows followed by memory rows.
Task augment_with_replay(const Task& task, const ReplayMemory& memory);

struct ReplaySchedule {
  Index m = 0;
  ReplayPolicy policy;
  /// Task at which memory is drawn and replayed; defaults to the last task.
  std::optional<std::size_t> at_task;
};

struct ClosedFormSolver {};
using Solver = std::variant<ClosedFormSolver, GdConfig>;

struct LearnerState {
  Vector w;                     // final iterate w_T
  std::vector<Vector> history;  // w_1..w_T
  Index d = 0;
  std::optional<ReplayMemory> memory;  // memory used at the replay task
  std::size_t replay_task = 0;
  /// Number of GD fits that stopped at the epoch cap (GD path only).
  int unconverged_fits = 0;
};

struct RunOptions {
  /// When set, GD fits that miss the tolerance keep their last iterate and
  /// are counted in LearnerState::unconverged_fits instead of throwing.
  bool tolerate_unconverged = false;
};

/// Trains task by task from w_0 = 0. Replay memory is drawn once, at the
/// scheduled task, from the tasks before it. The replay draw and the GD
/// shuffles use separate sub-streams of `rng`, so both solvers see the same
/// memory for the same seed.
LearnerState run_sequence(const TaskSequence& seq, const std::optional<ReplaySchedule>& replay,
                          const Solver& solver, Rng& rng, const RunOptions& options = {});

/// JSON array of {task_index, w, residuals}, where residuals[j] is
/// ||X_j w_t - y_j||^2 for every task j before t.
std::string trajectory_json(const TaskSequence& seq, const LearnerState& state);

}  // namespace linreplay
