#include "linreplay/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "linreplay/error.hpp"

namespace linreplay {

void GdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidParameters, "learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "lr_decay must lie in (0, 1]");
  }
  if (epochs < 1) throw Error(ErrorCode::kInvalidParameters, "epochs must be >= 1");
  if (batch_size < 0) throw Error(ErrorCode::kInvalidParameters, "batch_size must be >= 0");
  if (!(convergence_tol > 0.0)) throw Error(ErrorCode::kInvalidParameters, "convergence_tol must be positive");
  if (step_rule == StepRule::kInverseLipschitz && learning_rate >= 2.0) {
    throw Error(ErrorCode::kInvalidParameters, "inverse-Lipschitz step fraction must be < 2");
  }
}

Vector fit_closed_form(const Vector& w_prev, const Task& task) {
  if (w_prev.size() != task.dim() || task.y.size() != task.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "task and iterate shapes disagree");
  }
  if (task.rows() == 0) return w_prev;
  const TruncatedSvd svd(task.X);
  const double residual = svd.range_residual(task.y);
  if (residual > consistency_bound(svd, task.y)) {
    throw Error(ErrorCode::kInconsistentSystem, "task has no exact solution");
  }
  // X^+ y + (I - X^+ X) w_prev, written as a correction of w_prev.
  return w_prev + svd.solve(task.y - task.X * w_prev);
}

// ------------------------------------------------------------------- GD

namespace {

struct WeightedRows {
  Matrix X;
  Vector y;
  Vector weight;
};

double weighted_loss(const WeightedRows& rows, const Vector& w) {
  const Vector r = rows.X * w - rows.y;
  return 0.5 * (rows.weight.array() * r.array().square()).sum() / static_cast<double>(rows.X.rows());
}

double max_eigen_normalized_gram(const Matrix& X, const Vector& weight, double batch) {
  if (X.rows() == 0) return 0.0;
  const Matrix gram = X.transpose() * weight.asDiagonal() * X / batch;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

GdResult fit_gd_detailed(const Vector& w_prev, const Task& task, const ReplayMemory& memory,
                         const GdConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index d = task.dim();
  if (w_prev.size() != d || (!memory.empty() && memory.rows.cols() != d)) {
    throw Error(ErrorCode::kDimensionMismatch, "task, memory and iterate shapes disagree");
  }
  const Index n = task.rows();
  const Index m = memory.size();
  GdResult result{w_prev, false, 0, 0.0};
  if (n + m == 0) {
    result.converged = true;
    return result;
  }

  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  const Index b = full_batch ? n : cfg.batch_size;
  const Index b_mem = std::min(std::max<Index>(b, 1), m);
  const double mem_weight = m == 0 ? 0.0 : static_cast<double>(std::max<Index>(b, 1)) / b_mem;

  // All rows (task first, memory after) with their loss weights; used for the
  // stopping rule and the full-batch path.
  WeightedRows all;
  all.X.resize(n + m, d);
  all.y.resize(n + m);
  all.weight.resize(n + m);
  all.X << task.X, memory.rows;
  all.y << task.y, memory.labels;
  all.weight.head(n).setOnes();
  all.weight.tail(m).setConstant(mem_weight);
  const double norm_batch = static_cast<double>(std::max<Index>(b, 1));

  const double lambda_max = max_eigen_normalized_gram(all.X, all.weight, norm_batch);
  double lr = cfg.learning_rate;
  if (cfg.step_rule == StepRule::kInverseLipschitz) {
    if (lambda_max <= 0.0) {
      result.converged = true;
      return result;
    }
    lr = cfg.learning_rate / lambda_max;
  } else if (full_batch && lr * lambda_max >= 2.0) {
    throw Error(ErrorCode::kDiverged, "learning rate " + std::to_string(lr) +
                                          " exceeds 2 / lambda_max = " + std::to_string(2.0 / lambda_max));
  }

  Vector w = w_prev;
  auto residual_norm = [&](const Vector& v) { return (all.X * v - all.y).norm(); };
  result.residual = residual_norm(w);
  if (result.residual <= cfg.convergence_tol) {
    result.converged = true;
    return result;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<Index> mem_order(static_cast<std::size_t>(m));
  std::iota(mem_order.begin(), mem_order.end(), Index{0});

  double prev_loss = weighted_loss(all, w);
  int rising = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (full_batch) {
      const Vector r = all.X * w - all.y;
      w -= (lr / norm_batch) * (all.X.transpose() * (all.weight.array() * r.array()).matrix());
    } else {
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (Index start = 0; start < n; start += b) {
        const Index stop = std::min(n, start + b);
        Vector grad = Vector::Zero(d);
        for (Index i = start; i < stop; ++i) {
          const auto row = task.X.row(order[static_cast<std::size_t>(i)]);
          grad += row.transpose() * (row.dot(w) - task.y(order[static_cast<std::size_t>(i)]));
        }
        if (m > 0) {
          // A fresh random batch of min(b, m) memory rows per step.
          std::shuffle(mem_order.begin(), mem_order.end(), rng.engine());
          for (Index j = 0; j < b_mem; ++j) {
            const Index idx = mem_order[static_cast<std::size_t>(j)];
            const auto row = memory.rows.row(idx);
            grad += mem_weight * row.transpose() * (row.dot(w) - memory.labels(idx));
          }
        }
        w -= (lr / norm_batch) * grad;
      }
    }
    result.epochs_run = epoch + 1;
    if (!w.allFinite()) throw Error(ErrorCode::kDiverged, "iterate became non-finite");

    result.residual = residual_norm(w);
    if (result.residual <= cfg.convergence_tol) {
      result.converged = true;
      break;
    }
    const double loss = weighted_loss(all, w);
    rising = loss > prev_loss ? rising + 1 : 0;
    if (rising >= 10) throw Error(ErrorCode::kDiverged, "loss increased for 10 consecutive epochs");
    prev_loss = loss;
    lr *= cfg.lr_decay;
  }
  result.w = std::move(w);
  return result;
}

Vector fit_gd(const Vector& w_prev, const Task& task, const ReplayMemory& memory,
              const GdConfig& cfg, Rng& rng) {
  GdResult r = fit_gd_detailed(w_prev, task, memory, cfg, rng);
  if (!r.converged) {
    throw Error(ErrorCode::kNotConverged, "residual " + std::to_string(r.residual) + " after " +
                                              std::to_string(r.epochs_run) + " epochs");
  }
  return std::move(r.w);
}

Vector fit_gd(const Vector& w_prev, const Task& task, const GdConfig& cfg, Rng& rng) {
  return fit_gd(w_prev, task, ReplayMemory::empty_for(task.dim()), cfg, rng);
}

// --------------------------------------------------------------- replay

ReplayMemory select_replay(const TaskSequence& seq, std::size_t upto_task, Index m,
                           const ReplayPolicy& policy, Rng& rng) {
  const Index d = seq.ambient_dim;
  if (upto_task > seq.size()) throw Error(ErrorCode::kInvalidParameters, "upto_task out of range");
  std::vector<RowRef> picked;
  if (policy.kind == ReplayPolicy::Kind::kFixed) {
    for (const RowRef& ref : policy.fixed_rows) {
      if (ref.task >= upto_task || ref.row < 0 || ref.row >= seq.tasks[ref.task].rows()) {
        throw Error(ErrorCode::kInvalidParameters, "fixed replay row is not from an earlier task");
      }
    }
    picked = policy.fixed_rows;
  } else {
    if (m < 0) throw Error(ErrorCode::kInvalidParameters, "m must be non-negative");
    std::vector<RowRef> pool;
    for (std::size_t t = 0; t < upto_task; ++t) {
      for (Index r = 0; r < seq.tasks[t].rows(); ++r) pool.push_back({t, r});
    }
    if (static_cast<std::size_t>(m) > pool.size()) {
      throw Error(ErrorCode::kNotEnoughSamples, "requested " + std::to_string(m) + " rows, only " +
                                                    std::to_string(pool.size()) + " available");
    }
    // Partial Fisher-Yates: the first m slots become a uniform m-subset.
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    picked.assign(pool.begin(), pool.begin() + m);
  }

  ReplayMemory mem{Matrix(static_cast<Index>(picked.size()), d),
                   Vector(static_cast<Index>(picked.size())), picked};
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const Task& src = seq.tasks[picked[i].task];
    mem.rows.row(static_cast<Index>(i)) = src.X.row(picked[i].row);
    mem.labels(static_cast<Index>(i)) = src.y(picked[i].row);
  }
  return mem;
}

Task augment_with_replay(const Task& task, const ReplayMemory& memory) {
  if (memory.empty()) return task;
  if (memory.rows.cols() != task.dim() || memory.labels.size() != memory.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "memory rows do not match task dimension");
  }
  Task out;
  out.X.resize(task.rows() + memory.size(), task.dim());
  out.X << task.X, memory.rows;
  out.y.resize(task.rows() + memory.size());
  out.y << task.y, memory.labels;
  return out;
}

// ------------------------------------------------------------ sequences

LearnerState run_sequence(const TaskSequence& seq, const std::optional<ReplaySchedule>& replay,
                          const Solver& solver, Rng& rng, const RunOptions& options) {
  if (seq.size() == 0) throw Error(ErrorCode::kTooFewTasks, "empty task sequence");
  const Index d = seq.ambient_dim;
  LearnerState state;
  state.d = d;
  state.w = Vector::Zero(d);

  std::size_t replay_task = seq.size() - 1;
  if (replay && replay->at_task) replay_task = *replay->at_task;
  if (replay && replay_task >= seq.size()) {
    throw Error(ErrorCode::kInvalidParameters, "replay task index out of range");
  }
  state.replay_task = replay_task;

  for (std::size_t t = 0; t < seq.size(); ++t) {
    const Task& task = seq.tasks[t];
    ReplayMemory memory = ReplayMemory::empty_for(d);
    if (replay && t == replay_task) {
      Rng replay_rng = rng.split(streams::kReplay);
      memory = select_replay(seq, t, replay->m, replay->policy, replay_rng);
      state.memory = memory;
    }
    if (std::holds_alternative<ClosedFormSolver>(solver)) {
      state.w = fit_closed_form(state.w, augment_with_replay(task, memory));
    } else {
      const GdConfig& cfg = std::get<GdConfig>(solver);
      Rng solver_rng = rng.split(streams::kSolver).split(t);
      GdResult r = fit_gd_detailed(state.w, task, memory, cfg, solver_rng);
      if (!r.converged) {
        if (!options.tolerate_unconverged) {
          throw Error(ErrorCode::kNotConverged, "task " + std::to_string(t) + ": residual " +
                                                    std::to_string(r.residual));
        }
        ++state.unconverged_fits;
      }
      state.w = std::move(r.w);
    }
    state.history.push_back(state.w);
  }
  return state;
}

std::string trajectory_json(const TaskSequence& seq, const LearnerState& state) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t t = 0; t < state.history.size(); ++t) {
    const Vector& w = state.history[t];
    std::vector<double> residuals;
    for (std::size_t j = 0; j < t && j < seq.size(); ++j) {
      residuals.push_back((seq.tasks[j].X * w - seq.tasks[j].y).squaredNorm());
    }
    out.push_back({{"task_index", t},
                   {"w", std::vector<double>(w.data(), w.data() + w.size())},
                   {"residuals", residuals}});
  }
  return out.dump();
}

}  // namespace linreplay
