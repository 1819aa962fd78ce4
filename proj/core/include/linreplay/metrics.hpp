#pragma once

// Forgetting quantities: empirical (train and fresh-test samples), the
// closed-form expectation over test draws, Monte Carlo replay expectations,
// and the operator-norm certificate for benign replay.

#include <optional>
#include <string>
#include <vector>

#include "linreplay/linalg.hpp"
#include "linreplay/rng.hpp"
#include "linreplay/stats.hpp"
#include "linreplay/task_gen.hpp"

namespace linreplay {

enum class ForgettingVariant { kTrainSamples, kTestSamples, kClosedForm };

std::string_view to_string(ForgettingVariant variant);

struct ForgettingReport {
  std::vector<double> per_task_losses;  // tasks 1..T-1
  double average = 0.0;
  ForgettingVariant variant = ForgettingVariant::kTrainSamples;

  std::size_t task_count() const noexcept { return per_task_losses.size() + 1; }

  /// `variant,T,loss_1;loss_2;...,average` with round-trip precision.
  std::string csv_row() const;
  static std::string csv_header() { return "variant,T,per_task_losses,average"; }
};

/// Average of ||X_t w - y_t||^2 over the first T-1 tasks.
ForgettingReport forgetting_train(const TaskSequence& seq, const Vector& w);

/// Draws fresh samples from each of the first T-1 subspaces (k_t of them, or
/// `samples_per_task` when given) and evaluates the train-style average on
/// them with labels from w_star.
ForgettingReport forgetting_test(const std::vector<Subspace>& subspaces, const Vector& w,
                                 const Vector& w_star, Rng& rng,
                                 std::optional<Index> samples_per_task = std::nullopt);

/// Expected test forgetting of a given iterate: average of ||Pi_t (w - w*)||^2.
ForgettingReport expected_test_forgetting(const std::vector<Subspace>& subspaces,
                                          const Vector& w, const Vector& w_star);

/// Expected test forgetting of the exact sequential learner without replay:
/// average over t < T of ||Pi_t P_T ... P_1 w*||^2.
double expected_forgetting_closed_form(const std::vector<Subspace>& subspaces, const Vector& w_star);

/// Null space of task 2 after adding replayed rows: basis of the complement of
/// span(s2) + rowspan(rows).
Subspace replay_null_space(const Subspace& s2, const Matrix& replay_rows);

/// ||Pi_1 Ptilde_2 P_1 w*||^2 for one replay draw.
double replay_forgetting_two_tasks(const Subspace& s1, const Subspace& s2, const Vector& w_star,
                                   const Matrix& replay_rows);

/// Monte Carlo of E ||Pi_1 Ptilde_2 P_1 w*||^2 with m replay rows drawn from
/// s1's sampling law per trial. Trial i uses rng.split(i).
MeanEstimate expected_replay_forgetting_two_tasks(const Subspace& s1, const Subspace& s2,
                                                  const Vector& w_star, Index m,
                                                  std::size_t trials, const Rng& rng);

struct BenignCertificate {
  double op_norm_value = 0.0;
  bool certified = false;
};

/// ||P_2 P_1||_op and whether it is at most sqrt(2)/2 (+1e-12).
BenignCertificate benign_replay_certificate(const Subspace& s1, const Subspace& s2);

inline constexpr double kBenignThreshold = 0.70710678118654752440;

/// trace(A^T A - (A^T A)^2) with A = P_2 P_1, or A = Ptilde_2 P_1 when a
/// replay null projector is supplied: the two-task forgetting averaged over
/// w* ~ N(0, I).
double expected_forgetting_trace_form(const Subspace& s1, const Subspace& s2,
                                      const std::optional<Projector>& replay_null_projector = std::nullopt);

}  // namespace linreplay
