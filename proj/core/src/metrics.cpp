#include "linreplay/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "linreplay/error.hpp"

namespace linreplay {

std::string_view to_string(ForgettingVariant variant) {
  switch (variant) {
    case ForgettingVariant::kTrainSamples: return "TrainSamples";
    case ForgettingVariant::kTestSamples: return "TestSamples";
    case ForgettingVariant::kClosedForm: return "ClosedForm";
  }
  return "Unknown";
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ForgettingReport make_report(std::vector<double> losses, ForgettingVariant variant) {
  ForgettingReport report;
  report.variant = variant;
  report.average = pairwise_sum(losses) / static_cast<double>(losses.size());
  report.per_task_losses = std::move(losses);
  return report;
}

void require_two_tasks(std::size_t count) {
  if (count < 2) throw Error(ErrorCode::kTooFewTasks, "forgetting needs at least two tasks");
}

void require_same_dim(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "subspaces live in different ambient spaces");
  }
}

Matrix null_projector_matrix(const Subspace& s) {
  return null_projector(projector_onto(s)).matrix();
}

}  // namespace

std::string ForgettingReport::csv_row() const {
  std::string losses;
  for (std::size_t i = 0; i < per_task_losses.size(); ++i) {
    if (i > 0) losses += ';';
    losses += format_double(per_task_losses[i]);
  }
  return std::string(to_string(variant)) + "," + std::to_string(task_count()) + "," + losses + "," +
         format_double(average);
}

ForgettingReport forgetting_train(const TaskSequence& seq, const Vector& w) {
  require_two_tasks(seq.size());
  if (w.size() != seq.ambient_dim) throw Error(ErrorCode::kDimensionMismatch, "iterate has wrong length");
  std::vector<double> losses;
  losses.reserve(seq.size() - 1);
  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    losses.push_back((seq.tasks[t].X * w - seq.tasks[t].y).squaredNorm());
  }
  return make_report(std::move(losses), ForgettingVariant::kTrainSamples);
}

ForgettingReport forgetting_test(const std::vector<Subspace>& subspaces, const Vector& w,
                                 const Vector& w_star, Rng& rng,
                                 std::optional<Index> samples_per_task) {
  require_two_tasks(subspaces.size());
  const Vector error = w - w_star;
  std::vector<double> losses;
  losses.reserve(subspaces.size() - 1);
  for (std::size_t t = 0; t + 1 < subspaces.size(); ++t) {
    const Subspace& s = subspaces[t];
    if (s.ambient_dim() != error.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "iterate does not match subspace dimension");
    }
    const Index k = s.rank();
    const Index n = samples_per_task.value_or(k);
    if (k == 0 || n == 0) {
      losses.push_back(0.0);
      continue;
    }
    const Matrix rows = draw_rows(s, n, rng);
    // k/n rescaling keeps the expectation independent of the sample count.
    losses.push_back((rows * error).squaredNorm() * static_cast<double>(k) / static_cast<double>(n));
  }
  return make_report(std::move(losses), ForgettingVariant::kTestSamples);
}

ForgettingReport expected_test_forgetting(const std::vector<Subspace>& subspaces, const Vector& w,
                                          const Vector& w_star) {
  require_two_tasks(subspaces.size());
  const Vector error = w - w_star;
  std::vector<double> losses;
  for (std::size_t t = 0; t + 1 < subspaces.size(); ++t) {
    losses.push_back(subspaces[t].project(error).squaredNorm());
  }
  return make_report(std::move(losses), ForgettingVariant::kClosedForm);
}

double expected_forgetting_closed_form(const std::vector<Subspace>& subspaces, const Vector& w_star) {
  require_two_tasks(subspaces.size());
  Vector e = w_star;
  for (const Subspace& s : subspaces) e = s.project_out(e);  // P_T ... P_1 w*
  std::vector<double> losses;
  for (std::size_t t = 0; t + 1 < subspaces.size(); ++t) {
    losses.push_back(subspaces[t].project(e).squaredNorm());
  }
  return pairwise_sum(losses) / static_cast<double>(losses.size());
}

Subspace replay_null_space(const Subspace& s2, const Matrix& replay_rows) {
  return span_with_rows(s2, replay_rows).complement();
}

double replay_forgetting_two_tasks(const Subspace& s1, const Subspace& s2, const Vector& w_star,
                                   const Matrix& replay_rows) {
  require_same_dim(s1, s2);
  const Vector e1 = s1.project_out(w_star);                       // P_1 w*
  const Vector e2 = span_with_rows(s2, replay_rows).project_out(e1);  // Ptilde_2 P_1 w*
  return s1.project(e2).squaredNorm();
}

MeanEstimate expected_replay_forgetting_two_tasks(const Subspace& s1, const Subspace& s2,
                                                  const Vector& w_star, Index m,
                                                  std::size_t trials, const Rng& rng) {
  require_same_dim(s1, s2);
  if (m < 1) throw Error(ErrorCode::kInvalidParameters, "m must be >= 1");
  if (trials < 1) throw Error(ErrorCode::kInvalidParameters, "trials must be >= 1");
  const std::vector<double> values = run_trials(trials, [&](std::size_t i) {
    Rng trial_rng = rng.split(i);
    return replay_forgetting_two_tasks(s1, s2, w_star, draw_rows(s1, m, trial_rng));
  });
  return estimate_mean(values);
}

BenignCertificate benign_replay_certificate(const Subspace& s1, const Subspace& s2) {
  require_same_dim(s1, s2);
  const Subspace n1 = s1.complement();
  const Subspace n2 = s2.complement();
  BenignCertificate cert;
  // P_2 P_1 = N2 (N2^T N1) N1^T, so both share singular values.
  if (n1.rank() > 0 && n2.rank() > 0) cert.op_norm_value = op_norm(n2.basis().transpose() * n1.basis());
  cert.certified = cert.op_norm_value <= kBenignThreshold + 1e-12;
  return cert;
}

double expected_forgetting_trace_form(const Subspace& s1, const Subspace& s2,
                                      const std::optional<Projector>& replay_null_projector) {
  require_same_dim(s1, s2);
  const Index d = s1.ambient_dim();
  if (replay_null_projector && replay_null_projector->dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "replay projector has wrong dimension");
  }
  const Matrix p1 = null_projector_matrix(s1);
  const Matrix p2 = replay_null_projector ? replay_null_projector->matrix() : null_projector_matrix(s2);
  const Matrix a = p2 * p1;
  const Matrix gram = a.transpose() * a;
  // gram is symmetric, so trace(gram^2) is its squared Frobenius norm.
  return gram.trace() - gram.squaredNorm();
}

}  // namespace linreplay
