#include <cmath>
#include <numbers>

#include "linreplay/learner.hpp"
#include "linreplay/metrics.hpp"
#include "test_util.hpp"

using namespace linreplay;

namespace {

// ||Pi_1 Ptilde_2 P_1 w*||^2 with every projector built densely from a
// full-pivot LU kernel.
double dense_replay_forgetting(const Subspace& s1, const Subspace& s2, const Vector& w, const Matrix& rows) {
  const Matrix x1 = s1.basis().transpose();
  Matrix x2(s2.rank() + rows.rows(), s2.ambient_dim());
  x2 << s2.basis().transpose(), rows;
  const Matrix p1 = testutil::dense_null_projector(x1);
  const Matrix p2 = testutil::dense_null_projector(x2);
  const Matrix pi1 = Matrix::Identity(w.size(), w.size()) - p1;
  return (pi1 * p2 * p1 * w).squaredNorm();
}

}  // namespace

TEST(Forgetting, TrainAveragesFirstTasks) {
  TaskSequence seq;
  seq.ambient_dim = 2;
  seq.w_star = Vector::Zero(2);
  seq.tasks.push_back(Task{Matrix::Identity(1, 2), Vector::Zero(1), std::nullopt});
  seq.tasks.push_back(Task{Matrix::Identity(2, 2).bottomRows(1), Vector::Zero(1), std::nullopt});
  seq.tasks.push_back(Task{Matrix::Identity(2, 2), Vector::Zero(2), std::nullopt});
  Vector w(2);
  w << 2, 3;
  const ForgettingReport r = forgetting_train(seq, w);
  ASSERT_EQ(r.per_task_losses.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_task_losses[0], 4.0);
  EXPECT_DOUBLE_EQ(r.per_task_losses[1], 9.0);
  EXPECT_DOUBLE_EQ(r.average, 6.5);
  EXPECT_EQ(r.task_count(), 3u);
  EXPECT_EQ(r.csv_row(), "TrainSamples,3,4;9,6.5");
}

TEST(Forgetting, NeedsTwoTasks) {
  TaskSequence seq;
  seq.ambient_dim = 2;
  seq.w_star = Vector::Zero(2);
  seq.tasks.push_back(Task{Matrix::Identity(1, 2), Vector::Zero(1), std::nullopt});
  EXPECT_THROW_CODE(forgetting_train(seq, Vector::Zero(2)), ErrorCode::kTooFewTasks);
  EXPECT_THROW_CODE(expected_forgetting_closed_form({Subspace::full(2)}, Vector::Zero(2)), ErrorCode::kTooFewTasks);
}

TEST(Forgetting, ClosedFormMatchesLearnerOnWorstCase) {
  for (int T : {2, 3, 7}) {
    Rng rng(static_cast<std::uint64_t>(T));
    const WorstCase wc = make_worst_case(T, 3, {}, rng);
    Rng r(1);
    const LearnerState s = run_sequence(wc.sequence, std::nullopt, ClosedFormSolver{}, r);
    const auto subspaces = task_subspaces(wc.sequence);
    // Worst-case rows are orthonormal within each task except x1, x2, so
    // compare against the expected-test version of the same iterate.
    EXPECT_NEAR(expected_test_forgetting(subspaces, s.w, wc.sequence.w_star).average,
                expected_forgetting_closed_form(subspaces, wc.sequence.w_star), 1e-14);
    EXPECT_NEAR(forgetting_train(wc.sequence, s.w).average, wc.analytic_no_replay(), 1e-14);
  }
}

TEST(Forgetting, TestSamplesAreUnbiasedForClosedForm) {
  Rng rng(4);
  std::vector<Subspace> subspaces;
  for (Index k : {2, 3, 1}) subspaces.push_back(random_subspace(6, k, rng));
  const Vector w_star = rng.unit_vector(6);
  const Vector w = rng.gaussian_vector(6);
  const double exact = expected_test_forgetting(subspaces, w, w_star).average;
  std::vector<double> draws(20000);
  for (double& x : draws) x = forgetting_test(subspaces, w, w_star, rng, 2).average;
  const MeanEstimate e = estimate_mean(draws);
  EXPECT_NEAR(e.mean, exact, 4.0 * e.std_err);
}

TEST(Forgetting, ReportVariants) {
  EXPECT_EQ(to_string(ForgettingVariant::kClosedForm), "ClosedForm");
  EXPECT_EQ(ForgettingReport::csv_header(), "variant,T,per_task_losses,average");
}

TEST(Replay, SingleDrawMatchesDenseProjectors) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 4 + static_cast<Index>(rng.below(6));
    const Subspace s1 = random_subspace(d, 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - 2))), rng);
    const Subspace s2 = random_subspace(d, 1, rng);
    const Vector w = rng.unit_vector(d);
    const Matrix rows = draw_rows(s1, 1 + static_cast<Index>(rng.below(3)), rng);
    EXPECT_NEAR(replay_forgetting_two_tasks(s1, s2, w, rows), dense_replay_forgetting(s1, s2, w, rows), 1e-12);
  }
}

TEST(Replay, ReplayNullSpaceIsComplementOfAugmentedSpan) {
  Rng rng(6);
  const Subspace s2 = random_subspace(6, 2, rng);
  const Matrix rows = rng.gaussian_matrix(2, 6);
  const Subspace n = replay_null_space(s2, rows);
  EXPECT_EQ(n.rank(), 2);
  EXPECT_LT((rows * n.basis()).norm(), 1e-12);
  EXPECT_LT((s2.basis().transpose() * n.basis()).norm(), 1e-12);
}

TEST(Replay, ThreeDimensionalIncreaseMatchesNumpyEstimate) {
  const double eps = kAvgCase3DEpsilon;
  const Vector p1{{0.0, std::sqrt(1 - eps * eps), -eps}};
  const AvgCase3D c = make_avg_case_3d(eps, p1);
  const MeanEstimate e = expected_replay_forgetting_two_tasks(c.task1, c.task2, p1, 1, 100000, Rng(77));
  const double ref = testutil::ref("avg3d_replay_mean");
  const double se = std::hypot(e.std_err, testutil::ref("avg3d_replay_se"));
  EXPECT_NEAR(e.mean, ref, 4.0 * se);
  EXPECT_GT(e.mean, c.analytic_no_replay());
}

TEST(Replay, FullSpanReplayRemovesForgetting) {
  const double eps = kAvgCase3DEpsilon;
  const Vector p1{{0.0, std::sqrt(1 - eps * eps), -eps}};
  const AvgCase3D c = make_avg_case_3d(eps, p1);
  const MeanEstimate e = expected_replay_forgetting_two_tasks(c.task1, c.task2, p1, 2, 2000, Rng(3));
  EXPECT_LT(e.mean, 1e-9);
}

TEST(Replay, MonteCarloValidatesArguments) {
  const Subspace a = Subspace::full(3), b = Subspace::zero(3);
  EXPECT_THROW_CODE(expected_replay_forgetting_two_tasks(a, b, Vector::Zero(3), 0, 10, Rng(1)),
                    ErrorCode::kInvalidParameters);
  EXPECT_THROW_CODE(expected_replay_forgetting_two_tasks(a, Subspace::zero(4), Vector::Zero(3), 1, 10, Rng(1)),
                    ErrorCode::kDimensionMismatch);
}

TEST(Benign, CertificateIsCosineOfNullSpaceAngle) {
  for (double theta : {0.2, std::numbers::pi / 4, std::numbers::pi / 3, 1.4}) {
    const AnglePair p = make_angle_pair(theta, 5, Vector::Unit(5, 0));
    const BenignCertificate c = benign_replay_certificate(p.task1, p.task2);
    EXPECT_NEAR(c.op_norm_value, std::cos(theta), 1e-12);
    EXPECT_EQ(c.certified, std::cos(theta) <= kBenignThreshold + 1e-12);
  }
}

TEST(Benign, TraceFormEqualsGaussianAverage) {
  Rng rng(8);
  const Subspace s1 = random_subspace(5, 2, rng);
  const Subspace s2 = random_subspace(5, 3, rng);
  const double trace = expected_forgetting_trace_form(s1, s2);
  std::vector<double> draws(50000);
  for (double& x : draws) {
    x = expected_forgetting_closed_form({s1, s2}, rng.gaussian_vector(5));
  }
  const MeanEstimate e = estimate_mean(draws);
  EXPECT_NEAR(e.mean, trace, 4.0 * e.std_err);
}

TEST(Benign, CertifiedPairsNeverGetWorseWithReplay) {
  Rng rng(9);
  int certified = 0;
  for (int trial = 0; trial < 300 && certified < 40; ++trial) {
    const Index d = 6;
    const Subspace s1 = random_subspace(d, 3 + static_cast<Index>(rng.below(3)), rng);
    const Subspace s2 = random_subspace(d, 3 + static_cast<Index>(rng.below(3)), rng);
    if (!benign_replay_certificate(s1, s2).certified) continue;
    ++certified;
    const double base = expected_forgetting_trace_form(s1, s2);
    for (int k = 0; k < 10; ++k) {
      const Matrix rows = draw_rows(s1, 1 + static_cast<Index>(rng.below(3)), rng);
      const Projector p = null_projector(projector_onto(span_with_rows(s2, rows)));
      EXPECT_LE(expected_forgetting_trace_form(s1, s2, p), base + 1e-12);
    }
  }
  EXPECT_GE(certified, 10);
}

TEST(Benign, RejectsMismatchedProjector) {
  const Subspace s = Subspace::full(3);
  EXPECT_THROW_CODE(expected_forgetting_trace_form(s, s, Projector::from_matrix(Matrix::Identity(4, 4))),
                    ErrorCode::kDimensionMismatch);
}
