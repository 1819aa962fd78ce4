// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
//   linreplay_acceptance            run all criteria
//   linreplay_acceptance 4 6        run only criteria 4 and 6
//
// Exit status is 0 when every selected criterion passes, 1 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "linreplay/error.hpp"
#include "linreplay/harness.hpp"
#include "linreplay/learner.hpp"
#include "linreplay/metrics.hpp"
#include "linreplay/oracle.hpp"
#include "linreplay/stats.hpp"
#include "linreplay/task_gen.hpp"

using namespace linreplay;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr std::uint64_t kSeed = 20241015;

// Final iterates with and without replaying a single row of the worst case.
struct WorstRun {
  double a2 = 0;
  double no_replay = 0;
  double replay_x2 = 0;
  double x1_shift = 0;
};

WorstRun run_worst(int T) {
  Rng rng(kSeed);
  const WorstCase wc = make_worst_case(T, 3, {}, rng);
  Rng r0(1), r1(1), r2(1);
  const LearnerState none = run_sequence(wc.sequence, std::nullopt, ClosedFormSolver{}, r0);
  const LearnerState x2 = run_sequence(wc.sequence, ReplaySchedule{0, ReplayPolicy::fixed({wc.x2_ref}), std::nullopt},
                                       ClosedFormSolver{}, r1);
  const LearnerState x1 = run_sequence(wc.sequence, ReplaySchedule{0, ReplayPolicy::fixed({wc.x1_ref}), std::nullopt},
                                       ClosedFormSolver{}, r2);
  return {wc.a * wc.a, forgetting_train(wc.sequence, none.w).average, forgetting_train(wc.sequence, x2.w).average,
          (x1.w - none.w).norm()};
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const WorstRun r = run_worst(10);
  const double secs = seconds_since(t0);
  const double want_none = 3.0 * r.a2 / (28.0 * 9.0);
  const double want_9_196 = 9.0 * r.a2 / 196.0;
  const double want_3_14 = 3.0 * r.a2 / 14.0;
  const bool none_ok = std::abs(r.no_replay - want_none) <= 1e-9;
  const bool replay_ok = std::abs(r.replay_x2 - want_9_196) <= 1e-9;
  const bool time_ok = secs < 1.0;
  return {none_ok && replay_ok && time_ok,
          "no_replay=" + num(r.no_replay) + " (want " + num(want_none) + ", " + (none_ok ? "ok" : "off") +
              "); replay_x2=" + num(r.replay_x2) + " (want 9a^2/196=" + num(want_9_196) + ", " +
              (replay_ok ? "ok" : "off by " + num(std::abs(r.replay_x2 - want_9_196))) +
              "; matches 3a^2/14=" + num(want_3_14) + " to " + num(std::abs(r.replay_x2 - want_3_14)) +
              "); " + num(secs) + " s"};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  double max_scaled_dev = 0, max_spread = 0, max_9_196_dev = 0, max_3_14_dev = 0;
  double first_replay = std::nan("");
  for (int T : {2, 5, 10, 50, 100}) {
    const WorstRun r = run_worst(T);
    max_scaled_dev = std::max(max_scaled_dev, std::abs(r.no_replay * (T - 1) - 3.0 * r.a2 / 28.0));
    if (std::isnan(first_replay)) first_replay = r.replay_x2;
    max_spread = std::max(max_spread, std::abs(r.replay_x2 - first_replay));
    max_9_196_dev = std::max(max_9_196_dev, std::abs(r.replay_x2 - 9.0 * r.a2 / 196.0));
    max_3_14_dev = std::max(max_3_14_dev, std::abs(r.replay_x2 - 3.0 * r.a2 / 14.0));
  }
  const double secs = seconds_since(t0);
  const bool scaled_ok = max_scaled_dev <= 1e-8;
  const bool flat_ok = max_spread <= 1e-8;
  const bool value_ok = max_9_196_dev <= 1e-8;
  return {scaled_ok && flat_ok && value_ok && secs < 5.0,
          "max|F_none*(T-1) - 3a^2/28|=" + num(max_scaled_dev) + (scaled_ok ? " ok" : " off") +
              "; replay spread over T=" + num(max_spread) + (flat_ok ? " ok" : " off") +
              "; max|F_replay - 9a^2/196|=" + num(max_9_196_dev) + (value_ok ? " ok" : " off") +
              " (vs 3a^2/14: " + num(max_3_14_dev) + "); " + num(secs) + " s"};
}

Outcome criterion3() {
  double worst = 0;
  for (int T : {2, 5, 10, 50, 100}) worst = std::max(worst, run_worst(T).x1_shift);
  return {worst <= 1e-9, "max ||w_T(x1) - w_T|| over T in {2,5,10,50,100} = " + num(worst)};
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.command = Command::kAvgCase3D;
  cfg.trials = 100000;
  cfg.m_list = {1};
  cfg.seed = kSeed;
  const ExperimentResult r = run_command(cfg);
  const double secs = seconds_since(t0);
  const ResultRow* ratio = r.find("ratio");
  const double lo = ratio->value - 3.0 * ratio->std_err;
  const double hi = ratio->value + 3.0 * ratio->std_err;
  return {hi >= 1.4 && lo > 1.0 && secs < 30.0,
          "ratio=" + num(ratio->value) + " +- " + num(ratio->std_err) + " (need mean+3se >= 1.4, mean-3se > 1); " +
              num(secs) + " s"};
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const OracleVerdict v = oracle_claim_c2(1000000, Rng(kSeed));
  const double secs = seconds_since(t0);
  return {v.pass && secs < 10.0,
          "mean=" + num(v.observed) + " +- " + num(v.std_err) + " (bound 1.4); " + num(secs) + " s"};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    check_highdim_constraints(152, 10);
  } catch (const Error& e) {
    return {false, e.what()};
  }
  ExperimentConfig cfg;
  cfg.command = Command::kAvgCaseHighDim;
  cfg.d = 152;
  cfg.m_list = {10};
  cfg.epsilon = 0.4;
  cfg.trials = 10000;
  cfg.seed = kSeed;
  const ExperimentResult r = run_command(cfg);
  const double secs = seconds_since(t0);
  const ResultRow* rep = r.find("replay");
  const double base = r.find("no_replay")->value;
  const bool above = rep->value - 3.0 * rep->std_err > base;
  return {above && secs < 60.0, "constraints ok; replay=" + num(rep->value) + " +- " + num(rep->std_err) +
                                     " vs a^2 eps^2 (1-eps^2)=" + num(base) + "; " + num(secs) + " s"};
}

Outcome criterion7() {
  Rng rng(kSeed);
  const std::size_t draws = 100000;
  double worst_z = 0;
  int misses = 0;
  for (int s = 0; s < 10; ++s) {
    const Index d = 3 + static_cast<Index>(rng.below(8));
    const int T = 2 + static_cast<int>(rng.below(3));
    TaskSequence seq;
    seq.ambient_dim = d;
    seq.w_star = rng.unit_vector(d);
    for (int t = 0; t < T; ++t) {
      const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - 1)));
      seq.tasks.push_back(sample_task(random_subspace(d, k, rng), k, seq.w_star, rng));
    }
    Rng run_rng = rng.split(1000 + s);
    const LearnerState state = run_sequence(seq, std::nullopt, ClosedFormSolver{}, run_rng);
    const auto subspaces = task_subspaces(seq);
    const double exact = expected_forgetting_closed_form(subspaces, seq.w_star);
    const Rng base = rng.split(2000 + s);
    const auto xs = run_trials(draws, [&](std::size_t i) {
      Rng r = base.split(i);
      return forgetting_test(subspaces, state.w, seq.w_star, r).average;
    });
    const MeanEstimate e = estimate_mean(xs);
    const double gap = std::abs(e.mean - exact);
    const double z = e.std_err > 1e-15 ? gap / e.std_err : (gap <= 1e-12 ? 0.0 : 1e300);
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++misses;
  }
  return {misses == 0, "10 sequences, 1e5 draws each; worst |mean - closed form| = " + num(worst_z) + " se"};
}

Outcome criterion8() {
  Rng rng(kSeed);
  const Index d = 8;
  int certified = 0, sampled = 0, violations = 0;
  double worst_excess = -1e300;
  while (certified < 100) {
    ++sampled;
    const Index k1 = 1 + static_cast<Index>(rng.below(d - 1));
    const Index k2 = 1 + static_cast<Index>(rng.below(d - 1));
    const Subspace s1 = random_subspace(d, k1, rng);
    const Subspace s2 = random_subspace(d, k2, rng);
    if (!benign_replay_certificate(s1, s2).certified) continue;
    ++certified;
    const double base = expected_forgetting_trace_form(s1, s2);
    const Index n1 = k1 + 2;
    const Matrix samples = draw_rows(s1, n1, rng);
    for (int k = 0; k < 50; ++k) {
      const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n1)));
      std::vector<Index> order(static_cast<std::size_t>(n1));
      for (Index i = 0; i < n1; ++i) order[static_cast<std::size_t>(i)] = i;
      Matrix rows(m, d);
      for (Index i = 0; i < m; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + rng.below(order.size() - static_cast<std::size_t>(i));
        std::swap(order[static_cast<std::size_t>(i)], order[j]);
        rows.row(i) = samples.row(order[static_cast<std::size_t>(i)]);
      }
      const Projector replay_null = null_projector(projector_onto(span_with_rows(s2, rows)));
      const double excess = expected_forgetting_trace_form(s1, s2, replay_null) - base;
      worst_excess = std::max(worst_excess, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return {violations == 0, std::to_string(certified) + " certified of " + std::to_string(sampled) +
                               " sampled pairs, 50 subsets each; violations=" + std::to_string(violations) +
                               ", max excess=" + num(worst_excess)};
}

Outcome criterion9() {
  ExperimentConfig cfg;
  cfg.command = Command::kAngleSweep;
  cfg.seed = kSeed;
  const ExperimentResult r = run_command(cfg);
  double worst = 0;
  for (const ResultRow& row : r.rows) {
    if (row.label.rfind("forgetting_", 0) == 0) worst = std::max(worst, row.abs_dev());
  }
  const ResultRow* arg = r.find("argmax_closed");
  const double step = std::numbers::pi / 2.0 / (*r.config.theta_steps - 1);
  const bool peak_ok = std::abs(arg->value - std::numbers::pi / 4.0) <= step + 1e-12;
  return {worst <= 1e-8 && peak_ok, std::to_string(*r.config.theta_steps) + " grid points; max deviation " +
                                        num(worst) + "; argmax " + num(arg->value) + " (pi/4=" +
                                        num(std::numbers::pi / 4.0) + ", step " + num(step) + ")"};
}

Outcome criterion10() {
  Rng rng(kSeed);
  GdConfig gd = harness_gd_config();
  gd.epochs = 2000000;
  double worst_plain = 0, worst_replay = 0;
  int failures = 0, unconverged = 0;
  RunOptions opts;
  opts.tolerate_unconverged = true;
  for (int s = 0; s < 100; ++s) {
    const Index d = 4 + static_cast<Index>(rng.below(17));
    const int T = 2 + static_cast<int>(rng.below(4));
    TaskSequence seq;
    seq.ambient_dim = d;
    seq.w_star = rng.unit_vector(d);
    for (int t = 0; t < T; ++t) {
      const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d / 2)));
      seq.tasks.push_back(sample_task(random_subspace(d, k, rng), 4 * k, seq.w_star, rng));
    }
    const Index available = seq.tasks.front().rows();
    const ReplaySchedule sched{1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(available))),
                               ReplayPolicy::uniform(), std::nullopt};
    for (bool with_replay : {false, true}) {
      const std::optional<ReplaySchedule> replay = with_replay ? std::optional(sched) : std::nullopt;
      try {
        Rng a = rng.split(static_cast<std::uint64_t>(s)), b = rng.split(static_cast<std::uint64_t>(s));
        const Vector closed = run_sequence(seq, replay, ClosedFormSolver{}, a).w;
        const LearnerState iter = run_sequence(seq, replay, gd, b, opts);
        unconverged += iter.unconverged_fits;
        const double gap = (closed - iter.w).norm();
        (with_replay ? worst_replay : worst_plain) = std::max(with_replay ? worst_replay : worst_plain, gap);
        if (gap > 1e-4) ++failures;
      } catch (const Error& e) {
        ++failures;
        std::fprintf(stderr, "sequence %d: %s\n", s, e.what());
      }
    }
  }
  return {failures == 0, "100 sequences, d<=20, T<=5; max gap without replay " + num(worst_plain) +
                             ", with replay " + num(worst_replay) + "; failures=" + std::to_string(failures) +
                             "; fits stopped at the epoch cap=" + std::to_string(unconverged)};
}

Outcome criterion11() {
  bool all = true;
  std::string detail;
  for (const auto& [d, m] : {std::pair<Index, Index>{152, 10}, std::pair<Index, Index>{31, 5}}) {
    for (const OracleVerdict& v : oracle_random_projection_tails(d, m, 100000, Rng(kSeed).split(d))) {
      all = all && v.pass;
      if (!detail.empty()) detail += "; ";
      detail += v.name + " " + num(v.observed) + " - " + num(v.slack) + " <= " + num(v.bound_or_expected) +
                (v.pass ? "" : " FAILED");
    }
  }
  return {all, detail};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "worst-case constants at T=10", criterion1},
      {2, "no-replay decay and replay plateau over T", criterion2},
      {3, "replaying a zero-error sample is neutral", criterion3},
      {4, "3D average case replay ratio", criterion4},
      {5, "alpha-statistic mean bound, 1e6 trials", criterion5},
      {6, "high-dimensional replay increase", criterion6},
      {7, "test-sample forgetting vs closed form", criterion7},
      {8, "no harm on certified pairs", criterion8},
      {9, "angle sweep curve and peak", criterion9},
      {10, "GD vs closed-form iterates", criterion10},
      {11, "random-projection tail bounds", criterion11},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
