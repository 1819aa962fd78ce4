#include "linreplay/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "linreplay/error.hpp"
#include "linreplay/learner.hpp"
#include "linreplay/stats.hpp"

namespace linreplay {

bool OracleVerdict::evaluate(double observed, double bound, double slack, Comparison comparison) {
  if (comparison == Comparison::kAtLeast) return observed + slack >= bound;
  return observed - slack <= bound;
}

std::string OracleVerdict::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s,%zu,%llu", name.c_str(), observed,
                bound_or_expected, pass ? "true" : "false", trials,
                static_cast<unsigned long long>(seed));
  return buf;
}

Vector oracle_min_norm(const Matrix& x, const Vector& y, const Vector& w_prev) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (y.size() != n || w_prev.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "system shapes disagree");
  }
  if (!x.allFinite() || !y.allFinite() || !w_prev.allFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, "system contains NaN or Inf");
  }
  Matrix kkt = Matrix::Zero(d + n, d + n);
  kkt.topLeftCorner(d, d).setIdentity();
  kkt.topRightCorner(d, n) = x.transpose();
  kkt.bottomLeftCorner(n, d) = x;
  Vector rhs(d + n);
  rhs << w_prev, y;

  Eigen::FullPivLU<Matrix> lu(kkt);
  lu.setThreshold(kRankTolerance);
  const Vector sol = lu.solve(rhs);
  const Vector w = sol.head(d);
  const double scale = std::max(1.0, y.norm());
  if ((x * w - y).norm() > kConsistencyTolerance * scale || !w.allFinite()) {
    throw Error(ErrorCode::kInconsistentSystem, "KKT system has no exact solution");
  }
  return w;
}

double claim_c2_statistic(double alpha1, double alpha2) {
  const double a1sq = alpha1 * alpha1;
  const double denom = alpha2 * alpha2 / 63.0 + a1sq;
  if (denom == 0.0) return 0.0;
  const double ratio = a1sq / denom;  // alpha'^2 in [0, 1]
  return 63.0 * ratio - 62.0 * ratio * ratio;
}

OracleVerdict oracle_claim_c2(std::size_t trials, const Rng& rng) {
  if (trials < 10000) throw Error(ErrorCode::kInvalidParameters, "claim check needs >= 10^4 trials");
  // Fixed-size blocks so the draws do not depend on the thread count.
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<double> values(trials);
  run_trials(blocks, [&](std::size_t b) {
    Rng block_rng = rng.split(b);
    const std::size_t end = std::min(trials, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const double a1 = block_rng.normal();
      const double a2 = block_rng.normal();
      values[i] = claim_c2_statistic(a1, a2);
    }
    return 0.0;
  });
  const MeanEstimate est = estimate_mean(values);
  OracleVerdict v;
  v.name = "claim_c2_mean";
  v.observed = est.mean;
  v.std_err = est.std_err;
  v.bound_or_expected = kClaimC2LowerBound;
  v.slack = 3.0 * est.std_err;
  v.comparison = Comparison::kAtLeast;
  v.pass = OracleVerdict::evaluate(v.observed, v.bound_or_expected, v.slack, v.comparison);
  v.trials = trials;
  v.seed = rng.seed();
  return v;
}

double projection_tail_bound(Index m, double t) {
  return std::exp(0.5 * static_cast<double>(m) * (1.0 - t + std::log(t)));
}

std::vector<OracleVerdict> oracle_random_projection_tails(Index d, Index m, std::size_t trials,
                                                          const Rng& rng) {
  if (m < 1 || m >= d - 1) throw Error(ErrorCode::kInvalidParameters, "need 1 <= m < d - 1");
  if (trials < 10000) throw Error(ErrorCode::kInvalidParameters, "tail check needs >= 10^4 trials");
  const Index dim = d - 1;
  const double expected = static_cast<double>(m) / static_cast<double>(dim);
  const std::vector<double> stats = run_trials(trials, [&](std::size_t i) {
    Rng trial_rng = rng.split(i);
    const Vector u = trial_rng.unit_vector(dim);
    return u.head(m).squaredNorm();
  });

  struct Tail {
    const char* name;
    double t;
    bool lower;
  };
  std::vector<OracleVerdict> out;
  for (const Tail& tail : {Tail{"projection_tail_lower", 1.0 / 30.0, true},
                           Tail{"projection_tail_upper", 5.0, false}}) {
    const double threshold = tail.t * expected;
    std::size_t hits = 0;
    for (double s : stats) hits += tail.lower ? (s <= threshold) : (s >= threshold);
    const double bound = projection_tail_bound(m, tail.t);
    OracleVerdict v;
    v.name = std::string(tail.name) + "_d" + std::to_string(d) + "_m" + std::to_string(m);
    v.observed = static_cast<double>(hits) / static_cast<double>(trials);
    v.bound_or_expected = bound;
    v.std_err = std::sqrt(bound * (1.0 - bound) / static_cast<double>(trials));
    v.slack = 3.0 * v.std_err;
    v.comparison = Comparison::kAtMost;
    v.pass = OracleVerdict::evaluate(v.observed, v.bound_or_expected, v.slack, v.comparison);
    v.trials = trials;
    v.seed = rng.seed();
    out.push_back(std::move(v));
  }
  return out;
}

OracleVerdict oracle_projector_sandwich(Index d, Index m, double epsilon, std::size_t trials,
                                        const Rng& rng) {
  if (m < 1 || m >= d - 1) throw Error(ErrorCode::kInvalidParameters, "need 1 <= m < d - 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::kInvalidParameters, "epsilon must lie in (0, 1]");
  if (trials < 1) throw Error(ErrorCode::kInvalidParameters, "trials must be >= 1");
  const Index dim = d - 1;
  const Vector v2 = Vector::Unit(dim, 1);
  Vector sigma_sqrt = Vector::Ones(dim);
  sigma_sqrt(1) = epsilon;

  const std::vector<double> violations = run_trials(trials, [&](std::size_t i) {
    Rng trial_rng = rng.split(i);
    const Matrix z_iso = trial_rng.gaussian_matrix(m, dim);
    const Matrix z_aniso = z_iso * sigma_sqrt.asDiagonal();
    const double iso = orthonormal_basis(z_iso).project(v2).squaredNorm();
    const double aniso = orthonormal_basis(z_aniso).project(v2).squaredNorm();
    const double low = epsilon * epsilon * iso - aniso;
    const double high = aniso - iso;
    return std::max({0.0, low, high});
  });

  OracleVerdict v;
  v.name = "projector_sandwich_d" + std::to_string(d) + "_m" + std::to_string(m);
  v.observed = *std::max_element(violations.begin(), violations.end());
  v.bound_or_expected = 1e-10;
  v.comparison = Comparison::kAtMost;
  v.pass = OracleVerdict::evaluate(v.observed, v.bound_or_expected, 0.0, v.comparison);
  v.trials = trials;
  v.seed = rng.seed();
  return v;
}

OracleVerdict oracle_min_norm_crosscheck(std::size_t systems, const Rng& rng) {
  const std::vector<double> gaps = run_trials(systems, [&](std::size_t i) {
    Rng r = rng.split(i);
    const Index d = 2 + static_cast<Index>(r.below(9));  // 2..10
    const Index n = 1 + static_cast<Index>(r.below(static_cast<std::uint64_t>(d)));
    Matrix x = r.gaussian_matrix(n, d);
    if (n > 1 && r.uniform() < 0.3) x.row(n - 1) = x.row(0) * r.normal();  // redundant row
    const Vector w_star = r.gaussian_vector(d);
    const Vector y = x * w_star;
    const Vector w_prev = r.gaussian_vector(d);
    const Task task{x, y, std::nullopt};
    return (oracle_min_norm(x, y, w_prev) - fit_closed_form(w_prev, task)).norm();
  });
  OracleVerdict v;
  v.name = "min_norm_kkt_vs_pinv";
  v.observed = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
  v.bound_or_expected = 1e-8;
  v.comparison = Comparison::kAtMost;
  v.pass = OracleVerdict::evaluate(v.observed, v.bound_or_expected, 0.0, v.comparison);
  v.trials = systems;
  v.seed = rng.seed();
  return v;
}

}  // namespace linreplay
