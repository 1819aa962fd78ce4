#pragma once

// Independent brute-force checks: a KKT route to the minimum-distance update,
// the alpha-statistic expectation behind the 3D counterexample, and
// random-projection concentration bounds.

#include <cstdint>
#include <string>
#include <vector>

#include "linreplay/linalg.hpp"
#include "linreplay/rng.hpp"

namespace linreplay {

enum class Comparison { kAtLeast, kAtMost };

struct OracleVerdict {
  std::string name;
  double observed = 0.0;
  double bound_or_expected = 0.0;
  /// Allowance in favour of `observed` (e.g. 3 standard errors).
  double slack = 0.0;
  Comparison comparison = Comparison::kAtLeast;
  bool pass = false;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double std_err = 0.0;

  /// kAtLeast: observed + slack >= bound. kAtMost: observed - slack <= bound.
  static bool evaluate(double observed, double bound, double slack, Comparison comparison);

  /// `name,observed,bound,pass,trials,seed`.
  std::string csv_row() const;
  static std::string csv_header() { return "name,observed,bound,pass,trials,seed"; }
};

/// argmin ||w - w_prev|| s.t. X w = y through the KKT system
/// [I X^T; X 0] [w; lambda] = [w_prev; y], solved with a full-pivot LU.
Vector oracle_min_norm(const Matrix& x, const Vector& y, const Vector& w_prev);

/// 63 a'^2 - 62 a'^4 with a'^2 = a1^2 / (a2^2 / 63 + a1^2).
double claim_c2_statistic(double alpha1, double alpha2);

/// Lower bound from the 3D counterexample.
inline constexpr double kClaimC2LowerBound = 1.4;

/// Mean of claim_c2_statistic over `trials` standard-normal pairs; passes
/// when mean + 3 SE >= 1.4. Requires trials >= 10^4.
OracleVerdict oracle_claim_c2(std::size_t trials, const Rng& rng);

/// exp(m/2 (1 - t + ln t)): tail bound for the squared norm of the first m
/// coordinates of a uniform unit vector in R^{d-1} around t m / (d - 1).
double projection_tail_bound(Index m, double t);

/// Empirical tails at t = 1/30 (lower) and t = 5 (upper) against the bound
/// with a 3-sigma binomial slack. Requires 1 <= m < d - 1, trials >= 10^4.
std::vector<OracleVerdict> oracle_random_projection_tails(Index d, Index m, std::size_t trials,
                                                          const Rng& rng);

/// For each trial builds the anisotropic replay span (covariance
/// diag(1, eps^2, 1, ...)) and the isotropic span from the same Gaussian
/// draws in R^{d-1}, and checks
///   eps^2 ||Phat v2||^2 <= ||Pitilde v2||^2 <= ||Phat v2||^2
/// within 1e-10. `observed` is the largest violation seen.
OracleVerdict oracle_projector_sandwich(Index d, Index m, double epsilon, std::size_t trials,
                                        const Rng& rng);

/// Largest ||oracle_min_norm - fit_closed_form|| over `systems` random
/// consistent systems with d <= 10; passes at 1e-8.
OracleVerdict oracle_min_norm_crosscheck(std::size_t systems, const Rng& rng);

}  // namespace linreplay
