#pragma once

// Experiment commands behind the CLI. Each command resolves its defaults,
// validates, runs, and returns rows ready for CSV plus a JSON sidecar.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linreplay/learner.hpp"
#include "linreplay/linalg.hpp"

namespace linreplay {

enum class Command { kWorstCase, kAvgCase3D, kAvgCaseHighDim, kReplaySweep, kAngleSweep, kBenignCheck, kOracles };

/// CLI spelling: worst-case, avg-case-3d, avg-case-highdim, replay-sweep,
/// angle-sweep, benign-check, oracles.
std::string_view to_string(Command command);
Command command_from_string(std::string_view name);

enum class SolverChoice { kClosed, kGd, kBoth };

std::string_view to_string(SolverChoice solver);
SolverChoice solver_from_string(std::string_view name);

/// Unset fields take per-command defaults in `resolved()`.
struct ExperimentConfig {
  Command command = Command::kWorstCase;
  std::optional<int> T;
  std::optional<Index> d;
  std::optional<double> epsilon;
  std::vector<Index> m_list;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 42;
  std::optional<SolverChoice> solver;
  std::optional<int> theta_steps;
  std::optional<Index> n;  // samples per task (replay-sweep)
  std::optional<std::string> construction;  // replay-sweep: "3d" or "highdim"
  std::optional<Vector> w_star;  // API only; overrides the default witness
  std::string output_path;

  /// Copy with every default for `command` filled in.
  ExperimentConfig resolved() const;

  /// Throws kInvalidConfig, or kConstraintViolation for the high-dimensional
  /// constants. Call on a resolved config.
  void validate() const;

  std::string to_json() const;
};

/// Parses "1,2,5" into {1, 2, 5}. Throws kInvalidConfig on junk.
std::vector<Index> parse_m_list(std::string_view text);

/// Constants of the high-dimensional construction.
inline constexpr double kHighDimC1 = 120.0;
inline constexpr double kHighDimC2 = 15.0;
inline constexpr double kHighDimC3 = 97.0;

/// Throws kConstraintViolation naming the first of c1 < d, c2 m < d - 1,
/// d - 1 < exp(m ln m) / c3 that fails.
void check_highdim_constraints(Index d, Index m);

struct ResultRow {
  std::string label;
  double x = 0.0;        // sweep coordinate (T, m, theta, ...) or 0
  double value = 0.0;
  double std_err = 0.0;  // 0 for exact values
  std::optional<double> analytic;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string note;

  double abs_dev() const;
  double rel_dev() const;
};

struct ExperimentResult {
  ExperimentConfig config;  // resolved
  std::vector<ResultRow> rows;
  std::map<std::string, double> analytic_predictions;
  double wallclock_seconds = 0.0;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty(); }
  const ResultRow* find(std::string_view label, std::optional<double> x = std::nullopt) const;

  static std::string csv_header();
  std::string csv() const;
  std::string sidecar_json() const;
};

/// Columns of every command's CSV.
inline constexpr std::string_view kCsvColumns =
    "command,label,x,value,std_err,analytic,abs_dev,rel_dev,trials,seed,note";

/// GD settings used by the commands when the gd solver is selected.
GdConfig harness_gd_config();

ExperimentResult cmd_worst_case(const ExperimentConfig& cfg);
ExperimentResult cmd_avg_case_3d(const ExperimentConfig& cfg);
ExperimentResult cmd_avg_case_highdim(const ExperimentConfig& cfg);
ExperimentResult cmd_replay_sweep(const ExperimentConfig& cfg);
ExperimentResult cmd_angle_sweep(const ExperimentConfig& cfg);
ExperimentResult cmd_benign_check(const ExperimentConfig& cfg);
ExperimentResult cmd_oracles(const ExperimentConfig& cfg);

/// Resolves, validates and dispatches on cfg.command.
ExperimentResult run_command(const ExperimentConfig& cfg);

}  // namespace linreplay
