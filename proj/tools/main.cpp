#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "linreplay/error.hpp"
#include "linreplay/harness.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;

constexpr const char* kFooter = R"(Commands:
  worst-case        adversarial sequence, with and without replaying x2 / x1
  avg-case-3d       3D pair, Monte Carlo of replay vs no-replay forgetting
  avg-case-highdim  high-dimensional pair (needs 120 < d, 15m < d-1, d-1 < m^m/97)
  replay-sweep      forgetting against replay size m, per solver (--construction 3d|highdim)
  angle-sweep       forgetting of a rank-1 null-space pair over a theta grid
  benign-check      ||P2 P1|| <= sqrt(2)/2 certificate against random replay subsets
  oracles           brute-force checks (alpha statistic, projection tails, KKT solver)

CSV columns (every command):
  command,label,x,value,std_err,analytic,abs_dev,rel_dev,trials,seed,note
  label    quantity name, e.g. no_replay_closed, gd_expected_test, forgetting_closed
  x        sweep coordinate: T (worst-case), m (avg-case, replay-sweep), theta (angle-sweep)
  analytic closed-form counterpart, blank when none; abs_dev/rel_dev compare it to value
  seed     base seed; rerunning with it reproduces the row bit for bit
With --out, a JSON sidecar (<out>.json) echoes the resolved config and timings.

Exit codes: 0 ok, 2 invalid config, 3 a check against an analytic value failed.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample replay in over-parameterized continual linear regression"};
  app.footer(kFooter);

  std::string command;
  std::optional<int> T, theta_steps;
  std::optional<long> d, n;
  std::optional<double> epsilon;
  std::optional<std::size_t> trials;
  std::optional<std::string> solver, construction;
  std::string m_text, out;
  std::uint64_t seed = 42;

  app.add_option("command", command, "Experiment to run")->required();
  app.add_option("--T", T, "Number of tasks");
  app.add_option("--d", d, "Ambient dimension");
  app.add_option("--epsilon", epsilon, "Construction parameter");
  app.add_option("--m", m_text, "Replay sizes, comma separated (e.g. 0,1,2)");
  app.add_option("--trials", trials, "Monte Carlo trials (seeds for replay-sweep, pairs for benign-check)");
  app.add_option("--seed", seed, "Base seed")->capture_default_str();
  app.add_option("--solver", solver, "closed|gd|both");
  app.add_option("--n", n, "Samples per task (replay-sweep)");
  app.add_option("--theta-steps", theta_steps, "Grid points on [0, pi/2] (angle-sweep)");
  app.add_option("--construction", construction, "3d|highdim (replay-sweep)");
  app.add_option("--out", out, "CSV path; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  linreplay::ExperimentResult result;
  try {
    linreplay::ExperimentConfig cfg;
    cfg.command = linreplay::command_from_string(command);
    cfg.T = T;
    if (d) cfg.d = static_cast<linreplay::Index>(*d);
    if (n) cfg.n = static_cast<linreplay::Index>(*n);
    cfg.epsilon = epsilon;
    if (!m_text.empty()) cfg.m_list = linreplay::parse_m_list(m_text);
    cfg.trials = trials;
    cfg.seed = seed;
    if (solver) cfg.solver = linreplay::solver_from_string(*solver);
    cfg.theta_steps = theta_steps;
    cfg.construction = construction;
    cfg.output_path = out;
    result = linreplay::run_command(cfg);
  } catch (const linreplay::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config = e.code() == linreplay::ErrorCode::kInvalidConfig ||
                        e.code() == linreplay::ErrorCode::kConstraintViolation;
    return config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  if (out.empty()) {
    std::cout << result.csv();
  } else {
    std::ofstream csv(out);
    std::ofstream sidecar(out + ".json");
    csv << result.csv();
    sidecar << result.sidecar_json() << "\n";
    if (!csv || !sidecar) {
      std::cerr << "error: could not write " << out << "\n";
      return kExitRuntime;
    }
  }
  for (const std::string& f : result.failures) std::cerr << "check failed: " << f << "\n";
  std::cerr << "wallclock " << result.wallclock_seconds << " s\n";
  return result.ok() ? 0 : kExitAssertion;
}
