#pragma once

#include <cstdint>
#include <random>

#include "linreplay/linalg.hpp"

namespace linreplay {

/// Seeded generator that can be split into independent child streams. A child
/// is a pure function of (parent seed, stream id), so Monte Carlo trial i
/// always sees the same draws no matter which thread runs it.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Vector gaussian_vector(Index n, double stddev = 1.0);
  Matrix gaussian_matrix(Index rows, Index cols, double stddev = 1.0);
  /// Uniform direction on the unit sphere of R^n.
  Vector unit_vector(Index n);

  Engine& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stream ids used to derive sub-streams; one per consumer so the streams of
/// different commands never collide.
namespace streams {
inline constexpr std::uint64_t kTasks = 1;
inline constexpr std::uint64_t kReplay = 2;
inline constexpr std::uint64_t kSolver = 3;
inline constexpr std::uint64_t kTest = 4;
inline constexpr std::uint64_t kTrials = 5;
inline constexpr std::uint64_t kFiller = 6;
inline constexpr std::uint64_t kRotation = 7;
}  // namespace streams

}  // namespace linreplay
