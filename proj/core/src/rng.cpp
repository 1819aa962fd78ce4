#include "linreplay/rng.hpp"

#include "linreplay/error.hpp"

namespace linreplay {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(splitmix64(seed_) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidParameters, "below(0) has no valid outcome");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

Vector Rng::gaussian_vector(Index n, double stddev) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = stddev * normal();
  return v;
}

Matrix Rng::gaussian_matrix(Index rows, Index cols, double stddev) {
  Matrix m(rows, cols);
  // Row-major fill so that row j only depends on the draws before it.
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = stddev * normal();
  }
  return m;
}

Vector Rng::unit_vector(Index n) {
  Vector v = gaussian_vector(n);
  double norm = v.norm();
  while (norm == 0.0) {
    v = gaussian_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace linreplay
