#pragma once

// Deterministic random-number plumbing.
//
// Every stochastic component takes an explicit Rng so that independent
// subsystems (environment, exploration, replay sampling, model fitting,
// per-state scoring) own separate streams derived from the experiment seed.
// Draw counts are fixed per operation: normal() always consumes exactly two
// engine words and keeps no cached spare, so interleaving streams can never
// shift downstream draws.

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Core>

namespace cail {

// SplitMix64 step; used to mix seed keys into well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Order-sensitive hash of up to four 64-bit keys.
inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t state = 0x8F1BBCDCBFA53E0Bull;
  std::uint64_t h = splitmix64(state);
  state ^= a;
  h ^= splitmix64(state);
  state ^= b;
  h ^= splitmix64(state);
  state ^= c;
  h ^= splitmix64(state);
  state ^= d;
  h ^= splitmix64(state);
  return h;
}

class Rng {
 public:
  Rng() : engine_(0x2545F4914F6CDD1Dull) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Derives an independent stream from (seed, stream keys).
  static Rng from_keys(std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0, std::uint64_t d = 0) {
    return Rng(mix_keys(a, b, c, d));
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Standard normal via Box-Muller; exactly two engine words per call.
  double normal() {
    const double u1 =
        (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * EIGEN_PI * u2);
  }

  // Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  Eigen::VectorXd uniform_vector(int dim, double lo, double hi) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Eigen::VectorXd normal_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  // Engine state round-trips through text exactly (used by run checkpoints).
  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cail
