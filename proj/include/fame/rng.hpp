#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace fame {

// Deterministic random source. std::mt19937_64 is bit-stable across
// platforms, but the standard distributions are not, so the mappings to
// doubles, ranges and tokens are spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the spare keeps draws paired.
  double gaussian();

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Lowercase alphanumeric token, e.g. "ysuvkz41" for length 8.
  std::string token(std::size_t length);

  // Independent stream derived from (seed, stream); used to decouple the
  // consumers of one top-level seed from each other.
  static Rng fork(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fame
