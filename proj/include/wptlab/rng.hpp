#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace wptlab {

// Identifies the generator and the variate transforms below. Any change to
// either that alters output bumps the version.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-substreams/v1";

// Maps (seed, stream) to an independent sub-seed with two splitmix64 rounds.
// Stream ids are fixed per purpose so that adding a consumer never shifts an
// existing stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seedable generator whose variates are fully specified here (the standard
// library distributions are implementation-defined, so they are not used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // 53-bit uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_phase();

  // Exp(1) by inverse CDF: -log(1 - U).
  double exponential();

  // N(0, 1) by Box-Muller; consumes exactly two uniforms per call.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace wptlab
