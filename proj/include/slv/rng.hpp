#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "slv/common.hpp"

namespace slv {

/// splitmix64 step (Vigna). Used both as a stream generator for seed
/// derivation and as a finalizer/mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derive an independent stream seed from the master seed and a path of
/// indices. Documented contract: mixing is order-sensitive, so
/// (purpose, a, b, c) identifies one stream; any shot can be regenerated
/// in isolation from (master_seed, path).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = master;
  for (std::uint64_t v : {purpose, a, b, c}) {
    s ^= v + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    std::uint64_t st = s;
    s = splitmix64(st);
  }
  return s;
}

/// Purpose tags for derive_seed paths (recorded in run manifests).
namespace seed_purpose {
inline constexpr std::uint64_t kVibration = 1;
inline constexpr std::uint64_t kLaserWalk = 2;
inline constexpr std::uint64_t kWhiteRef = 3;
inline constexpr std::uint64_t kWhiteProbe = 4;
inline constexpr std::uint64_t kRetrievalJitter = 5;
inline constexpr std::uint64_t kRetrievalWalk = 6;
}  // namespace seed_purpose

/// Operation tags that key top-level timelines apart.
namespace seed_op {
inline constexpr std::uint64_t kShot = 1;
inline constexpr std::uint64_t kSweep = 2;
inline constexpr std::uint64_t kSigmaPhi = 3;
inline constexpr std::uint64_t kAveraging = 4;
}  // namespace seed_op

/// Deterministic Gaussian stream: mt19937_64 + Box-Muller, self-contained
/// so the draw sequence is pinned by this header alone.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = kTwoPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace slv
