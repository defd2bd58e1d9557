#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <thread>
#include <vector>

namespace slv {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPi = std::numbers::pi;

/// Wrap an angle to (-pi, pi].
inline double wrap_to_pi(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

/// Unwrap `wrapped` onto the 2*pi branch closest to `reference`.
inline double unwrap_near(double wrapped, double reference) {
  return reference + wrap_to_pi(wrapped - reference);
}

/// Continuity unwrap of an ordered series of wrapped angles, anchored at
/// the element with index `anchor` (kept on its principal branch).
inline std::vector<double> unwrap_series(const std::vector<double>& wrapped,
                                         std::size_t anchor = 0) {
  std::vector<double> out(wrapped.size());
  if (wrapped.empty()) return out;
  out[anchor] = wrapped[anchor];
  for (std::size_t i = anchor + 1; i < wrapped.size(); ++i)
    out[i] = unwrap_near(wrapped[i], out[i - 1]);
  for (std::size_t i = anchor; i-- > 0;)
    out[i] = unwrap_near(wrapped[i], out[i + 1]);
  return out;
}

struct CircularStats {
  double mean = 0.0;      // in (-pi, pi]
  double std_dev = 0.0;   // linearized spread about the mean
  double std_error = 0.0; // std_dev / sqrt(n)
};

/// Mean and spread of angles without branch-cut artifacts: vector mean for
/// the center, then linearized deviations wrap_to_pi(x - mean).
template <typename Container>
CircularStats circular_stats(const Container& values) {
  CircularStats st;
  const std::size_t n = std::size(values);
  if (n == 0) return st;
  double sx = 0.0, sy = 0.0;
  for (double v : values) {
    sx += std::cos(v);
    sy += std::sin(v);
  }
  st.mean = std::atan2(sy, sx);
  double ss = 0.0;
  for (double v : values) {
    const double d = wrap_to_pi(v - st.mean);
    ss += d * d;
  }
  st.std_dev = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  st.std_error = st.std_dev / std::sqrt(static_cast<double>(n));
  return st;
}

/// Index-sharded parallel loop. Results must be written by index so the
/// outcome is identical for every thread count (including 1).
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(
      std::min<std::size_t>(threads, n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace slv
