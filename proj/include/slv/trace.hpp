#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "slv/errors.hpp"
#include "slv/sequencer.hpp"

namespace slv {

/// Digitizer view of one channel: uniform sampling from t_start.
struct TraceConfig {
  double sample_rate = 2.5e9;      // Hz
  double duration = 20.0e-6;       // s
  double beat_frequency = 80.0e6;  // Hz
  double amplitude = 1.0;          // beat amplitude scale
  double t_start = -8.0e-6;        // s, first sample time

  std::size_t sample_count() const {
    const double n = sample_rate * duration;
    return static_cast<std::size_t>(std::llround(n));
  }

  double dt() const { return 1.0 / sample_rate; }

  void validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
      throw ConfigError("trace.sample_rate_hz: must be > 0");
    if (!(duration > 0.0) || !std::isfinite(duration))
      throw ConfigError("trace.duration_s: must be > 0");
    const double n = sample_rate * duration;
    if (std::abs(n - std::llround(n)) > 1e-6 || n < 2.0)
      throw ConfigError(
          "trace.sample_rate_hz * trace.duration_s: must be an integer "
          "sample count >= 2");
    if (!(beat_frequency > 0.0) || !(beat_frequency < 0.5 * sample_rate))
      throw ConfigError(
          "trace.beat_frequency_hz: must be > 0 and below Nyquist "
          "(sample_rate/2)");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
      throw ConfigError("trace.amplitude: must be > 0");
    if (!std::isfinite(t_start))
      throw ConfigError("trace.t_start_s: must be finite");
  }

  friend bool operator==(const TraceConfig& a, const TraceConfig& b) {
    return a.sample_rate == b.sample_rate && a.duration == b.duration &&
           a.beat_frequency == b.beat_frequency &&
           a.amplitude == b.amplitude && a.t_start == b.t_start;
  }
};

struct Trace {
  TraceConfig config;
  Channel channel = Channel::kReference;
  std::vector<double> samples;

  double time_at(std::size_t i) const {
    return config.t_start + static_cast<double>(i) / config.sample_rate;
  }
};

/// Sample-wise mean of aligned records (the oscilloscope averaging mode).
/// Summation runs in argument order so the result is reproducible.
inline Trace average_traces(const std::vector<Trace>& records) {
  if (records.empty())
    throw std::invalid_argument("average_traces: no records given");
  const Trace& first = records.front();
  for (const Trace& r : records) {
    if (!(r.config == first.config) || r.channel != first.channel ||
        r.samples.size() != first.samples.size())
      throw std::invalid_argument(
          "average_traces: records disagree in config/channel/length");
  }
  Trace out;
  out.config = first.config;
  out.channel = first.channel;
  out.samples.assign(first.samples.size(), 0.0);
  for (const Trace& r : records)
    for (std::size_t i = 0; i < r.samples.size(); ++i)
      out.samples[i] += r.samples[i];
  const double inv = 1.0 / static_cast<double>(records.size());
  for (double& v : out.samples) v *= inv;
  return out;
}

}  // namespace slv
