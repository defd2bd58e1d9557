#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "slv/errors.hpp"
#include "slv/sequencer.hpp"
#include "slv/trace.hpp"
#include "slv/version.hpp"

namespace slv {

// On-disk trace format: little-endian header
//   magic "SLVT" | version u16 | channel u8 | sample_rate f64 | length u64
// followed by float32 samples. The file stores what the digitizer knows;
// the time origin and beat frequency travel with the experiment config.

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  put_bytes(out, bytes, sizeof(T));
}

template <typename T>
T get_le(const std::vector<unsigned char>& buf, std::size_t offset) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr std::size_t kTraceHeaderBytes = 4 + 2 + 1 + 8 + 8;

/// What a trace file actually stores. Reassembled into a Trace with
/// make_trace once the caller supplies the time origin and beat frequency.
struct RawTrace {
  Channel channel = Channel::kReference;
  double sample_rate = 0.0;
  std::vector<float> samples;
};

inline void write_trace_binary(const std::string& path, const Trace& trace) {
  std::string blob;
  blob.reserve(kTraceHeaderBytes + 4 * trace.samples.size());
  detail::put_bytes(blob, "SLVT", 4);
  detail::put_le<std::uint16_t>(blob,
                                static_cast<std::uint16_t>(kTraceFormatVersion));
  detail::put_le<std::uint8_t>(blob, static_cast<std::uint8_t>(trace.channel));
  detail::put_le<double>(blob, trace.config.sample_rate);
  detail::put_le<std::uint64_t>(blob, trace.samples.size());
  for (double v : trace.samples)
    detail::put_le<float>(blob, static_cast<float>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline RawTrace read_trace_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};
  if (buf.size() < kTraceHeaderBytes)
    throw FormatError(path + ": header: file shorter than the fixed header");
  if (std::memcmp(buf.data(), "SLVT", 4) != 0)
    throw FormatError(path + ": header: bad magic (expected SLVT)");
  const auto version = detail::get_le<std::uint16_t>(buf, 4);
  if (version != kTraceFormatVersion)
    throw FormatError(path + ": header: unsupported version " +
                      std::to_string(version));
  const auto channel_tag = detail::get_le<std::uint8_t>(buf, 6);
  if (channel_tag > 2)
    throw FormatError(path + ": header: unknown channel tag " +
                      std::to_string(channel_tag));
  RawTrace raw;
  raw.channel = static_cast<Channel>(channel_tag);
  raw.sample_rate = detail::get_le<double>(buf, 7);
  if (!(raw.sample_rate > 0.0) || !std::isfinite(raw.sample_rate))
    throw FormatError(path + ": header: sample_rate must be finite and > 0");
  const auto length = detail::get_le<std::uint64_t>(buf, 15);
  if (buf.size() != kTraceHeaderBytes + 4 * length)
    throw FormatError(path + ": samples: payload truncated (header says " +
                      std::to_string(length) + " samples)");
  raw.samples.resize(length);
  for (std::uint64_t i = 0; i < length; ++i)
    raw.samples[i] =
        detail::get_le<float>(buf, kTraceHeaderBytes + 4 * i);
  return raw;
}

/// Rebuilds an analysis-ready trace from file contents plus the two pieces
/// of context the file does not carry.
inline Trace make_trace(const RawTrace& raw, double t_start,
                        double beat_frequency_hz) {
  if (raw.samples.empty())
    throw FormatError("trace payload is empty, nothing to analyze");
  Trace trace;
  trace.config.sample_rate = raw.sample_rate;
  trace.config.duration =
      static_cast<double>(raw.samples.size()) / raw.sample_rate;
  trace.config.beat_frequency = beat_frequency_hz;
  trace.config.t_start = t_start;
  trace.config.validate();
  trace.channel = raw.channel;
  trace.samples.assign(raw.samples.begin(), raw.samples.end());
  return trace;
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# time_s,value_arb,channel=" << channel_name(trace.channel) << "\n";
  char row[80];
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    // Values pass through float32 so the text round-trips the binary form.
    std::snprintf(row, sizeof(row), "%.12g,%.9g\n", trace.time_at(i),
                  static_cast<double>(static_cast<float>(trace.samples[i])));
    out << row;
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Trace read_trace_csv(const std::string& path,
                            double beat_frequency_hz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<double> times, values;
  std::string line;
  std::size_t lineno = 0;
  Channel channel = Channel::kReference;
  bool channel_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("channel=");
      if (pos != std::string::npos) {
        const std::string name = line.substr(pos + 8);
        for (Channel c : {Channel::kReference, Channel::kProbe,
                          Channel::kControl}) {
          if (name == channel_name(c)) {
            channel = c;
            channel_seen = true;
          }
        }
      }
      continue;
    }
    double t = 0.0, v = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &t, &v) != 2)
      throw FormatError(path + ": row " + std::to_string(lineno) +
                        ": expected \"time,value\"");
    times.push_back(t);
    values.push_back(v);
  }
  if (times.size() < 2)
    throw FormatError(path + ": need at least 2 samples");
  const double dt = (times.back() - times.front()) /
                    static_cast<double>(times.size() - 1);
  if (!(dt > 0.0))
    throw FormatError(path + ": time column must be increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double expected = times.front() + static_cast<double>(i) * dt;
    if (std::abs(times[i] - expected) > 0.25 * dt)
      throw FormatError(path + ": row " + std::to_string(i + 1) +
                        ": time off the uniform sample grid");
  }
  RawTrace raw;
  raw.channel = channel;
  raw.sample_rate = 1.0 / dt;
  raw.samples.assign(values.begin(), values.end());
  Trace trace = make_trace(raw, times.front(), beat_frequency_hz);
  if (!channel_seen) trace.channel = Channel::kReference;
  return trace;
}

}  // namespace slv
