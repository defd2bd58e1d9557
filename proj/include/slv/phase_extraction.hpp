#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "slv/common.hpp"
#include "slv/errors.hpp"
#include "slv/signal_synthesis.hpp"
#include "slv/trace.hpp"

namespace slv {

/// Demodulation window: a short cut of the beat around a time of interest.
struct DemodWindow {
  double center_s = 0.0;
  double length_s = 20.0e-9;
  double frequency_hz = 80.0e6;
  double amplitude_floor = 1.0e-4;
};

/// Extraction knobs shared by every phase readout in a campaign.
struct ExtractionConfig {
  double window_length_s = 20.0e-9;
  double amplitude_floor = 1.0e-4;

  void validate() const {
    if (!(window_length_s > 0.0) || !std::isfinite(window_length_s))
      throw ConfigError("extraction.window_length_s: must be > 0");
    if (!(amplitude_floor > 0.0) || !std::isfinite(amplitude_floor))
      throw ConfigError("extraction.amplitude_floor: must be > 0");
  }
};

/// Result of the single-window sinusoid fit
///   y ~ a*cos(2 pi f u) + b*sin(2 pi f u) + c,   u = t - t_reference,
/// reported as amplitude and phase with y ~ A*cos(2 pi f u + phase) + c.
struct SinusoidFit {
  double phase = 0.0;      // wrapped to (-pi, pi], at t_reference
  double amplitude = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  std::size_t n_samples = 0;
  double t_reference = 0.0;
  std::size_t center_index = 0;
  bool low_cycle_warning = false;  // window shorter than 1.5 beat cycles
};

/// Maps a requested window onto the sample grid. The count is forced odd
/// and the window is centered on the grid sample nearest the requested
/// center; a symmetric grid keeps the envelope taper from biasing the
/// fitted phase.
inline SampleRange window_sample_range(const TraceConfig& tc, double center_s,
                                       double length_s) {
  const double dt = tc.dt();
  const auto n = static_cast<long long>(tc.sample_count());
  const long long ic = std::llround((center_s - tc.t_start) / dt);
  const long long half = std::llround(length_s / (2.0 * dt));
  const long long first = ic - half;
  const long long last = ic + half;
  if (2 * half + 1 < 5)
    throw std::invalid_argument(
        "window_sample_range: window covers fewer than 5 samples");
  if (first < 0 || last >= n)
    throw std::invalid_argument(
        "window_sample_range: window extends outside the trace");
  return SampleRange{static_cast<std::size_t>(first),
                     static_cast<std::size_t>(2 * half + 1)};
}

/// Least-squares fit of a fixed-frequency sinusoid plus offset over one
/// window of samples. y points at the first sample of the window; the
/// window must be the one produced by window_sample_range (odd count).
///
/// When the beat amplitude follows a known pulse shape, pass its per-sample
/// values as `envelope` (same layout as y) and the quadrature basis becomes
/// g(t)cos, g(t)sin: the fit is then exact for a noiseless shaped pulse
/// instead of picking up a small bias from the amplitude modulation. The
/// reported amplitude refers to the envelope maximum inside the window.
inline SinusoidFit fit_beat_phase(const double* y, SampleRange span,
                                  const TraceConfig& tc, double frequency_hz,
                                  double amplitude_floor,
                                  const double* envelope = nullptr) {
  if (span.count < 5 || span.count % 2 == 0)
    throw std::invalid_argument(
        "fit_beat_phase: window must have an odd sample count >= 5");
  const double dt = tc.dt();
  const double w = kTwoPi * frequency_hz;
  const std::size_t ic = span.first + span.count / 2;

  double gmax = 0.0;
  if (envelope != nullptr) {
    for (std::size_t k = 0; k < span.count; ++k)
      gmax = std::max(gmax, std::abs(envelope[k]));
    if (gmax == 0.0) envelope = nullptr;  // dark window: plain basis
  }

  double scc = 0.0, sss = 0.0, scs = 0.0, sc = 0.0, ss = 0.0;
  double yc = 0.0, ys = 0.0, y1 = 0.0;
  for (std::size_t k = 0; k < span.count; ++k) {
    const double u =
        (static_cast<double>(span.first + k) - static_cast<double>(ic)) * dt;
    const double g = envelope != nullptr ? envelope[k] / gmax : 1.0;
    const double cv = g * std::cos(w * u);
    const double sv = g * std::sin(w * u);
    scc += cv * cv;
    sss += sv * sv;
    scs += cv * sv;
    sc += cv;
    ss += sv;
    yc += y[k] * cv;
    ys += y[k] * sv;
    y1 += y[k];
  }
  const double nn = static_cast<double>(span.count);

  // Cramer solve of the 3x3 normal equations.
  const double det = scc * (sss * nn - ss * ss) - scs * (scs * nn - ss * sc) +
                     sc * (scs * ss - sss * sc);
  if (std::abs(det) < 1e-12 * nn * nn * nn)
    throw std::invalid_argument(
        "fit_beat_phase: degenerate window (frequency too low for span)");
  const double a = (yc * (sss * nn - ss * ss) - scs * (ys * nn - ss * y1) +
                    sc * (ys * ss - sss * y1)) /
                   det;
  const double b = (scc * (ys * nn - ss * y1) - yc * (scs * nn - ss * sc) +
                    sc * (scs * y1 - ys * sc)) /
                   det;
  const double c = (scc * (sss * y1 - ys * ss) - scs * (scs * y1 - ys * sc) +
                    yc * (scs * ss - sss * sc)) /
                   det;

  SinusoidFit fit;
  fit.amplitude = std::hypot(a, b);
  fit.phase = wrap_to_pi(std::atan2(-b, a));
  fit.offset = c;
  fit.n_samples = span.count;
  fit.center_index = ic;
  fit.t_reference = tc.t_start + static_cast<double>(ic) * dt;
  fit.low_cycle_warning =
      frequency_hz * (static_cast<double>(span.count - 1) * dt) < 1.5;

  double sq = 0.0;
  for (std::size_t k = 0; k < span.count; ++k) {
    const double u =
        (static_cast<double>(span.first + k) - static_cast<double>(ic)) * dt;
    const double g = envelope != nullptr ? envelope[k] / gmax : 1.0;
    const double r =
        y[k] - (g * (a * std::cos(w * u) + b * std::sin(w * u)) + c);
    sq += r * r;
  }
  fit.residual_rms = std::sqrt(sq / nn);

  if (fit.amplitude < amplitude_floor) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "beat amplitude %.3e below floor %.3e at t=%.6e s",
                  fit.amplitude, amplitude_floor, fit.t_reference);
    throw LowSignalError(msg);
  }
  return fit;
}

inline SinusoidFit extract_phase(const Trace& trace, const DemodWindow& win) {
  const SampleRange span =
      window_sample_range(trace.config, win.center_s, win.length_s);
  return fit_beat_phase(trace.samples.data() + span.first, span, trace.config,
                        win.frequency_hz, win.amplitude_floor);
}

/// Lowest phase variance any unbiased estimator can reach on one window,
/// from the inverse Fisher information of the (a, b, c) model at the given
/// true phase. Matches the normal-equation covariance of fit_beat_phase.
inline double phase_fit_crb(std::size_t n_samples, double dt,
                            double frequency_hz, double amplitude,
                            double noise_rms, double phase) {
  if (n_samples < 5 || n_samples % 2 == 0)
    throw std::invalid_argument(
        "phase_fit_crb: window must have an odd sample count >= 5");
  const double w = kTwoPi * frequency_hz;
  const auto half = static_cast<long long>(n_samples / 2);
  double scc = 0.0, sss = 0.0, scs = 0.0, sc = 0.0, ss = 0.0;
  for (long long k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) * dt;
    const double cv = std::cos(w * u);
    const double sv = std::sin(w * u);
    scc += cv * cv;
    sss += sv * sv;
    scs += cv * sv;
    sc += cv;
    ss += sv;
  }
  const double nn = static_cast<double>(n_samples);
  const double det = scc * (sss * nn - ss * ss) - scs * (scs * nn - ss * sc) +
                     sc * (scs * ss - sss * sc);
  // Covariance of (a, b) is sigma^2 * [M^-1]_(2x2 upper block).
  const double var_a = noise_rms * noise_rms * (sss * nn - ss * ss) / det;
  const double var_b = noise_rms * noise_rms * (scc * nn - sc * sc) / det;
  const double cov_ab = -noise_rms * noise_rms * (scs * nn - sc * ss) / det;
  const double a = amplitude * std::cos(phase);
  const double b = -amplitude * std::sin(phase);
  const double a2 = amplitude * amplitude;
  // phase = atan2(-b, a): d/da = b/A^2, d/db = -a/A^2.
  const double var_phi =
      (b * b * var_a + a * a * var_b - 2.0 * a * b * cov_ab) / (a2 * a2);
  return std::sqrt(var_phi);
}

enum class ShotRegime : std::uint8_t { kRest = 0, kMotion = 1 };

/// The two-channel, two-window phase readout of one (possibly averaged)
/// shot. dphi0/dphi1 are probe-minus-reference at the baseline and
/// retrieved windows; dphi_p is their difference, the quantity the
/// interferometer actually resolves.
struct PhaseMeasurement {
  double dphi0 = 0.0;
  double dphi1 = 0.0;
  double dphi_p = 0.0;  // wrapped to (-pi, pi]
  ShotRegime regime = ShotRegime::kRest;
  SinusoidFit ref_baseline;
  SinusoidFit probe_baseline;
  SinusoidFit ref_retrieved;
  SinusoidFit probe_retrieved;
};

/// Sample ranges of the baseline and retrieved readout windows for a
/// context's geometry.
inline std::pair<SampleRange, SampleRange> measurement_windows(
    const ShotContext& ctx, const ExtractionConfig& ex) {
  return {window_sample_range(ctx.trace, ctx.program.markers.baseline_center,
                              ex.window_length_s),
          window_sample_range(ctx.trace, ctx.program.markers.retrieved_peak,
                              ex.window_length_s)};
}

inline PhaseMeasurement measure_windows(const ShotContext& ctx,
                                        const ShotWindows& w,
                                        ShotRegime regime,
                                        const ExtractionConfig& ex) {
  const double f = ctx.trace.beat_frequency;
  const double dt = ctx.trace.dt();

  // The probe windows ride on programmed pulse shapes; handing the fit the
  // known envelope keeps the shaped amplitude out of the phase estimate.
  // The reference channel is CW, so its windows use the plain basis.
  std::vector<double> env_base(w.baseline.span.count);
  for (std::size_t k = 0; k < env_base.size(); ++k)
    env_base[k] = ctx.program.probe_input_envelope(
        ctx.trace.t_start + static_cast<double>(w.baseline.span.first + k) * dt);
  std::vector<double> env_ret(w.retrieved.span.count);
  for (std::size_t k = 0; k < env_ret.size(); ++k)
    env_ret[k] = ctx.program.retrieved_envelope_unit(
        ctx.trace.t_start +
        static_cast<double>(w.retrieved.span.first + k) * dt);

  PhaseMeasurement m;
  m.regime = regime;
  m.ref_baseline = fit_beat_phase(w.baseline.reference.data(),
                                  w.baseline.span, ctx.trace, f,
                                  ex.amplitude_floor);
  m.probe_baseline = fit_beat_phase(w.baseline.probe.data(), w.baseline.span,
                                    ctx.trace, f, ex.amplitude_floor,
                                    env_base.data());
  m.ref_retrieved = fit_beat_phase(w.retrieved.reference.data(),
                                   w.retrieved.span, ctx.trace, f,
                                   ex.amplitude_floor);
  m.probe_retrieved = fit_beat_phase(w.retrieved.probe.data(),
                                     w.retrieved.span, ctx.trace, f,
                                     ex.amplitude_floor, env_ret.data());
  m.dphi0 = wrap_to_pi(m.probe_baseline.phase - m.ref_baseline.phase);
  m.dphi1 = wrap_to_pi(m.probe_retrieved.phase - m.ref_retrieved.phase);
  m.dphi_p = wrap_to_pi(m.dphi1 - m.dphi0);
  return m;
}

/// Same readout applied to full dense traces.
inline PhaseMeasurement measure_shot(const ShotContext& ctx, const Trace& ref,
                                     const Trace& probe, ShotRegime regime,
                                     const ExtractionConfig& ex) {
  if (!(ref.config == ctx.trace) || !(probe.config == ctx.trace))
    throw std::invalid_argument(
        "measure_shot: trace configs do not match the shot context");
  if (ref.channel != Channel::kReference || probe.channel != Channel::kProbe)
    throw std::invalid_argument(
        "measure_shot: expected a reference and a probe trace");
  const auto [bspan, rspan] = measurement_windows(ctx, ex);
  ShotWindows w;
  w.baseline.span = bspan;
  w.retrieved.span = rspan;
  w.baseline.reference.assign(ref.samples.begin() + bspan.first,
                              ref.samples.begin() + bspan.first + bspan.count);
  w.baseline.probe.assign(probe.samples.begin() + bspan.first,
                          probe.samples.begin() + bspan.first + bspan.count);
  w.retrieved.reference.assign(
      ref.samples.begin() + rspan.first,
      ref.samples.begin() + rspan.first + rspan.count);
  w.retrieved.probe.assign(probe.samples.begin() + rspan.first,
                           probe.samples.begin() + rspan.first + rspan.count);
  return measure_windows(ctx, w, regime, ex);
}

/// Store-retrieve phase of one motion/rest pair, wrapped to (-pi, pi].
/// Takes the full measurements rather than bare phases so a swapped or
/// doubled argument is caught by the regime tags instead of silently
/// flipping the sign.
inline double translation_phase(const PhaseMeasurement& motion,
                                const PhaseMeasurement& rest) {
  if (motion.regime == rest.regime)
    throw std::invalid_argument(
        "translation_phase: both measurements carry the same regime tag");
  if (motion.regime != ShotRegime::kMotion)
    throw std::invalid_argument(
        "translation_phase: arguments are (motion, rest), got them swapped");
  if (motion.probe_baseline.t_reference != rest.probe_baseline.t_reference ||
      motion.probe_retrieved.t_reference != rest.probe_retrieved.t_reference)
    throw std::invalid_argument(
        "translation_phase: measurements come from different timing programs");
  return wrap_to_pi(motion.dphi_p - rest.dphi_p);
}

/// Continuity form: unwraps the pair difference onto the branch nearest a
/// running reference (used when sweeping velocity across wrap boundaries).
inline double translation_phase(const PhaseMeasurement& motion,
                                const PhaseMeasurement& rest,
                                double reference_rad) {
  return unwrap_near(translation_phase(motion, rest), reference_rad);
}

/// Velocity readout from one translation phase.
struct VelocityEstimate {
  double velocity_mps = 0.0;
  double displacement_m = 0.0;  // net travel over the storage interval
};

inline VelocityEstimate velocity_from_phase(double translation_phase_rad,
                                            double probe_wavenumber,
                                            double storage_time_s) {
  if (!(probe_wavenumber > 0.0))
    throw std::domain_error("velocity_from_phase: wavenumber must be > 0");
  if (!(storage_time_s > 0.0))
    throw std::domain_error("velocity_from_phase: storage time must be > 0");
  VelocityEstimate est;
  est.velocity_mps =
      -translation_phase_rad / (probe_wavenumber * storage_time_s);
  est.displacement_m = est.velocity_mps * storage_time_s;
  return est;
}

/// Crude envelope peak locator: slides an RMS window two beat periods wide
/// and returns the time of maximum power. Good to a few samples, which is
/// plenty for centering a demodulation window.
inline double locate_pulse_peak(const Trace& trace, double t_lo, double t_hi) {
  const TraceConfig& tc = trace.config;
  const double dt = tc.dt();
  const auto n = static_cast<long long>(trace.samples.size());
  long long i0 = std::llround(std::ceil((t_lo - tc.t_start) / dt));
  long long i1 = std::llround(std::floor((t_hi - tc.t_start) / dt));
  i0 = std::max<long long>(i0, 0);
  i1 = std::min<long long>(i1, n - 1);
  const long long m = std::llround(2.0 / (tc.beat_frequency * dt)) | 1;
  const long long h = m / 2;
  if (i1 - i0 < m || i0 + h >= n)
    throw std::invalid_argument(
        "locate_pulse_peak: search range too short for the envelope window");
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (long long k = 0; k < n; ++k)
    prefix[k + 1] = prefix[k] + trace.samples[k] * trace.samples[k];
  long long best = i0 + h;
  double best_power = -1.0;
  for (long long c = i0 + h; c + h < n && c <= i1 - h; ++c) {
    const double p = prefix[c + h + 1] - prefix[c - h];
    if (p > best_power) {
      best_power = p;
      best = c;
    }
  }
  return trace.time_at(static_cast<std::size_t>(best));
}

}  // namespace slv
