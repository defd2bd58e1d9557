#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slv/common.hpp"
#include "slv/rng.hpp"

namespace slv {

/// How the bench vibration phase couples into the interferometer.
///  kDifferential: the probe arm alone picks it up, and the stored light
///                 additionally accumulates the arm change across the
///                 storage interval. This is the physical default and what
///                 limits the velocity resolution.
///  kCommon:       both arms see the same phase; the two-channel
///                 subtraction must reject it. Kept for rejection tests.
enum class VibrationMode : std::uint8_t { kDifferential = 0, kCommon = 1 };

struct NoiseConfig {
  // Laser frequency noise: a Wiener phase walk with increment variance
  // Var[W(t+dt) - W(t)] = 2*pi*linewidth*dt (Lorentzian FWHM linewidth).
  // Each channel's beat picks up W(t) - W(t - imbalance) through its
  // interferometer path imbalance; equal imbalances make the term common
  // to both channels, so it cancels in the phase difference.
  double laser_linewidth_hz = 1.0e5;
  double mzi_imbalance_ref_s = 5.0e-9;
  double mzi_imbalance_probe_s = 5.0e-9;

  // Bench vibration: differential MZI phase built from a comb of tones with
  // random phases, log-spaced across vibration_band. The RMS is the single
  // scalar calibrated so the default pipeline lands on the measured phase
  // noise floor.
  double vibration_rms_phase = 0.8;  // rad
  double vibration_band_lo_hz = 80.0;
  double vibration_band_hi_hz = 150.0;
  std::size_t vibration_components = 8;
  VibrationMode vibration_mode = VibrationMode::kDifferential;

  // Retrieval control switching: each retrieval re-applies the control
  // field with a small random phase error, which lands on the retrieved
  // pulse directly. Independent record to record.
  double retrieval_phase_jitter_rad = 0.194;

  // On top of the fast jitter the retrieval chain wanders slowly: a random
  // walk across consecutive records with this step RMS. Deep on-scope
  // averaging stops paying off once the walk between the rest and motion
  // blocks outruns the shrinking white noise.
  double retrieval_phase_walk_rad = 0.0107;

  // Additive white noise per digitized sample, same RMS on both channels,
  // independent streams.
  double additive_noise_rms = 0.05;

  /// All noise magnitudes zeroed; band geometry and mode keep their
  /// defaults. The synthesis paths treat zero magnitudes as "draw nothing",
  /// so this is the reference configuration for exactness checks.
  static NoiseConfig none() {
    NoiseConfig cfg;
    cfg.laser_linewidth_hz = 0.0;
    cfg.vibration_rms_phase = 0.0;
    cfg.retrieval_phase_jitter_rad = 0.0;
    cfg.retrieval_phase_walk_rad = 0.0;
    cfg.additive_noise_rms = 0.0;
    return cfg;
  }

  void validate() const {
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("NoiseConfig.") + name +
                                    ": must be finite and >= 0");
    };
    nonneg(laser_linewidth_hz, "laser_linewidth_hz");
    nonneg(mzi_imbalance_ref_s, "mzi_imbalance_ref_s");
    nonneg(mzi_imbalance_probe_s, "mzi_imbalance_probe_s");
    nonneg(vibration_rms_phase, "vibration_rms_phase");
    nonneg(retrieval_phase_jitter_rad, "retrieval_phase_jitter_rad");
    nonneg(retrieval_phase_walk_rad, "retrieval_phase_walk_rad");
    nonneg(additive_noise_rms, "additive_noise_rms");
    if (!(vibration_band_lo_hz > 0.0) ||
        !(vibration_band_hi_hz >= vibration_band_lo_hz))
      throw std::invalid_argument(
          "NoiseConfig.vibration_band: need 0 < lo <= hi");
    if (vibration_components < 1)
      throw std::invalid_argument(
          "NoiseConfig.vibration_components: must be >= 1");
  }
};

/// One draw of the vibration comb. Tones are log-spaced across the band,
/// each with an independent uniform phase, scaled so the summed RMS matches
/// the configured value (each tone contributes amp^2/2 to the variance).
class VibrationRealization {
 public:
  VibrationRealization() = default;

  VibrationRealization(const NoiseConfig& cfg, std::uint64_t seed) {
    const std::size_t n = cfg.vibration_components;
    omega_.resize(n);
    phase_.resize(n);
    if (n == 1) {
      omega_[0] = kTwoPi * std::sqrt(cfg.vibration_band_lo_hz *
                                     cfg.vibration_band_hi_hz);
    } else {
      const double ratio = cfg.vibration_band_hi_hz / cfg.vibration_band_lo_hz;
      for (std::size_t j = 0; j < n; ++j)
        omega_[j] = kTwoPi * cfg.vibration_band_lo_hz *
                    std::pow(ratio, static_cast<double>(j) /
                                        static_cast<double>(n - 1));
    }
    GaussianStream rng(seed);
    for (std::size_t j = 0; j < n; ++j) phase_[j] = kTwoPi * rng.uniform();
    amplitude_ =
        cfg.vibration_rms_phase * std::sqrt(2.0 / static_cast<double>(n));
  }

  /// Differential MZI phase at absolute lab time t (rad).
  double phase_at(double t_abs) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < omega_.size(); ++j)
      acc += std::sin(omega_[j] * t_abs + phase_[j]);
    return amplitude_ * acc;
  }

  double tone_amplitude() const { return amplitude_; }
  std::size_t tone_count() const { return omega_.size(); }

  double tone_frequency_hz(std::size_t j) const {
    return omega_.at(j) / kTwoPi;
  }

 private:
  std::vector<double> omega_;
  std::vector<double> phase_;
  double amplitude_ = 0.0;
};

/// Wiener phase walk over n samples spaced dt apart, anchored at W[0] = 0,
/// increment variance 2*pi*linewidth*dt.
inline std::vector<double> laser_phase_walk(std::size_t n, double dt,
                                            double linewidth_hz,
                                            std::uint64_t seed) {
  std::vector<double> w(n, 0.0);
  if (n == 0 || linewidth_hz <= 0.0) return w;
  const double step_sigma = std::sqrt(kTwoPi * linewidth_hz * dt);
  GaussianStream rng(seed);
  for (std::size_t k = 1; k < n; ++k) w[k] = w[k - 1] + step_sigma * rng();
  return w;
}

/// Half-open index range [first, first + count) on a record's sample grid.
struct SampleRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Wiener walk evaluated only on selected sample ranges of a record.
/// Between ranges the walk is advanced with a single Gaussian jump of the
/// aggregated variance, which is distributionally identical to stepping
/// through every sample, so sparse synthesis stays an exact simulation.
/// Ranges must be sorted and non-overlapping. The walk is anchored at zero
/// on sample 0 (a jump covers the gap to the first range).
inline std::vector<std::vector<double>> segmented_laser_walk(
    const std::vector<SampleRange>& ranges, double dt, double linewidth_hz,
    std::uint64_t seed) {
  std::vector<std::vector<double>> out(ranges.size());
  const double step_var = kTwoPi * linewidth_hz * dt;
  const double step_sigma = std::sqrt(step_var);
  GaussianStream rng(seed);
  // (w, idx) always satisfies w == W[idx]; W[0] == 0 is the anchor.
  double w = 0.0;
  std::size_t idx = 0;
  bool started = false;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const SampleRange& r = ranges[i];
    if (r.count == 0) continue;
    if (started && r.first <= idx)
      throw std::invalid_argument(
          "segmented_laser_walk: ranges must be sorted and disjoint");
    if (step_var <= 0.0) {
      out[i].assign(r.count, 0.0);
      idx = r.first + r.count - 1;
      started = true;
      continue;
    }
    const std::size_t jump = r.first - idx;
    if (jump > 0) w += std::sqrt(step_var * static_cast<double>(jump)) * rng();
    out[i].resize(r.count);
    out[i][0] = w;
    for (std::size_t k = 1; k < r.count; ++k) {
      w += step_sigma * rng();
      out[i][k] = w;
    }
    idx = r.first + r.count - 1;
    started = true;
  }
  return out;
}

}  // namespace slv
