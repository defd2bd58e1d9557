#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slv/common.hpp"
#include "slv/experiment.hpp"
#include "slv/phase_extraction.hpp"
#include "slv/rng.hpp"
#include "slv/signal_synthesis.hpp"

namespace slv {

/// Bench values quoted for comparison alongside the simulated results.
/// These annotate reports; nothing in the pipeline depends on them.
inline constexpr double kBenchAlphaRadPerMps = 63.6;       // at 8.5 us storage
inline constexpr double kBenchAlphaErrRadPerMps = 2.2;
inline constexpr double kBenchAlphaSlopeRadPerM = 7.31e6;  // alpha vs tau
inline constexpr double kBenchAlphaSlopeErrRadPerM = 0.33e6;

namespace detail {

/// One run: a rest block then a motion block, each block scope-averaged
/// over `averages` consecutive records, then fitted. Returns the wrapped
/// translation phase of the pair. Records are spaced by the sequence
/// repetition period, with the motion block immediately following the rest
/// block, so slow bench noise sees the real acquisition timeline.
inline double measure_pair(const ShotContext& ctx,
                           const std::pair<SampleRange, SampleRange>& windows,
                           const ExtractionConfig& ex, std::uint64_t op_seed,
                           double period_s, double velocity_mps,
                           std::size_t averages) {
  StageMotion{velocity_mps}.validate();
  const VibrationRealization vib(
      ctx.noise, derive_seed(op_seed, seed_purpose::kVibration));
  const std::vector<double> walk =
      accumulate_retrieval_walk(ctx.noise, op_seed, 2 * averages);

  auto block = [&](std::size_t first_record, double v) {
    ShotAccumulator acc;
    for (std::size_t r = 0; r < averages; ++r) {
      RecordRequest req;
      req.op_seed = op_seed;
      req.record_index = first_record + r;
      req.record_start_abs_s =
          static_cast<double>(first_record + r) * period_s;
      req.stage_velocity_mps = v;
      req.retrieval_walk_rad = walk[first_record + r];
      req.vibration = &vib;
      acc.add(synth_record_windows(ctx, req, windows.first, windows.second));
    }
    return acc.mean();
  };

  const ShotWindows rest_avg = block(0, 0.0);
  const ShotWindows motion_avg = block(averages, velocity_mps);
  const PhaseMeasurement rest =
      measure_windows(ctx, rest_avg, ShotRegime::kRest, ex);
  const PhaseMeasurement motion =
      measure_windows(ctx, motion_avg, ShotRegime::kMotion, ex);
  return translation_phase(motion, rest);
}

}  // namespace detail

/// One stage velocity within a sweep, reduced over runs.
struct SweepPoint {
  double velocity_set_mps = 0.0;
  double dphi_tr_wrapped_rad = 0.0;   // circular mean over runs
  double dphi_tr_rad = 0.0;           // continuity-unwrapped across the sweep
  double dphi_tr_std_rad = 0.0;       // spread over runs
  double dphi_tr_stderr_rad = 0.0;    // std / sqrt(runs)
  double velocity_measured_mps = 0.0; // from the unwrapped phase
  double displacement_m = 0.0;
};

/// Velocity sweep at one storage time.
struct VelocitySweepResult {
  double tau_s = 0.0;
  std::vector<SweepPoint> points;
  double alpha_rad_per_mps = 0.0;     // slope of dphi_tr = -alpha * V
  double alpha_stderr_rad_per_mps = 0.0;
};

/// Sweeps the configured stage velocities at one storage time. Each sweep
/// point is `runs` independent rest+motion pairs; the per-point phase is the
/// circular mean over runs, unwrapped across the sweep by continuity working
/// outward from the smallest |V|. The phase-velocity coefficient alpha comes
/// from a through-origin weighted fit of the unwrapped means.
inline VelocitySweepResult run_velocity_sweep(const ExperimentConfig& cfg,
                                              double tau_s,
                                              std::uint64_t seed) {
  cfg.validate();
  const std::vector<double>& vels = cfg.sweep.velocities;
  {
    std::set<double> distinct(vels.begin(), vels.end());
    if (distinct.size() < 3)
      throw std::invalid_argument(
          "run_velocity_sweep: need at least 3 distinct velocities to fit "
          "alpha");
  }

  const ShotContext ctx = shot_context_at(cfg, tau_s);
  const auto windows = measurement_windows(ctx, cfg.extraction);
  const double period = record_period(cfg, tau_s);
  const std::size_t runs = cfg.sweep.runs;
  const std::size_t averages = cfg.sweep.scope_averages;

  std::vector<double> dphi(vels.size() * runs, 0.0);
  parallel_for(dphi.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t p = i / runs;
    const std::size_t r = i % runs;
    dphi[i] = detail::measure_pair(ctx, windows, cfg.extraction,
                                   derive_seed(seed, p, r), period, vels[p],
                                   averages);
  });

  VelocitySweepResult out;
  out.tau_s = tau_s;
  out.points.resize(vels.size());
  for (std::size_t p = 0; p < vels.size(); ++p) {
    const std::vector<double> vals(dphi.begin() + p * runs,
                                   dphi.begin() + (p + 1) * runs);
    const CircularStats st = circular_stats(vals);
    SweepPoint& pt = out.points[p];
    pt.velocity_set_mps = vels[p];
    pt.dphi_tr_wrapped_rad = st.mean;
    pt.dphi_tr_std_rad = st.std_dev;
    pt.dphi_tr_stderr_rad = st.std_error;
  }

  // Continuity unwrap, outward from the point closest to rest. A sweep can
  // cross several branch cuts end to end, but adjacent points stay well
  // within half a turn of each other.
  std::vector<std::size_t> order(vels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vels[a] < vels[b];
  });
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (std::abs(vels[order[i]]) < std::abs(vels[order[anchor]])) anchor = i;
  out.points[order[anchor]].dphi_tr_rad =
      unwrap_near(out.points[order[anchor]].dphi_tr_wrapped_rad, 0.0);
  for (std::size_t i = anchor + 1; i < order.size(); ++i)
    out.points[order[i]].dphi_tr_rad =
        unwrap_near(out.points[order[i]].dphi_tr_wrapped_rad,
                    out.points[order[i - 1]].dphi_tr_rad);
  for (std::size_t i = anchor; i-- > 0;)
    out.points[order[i]].dphi_tr_rad =
        unwrap_near(out.points[order[i]].dphi_tr_wrapped_rad,
                    out.points[order[i + 1]].dphi_tr_rad);

  for (SweepPoint& pt : out.points) {
    const VelocityEstimate est = velocity_from_phase(
        pt.dphi_tr_rad, cfg.atoms.probe_wavenumber, tau_s);
    pt.velocity_measured_mps = est.velocity_mps;
    pt.displacement_m = est.displacement_m;
  }

  // Through-origin weighted least squares of dphi = -alpha * V. Points with
  // no spread (noiseless runs) fall back to equal weights, with the slope
  // error taken from the residuals instead of the quoted uncertainties.
  bool weighted = true;
  for (const SweepPoint& pt : out.points)
    if (!(pt.dphi_tr_stderr_rad > 0.0)) weighted = false;
  double swx2 = 0.0, swxy = 0.0;
  for (const SweepPoint& pt : out.points) {
    const double w =
        weighted ? 1.0 / (pt.dphi_tr_stderr_rad * pt.dphi_tr_stderr_rad)
                 : 1.0;
    swx2 += w * pt.velocity_set_mps * pt.velocity_set_mps;
    swxy += w * pt.velocity_set_mps * pt.dphi_tr_rad;
  }
  if (!(swx2 > 0.0))
    throw std::invalid_argument(
        "run_velocity_sweep: velocity design is rank deficient");
  out.alpha_rad_per_mps = -swxy / swx2;
  if (weighted) {
    out.alpha_stderr_rad_per_mps = std::sqrt(1.0 / swx2);
  } else {
    double ss = 0.0;
    for (const SweepPoint& pt : out.points) {
      const double r =
          pt.dphi_tr_rad + out.alpha_rad_per_mps * pt.velocity_set_mps;
      ss += r * r;
    }
    const std::size_t n = out.points.size();
    out.alpha_stderr_rad_per_mps =
        n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / swx2) : 0.0;
  }
  return out;
}

/// One storage time's fitted phase-velocity coefficient.
struct AlphaPoint {
  double tau_s = 0.0;
  double alpha_rad_per_mps = 0.0;
  double alpha_stderr_rad_per_mps = 0.0;
};

/// Weighted straight-line fit of alpha against storage time. The slope
/// estimates the probe wavenumber; for motion-induced phase the line passes
/// through the origin, so the intercept doubles as a consistency check.
struct AlphaVsTauFit {
  double slope_rad_per_m = 0.0;
  double slope_stderr_rad_per_m = 0.0;
  double intercept_rad_per_mps = 0.0;
  double intercept_stderr_rad_per_mps = 0.0;
};

inline AlphaVsTauFit fit_alpha_vs_tau(const std::vector<AlphaPoint>& points) {
  if (points.size() < 2)
    throw std::invalid_argument(
        "fit_alpha_vs_tau: need at least 2 storage times");
  bool weighted = true;
  for (const AlphaPoint& p : points)
    if (!(p.alpha_stderr_rad_per_mps > 0.0)) weighted = false;

  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (const AlphaPoint& p : points) {
    const double w = weighted ? 1.0 / (p.alpha_stderr_rad_per_mps *
                                       p.alpha_stderr_rad_per_mps)
                              : 1.0;
    sw += w;
    swx += w * p.tau_s;
    swy += w * p.alpha_rad_per_mps;
    swxx += w * p.tau_s * p.tau_s;
    swxy += w * p.tau_s * p.alpha_rad_per_mps;
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0.0) || !std::isfinite(det))
    throw std::invalid_argument(
        "fit_alpha_vs_tau: storage times are rank deficient");

  AlphaVsTauFit fit;
  fit.slope_rad_per_m = (sw * swxy - swx * swy) / det;
  fit.intercept_rad_per_mps = (swxx * swy - swx * swxy) / det;

  double scale = 1.0;
  if (!weighted) {
    // Unweighted: scale the covariance by the residual variance.
    double ss = 0.0;
    for (const AlphaPoint& p : points) {
      const double r = p.alpha_rad_per_mps - fit.intercept_rad_per_mps -
                       fit.slope_rad_per_m * p.tau_s;
      ss += r * r;
    }
    scale = points.size() > 2
                ? ss / static_cast<double>(points.size() - 2)
                : 0.0;
  }
  fit.slope_stderr_rad_per_m = std::sqrt(scale * sw / det);
  fit.intercept_stderr_rad_per_mps = std::sqrt(scale * swxx / det);
  return fit;
}

/// Repeatability of the translation phase with the stage at rest.
struct SigmaPhiEstimate {
  double tau_s = 0.0;
  std::size_t runs = 0;
  double sigma_phi_rad = 0.0;  // standard error of the per-run phases
  double std_dev_rad = 0.0;    // spread of the per-run phases
  double mean_rad = 0.0;
  std::vector<double> values;  // per-run wrapped translation phases
};

/// Reruns the rest+motion pair with the stage parked and reports the
/// standard error of the resulting phases: the resolution floor of one
/// averaged measurement campaign. `runs` of 0 uses sweep.runs.
inline SigmaPhiEstimate estimate_sigma_phi(const ExperimentConfig& cfg,
                                           double tau_s, std::uint64_t seed,
                                           std::size_t runs = 0) {
  cfg.validate();
  if (runs == 0) runs = cfg.sweep.runs;
  if (runs < 2)
    throw std::invalid_argument("estimate_sigma_phi: need at least 2 runs");

  const ShotContext ctx = shot_context_at(cfg, tau_s);
  const auto windows = measurement_windows(ctx, cfg.extraction);
  const double period = record_period(cfg, tau_s);

  SigmaPhiEstimate est;
  est.tau_s = tau_s;
  est.runs = runs;
  est.values.assign(runs, 0.0);
  parallel_for(runs, cfg.threads, [&](std::size_t r) {
    est.values[r] =
        detail::measure_pair(ctx, windows, cfg.extraction,
                             derive_seed(seed, 0, r), period, 0.0,
                             cfg.sweep.scope_averages);
  });
  const CircularStats st = circular_stats(est.values);
  est.mean_rad = st.mean;
  est.std_dev_rad = st.std_dev;
  est.sigma_phi_rad = st.std_error;
  return est;
}

/// Velocity resolution and sensitivity implied by a phase noise floor.
/// Carries both the ideal coefficient (probe wavenumber times storage time)
/// and, when provided, the empirically fitted coefficient.
struct SensitivityReport {
  double sigma_phi_rad = 0.0;
  double probe_wavenumber = 0.0;
  double tau_s = 0.0;
  double beta = 0.0;        // sequences folded into one campaign
  double epsilon_s = 0.0;   // per-sequence overhead
  double integration_time_s = 0.0;  // beta * (tau_s + epsilon)

  double velocity_resolution_mps = 0.0;       // sigma / (k * tau)
  double sensitivity_mps_rthz = 0.0;          // resolution * sqrt(T)

  double alpha_rad_per_mps = 0.0;             // 0 when not supplied
  double velocity_resolution_alpha_mps = 0.0; // sigma / alpha
  double sensitivity_alpha_mps_rthz = 0.0;
};

/// Converts a phase noise floor into velocity resolution and sensitivity.
/// `beta` is the total number of sequences averaged into the floor (scope
/// averages times runs), so T = beta * (tau_s + epsilon) is the wall-clock
/// cost of one campaign and S = dV * sqrt(T) is bandwidth-normalized.
/// Passing a fitted alpha adds the empirical variant alongside the ideal.
inline SensitivityReport sensitivity(double sigma_phi_rad,
                                     double probe_wavenumber, double tau_s,
                                     double beta, double epsilon_s,
                                     double alpha_rad_per_mps = 0.0) {
  if (!(sigma_phi_rad >= 0.0))
    throw std::domain_error("sensitivity: sigma_phi must be >= 0");
  if (!(probe_wavenumber > 0.0))
    throw std::domain_error("sensitivity: wavenumber must be > 0");
  if (!(tau_s > 0.0))
    throw std::domain_error("sensitivity: storage time must be > 0");
  if (!(beta > 0.0))
    throw std::domain_error("sensitivity: beta must be > 0");
  if (!(epsilon_s > 0.0))
    throw std::domain_error("sensitivity: overhead must be > 0");
  if (!(alpha_rad_per_mps >= 0.0))
    throw std::domain_error("sensitivity: alpha must be >= 0");

  SensitivityReport rep;
  rep.sigma_phi_rad = sigma_phi_rad;
  rep.probe_wavenumber = probe_wavenumber;
  rep.tau_s = tau_s;
  rep.beta = beta;
  rep.epsilon_s = epsilon_s;
  rep.integration_time_s = beta * (tau_s + epsilon_s);
  const double rt = std::sqrt(rep.integration_time_s);
  rep.velocity_resolution_mps = sigma_phi_rad / (probe_wavenumber * tau_s);
  rep.sensitivity_mps_rthz = rep.velocity_resolution_mps * rt;
  if (alpha_rad_per_mps > 0.0) {
    rep.alpha_rad_per_mps = alpha_rad_per_mps;
    rep.velocity_resolution_alpha_mps = sigma_phi_rad / alpha_rad_per_mps;
    rep.sensitivity_alpha_mps_rthz = rep.velocity_resolution_alpha_mps * rt;
  }
  return rep;
}

/// Sensitivity under a caller-chosen integration-time model, for projecting
/// what a given phase floor would buy at other storage times.
inline double projected_sensitivity(double sigma_phi_rad,
                                    double probe_wavenumber, double tau_s,
                                    double integration_time_s) {
  if (!(sigma_phi_rad >= 0.0))
    throw std::domain_error("projected_sensitivity: sigma_phi must be >= 0");
  if (!(probe_wavenumber > 0.0))
    throw std::domain_error("projected_sensitivity: wavenumber must be > 0");
  if (!(tau_s > 0.0))
    throw std::domain_error("projected_sensitivity: storage time must be > 0");
  if (!(integration_time_s > 0.0))
    throw std::domain_error(
        "projected_sensitivity: integration time must be > 0");
  return sigma_phi_rad / (probe_wavenumber * tau_s) *
         std::sqrt(integration_time_s);
}

/// Phase uncertainty floor of an N-photon shot-noise-limited readout, in
/// radians.
inline double shot_noise_phase_limit(double photons) {
  if (!(photons > 0.0))
    throw std::domain_error(
        "shot_noise_phase_limit: photon number must be > 0");
  return 1.0 / std::sqrt(photons);
}

/// One block size of the averaging study.
struct AveragingPoint {
  std::size_t averages = 0;
  double sigma_phi_rad = 0.0;      // std dev of the phase over repetitions
  double sigma_err_rad = 0.0;      // sampling error of that std dev
};

/// Scans the scope-averaging depth at fixed (zero) velocity. Each block
/// size is repeated `averaging_repetitions` times with independent noise and
/// the spread of the resulting phases is reported. White noise means deeper
/// averaging always helps; the band-limited bench noise walks between the
/// rest and motion blocks, so past an optimum depth longer blocks get worse.
inline std::vector<AveragingPoint> averaging_study(const ExperimentConfig& cfg,
                                                   double tau_s,
                                                   std::uint64_t seed) {
  cfg.validate();
  const ShotContext ctx = shot_context_at(cfg, tau_s);
  const auto windows = measurement_windows(ctx, cfg.extraction);
  const double period = record_period(cfg, tau_s);
  const std::vector<std::size_t>& counts = cfg.sweep.averaging_counts;
  const std::size_t reps = cfg.sweep.averaging_repetitions;

  std::vector<double> phases(counts.size() * reps, 0.0);
  parallel_for(phases.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t c = i / reps;
    const std::size_t r = i % reps;
    phases[i] =
        detail::measure_pair(ctx, windows, cfg.extraction,
                             derive_seed(seed, c, r), period, 0.0, counts[c]);
  });

  std::vector<AveragingPoint> out(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::vector<double> vals(phases.begin() + c * reps,
                                   phases.begin() + (c + 1) * reps);
    const CircularStats st = circular_stats(vals);
    out[c].averages = counts[c];
    out[c].sigma_phi_rad = st.std_dev;
    out[c].sigma_err_rad =
        reps > 1 ? st.std_dev / std::sqrt(2.0 * static_cast<double>(reps - 1))
                 : 0.0;
  }
  return out;
}

}  // namespace slv
