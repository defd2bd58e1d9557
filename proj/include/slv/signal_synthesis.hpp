#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slv/atomic_memory.hpp"
#include "slv/common.hpp"
#include "slv/errors.hpp"
#include "slv/noise.hpp"
#include "slv/rng.hpp"
#include "slv/sequencer.hpp"
#include "slv/trace.hpp"

namespace slv {

/// Commanded motion of the retro-reflector stage.
struct StageMotion {
  double velocity_mps = 0.0;

  /// The traversal has to stay inside the interaction region, which caps
  /// the usable stage speed.
  static constexpr double kMaxSpeedMps = 0.3;

  void validate() const {
    if (!std::isfinite(velocity_mps) ||
        std::abs(velocity_mps) > kMaxSpeedMps)
      throw std::invalid_argument(
          "StageMotion.velocity_mps: |v| must be finite and <= 0.3");
  }
};

/// Everything one shot needs: the atomic line, the memory response, the
/// pulse program, the digitizer view and the noise model.
struct ShotContext {
  AtomicParams atoms;
  MemoryResponse memory;
  SequenceTiming timing;
  SequenceProgram program;
  TraceConfig trace;
  NoiseConfig noise;

  void validate() const {
    atoms.validate();
    memory.validate();
    timing.validate();
    trace.validate();
    noise.validate();
    const double t_end =
        trace.t_start + trace.duration - trace.dt();
    const double need_lo =
        timing.baseline_center - 0.5 * timing.baseline_duration;
    const double need_hi =
        program.markers.retrieved_peak + 0.5 * timing.probe_fwhm;
    if (trace.t_start > need_lo || t_end < need_hi)
      throw ConfigError(
          "trace: sampled span does not cover the baseline and retrieved "
          "pulse windows");
  }
};

inline ShotContext make_shot_context(const AtomicParams& atoms,
                                     const MemoryResponse& memory,
                                     const SequenceTiming& timing,
                                     const TraceConfig& trace,
                                     const NoiseConfig& noise) {
  ShotContext ctx{atoms, memory, timing, build_sequence(timing), trace,
                  noise};
  ctx.validate();
  return ctx;
}

/// What the simulation knows to be true about one shot, for comparing
/// against extracted values.
struct GroundTruth {
  double velocity_mps = 0.0;
  double storage_time_s = 0.0;
  double displacement_m = 0.0;
  double efficiency = 0.0;
  double translation_phase_rad = 0.0;          // unwrapped, -k_P * v * tau
  double translation_phase_wrapped_rad = 0.0;  // in (-pi, pi]
};

inline GroundTruth ground_truth(const ShotContext& ctx, double velocity_mps) {
  GroundTruth gt;
  gt.velocity_mps = velocity_mps;
  gt.storage_time_s = ctx.timing.storage_time;
  gt.displacement_m = velocity_mps * gt.storage_time_s;
  gt.efficiency = storage_efficiency(gt.storage_time_s, ctx.memory);
  gt.translation_phase_rad =
      -ctx.atoms.probe_wavenumber * gt.displacement_m;
  gt.translation_phase_wrapped_rad = wrap_to_pi(gt.translation_phase_rad);
  return gt;
}

/// Inputs that vary record to record. Noise streams are keyed by
/// (op_seed, purpose, record_index) so any record can be regenerated in
/// isolation and results do not depend on synthesis order.
struct RecordRequest {
  std::uint64_t op_seed = 0;
  std::uint64_t record_index = 0;
  double record_start_abs_s = 0.0;  // lab time of sample 0
  double stage_velocity_mps = 0.0;
  // Cumulative retrieval-chain walk at this record. The walk is a running
  // sum across a whole acquisition, so the caller that owns the record
  // sequence accumulates it (see accumulate_retrieval_walk) and synthesis
  // stays stateless per record.
  double retrieval_walk_rad = 0.0;
  const VibrationRealization* vibration = nullptr;
};

/// Cumulative retrieval-chain walk for records 0..count-1 of one
/// acquisition, step RMS taken from the noise block.
inline std::vector<double> accumulate_retrieval_walk(const NoiseConfig& noise,
                                                     std::uint64_t op_seed,
                                                     std::size_t count) {
  std::vector<double> walk(count, 0.0);
  if (noise.retrieval_phase_walk_rad <= 0.0 || count == 0) return walk;
  GaussianStream steps(derive_seed(op_seed, seed_purpose::kRetrievalWalk));
  double acc = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    acc += noise.retrieval_phase_walk_rad * steps();
    walk[r] = acc;
  }
  return walk;
}

/// Phase carried by the retrieved segment relative to the input light:
/// the motion imprint, plus the differential arm phase picked up while the
/// light sat in the atoms, plus the control re-switching jitter.
inline double retrieved_segment_phase(const ShotContext& ctx,
                                      const RecordRequest& req) {
  double phi = -ctx.atoms.probe_wavenumber * req.stage_velocity_mps *
               ctx.timing.storage_time;
  if (req.vibration != nullptr &&
      ctx.noise.vibration_mode == VibrationMode::kDifferential) {
    const double off = req.record_start_abs_s - ctx.trace.t_start;
    phi += req.vibration->phase_at(off + ctx.program.markers.retrieval) -
           req.vibration->phase_at(off + ctx.program.markers.switch_off);
  }
  if (ctx.noise.retrieval_phase_jitter_rad > 0.0) {
    GaussianStream jitter(derive_seed(
        req.op_seed, seed_purpose::kRetrievalJitter, req.record_index));
    phi += ctx.noise.retrieval_phase_jitter_rad * jitter();
  }
  phi += req.retrieval_walk_rad;
  return phi;
}

namespace detail {

/// Piecewise view of a Wiener walk produced by segmented_laser_walk.
class WalkLookup {
 public:
  WalkLookup() = default;
  WalkLookup(std::vector<SampleRange> ranges,
             std::vector<std::vector<double>> values)
      : ranges_(std::move(ranges)), values_(std::move(values)) {}

  double at(long long g) const {
    if (g < 0) return 0.0;  // anchored at zero before the record starts
    const auto gg = static_cast<std::size_t>(g);
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      if (gg >= ranges_[i].first && gg < ranges_[i].first + ranges_[i].count)
        return values_[i][gg - ranges_[i].first];
    }
    throw std::logic_error("WalkLookup: sample index outside walk segments");
  }

 private:
  std::vector<SampleRange> ranges_;
  std::vector<std::vector<double>> values_;
};

inline std::size_t delay_samples(double imbalance_s, double dt) {
  return static_cast<std::size_t>(std::llround(imbalance_s / dt));
}

}  // namespace detail

/// Samples of both channels over one window of the record grid.
struct WindowSamples {
  SampleRange span;
  std::vector<double> reference;
  std::vector<double> probe;
};

/// The two windows a phase measurement reads: the baseline pulse before
/// storage and the retrieved pulse after it.
struct ShotWindows {
  WindowSamples baseline;
  WindowSamples retrieved;
};

/// Dense synthesis of one record: full reference and probe traces. Used by
/// the trace-output paths; the statistics campaigns use the window form
/// below, which draws only the samples it will read.
inline std::pair<Trace, Trace> synth_record(const ShotContext& ctx,
                                            const RecordRequest& req) {
  const TraceConfig& tc = ctx.trace;
  const std::size_t n = tc.sample_count();
  const double dt = tc.dt();
  const double amp = tc.amplitude;
  const double wb = kTwoPi * tc.beat_frequency;

  const std::vector<double> walk = laser_phase_walk(
      n, dt, ctx.noise.laser_linewidth_hz,
      derive_seed(req.op_seed, seed_purpose::kLaserWalk, req.record_index));
  const auto d_ref = static_cast<long long>(
      detail::delay_samples(ctx.noise.mzi_imbalance_ref_s, dt));
  const auto d_pr = static_cast<long long>(
      detail::delay_samples(ctx.noise.mzi_imbalance_probe_s, dt));
  auto walk_at = [&](long long g) { return g < 0 ? 0.0 : walk[g]; };

  const bool have_vib = req.vibration != nullptr;
  const bool vib_common = have_vib &&
                          ctx.noise.vibration_mode == VibrationMode::kCommon;
  const double dphi_tr = retrieved_segment_phase(ctx, req);
  const double amp_ret =
      std::sqrt(storage_efficiency(ctx.timing.storage_time, ctx.memory));

  const double sigma = ctx.noise.additive_noise_rms;
  GaussianStream white_ref(derive_seed(req.op_seed, seed_purpose::kWhiteRef,
                                       req.record_index));
  GaussianStream white_pr(derive_seed(req.op_seed, seed_purpose::kWhiteProbe,
                                      req.record_index));

  Trace ref{tc, Channel::kReference, std::vector<double>(n)};
  Trace pr{tc, Channel::kProbe, std::vector<double>(n)};
  for (std::size_t g = 0; g < n; ++g) {
    const auto gi = static_cast<long long>(g);
    const double in_record = static_cast<double>(g) * dt;
    const double t_rel = tc.t_start + in_record;
    const double t_abs = req.record_start_abs_s + in_record;
    const double carrier = wb * in_record;
    const double vib = have_vib ? req.vibration->phase_at(t_abs) : 0.0;
    const double w0 = walk_at(gi);
    const double ph_ref =
        carrier + (w0 - walk_at(gi - d_ref)) + (vib_common ? vib : 0.0);
    const double ph_pr = carrier + (w0 - walk_at(gi - d_pr)) + vib;

    ref.samples[g] = amp * std::cos(ph_ref);
    double v = 0.0;
    const double env_in = ctx.program.probe_input_envelope(t_rel);
    if (env_in != 0.0) v += env_in * std::cos(ph_pr);
    const double env_ret = ctx.program.retrieved_envelope_unit(t_rel);
    if (env_ret != 0.0) v += amp_ret * env_ret * std::cos(ph_pr + dphi_tr);
    pr.samples[g] = amp * v;

    if (sigma > 0.0) {
      ref.samples[g] += sigma * white_ref();
      pr.samples[g] += sigma * white_pr();
    }
  }
  return {std::move(ref), std::move(pr)};
}

/// Sparse synthesis: generates only the two requested windows. The laser
/// walk advances between windows with exact variance jumps, so this is the
/// same process as the dense form, just not evaluated in between (the
/// Gaussian draw sequences differ, the statistics do not; with all noise
/// magnitudes zero the two forms agree sample for sample).
inline ShotWindows synth_record_windows(const ShotContext& ctx,
                                        const RecordRequest& req,
                                        SampleRange baseline_span,
                                        SampleRange retrieved_span) {
  const TraceConfig& tc = ctx.trace;
  const std::size_t n = tc.sample_count();
  const double dt = tc.dt();
  if (baseline_span.count == 0 || retrieved_span.count == 0 ||
      baseline_span.first + baseline_span.count > n ||
      retrieved_span.first + retrieved_span.count > n ||
      baseline_span.first + baseline_span.count > retrieved_span.first)
    throw std::invalid_argument(
        "synth_record_windows: windows must be non-empty, ordered and "
        "inside the record");

  const auto d_ref = static_cast<long long>(
      detail::delay_samples(ctx.noise.mzi_imbalance_ref_s, dt));
  const auto d_pr = static_cast<long long>(
      detail::delay_samples(ctx.noise.mzi_imbalance_probe_s, dt));
  const auto d_max = static_cast<std::size_t>(std::max(d_ref, d_pr));

  // Walk coverage must include the delayed lookups just before each window.
  std::vector<SampleRange> walk_ranges;
  for (const SampleRange& s : {baseline_span, retrieved_span}) {
    const std::size_t lo = s.first > d_max ? s.first - d_max : 0;
    const std::size_t hi = s.first + s.count;
    if (!walk_ranges.empty() &&
        lo <= walk_ranges.back().first + walk_ranges.back().count) {
      SampleRange& prev = walk_ranges.back();
      prev.count = hi - prev.first;
    } else {
      walk_ranges.push_back({lo, hi - lo});
    }
  }
  auto walk_values = segmented_laser_walk(
      walk_ranges, dt, ctx.noise.laser_linewidth_hz,
      derive_seed(req.op_seed, seed_purpose::kLaserWalk, req.record_index));
  const detail::WalkLookup walk(std::move(walk_ranges),
                                std::move(walk_values));

  const bool have_vib = req.vibration != nullptr;
  const bool vib_common = have_vib &&
                          ctx.noise.vibration_mode == VibrationMode::kCommon;
  const double dphi_tr = retrieved_segment_phase(ctx, req);
  const double amp_ret =
      std::sqrt(storage_efficiency(ctx.timing.storage_time, ctx.memory));
  const double amp = tc.amplitude;
  const double wb = kTwoPi * tc.beat_frequency;

  const double sigma = ctx.noise.additive_noise_rms;
  GaussianStream white_ref(derive_seed(req.op_seed, seed_purpose::kWhiteRef,
                                       req.record_index));
  GaussianStream white_pr(derive_seed(req.op_seed, seed_purpose::kWhiteProbe,
                                      req.record_index));

  ShotWindows out;
  out.baseline.span = baseline_span;
  out.retrieved.span = retrieved_span;
  for (WindowSamples* w : {&out.baseline, &out.retrieved}) {
    w->reference.resize(w->span.count);
    w->probe.resize(w->span.count);
    for (std::size_t k = 0; k < w->span.count; ++k) {
      const std::size_t g = w->span.first + k;
      const auto gi = static_cast<long long>(g);
      const double in_record = static_cast<double>(g) * dt;
      const double t_rel = tc.t_start + in_record;
      const double t_abs = req.record_start_abs_s + in_record;
      const double carrier = wb * in_record;
      const double vib = have_vib ? req.vibration->phase_at(t_abs) : 0.0;
      const double w0 = walk.at(gi);
      const double ph_ref =
          carrier + (w0 - walk.at(gi - d_ref)) + (vib_common ? vib : 0.0);
      const double ph_pr = carrier + (w0 - walk.at(gi - d_pr)) + vib;

      w->reference[k] = amp * std::cos(ph_ref);
      double v = 0.0;
      const double env_in = ctx.program.probe_input_envelope(t_rel);
      if (env_in != 0.0) v += env_in * std::cos(ph_pr);
      const double env_ret = ctx.program.retrieved_envelope_unit(t_rel);
      if (env_ret != 0.0) v += amp_ret * env_ret * std::cos(ph_pr + dphi_tr);
      w->probe[k] = amp * v;

      if (sigma > 0.0) {
        w->reference[k] += sigma * white_ref();
        w->probe[k] += sigma * white_pr();
      }
    }
  }
  return out;
}

/// Running sample-wise mean over records, the oscilloscope averaging mode
/// restricted to the windows that get read out.
class ShotAccumulator {
 public:
  void add(const ShotWindows& w) {
    if (count_ == 0) {
      sum_ = w;
    } else {
      accumulate(sum_.baseline, w.baseline);
      accumulate(sum_.retrieved, w.retrieved);
    }
    ++count_;
  }

  std::size_t count() const { return count_; }

  ShotWindows mean() const {
    if (count_ == 0)
      throw std::logic_error("ShotAccumulator: no records added");
    ShotWindows m = sum_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (WindowSamples* w : {&m.baseline, &m.retrieved}) {
      for (double& v : w->reference) v *= inv;
      for (double& v : w->probe) v *= inv;
    }
    return m;
  }

 private:
  static void accumulate(WindowSamples& into, const WindowSamples& from) {
    if (into.span.first != from.span.first ||
        into.span.count != from.span.count)
      throw std::invalid_argument(
          "ShotAccumulator: window spans disagree between records");
    for (std::size_t i = 0; i < from.reference.size(); ++i)
      into.reference[i] += from.reference[i];
    for (std::size_t i = 0; i < from.probe.size(); ++i)
      into.probe[i] += from.probe[i];
  }

  ShotWindows sum_;
  std::size_t count_ = 0;
};

}  // namespace slv
