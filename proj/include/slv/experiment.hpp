#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slv/atomic_memory.hpp"
#include "slv/noise.hpp"
#include "slv/phase_extraction.hpp"
#include "slv/sequencer.hpp"
#include "slv/signal_synthesis.hpp"
#include "slv/trace.hpp"

namespace slv {

/// Campaign-level knobs: which stage velocities and storage times to scan,
/// how records are grouped into scope averages and repeated runs, and the
/// per-sequence dead time that sets the repetition period.
///
/// A "run" is one rest block followed by one motion block, each block being
/// scope_averages consecutive records averaged on the digitizer before any
/// fitting. Statistics are taken across runs.
struct SweepConfig {
  std::vector<double> velocities = {-0.020, -0.015, -0.010, -0.005, 0.0,
                                    0.005,  0.010,  0.015,  0.020};
  std::vector<double> storage_times = {2.5e-6, 4.5e-6, 6.5e-6, 8.5e-6};

  std::size_t scope_averages = 16;  // records averaged per block
  std::size_t runs = 20;            // repeated runs per sweep point

  // Repetition period of the sequence is storage_time + sequence_overhead:
  // everything except the storage interval itself (preparation, readout,
  // rearm) is folded into the overhead.
  double sequence_overhead_s = 13.0625e-6;

  // Phase-noise-floor estimation batches use more runs than the velocity
  // sweeps; the standard error scales out of the sensitivity, so this only
  // buys a tighter estimate.
  std::size_t sigma_runs = 300;

  // Averaging study: block sizes to scan and repetitions per block size.
  std::vector<std::size_t> averaging_counts = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t averaging_repetitions = 20;

  void validate() const {
    if (velocities.empty())
      throw std::invalid_argument("SweepConfig.velocities: must be non-empty");
    if (storage_times.empty())
      throw std::invalid_argument(
          "SweepConfig.storage_times: must be non-empty");
    for (double tau : storage_times)
      if (!(tau > 0.0))
        throw std::invalid_argument(
            "SweepConfig.storage_times: entries must be > 0");
    if (scope_averages < 1)
      throw std::invalid_argument("SweepConfig.scope_averages: must be >= 1");
    if (runs < 1)
      throw std::invalid_argument("SweepConfig.runs: must be >= 1");
    if (sigma_runs < 2)
      throw std::invalid_argument("SweepConfig.sigma_runs: must be >= 2");
    if (!(sequence_overhead_s > 0.0))
      throw std::invalid_argument(
          "SweepConfig.sequence_overhead_s: must be > 0");
    if (averaging_counts.empty())
      throw std::invalid_argument(
          "SweepConfig.averaging_counts: must be non-empty");
    for (std::size_t n : averaging_counts)
      if (n < 1)
        throw std::invalid_argument(
            "SweepConfig.averaging_counts: entries must be >= 1");
    if (averaging_repetitions < 2)
      throw std::invalid_argument(
          "SweepConfig.averaging_repetitions: must be >= 2");
  }
};

/// Everything needed to reproduce a campaign bit for bit. One master seed
/// feeds the whole tree; operations hash their indices into it, so results
/// are independent of scheduling and thread count.
struct ExperimentConfig {
  AtomicParams atoms;
  MemoryResponse memory;
  SequenceTiming timing;
  TraceConfig trace;
  NoiseConfig noise;
  ExtractionConfig extraction;
  SweepConfig sweep;

  std::uint64_t master_seed = 20121u;
  unsigned threads = 0;  // 0 = use hardware concurrency
  std::string output_dir = "out";

  void validate() const {
    atoms.validate();
    memory.validate();
    timing.validate();
    trace.validate();
    noise.validate();
    extraction.validate();
    sweep.validate();
  }
};

/// Shot context for this experiment at a given storage time. The stored
/// timing block is used as the template; only the storage interval moves.
inline ShotContext shot_context_at(const ExperimentConfig& cfg, double tau_s) {
  SequenceTiming timing = cfg.timing;
  timing.storage_time = tau_s;
  return make_shot_context(cfg.atoms, cfg.memory, timing, cfg.trace,
                           cfg.noise);
}

/// Sequence repetition period at a given storage time.
inline double record_period(const ExperimentConfig& cfg, double tau_s) {
  return tau_s + cfg.sweep.sequence_overhead_s;
}

}  // namespace slv
