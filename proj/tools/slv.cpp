// slv: stopped-light velocimetry toolkit.
//
// Subcommands:
//   simulate     synthesize one (optionally scope-averaged) record pair
//   extract      read trace files and report the beat phases
//   sweep        velocity sweeps over the configured storage times
//   sensitivity  phase noise floor and velocity sensitivity per storage time
//   averaging    phase scatter versus on-scope averaging depth
//   selftest     fast built-in consistency checks
//
// All campaign outputs are deterministic for a fixed config and seed; the
// run manifest written next to the outputs records the config hash and
// per-file checksums (its timestamp is the one intentionally varying field).

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "slv/config_io.hpp"
#include "slv/manifest.hpp"
#include "slv/report_io.hpp"
#include "slv/trace_io.hpp"
#include "slv/velocimetry.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using namespace slv;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 0;
  bool threads_set = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config_path,
                  "experiment config (JSON); defaults used when omitted");
  sub->add_option("--out", a.out_dir, "output directory (default from config)");
  sub->add_option("--seed", a.seed, "master seed override")
      ->each([&a](const std::string&) { a.seed_set = true; });
  sub->add_option("--threads", a.threads,
                  "worker thread count, 0 = hardware")
      ->each([&a](const std::string&) { a.threads_set = true; });
}

ExperimentConfig load_config(const CommonArgs& a) {
  ExperimentConfig cfg;
  if (!a.config_path.empty()) cfg = load_experiment_config(a.config_path);
  if (a.seed_set) cfg.master_seed = a.seed;
  if (a.threads_set) cfg.threads = static_cast<unsigned>(a.threads);
  if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
  return cfg;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw IoError("cannot create output directory: " + dir.string() + ": " +
                  ec.message());
  return dir;
}

/// Writes the canonical config echo next to the results and starts the
/// manifest off its hash.
std::string write_config_echo(const fs::path& dir,
                              const ExperimentConfig& cfg,
                              RunManifest& man) {
  const std::string text = serialize_experiment_config(cfg);
  const fs::path p = dir / "config_echo.json";
  detail::write_text_file(p.string(), text);
  man.config_fnv1a64_hex = fnv_hex(fnv1a64(text));
  man.master_seed = cfg.master_seed;
  man.outputs.push_back(record_output(p.string(), "config_echo.json"));
  return text;
}

void finish_manifest(const fs::path& dir, RunManifest& man) {
  man.generated_at = iso8601_utc_now();
  write_manifest((dir / "manifest.json").string(), man);
}

void note(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  CommonArgs common;
  double velocity_mps = 0.01;
  double tau_s = 0.0;
  bool tau_set = false;
  std::size_t averages = 1;
  bool noiseless = false;
  bool csv = false;
};

void cmd_simulate(const SimulateArgs& a, const std::string& cmdline) {
  ExperimentConfig cfg = load_config(a.common);
  if (a.tau_set) cfg.timing.storage_time = a.tau_s;
  if (a.noiseless) cfg.noise = NoiseConfig::none();
  if (a.averages < 1)
    throw ConfigError("simulate: --averages must be at least 1");
  cfg.validate();
  StageMotion{a.velocity_mps}.validate();

  const ShotContext ctx = make_shot_context(cfg.atoms, cfg.memory, cfg.timing,
                                            cfg.trace, cfg.noise);
  const double period = record_period(cfg, cfg.timing.storage_time);
  const std::uint64_t op_seed = derive_seed(cfg.master_seed, seed_op::kShot);
  const VibrationRealization vib(
      ctx.noise, derive_seed(op_seed, seed_purpose::kVibration));
  const std::vector<double> walk =
      accumulate_retrieval_walk(ctx.noise, op_seed, a.averages);

  Trace ref_mean{ctx.trace, Channel::kReference,
                 std::vector<double>(ctx.trace.sample_count(), 0.0)};
  Trace probe_mean{ctx.trace, Channel::kProbe,
                   std::vector<double>(ctx.trace.sample_count(), 0.0)};
  for (std::size_t r = 0; r < a.averages; ++r) {
    RecordRequest req;
    req.op_seed = op_seed;
    req.record_index = r;
    req.record_start_abs_s = static_cast<double>(r) * period;
    req.stage_velocity_mps = a.velocity_mps;
    req.retrieval_walk_rad = walk[r];
    req.vibration = &vib;
    auto [ref, probe] = synth_record(ctx, req);
    for (std::size_t g = 0; g < ref.samples.size(); ++g) {
      ref_mean.samples[g] += ref.samples[g];
      probe_mean.samples[g] += probe.samples[g];
    }
  }
  const double inv = 1.0 / static_cast<double>(a.averages);
  for (auto& v : ref_mean.samples) v *= inv;
  for (auto& v : probe_mean.samples) v *= inv;

  const fs::path dir = ensure_out_dir(cfg);
  RunManifest man;
  man.command = cmdline;
  write_config_echo(dir, cfg, man);

  write_trace_binary((dir / "reference.slvt").string(), ref_mean);
  man.outputs.push_back(
      record_output((dir / "reference.slvt").string(), "reference.slvt"));
  write_trace_binary((dir / "probe.slvt").string(), probe_mean);
  man.outputs.push_back(
      record_output((dir / "probe.slvt").string(), "probe.slvt"));
  if (a.csv) {
    write_trace_csv((dir / "reference.csv").string(), ref_mean);
    man.outputs.push_back(
        record_output((dir / "reference.csv").string(), "reference.csv"));
    write_trace_csv((dir / "probe.csv").string(), probe_mean);
    man.outputs.push_back(
        record_output((dir / "probe.csv").string(), "probe.csv"));
  }

  const GroundTruth gt = ground_truth(ctx, a.velocity_mps);
  nlohmann::ordered_json j;
  j["velocity_mps"] = gt.velocity_mps;
  j["storage_time_s"] = gt.storage_time_s;
  j["displacement_m"] = gt.displacement_m;
  j["storage_efficiency"] = gt.efficiency;
  j["translation_phase_rad"] = gt.translation_phase_rad;
  j["translation_phase_wrapped_rad"] = gt.translation_phase_wrapped_rad;
  // For a single motion record the pair difference against an ideal rest
  // record equals the wrapped translation phase, so a noiseless extract
  // should reproduce this number directly.
  j["expected_dphi_p_rad_noiseless"] = gt.translation_phase_wrapped_rad;
  j["scope_averages"] = a.averages;
  j["noiseless"] = a.noiseless;
  j["markers"] = {
      {"baseline_center_s", ctx.program.markers.baseline_center},
      {"probe_center_s", ctx.program.markers.probe_center},
      {"switch_off_s", ctx.program.markers.switch_off},
      {"retrieval_s", ctx.program.markers.retrieval},
      {"retrieved_peak_s", ctx.program.markers.retrieved_peak},
  };
  detail::write_text_file((dir / "ground_truth.json").string(),
                          j.dump(2) + "\n");
  man.outputs.push_back(
      record_output((dir / "ground_truth.json").string(), "ground_truth.json"));

  finish_manifest(dir, man);
  note("simulate: wrote %zu-sample reference/probe pair to %s",
       ctx.trace.sample_count(), dir.string().c_str());
}

// ----------------------------------------------------------------- extract

struct ExtractArgs {
  CommonArgs common;
  std::string reference_path;
  std::string probe_path;
  double t_start_s = 0.0;
  bool t_start_set = false;
  double beat_hz = 0.0;
  bool beat_set = false;
  double tau_s = 0.0;
  bool tau_set = false;
  bool lenient = false;
};

Trace load_trace(const std::string& path, double t_start, double beat) {
  const fs::path p(path);
  if (p.extension() == ".csv") return read_trace_csv(path, beat);
  return make_trace(read_trace_binary(path), t_start, beat);
}

void print_fit(const char* window, Channel ch, const SinusoidFit& f,
               double floor) {
  std::printf("%s,%s,%.12g,%zu,%.12g,%.12g,%.12g,%d\n", window,
              channel_name(ch), f.t_reference, f.n_samples, f.amplitude,
              f.phase, f.residual_rms, f.amplitude < floor ? 1 : 0);
}

void cmd_extract(const ExtractArgs& a) {
  ExperimentConfig cfg = load_config(a.common);
  if (a.tau_set) cfg.timing.storage_time = a.tau_s;
  const double beat = a.beat_set ? a.beat_hz : cfg.trace.beat_frequency;
  const double t_start = a.t_start_set ? a.t_start_s : cfg.trace.t_start;

  const Trace ref = load_trace(a.reference_path, t_start, beat);
  const Trace probe = load_trace(a.probe_path, t_start, beat);
  if (ref.channel != Channel::kReference)
    throw FormatError(a.reference_path + ": channel: expected reference, got " +
                      channel_name(ref.channel));
  if (probe.channel != Channel::kProbe)
    throw FormatError(a.probe_path + ": channel: expected probe, got " +
                      channel_name(probe.channel));
  if (!(ref.config == probe.config))
    throw FormatError("reference and probe traces disagree on sample rate, "
                      "length or start time");

  // The trace geometry comes from the files; the pulse program and
  // extraction windows come from the config.
  cfg.trace = ref.config;
  cfg.validate();
  const ShotContext ctx = make_shot_context(cfg.atoms, cfg.memory, cfg.timing,
                                            cfg.trace, cfg.noise);

  ExtractionConfig ex = cfg.extraction;
  PhaseMeasurement m;
  bool degraded = false;
  try {
    m = measure_shot(ctx, ref, probe, ShotRegime::kMotion, ex);
  } catch (const LowSignalError& e) {
    if (!a.lenient) throw;
    note("warning: %s; refitting every window without the amplitude floor",
         e.what());
    ExtractionConfig open = ex;
    open.amplitude_floor = 1e-300;
    m = measure_shot(ctx, ref, probe, ShotRegime::kMotion, open);
    degraded = true;
  }

  std::printf("# window,channel,t_center_s,n_samples,amplitude_arb,"
              "phase_rad,residual_rms,below_floor\n");
  print_fit("baseline", Channel::kReference, m.ref_baseline,
            ex.amplitude_floor);
  print_fit("baseline", Channel::kProbe, m.probe_baseline, ex.amplitude_floor);
  print_fit("retrieved", Channel::kReference, m.ref_retrieved,
            ex.amplitude_floor);
  print_fit("retrieved", Channel::kProbe, m.probe_retrieved,
            ex.amplitude_floor);
  std::printf("# dphi0_rad,dphi1_rad,dphi_p_rad%s\n",
              degraded ? " (low-signal windows included)" : "");
  std::printf("%.12g,%.12g,%.12g\n", m.dphi0, m.dphi1, m.dphi_p);
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
  CommonArgs common;
  bool noiseless = false;
};

void cmd_sweep(const SweepArgs& a, const std::string& cmdline) {
  ExperimentConfig cfg = load_config(a.common);
  if (a.noiseless) {
    cfg.noise = NoiseConfig::none();
    cfg.sweep.runs = 1;  // identical records; repetition adds nothing
  }
  cfg.validate();

  std::vector<VelocitySweepResult> sweeps;
  std::vector<AlphaPoint> alphas;
  for (std::size_t i = 0; i < cfg.sweep.storage_times.size(); ++i) {
    const double tau = cfg.sweep.storage_times[i];
    VelocitySweepResult res = run_velocity_sweep(
        cfg, tau, derive_seed(cfg.master_seed, seed_op::kSweep, i));
    alphas.push_back({tau, res.alpha_rad_per_mps, res.alpha_stderr_rad_per_mps});
    sweeps.push_back(std::move(res));
    note("sweep: storage time %.3g us: alpha = %.6g rad/(m/s)", tau * 1e6,
         alphas.back().alpha_rad_per_mps);
  }

  // The per-velocity table uses the longest storage time, where the phase
  // per velocity step is largest.
  std::size_t pick = 0;
  for (std::size_t i = 1; i < sweeps.size(); ++i)
    if (sweeps[i].tau_s > sweeps[pick].tau_s) pick = i;

  const fs::path dir = ensure_out_dir(cfg);
  RunManifest man;
  man.command = cmdline;
  write_config_echo(dir, cfg, man);

  write_velocity_sweep_csv((dir / "velocity_sweep.csv").string(), sweeps[pick]);
  man.outputs.push_back(record_output((dir / "velocity_sweep.csv").string(),
                                      "velocity_sweep.csv"));
  write_alpha_vs_tau_csv((dir / "alpha_vs_tau.csv").string(), alphas);
  man.outputs.push_back(record_output((dir / "alpha_vs_tau.csv").string(),
                                      "alpha_vs_tau.csv"));

  std::string sum;
  sum += "Velocity sweep summary\n";
  sum += "----------------------\n";
  sum += a.noiseless ? "noise: disabled (single run per point)\n"
                     : "noise: full bench model\n";
  for (const auto& s : sweeps) {
    sum += "storage time " + detail::fmt_num(s.tau_s * 1e6) +
           " us: alpha = " + detail::fmt_num(s.alpha_rad_per_mps) + " +- " +
           detail::fmt_num(s.alpha_stderr_rad_per_mps) + " rad/(m/s), ideal " +
           detail::fmt_num(cfg.atoms.probe_wavenumber * s.tau_s) + "\n";
  }
  if (alphas.size() >= 2) {
    const AlphaVsTauFit fit = fit_alpha_vs_tau(alphas);
    sum += "alpha vs storage time: slope = " +
           detail::fmt_num(fit.slope_rad_per_m) + " +- " +
           detail::fmt_num(fit.slope_stderr_rad_per_m) +
           " rad/m (probe wavenumber " +
           detail::fmt_num(cfg.atoms.probe_wavenumber) + "), intercept = " +
           detail::fmt_num(fit.intercept_rad_per_mps) + " +- " +
           detail::fmt_num(fit.intercept_stderr_rad_per_mps) + " rad/(m/s)\n";
    sum += "bench comparison: slope " +
           detail::fmt_num(kBenchAlphaSlopeRadPerM) + " +- " +
           detail::fmt_num(kBenchAlphaSlopeErrRadPerM) + " rad/m, alpha(8.5 us) " +
           detail::fmt_num(kBenchAlphaRadPerMps) + " +- " +
           detail::fmt_num(kBenchAlphaErrRadPerMps) + " rad/(m/s)\n";
  }
  if (a.noiseless) {
    double worst = 0.0;
    for (const auto& p : sweeps[pick].points) {
      const double ideal =
          -cfg.atoms.probe_wavenumber * p.velocity_set_mps * sweeps[pick].tau_s;
      worst = std::max(worst, std::abs(p.dphi_tr_rad - ideal));
    }
    sum += "noiseless check at " + detail::fmt_num(sweeps[pick].tau_s * 1e6) +
           " us: max |dphi - (-k_P V tau)| = " + detail::fmt_num(worst) +
           " rad\n";
  }
  detail::write_text_file((dir / "sweep_summary.txt").string(), sum);
  man.outputs.push_back(record_output((dir / "sweep_summary.txt").string(),
                                      "sweep_summary.txt"));

  finish_manifest(dir, man);
  std::printf("%s", sum.c_str());
}

// ------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  CommonArgs common;
  double alpha = kBenchAlphaRadPerMps;
};

void cmd_sensitivity(const SensitivityArgs& a, const std::string& cmdline) {
  ExperimentConfig cfg = load_config(a.common);
  cfg.validate();
  if (a.alpha < 0.0)
    throw ConfigError("sensitivity: --alpha must be >= 0 (0 disables)");

  // The measured coefficient belongs to the storage time it was fitted at,
  // so the empirical variant is reported only there.
  std::size_t alpha_at = 0;
  for (std::size_t i = 1; i < cfg.sweep.storage_times.size(); ++i)
    if (cfg.sweep.storage_times[i] > cfg.sweep.storage_times[alpha_at])
      alpha_at = i;

  std::vector<SensitivityReport> reports;
  for (std::size_t i = 0; i < cfg.sweep.storage_times.size(); ++i) {
    const double tau = cfg.sweep.storage_times[i];
    const SigmaPhiEstimate est = estimate_sigma_phi(
        cfg, tau, derive_seed(cfg.master_seed, seed_op::kSigmaPhi, i),
        cfg.sweep.sigma_runs);
    const double beta = static_cast<double>(cfg.sweep.scope_averages) *
                        static_cast<double>(est.runs);
    reports.push_back(sensitivity(est.sigma_phi_rad,
                                  cfg.atoms.probe_wavenumber, tau, beta,
                                  cfg.sweep.sequence_overhead_s,
                                  i == alpha_at ? a.alpha : 0.0));
    note("sensitivity: storage time %.3g us: sigma_phi = %.4g mrad (SE, "
         "%zu runs)", tau * 1e6, est.sigma_phi_rad * 1e3, est.runs);
  }

  const fs::path dir = ensure_out_dir(cfg);
  RunManifest man;
  man.command = cmdline;
  write_config_echo(dir, cfg, man);

  write_sensitivity_csv((dir / "sensitivity_vs_tau.csv").string(), reports);
  man.outputs.push_back(record_output((dir / "sensitivity_vs_tau.csv").string(),
                                      "sensitivity_vs_tau.csv"));
  const std::string sum = sensitivity_summary_text(reports);
  detail::write_text_file((dir / "sensitivity_summary.txt").string(), sum);
  man.outputs.push_back(record_output(
      (dir / "sensitivity_summary.txt").string(), "sensitivity_summary.txt"));

  finish_manifest(dir, man);
  std::printf("%s", sum.c_str());
}

// --------------------------------------------------------------- averaging

struct AveragingArgs {
  CommonArgs common;
  double tau_s = 0.0;
  bool tau_set = false;
};

void cmd_averaging(const AveragingArgs& a, const std::string& cmdline) {
  ExperimentConfig cfg = load_config(a.common);
  cfg.validate();
  const double tau = a.tau_set ? a.tau_s : cfg.timing.storage_time;

  const std::vector<AveragingPoint> points = averaging_study(
      cfg, tau, derive_seed(cfg.master_seed, seed_op::kAveraging));

  const fs::path dir = ensure_out_dir(cfg);
  RunManifest man;
  man.command = cmdline;
  write_config_echo(dir, cfg, man);

  write_averaging_csv((dir / "averaging_curve.csv").string(), points);
  man.outputs.push_back(record_output((dir / "averaging_curve.csv").string(),
                                      "averaging_curve.csv"));

  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].sigma_phi_rad < points[best].sigma_phi_rad) best = i;
  std::string sum;
  sum += "On-scope averaging study, storage time " +
         detail::fmt_num(tau * 1e6) + " us\n";
  sum += "scope_averages,sigma_phi_mrad,sigma_err_mrad\n";
  for (const auto& p : points)
    sum += detail::fmt_num(static_cast<double>(p.averages)) + "," +
           detail::fmt_num(p.sigma_phi_rad * 1e3) + "," +
           detail::fmt_num(p.sigma_err_rad * 1e3) + "\n";
  sum += "lowest scatter at " +
         detail::fmt_num(static_cast<double>(points[best].averages)) +
         " averages; past that the slow retrieval-chain walk between the "
         "rest and motion blocks outgrows the shrinking fast noise\n";
  detail::write_text_file((dir / "averaging_summary.txt").string(), sum);
  man.outputs.push_back(record_output(
      (dir / "averaging_summary.txt").string(), "averaging_summary.txt"));

  finish_manifest(dir, man);
  std::printf("%s", sum.c_str());
}

// ---------------------------------------------------------------- selftest

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%s: %s\n", ok ? "ok" : "FAIL", name);
    if (!ok) ++failures;
  };

  ExperimentConfig cfg;
  cfg.noise = NoiseConfig::none();
  cfg.sweep.runs = 1;

  // Noiseless motion/rest pair lands on -k_P V tau to numerical precision.
  {
    const double v = 0.01;
    const double tau = 8.5e-6;
    const ShotContext ctx = shot_context_at(cfg, tau);
    const auto windows = measurement_windows(ctx, cfg.extraction);
    const double got = slv::detail::measure_pair(
        ctx, windows, cfg.extraction, derive_seed(cfg.master_seed, 0, 0),
        record_period(cfg, tau), v, 1);
    const double want = -cfg.atoms.probe_wavenumber * v * tau;
    check("noiseless pair phase", std::abs(got - want) < 1e-9);
  }

  // Memory response oracle points.
  {
    MemoryResponse mem;
    const bool a = std::abs(storage_efficiency(0.0, mem) - 0.24) < 1e-15;
    const bool b =
        std::abs(storage_efficiency(8.5e-6, mem) - 0.04031357682180807) <
        1e-12;
    check("storage efficiency", a && b);
  }

  // Sensitivity arithmetic.
  {
    const SensitivityReport r =
        sensitivity(0.0174, 7.02e6, 8.5e-6, 320.0, 13.0625e-6, 63.6);
    const bool a =
        std::abs(r.sensitivity_alpha_mps_rthz - 2.2725669058926805e-5) < 1e-17;
    const bool b =
        std::abs(r.velocity_resolution_alpha_mps - 2.735849056603773e-4) <
        1e-16;
    check("sensitivity arithmetic", a && b);
  }

  // Trace binary round trip.
  {
    const fs::path p = fs::temp_directory_path() / "slv_selftest.slvt";
    Trace t{TraceConfig{}, Channel::kProbe,
            std::vector<double>(TraceConfig{}.sample_count(), 0.0)};
    for (std::size_t i = 0; i < t.samples.size(); ++i)
      t.samples[i] = std::sin(0.001 * static_cast<double>(i));
    write_trace_binary(p.string(), t);
    const RawTrace rt = read_trace_binary(p.string());
    bool ok = rt.samples.size() == t.samples.size() &&
              rt.channel == Channel::kProbe;
    if (ok)
      for (std::size_t i = 0; i < rt.samples.size(); ++i)
        ok = ok && rt.samples[i] == static_cast<float>(t.samples[i]);
    fs::remove(p);
    check("trace binary round trip", ok);
  }

  // Config echo round trip is the identity.
  {
    const std::string t1 = serialize_experiment_config(ExperimentConfig{});
    const std::string t2 =
        serialize_experiment_config(parse_experiment_config(t1));
    check("config round trip", t1 == t2);
  }

  // Seed derivation is deterministic and purpose-separated.
  {
    const bool a = derive_seed(1, 2, 3) == derive_seed(1, 2, 3);
    const bool b = derive_seed(1, 2, 3) != derive_seed(1, 3, 3);
    check("seed derivation", a && b);
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stopped-light velocimetry toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "synthesize one scope record pair (reference + probe)");
  add_common(c_sim, sim.common);
  c_sim->add_option("--velocity", sim.velocity_mps,
                    "stage velocity during storage, m/s");
  c_sim->add_option("--tau", sim.tau_s, "storage time override, s")
      ->each([&sim](const std::string&) { sim.tau_set = true; });
  c_sim->add_option("--averages", sim.averages,
                    "records averaged on the scope");
  c_sim->add_flag("--noiseless", sim.noiseless, "disable every noise source");
  c_sim->add_flag("--csv", sim.csv, "also write CSV traces");

  ExtractArgs ext;
  CLI::App* c_ext = app.add_subcommand(
      "extract", "fit beat phases in recorded traces");
  add_common(c_ext, ext.common);
  c_ext->add_option("--reference", ext.reference_path,
                    "reference trace (.slvt or .csv)")
      ->required();
  c_ext->add_option("--probe", ext.probe_path, "probe trace (.slvt or .csv)")
      ->required();
  c_ext->add_option("--t-start", ext.t_start_s,
                    "time of the first sample for binary traces, s")
      ->each([&ext](const std::string&) { ext.t_start_set = true; });
  c_ext->add_option("--beat", ext.beat_hz, "beat frequency, Hz")
      ->each([&ext](const std::string&) { ext.beat_set = true; });
  c_ext->add_option("--tau", ext.tau_s,
                    "storage time the traces were recorded with, s")
      ->each([&ext](const std::string&) { ext.tau_set = true; });
  c_ext->add_flag("--lenient", ext.lenient,
                  "report low-signal windows instead of failing");

  SweepArgs swp;
  CLI::App* c_swp = app.add_subcommand(
      "sweep", "velocity sweeps over the configured storage times");
  add_common(c_swp, swp.common);
  c_swp->add_flag("--noiseless", swp.noiseless, "disable every noise source");

  SensitivityArgs sen;
  CLI::App* c_sen = app.add_subcommand(
      "sensitivity", "phase noise floor and velocity sensitivity");
  add_common(c_sen, sen.common);
  c_sen->add_option("--alpha", sen.alpha,
                    "measured phase-velocity coefficient for the empirical "
                    "variant, rad/(m/s); reported at the longest storage "
                    "time, 0 disables");

  AveragingArgs avg;
  CLI::App* c_avg = app.add_subcommand(
      "averaging", "phase scatter versus on-scope averaging depth");
  add_common(c_avg, avg.common);
  c_avg->add_option("--tau", avg.tau_s, "storage time, s")
      ->each([&avg](const std::string&) { avg.tau_set = true; });

  CLI::App* c_self = app.add_subcommand("selftest",
                                        "fast built-in consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string cmdline;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) cmdline += ' ';
    cmdline += argv[i];
  }

  try {
    if (*c_sim) cmd_simulate(sim, cmdline);
    if (*c_ext) cmd_extract(ext);
    if (*c_swp) cmd_sweep(swp, cmdline);
    if (*c_sen) cmd_sensitivity(sen, cmdline);
    if (*c_avg) cmd_averaging(avg, cmdline);
    if (*c_self) return cmd_selftest();
  } catch (const LowSignalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
