#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slv/errors.hpp"
#include "slv/experiment.hpp"
#include "slv/version.hpp"

#include "json.hpp"

namespace slv {

namespace detail {

/// Reads one config section with unknown-key rejection. Every accessor
/// leaves the target untouched when the key is absent, so a sparse file
/// overrides only what it names; finish() then rejects anything left over.
class StrictSection {
 public:
  StrictSection(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  void number(const char* key, double& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number())
      throw ConfigError(path_ + "." + key + ": expected a number");
    target = v.get<double>();
  }

  void count(const char* key, std::size_t& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(path_ + "." + key +
                        ": expected a non-negative integer");
    target = static_cast<std::size_t>(v.get<long long>());
  }

  void seed(const char* key, std::uint64_t& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError(path_ + "." + key +
                        ": expected a non-negative integer");
    target = v.get<std::uint64_t>();
  }

  void text(const char* key, std::string& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string())
      throw ConfigError(path_ + "." + key + ": expected a string");
    target = v.get<std::string>();
  }

  void number_list(const char* key, std::vector<double>& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array())
      throw ConfigError(path_ + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ConfigError(path_ + "." + key +
                          ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    target = std::move(out);
  }

  void count_list(const char* key, std::vector<std::size_t>& target) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array())
      throw ConfigError(path_ + "." + key + ": expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw ConfigError(path_ + "." + key +
                          ": expected an array of non-negative integers");
      out.push_back(static_cast<std::size_t>(e.get<long long>()));
    }
    target = std::move(out);
  }

  /// Named-choice field mapped through (name, value) pairs.
  template <typename Enum>
  void choice(const char* key, Enum& target,
              std::initializer_list<std::pair<const char*, Enum>> options) {
    if (!mark(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string())
      throw ConfigError(path_ + "." + key + ": expected a string");
    const std::string name = v.get<std::string>();
    for (const auto& [label, value] : options) {
      if (name == label) {
        target = value;
        return;
      }
    }
    std::string allowed;
    for (const auto& [label, value] : options) {
      if (!allowed.empty()) allowed += ", ";
      allowed += label;
    }
    throw ConfigError(path_ + "." + key + ": unknown value \"" + name +
                      "\" (allowed: " + allowed + ")");
  }

  /// Subsection object; returns nullptr when absent.
  const nlohmann::json* section(const char* key) {
    if (!mark(key)) return nullptr;
    return &j_.at(key);
  }

  /// Key must be present (used for schema_version).
  const nlohmann::json& required(const char* key) {
    if (!j_.contains(key))
      throw ConfigError(path_ + "." + key + ": required key is missing");
    mark(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (seen_.find(item.key()) == seen_.end())
        throw ConfigError(path_ + "." + item.key() + ": unknown key");
  }

 private:
  bool mark(const char* key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_physics(const nlohmann::json& j, AtomicParams& p) {
  StrictSection s(j, "physics");
  s.number("probe_rabi_rad_per_s", p.probe_rabi);
  s.number("control_rabi_rad_per_s", p.control_rabi);
  s.number("excited_linewidth_rad_per_s", p.excited_linewidth);
  s.number("ground_decoherence_hz", p.ground_decoherence);
  s.number("probe_wavenumber_rad_per_m", p.probe_wavenumber);
  s.finish();
}

inline void read_memory(const nlohmann::json& j, MemoryResponse& m) {
  StrictSection s(j, "memory");
  s.number("efficiency_zero_delay", m.eta0);
  s.number("coherence_time_s", m.tau_c);
  s.choice("decay_convention", m.convention,
           {{"half_gaussian", DecayConvention::kHalfGaussian},
            {"plain_gaussian", DecayConvention::kPlainGaussian}});
  s.finish();
}

inline void read_timing(const nlohmann::json& j, SequenceTiming& t) {
  StrictSection s(j, "timing");
  s.number("control_on_s", t.control_on);
  s.number("control_off_s", t.control_off);
  s.number("storage_time_s", t.storage_time);
  s.number("baseline_center_s", t.baseline_center);
  s.number("baseline_duration_s", t.baseline_duration);
  s.number("baseline_amplitude", t.baseline_amplitude);
  s.number("probe_fwhm_s", t.probe_fwhm);
  s.number("probe_amplitude", t.probe_amplitude);
  s.number("control_edge_fwhm_s", t.control_edge_fwhm);
  s.number("retrieved_delay_s", t.retrieved_delay);
  s.number("span_start_s", t.span_start);
  s.number("span_end_s", t.span_end);
  s.finish();
}

inline void read_trace(const nlohmann::json& j, TraceConfig& t) {
  StrictSection s(j, "trace");
  s.number("sample_rate_hz", t.sample_rate);
  s.number("duration_s", t.duration);
  s.number("beat_frequency_hz", t.beat_frequency);
  s.number("amplitude", t.amplitude);
  s.number("t_start_s", t.t_start);
  s.finish();
}

inline void read_noise(const nlohmann::json& j, NoiseConfig& n) {
  StrictSection s(j, "noise");
  s.number("laser_linewidth_hz", n.laser_linewidth_hz);
  s.number("mzi_imbalance_ref_s", n.mzi_imbalance_ref_s);
  s.number("mzi_imbalance_probe_s", n.mzi_imbalance_probe_s);
  s.number("vibration_rms_phase_rad", n.vibration_rms_phase);
  s.number("vibration_band_lo_hz", n.vibration_band_lo_hz);
  s.number("vibration_band_hi_hz", n.vibration_band_hi_hz);
  s.count("vibration_components", n.vibration_components);
  s.choice("vibration_mode", n.vibration_mode,
           {{"differential", VibrationMode::kDifferential},
            {"common", VibrationMode::kCommon}});
  s.number("retrieval_phase_jitter_rad", n.retrieval_phase_jitter_rad);
  s.number("retrieval_phase_walk_rad", n.retrieval_phase_walk_rad);
  s.number("additive_noise_rms", n.additive_noise_rms);
  s.finish();
}

inline void read_extraction(const nlohmann::json& j, ExtractionConfig& e) {
  StrictSection s(j, "extraction");
  s.number("window_length_s", e.window_length_s);
  s.number("amplitude_floor", e.amplitude_floor);
  s.finish();
}

inline void read_sweep(const nlohmann::json& j, SweepConfig& w) {
  StrictSection s(j, "sweep");
  s.number_list("velocities_mps", w.velocities);
  s.number_list("storage_times_s", w.storage_times);
  s.count("scope_averages", w.scope_averages);
  s.count("runs", w.runs);
  s.number("sequence_overhead_s", w.sequence_overhead_s);
  s.count("sigma_runs", w.sigma_runs);
  s.count_list("averaging_counts", w.averaging_counts);
  s.count("averaging_repetitions", w.averaging_repetitions);
  s.finish();
}

}  // namespace detail

/// Parses and validates a full experiment config from JSON text. The file
/// is sectioned per module; absent keys keep their defaults, unknown keys
/// fail with their full path, and schema_version is mandatory.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig cfg;
  detail::StrictSection top(j, "config");

  const nlohmann::json& schema = top.required("schema_version");
  if (!schema.is_number_integer() ||
      schema.get<long long>() != kConfigSchemaVersion)
    throw ConfigError("config.schema_version: expected " +
                      std::to_string(kConfigSchemaVersion));

  if (const auto* s = top.section("physics")) detail::read_physics(*s, cfg.atoms);
  if (const auto* s = top.section("memory")) detail::read_memory(*s, cfg.memory);
  if (const auto* s = top.section("timing")) detail::read_timing(*s, cfg.timing);
  if (const auto* s = top.section("trace")) detail::read_trace(*s, cfg.trace);
  if (const auto* s = top.section("noise")) detail::read_noise(*s, cfg.noise);
  if (const auto* s = top.section("extraction"))
    detail::read_extraction(*s, cfg.extraction);
  if (const auto* s = top.section("sweep")) detail::read_sweep(*s, cfg.sweep);
  top.seed("master_seed", cfg.master_seed);
  {
    std::size_t threads = cfg.threads;
    top.count("threads", threads);
    cfg.threads = static_cast<unsigned>(threads);
  }
  top.text("output_dir", cfg.output_dir);
  top.finish();

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

/// Canonical serialization: every field, fixed order, 2-space indent. Used
/// for the config echo written next to results and for manifest hashing.
inline std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["physics"] = {
      {"probe_rabi_rad_per_s", cfg.atoms.probe_rabi},
      {"control_rabi_rad_per_s", cfg.atoms.control_rabi},
      {"excited_linewidth_rad_per_s", cfg.atoms.excited_linewidth},
      {"ground_decoherence_hz", cfg.atoms.ground_decoherence},
      {"probe_wavenumber_rad_per_m", cfg.atoms.probe_wavenumber},
  };
  j["memory"] = {
      {"efficiency_zero_delay", cfg.memory.eta0},
      {"coherence_time_s", cfg.memory.tau_c},
      {"decay_convention",
       cfg.memory.convention == DecayConvention::kHalfGaussian
           ? "half_gaussian"
           : "plain_gaussian"},
  };
  j["timing"] = {
      {"control_on_s", cfg.timing.control_on},
      {"control_off_s", cfg.timing.control_off},
      {"storage_time_s", cfg.timing.storage_time},
      {"baseline_center_s", cfg.timing.baseline_center},
      {"baseline_duration_s", cfg.timing.baseline_duration},
      {"baseline_amplitude", cfg.timing.baseline_amplitude},
      {"probe_fwhm_s", cfg.timing.probe_fwhm},
      {"probe_amplitude", cfg.timing.probe_amplitude},
      {"control_edge_fwhm_s", cfg.timing.control_edge_fwhm},
      {"retrieved_delay_s", cfg.timing.retrieved_delay},
      {"span_start_s", cfg.timing.span_start},
      {"span_end_s", cfg.timing.span_end},
  };
  j["trace"] = {
      {"sample_rate_hz", cfg.trace.sample_rate},
      {"duration_s", cfg.trace.duration},
      {"beat_frequency_hz", cfg.trace.beat_frequency},
      {"amplitude", cfg.trace.amplitude},
      {"t_start_s", cfg.trace.t_start},
  };
  j["noise"] = {
      {"laser_linewidth_hz", cfg.noise.laser_linewidth_hz},
      {"mzi_imbalance_ref_s", cfg.noise.mzi_imbalance_ref_s},
      {"mzi_imbalance_probe_s", cfg.noise.mzi_imbalance_probe_s},
      {"vibration_rms_phase_rad", cfg.noise.vibration_rms_phase},
      {"vibration_band_lo_hz", cfg.noise.vibration_band_lo_hz},
      {"vibration_band_hi_hz", cfg.noise.vibration_band_hi_hz},
      {"vibration_components", cfg.noise.vibration_components},
      {"vibration_mode",
       cfg.noise.vibration_mode == VibrationMode::kDifferential
           ? "differential"
           : "common"},
      {"retrieval_phase_jitter_rad", cfg.noise.retrieval_phase_jitter_rad},
      {"retrieval_phase_walk_rad", cfg.noise.retrieval_phase_walk_rad},
      {"additive_noise_rms", cfg.noise.additive_noise_rms},
  };
  j["extraction"] = {
      {"window_length_s", cfg.extraction.window_length_s},
      {"amplitude_floor", cfg.extraction.amplitude_floor},
  };
  j["sweep"] = {
      {"velocities_mps", cfg.sweep.velocities},
      {"storage_times_s", cfg.sweep.storage_times},
      {"scope_averages", cfg.sweep.scope_averages},
      {"runs", cfg.sweep.runs},
      {"sequence_overhead_s", cfg.sweep.sequence_overhead_s},
      {"sigma_runs", cfg.sweep.sigma_runs},
      {"averaging_counts", cfg.sweep.averaging_counts},
      {"averaging_repetitions", cfg.sweep.averaging_repetitions},
  };
  j["master_seed"] = cfg.master_seed;
  j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace slv
