#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "slv/config_io.hpp"
#include "slv/experiment.hpp"

using namespace slv;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

// Minimal valid document; tests splice overrides into it.
std::string doc(const std::string& extra = "") {
  std::string s = "{\"schema_version\": 1";
  if (!extra.empty()) s += ", " + extra;
  return s + "}";
}

}  // namespace

TEST_CASE("default config serializes, parses and reserializes identically") {
  const ExperimentConfig defaults;
  const std::string text = serialize_experiment_config(defaults);
  const ExperimentConfig parsed = parse_experiment_config(text);
  REQUIRE(serialize_experiment_config(parsed) == text);
  REQUIRE(parsed.master_seed == defaults.master_seed);
  REQUIRE(parsed.sweep.velocities == defaults.sweep.velocities);
  REQUIRE(parsed.sweep.storage_times == defaults.sweep.storage_times);
}

TEST_CASE("a sparse config overrides only the named keys") {
  const ExperimentConfig cfg = parse_experiment_config(
      doc("\"memory\": {\"coherence_time_s\": 5.0e-6},"
          "\"noise\": {\"laser_linewidth_hz\": 0.0}"));
  const ExperimentConfig defaults;
  REQUIRE(cfg.memory.tau_c == 5.0e-6);
  REQUIRE(cfg.memory.eta0 == defaults.memory.eta0);
  REQUIRE(cfg.noise.laser_linewidth_hz == 0.0);
  REQUIRE(cfg.noise.additive_noise_rms == defaults.noise.additive_noise_rms);
  REQUIRE(cfg.timing.storage_time == defaults.timing.storage_time);
}

TEST_CASE("unknown keys are rejected with their full path") {
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"typo_section\": {}")), ConfigError,
      MessageMatches(ContainsSubstring("config.typo_section: unknown key")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"physics\": {\"probe_rabi\": 1.0}")),
      ConfigError,
      MessageMatches(ContainsSubstring("physics.probe_rabi: unknown key")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"noise\": {\"vibrations\": 3}")),
      ConfigError,
      MessageMatches(ContainsSubstring("noise.vibrations: unknown key")));
}

TEST_CASE("schema_version is mandatory and checked") {
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config("{}"), ConfigError,
      MessageMatches(
          ContainsSubstring("config.schema_version: required key is missing")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config("{\"schema_version\": 2}"), ConfigError,
      MessageMatches(ContainsSubstring("config.schema_version: expected 1")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config("{\"schema_version\": \"1\"}"), ConfigError,
      MessageMatches(ContainsSubstring("config.schema_version: expected 1")));
}

TEST_CASE("wrong value types name the field") {
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(
          doc("\"physics\": {\"probe_rabi_rad_per_s\": \"fast\"}")),
      ConfigError,
      MessageMatches(ContainsSubstring(
          "physics.probe_rabi_rad_per_s: expected a number")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"sweep\": {\"runs\": 2.5}")), ConfigError,
      MessageMatches(
          ContainsSubstring("sweep.runs: expected a non-negative integer")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"sweep\": {\"runs\": -3}")), ConfigError,
      MessageMatches(
          ContainsSubstring("sweep.runs: expected a non-negative integer")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"output_dir\": 7")), ConfigError,
      MessageMatches(ContainsSubstring("config.output_dir: expected a string")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"sweep\": {\"velocities_mps\": 0.01}")),
      ConfigError,
      MessageMatches(ContainsSubstring(
          "sweep.velocities_mps: expected an array of numbers")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(
          doc("\"sweep\": {\"averaging_counts\": [4, -2]}")),
      ConfigError,
      MessageMatches(ContainsSubstring(
          "sweep.averaging_counts: expected an array of non-negative "
          "integers")));
}

TEST_CASE("named choices list the allowed values") {
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(
          doc("\"memory\": {\"decay_convention\": \"exponential\"}")),
      ConfigError,
      MessageMatches(ContainsSubstring(
          "memory.decay_convention: unknown value \"exponential\" "
          "(allowed: half_gaussian, plain_gaussian)")));

  const ExperimentConfig cfg = parse_experiment_config(
      doc("\"memory\": {\"decay_convention\": \"plain_gaussian\"},"
          "\"noise\": {\"vibration_mode\": \"common\"}"));
  REQUIRE(cfg.memory.convention == DecayConvention::kPlainGaussian);
  REQUIRE(cfg.noise.vibration_mode == VibrationMode::kCommon);
}

TEST_CASE("master_seed accepts the full unsigned range and nothing else") {
  REQUIRE(parse_experiment_config(
              doc("\"master_seed\": 18446744073709551615"))
              .master_seed == 18446744073709551615ull);
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"master_seed\": -1")), ConfigError,
      MessageMatches(ContainsSubstring(
          "config.master_seed: expected a non-negative integer")));
}

TEST_CASE("physical validation runs after parsing") {
  // Beat above Nyquist parses fine but fails the trace cross-check.
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(
          doc("\"trace\": {\"beat_frequency_hz\": 2.0e9}")),
      ConfigError,
      MessageMatches(ContainsSubstring("trace.beat_frequency_hz")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"sweep\": {\"velocities_mps\": []}")),
      ConfigError,
      MessageMatches(ContainsSubstring("velocities: must be non-empty")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(
          doc("\"timing\": {\"storage_time_s\": -1.0e-6}")),
      ConfigError, MessageMatches(ContainsSubstring("SequenceTiming")));
}

TEST_CASE("malformed documents fail up front") {
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config("{\"schema_version\": 1"), ConfigError,
      MessageMatches(ContainsSubstring("config: not valid JSON")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config("[1, 2, 3]"), ConfigError,
      MessageMatches(ContainsSubstring("config: top level must be an object")));
  REQUIRE_THROWS_MATCHES(
      parse_experiment_config(doc("\"physics\": 42")), ConfigError,
      MessageMatches(ContainsSubstring("physics: expected an object")));
}

TEST_CASE("value arrays survive a round trip") {
  const ExperimentConfig cfg = parse_experiment_config(
      doc("\"sweep\": {\"velocities_mps\": [-0.03, 0.0, 0.03],"
          "\"storage_times_s\": [8.5e-6],"
          "\"averaging_counts\": [1, 8, 64]}"));
  REQUIRE(cfg.sweep.velocities == std::vector<double>{-0.03, 0.0, 0.03});
  REQUIRE(cfg.sweep.storage_times == std::vector<double>{8.5e-6});
  REQUIRE(cfg.sweep.averaging_counts ==
          std::vector<std::size_t>{1, 8, 64});

  const std::string echoed = serialize_experiment_config(cfg);
  const ExperimentConfig again = parse_experiment_config(echoed);
  REQUIRE(serialize_experiment_config(again) == echoed);
  REQUIRE(again.sweep.velocities == cfg.sweep.velocities);
}
