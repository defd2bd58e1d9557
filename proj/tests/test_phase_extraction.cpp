#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "slv/phase_extraction.hpp"
#include "slv/rng.hpp"
#include "slv/signal_synthesis.hpp"

using namespace slv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Fills a trace with A*cos(2*pi*f*(t - t_start) + phi) + c.
Trace synth_beat(const TraceConfig& tc, double amplitude, double phase,
                 double offset) {
  Trace t{tc, Channel::kReference, std::vector<double>(tc.sample_count())};
  const double w = kTwoPi * tc.beat_frequency;
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    const double u = static_cast<double>(i) * tc.dt();
    t.samples[i] = amplitude * std::cos(w * u + phase) + offset;
  }
  return t;
}

}  // namespace

TEST_CASE("angle wrapping") {
  REQUIRE_THAT(wrap_to_pi(-5.967), WithinRel(0.3161853071795866, 1e-13));
  REQUIRE_THAT(wrap_to_pi(0.1), WithinAbs(0.1, 1e-15));
  REQUIRE_THAT(wrap_to_pi(kTwoPi + 0.1), WithinAbs(0.1, 1e-12));
  // unwrap_near moves by whole turns onto the branch nearest the reference.
  REQUIRE_THAT(unwrap_near(0.1, kTwoPi), WithinAbs(kTwoPi + 0.1, 1e-12));
  REQUIRE_THAT(unwrap_near(0.1, -kTwoPi), WithinAbs(0.1 - kTwoPi, 1e-12));
  REQUIRE_THAT(unwrap_near(0.1, 0.0), WithinAbs(0.1, 1e-15));
}

TEST_CASE("noiseless window fit recovers phase, amplitude and offset") {
  TraceConfig tc;
  GaussianStream rng(321);

  for (int trial = 0; trial < 200; ++trial) {
    const double phase = wrap_to_pi((2.0 * rng.uniform() - 1.0) * M_PI);
    const double amplitude = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    const double offset = (2.0 * rng.uniform() - 1.0) * amplitude;
    const Trace t = synth_beat(tc, amplitude, phase, offset);

    const DemodWindow win{-6.0e-6, 20.0e-9, tc.beat_frequency, 1e-12};
    const SinusoidFit fit = extract_phase(t, win);

    // The fit reports phase at the window center; rebase to t_start.
    const double expect =
        wrap_to_pi(phase + kTwoPi * tc.beat_frequency *
                               (fit.t_reference - tc.t_start));
    REQUIRE_THAT(wrap_to_pi(fit.phase - expect), WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(fit.amplitude, WithinRel(amplitude, 1e-9));
    REQUIRE_THAT(fit.offset, WithinAbs(offset, 1e-9 * amplitude));
  }
}

TEST_CASE("white-noise phase scatter sits at the analytic floor") {
  TraceConfig tc;
  const double amplitude = 1.0;
  const double sigma = 0.05;
  const DemodWindow win{-6.0e-6, 20.0e-9, tc.beat_frequency, 1e-6};

  const SampleRange span = window_sample_range(tc, win.center_s, win.length_s);
  const double t_ref =
      tc.t_start + (span.first + span.count / 2) * tc.dt();
  const double base = wrap_to_pi(
      0.3 + kTwoPi * tc.beat_frequency * (t_ref - tc.t_start));
  const double crb = phase_fit_crb(span.count, tc.dt(), tc.beat_frequency,
                                   amplitude, sigma, base);

  GaussianStream noise_rng(777);
  double acc = 0.0;
  const std::size_t trials = 3000;
  Trace t = synth_beat(tc, amplitude, 0.3, 0.0);
  const std::vector<double> clean = t.samples;
  for (std::size_t k = 0; k < trials; ++k) {
    for (std::size_t i = span.first; i < span.first + span.count; ++i)
      t.samples[i] = clean[i] + sigma * noise_rng();
    const SinusoidFit fit = extract_phase(t, win);
    const double err = wrap_to_pi(fit.phase - base);
    acc += err * err;
  }
  const double measured = std::sqrt(acc / trials);
  REQUIRE_THAT(measured * measured, WithinRel(crb * crb, 0.20));
}

TEST_CASE("envelope-matched fit is exact on a shaped pulse") {
  TraceConfig tc;
  const double w = kTwoPi * tc.beat_frequency;
  const double center = -6.0e-6;
  const double phase = 1.234;

  // Gaussian envelope comparable to the retrieved pulse.
  const double sig = 8.49321800288019e-7;
  Trace t{tc, Channel::kProbe, std::vector<double>(tc.sample_count(), 0.0)};
  std::vector<double> env(t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    const double u = static_cast<double>(i) * tc.dt();
    const double x = (tc.t_start + u - center) / sig;
    env[i] = 0.2 * std::exp(-0.5 * x * x);
    t.samples[i] = env[i] * std::cos(w * u + phase);
  }

  const SampleRange span = window_sample_range(tc, center, 20.0e-9);
  const SinusoidFit fit = fit_beat_phase(t.samples.data() + span.first, span,
                                         tc, tc.beat_frequency, 1e-9,
                                         env.data() + span.first);
  const double expect = wrap_to_pi(
      phase + w * (fit.t_reference - tc.t_start));
  REQUIRE_THAT(wrap_to_pi(fit.phase - expect), WithinAbs(0.0, 1e-12));
  // Amplitude refers to the envelope peak inside the window.
  REQUIRE_THAT(fit.amplitude, WithinRel(0.2, 1e-9));
}

TEST_CASE("dark window trips the low-signal guard") {
  TraceConfig tc;
  const Trace t = synth_beat(tc, 1e-6, 0.0, 0.0);
  const DemodWindow win{-6.0e-6, 20.0e-9, tc.beat_frequency, 1e-4};
  REQUIRE_THROWS_MATCHES(
      extract_phase(t, win), LowSignalError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("below floor")));
}

TEST_CASE("windows are odd, centered and bounded") {
  TraceConfig tc;
  const SampleRange span = window_sample_range(tc, -6.0e-6, 20.0e-9);
  REQUIRE(span.count % 2 == 1);
  REQUIRE(span.count >= 5);
  const double t_center =
      tc.t_start + (span.first + span.count / 2) * tc.dt();
  REQUIRE_THAT(t_center, WithinAbs(-6.0e-6, tc.dt()));

  REQUIRE_THROWS_AS(window_sample_range(tc, tc.t_start - 1e-6, 20.0e-9),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(window_sample_range(tc, -6.0e-6, 0.5 * tc.dt()),
                    std::invalid_argument);
}

TEST_CASE("pair difference rejects mismatched regime tags") {
  PhaseMeasurement rest;
  rest.regime = ShotRegime::kRest;
  PhaseMeasurement motion;
  motion.regime = ShotRegime::kMotion;
  motion.dphi_p = -0.5;

  REQUIRE_THAT(translation_phase(motion, rest), WithinAbs(-0.5, 1e-15));
  REQUIRE_THROWS_AS(translation_phase(rest, motion), std::invalid_argument);
  REQUIRE_THROWS_AS(translation_phase(motion, motion), std::invalid_argument);

  PhaseMeasurement other_program = rest;
  other_program.probe_baseline.t_reference = 1.0;
  REQUIRE_THROWS_AS(translation_phase(motion, other_program),
                    std::invalid_argument);
}

TEST_CASE("translation phase continuity unwraps toward the reference") {
  PhaseMeasurement rest;
  rest.regime = ShotRegime::kRest;
  PhaseMeasurement motion;
  motion.regime = ShotRegime::kMotion;
  motion.dphi_p = 3.0;
  // Raw difference 3.0 wraps to -3.28..; near a running value of 3.1 it
  // should stay on the positive branch.
  REQUIRE_THAT(translation_phase(motion, rest, 3.1), WithinAbs(3.0, 1e-12));
  rest.dphi_p = 0.5;
  REQUIRE_THAT(translation_phase(motion, rest, 2.6), WithinAbs(2.5, 1e-12));
}

TEST_CASE("velocity readout from the translation phase") {
  // One full turn at 8.5 us: 2*pi / (7.02e6 * 8.5e-6) m/s.
  const VelocityEstimate v = velocity_from_phase(-kTwoPi, 7.02e6, 8.5e-6);
  REQUIRE_THAT(v.velocity_mps, WithinRel(0.1052988990645146, 1e-13));
  REQUIRE_THAT(v.displacement_m, WithinRel(v.velocity_mps * 8.5e-6, 1e-13));

  const VelocityEstimate z = velocity_from_phase(0.0, 7.02e6, 8.5e-6);
  REQUIRE(z.velocity_mps == 0.0);

  REQUIRE_THROWS_AS(velocity_from_phase(1.0, 0.0, 8.5e-6), std::domain_error);
  REQUIRE_THROWS_AS(velocity_from_phase(1.0, 7.02e6, 0.0), std::domain_error);
}

TEST_CASE("phase fit reports the beat cycle coverage") {
  TraceConfig tc;
  const Trace t = synth_beat(tc, 1.0, 0.0, 0.0);
  // 20 ns at 80 MHz is 1.6 cycles: fine.
  const SinusoidFit ok =
      extract_phase(t, {-6.0e-6, 20.0e-9, tc.beat_frequency, 1e-6});
  REQUIRE_FALSE(ok.low_cycle_warning);
  // 10 ns is 0.8 cycles: flagged but still fit.
  const SinusoidFit tight =
      extract_phase(t, {-6.0e-6, 10.0e-9, tc.beat_frequency, 1e-6});
  REQUIRE(tight.low_cycle_warning);
}
