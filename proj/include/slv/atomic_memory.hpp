#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include "slv/common.hpp"

namespace slv {

/// Lambda-system working point of the vapor memory. Rabi frequencies and the
/// excited-state linewidth are angular (rad/s); the ground-state decoherence
/// rate is an ordinary frequency (Hz) because that is how it is specified
/// and how the transparency width below is reported.
struct AtomicParams {
  double probe_rabi = kTwoPi * 7.0e6;
  double control_rabi = kTwoPi * 70.0e6;
  double excited_linewidth = kTwoPi * 4.56e6;  // Cs D1 natural width
  double ground_decoherence = 20.0e3;          // Hz
  double probe_wavenumber = 7.02e6;            // rad/m

  /// Derived, kept consistent with the wavenumber by construction:
  /// wavelength * wavenumber == 2*pi.
  double probe_wavelength() const { return kTwoPi / probe_wavenumber; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("AtomicParams.") + name +
                                    ": must be finite and strictly positive");
    };
    positive(probe_rabi, "probe_rabi");
    positive(control_rabi, "control_rabi");
    positive(excited_linewidth, "excited_linewidth");
    positive(ground_decoherence, "ground_decoherence");
    positive(probe_wavenumber, "probe_wavenumber");
  }
};

enum class DecayConvention {
  kHalfGaussian,   // eta(tau) = eta0 * exp(-tau^2 / (2 tau_c^2))
  kPlainGaussian,  // eta(tau) = eta0 * exp(-(tau/tau_c)^2)
};

/// Storage decay model of the memory: zero-delay efficiency and the
/// Gaussian-like coherence decay constant.
struct MemoryResponse {
  double eta0 = 0.24;
  double tau_c = 4.5e-6;  // s
  DecayConvention convention = DecayConvention::kHalfGaussian;

  void validate() const {
    if (!(eta0 > 0.0) || eta0 > 1.0 || !std::isfinite(eta0))
      throw std::invalid_argument("MemoryResponse.eta0: must be in (0, 1]");
    if (!(tau_c > 0.0) || !std::isfinite(tau_c))
      throw std::invalid_argument(
          "MemoryResponse.tau_c: must be finite and strictly positive");
  }
};

/// Energy storage efficiency after a storage interval tau_s.
inline double storage_efficiency(double tau_s, const MemoryResponse& mem) {
  mem.validate();
  if (!(tau_s >= 0.0) || !std::isfinite(tau_s))
    throw std::domain_error("storage_efficiency: tau_s must be >= 0");
  const double x = tau_s / mem.tau_c;
  switch (mem.convention) {
    case DecayConvention::kHalfGaussian:
      return mem.eta0 * std::exp(-0.5 * x * x);
    case DecayConvention::kPlainGaussian:
      return mem.eta0 * std::exp(-x * x);
  }
  throw std::logic_error("storage_efficiency: unknown decay convention");
}

/// Power-broadened transparency full width (Hz). Standard model: twice the
/// ground-state decoherence rate plus the control-power term converted from
/// angular to ordinary frequency. Zero control power recovers the intercept
/// 2 * ground_decoherence.
inline double eit_linewidth(double control_rabi, const AtomicParams& p) {
  if (control_rabi < 0.0 || !std::isfinite(control_rabi))
    throw std::domain_error("eit_linewidth: control_rabi must be >= 0");
  if (!(p.excited_linewidth > 0.0))
    throw std::invalid_argument(
        "AtomicParams.excited_linewidth: must be strictly positive");
  if (p.ground_decoherence < 0.0)
    throw std::invalid_argument(
        "AtomicParams.ground_decoherence: must be >= 0");
  return 2.0 * p.ground_decoherence +
         control_rabi * control_rabi / p.excited_linewidth / kTwoPi;
}

/// Upper bound on the usable storage time set by ground-state decoherence.
inline double lifetime_upper_bound(double ground_decoherence_hz) {
  if (!(ground_decoherence_hz > 0.0) || !std::isfinite(ground_decoherence_hz))
    throw std::domain_error(
        "lifetime_upper_bound: ground decoherence rate must be > 0");
  return 1.0 / ground_decoherence_hz;
}

/// Spin-wave snapshot taken at control switch-off.
struct StoredExcitation {
  std::function<std::complex<double>(double)> envelope;  // complex amplitude
  double stored_phase = 0.0;                             // wrapped to (-pi, pi]
  double store_position = 0.0;                           // m, lab frame
};

/// Result of the lumped store/retrieve map.
struct RetrievedPulse {
  std::function<std::complex<double>(double)> envelope;
  double amplitude_ratio = 0.0;        // sqrt(efficiency)
  double efficiency = 0.0;
  double phase_shift = 0.0;            // unwrapped: -k_P * displacement
  double phase_shift_wrapped = 0.0;    // same, wrapped to (-pi, pi]
};

/// Store-then-retrieve as a lumped linear map: the retrieved envelope is a
/// pointwise scalar multiple sqrt(eta) of the input, and the cell moving by
/// `displacement` between write and read imprints phase -k_P * displacement.
template <typename EnvelopeFn>
RetrievedPulse store_retrieve(EnvelopeFn&& input_envelope, double tau_s,
                              double displacement, const AtomicParams& p,
                              const MemoryResponse& mem) {
  p.validate();
  if (!std::isfinite(displacement))
    throw std::domain_error("store_retrieve: displacement must be finite");
  const double eta = storage_efficiency(tau_s, mem);
  const double ratio = std::sqrt(eta);

  StoredExcitation stored{
      [env = std::function<std::complex<double>(double)>(
           std::forward<EnvelopeFn>(input_envelope))](double t) {
        return env(t);
      },
      0.0, 0.0};
  stored.stored_phase = wrap_to_pi(stored.stored_phase);

  RetrievedPulse out;
  out.efficiency = eta;
  out.amplitude_ratio = ratio;
  out.phase_shift = -p.probe_wavenumber * displacement;
  out.phase_shift_wrapped = wrap_to_pi(out.phase_shift);
  out.envelope = [ratio, base = stored.envelope](double t) {
    return ratio * base(t);
  };
  return out;
}

}  // namespace slv
