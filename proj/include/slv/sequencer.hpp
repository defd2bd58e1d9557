#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "slv/common.hpp"

namespace slv {

enum class Channel : std::uint8_t {
  kReference = 0,
  kProbe = 1,
  kControl = 2,
};

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::kReference: return "reference";
    case Channel::kProbe: return "probe";
    case Channel::kControl: return "control";
  }
  return "unknown";
}

enum class PulseShapeKind {
  kSquare,
  kGaussian,
  kHalfGaussianEdge,
};

/// Gaussian sigma for a given full width at half maximum.
inline double sigma_from_fwhm(double fwhm) {
  return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

/// One analytic pulse element.
///  - kSquare: plateau of `width` duration centered on `center`; the edges
///    are short half-Gaussians (edge_fwhm) whose 50% points sit exactly on
///    the nominal edges, so the envelope stays continuous.
///  - kGaussian: FWHM = width, peak at `center`.
///  - kHalfGaussianEdge: monotone step with its 50% point at `center`;
///    `width` is the FWHM of the corresponding full Gaussian and
///    `direction` = +1 rises toward +t, -1 falls toward +t.
struct PulseShape {
  PulseShapeKind kind = PulseShapeKind::kGaussian;
  double center = 0.0;
  double width = 0.0;
  double amplitude = 1.0;
  double edge_fwhm = 1.0e-8;  // square-pulse edge softening
  int direction = +1;         // half-Gaussian edges only

  void validate() const {
    if (!(width > 0.0) || !std::isfinite(width))
      throw std::invalid_argument("PulseShape.width: must be > 0");
    if (!std::isfinite(center) || !std::isfinite(amplitude))
      throw std::invalid_argument("PulseShape: center/amplitude must be finite");
    if (kind == PulseShapeKind::kSquare && !(edge_fwhm > 0.0))
      throw std::invalid_argument("PulseShape.edge_fwhm: must be > 0");
  }

  /// Support outside of which eval() is identically zero. Gaussian tails are
  /// kept to 8 sigma so truncation sits below 1e-14 of the pulse energy.
  double support_lo() const {
    switch (kind) {
      case PulseShapeKind::kSquare:
        return center - 0.5 * width - 4.0 * edge_fwhm;
      case PulseShapeKind::kGaussian:
        return center - 8.0 * sigma_from_fwhm(width);
      case PulseShapeKind::kHalfGaussianEdge:
        return direction > 0 ? center - 8.0 * sigma_from_fwhm(width)
                             : center;
    }
    return center;
  }
  double support_hi() const {
    switch (kind) {
      case PulseShapeKind::kSquare:
        return center + 0.5 * width + 4.0 * edge_fwhm;
      case PulseShapeKind::kGaussian:
        return center + 8.0 * sigma_from_fwhm(width);
      case PulseShapeKind::kHalfGaussianEdge:
        return direction > 0 ? center
                             : center + 8.0 * sigma_from_fwhm(width);
    }
    return center;
  }

  double eval(double t) const {
    switch (kind) {
      case PulseShapeKind::kSquare: {
        if (t < support_lo() || t > support_hi()) return 0.0;
        const double h = 0.5 * edge_fwhm;
        const double se = sigma_from_fwhm(edge_fwhm);
        const double lo = center - 0.5 * width;  // 50% points
        const double hi = center + 0.5 * width;
        double rise = 1.0, fall = 1.0;
        if (t < lo + h) {
          const double u = (t - (lo + h)) / se;
          rise = std::exp(-0.5 * u * u);
        }
        if (t > hi - h) {
          const double u = (t - (hi - h)) / se;
          fall = std::exp(-0.5 * u * u);
        }
        return amplitude * std::min(rise, fall);
      }
      case PulseShapeKind::kGaussian: {
        const double s = sigma_from_fwhm(width);
        const double u = (t - center) / s;
        if (std::abs(u) > 8.0) return 0.0;
        return amplitude * std::exp(-0.5 * u * u);
      }
      case PulseShapeKind::kHalfGaussianEdge: {
        const double s = sigma_from_fwhm(width);
        const double h = 0.5 * width;
        // Plateau side of the step.
        if (direction > 0 && t >= center + h) return amplitude;
        if (direction < 0 && t <= center - h) return amplitude;
        const double anchor = direction > 0 ? center + h : center - h;
        const double u = (t - anchor) / s;
        if (std::abs(u) > 8.0) return 0.0;
        return amplitude * std::exp(-0.5 * u * u);
      }
    }
    return 0.0;
  }
};

/// Timing plan of one store/retrieve sequence. t = 0 is control switch-off.
struct SequenceTiming {
  double control_on = -5.0e-6;
  double control_off = 0.0;
  double storage_time = 8.5e-6;
  double baseline_center = -6.0e-6;
  double baseline_duration = 0.5e-6;
  double baseline_amplitude = 1.0;
  double probe_fwhm = 2.0e-6;
  double probe_amplitude = 1.0;
  double control_edge_fwhm = 200.0e-9;
  // The retrieved pulse peaks after the retrieval marker by roughly the
  // control edge plus half the pulse width.
  double retrieved_delay = 1.2e-6;
  double span_start = -8.0e-6;
  double span_end = 12.0e-6;

  double retrieval_on() const { return control_off + storage_time; }

  void validate() const {
    auto fail = [](const std::string& relation) {
      throw std::invalid_argument("SequenceTiming: violated relation: " +
                                  relation);
    };
    for (double v : {control_on, control_off, storage_time, baseline_center,
                     baseline_duration, probe_fwhm, control_edge_fwhm,
                     retrieved_delay, span_start, span_end,
                     baseline_amplitude, probe_amplitude})
      if (!std::isfinite(v)) fail("all timing fields finite");
    if (!(storage_time > 0.0)) fail("storage_time > 0");
    if (!(control_on < control_off)) fail("control_on < control_off");
    if (!(control_off - control_on > control_edge_fwhm))
      fail("control_off - control_on > control_edge_fwhm");
    if (!(control_off < retrieval_on())) fail("control_off < retrieval_on");
    if (!(baseline_center < control_on)) fail("baseline_center < control_on");
    if (!(baseline_center + 0.5 * baseline_duration <= control_on))
      fail("baseline pulse must end no later than control_on");
    if (!(baseline_duration > 0.0)) fail("baseline_duration > 0");
    if (!(probe_fwhm > 0.0)) fail("probe_fwhm > 0");
    if (!(control_edge_fwhm > 0.0)) fail("control_edge_fwhm > 0");
    if (!(retrieved_delay >= 0.0)) fail("retrieved_delay >= 0");
    if (!(span_start < baseline_center - 0.5 * baseline_duration))
      fail("span_start < baseline pulse start");
    if (!(retrieval_on() + retrieved_delay + probe_fwhm <= span_end))
      fail("span_end must cover the retrieved pulse "
           "(retrieval_on + retrieved_delay + probe_fwhm <= span_end)");
  }
};

struct SequenceMarkers {
  double baseline_center = 0.0;
  double probe_center = 0.0;
  double switch_off = 0.0;
  double retrieval = 0.0;
  double retrieved_peak = 0.0;
};

/// Compiled sequence: pulse elements, control edges and derived markers.
struct SequenceProgram {
  SequenceTiming timing;
  PulseShape baseline_pulse;
  PulseShape input_pulse;
  PulseShape retrieved_pulse_unit;  // unit-efficiency placeholder
  PulseShape control_on_edge;
  PulseShape control_off_edge;
  PulseShape control_retrieval_edge;
  SequenceMarkers markers;

  bool in_span(double t) const {
    return t >= timing.span_start && t <= timing.span_end;
  }

  double control_envelope(double t) const {
    if (!in_span(t)) return 0.0;
    const double first =
        std::min(control_on_edge.eval(t), control_off_edge.eval(t));
    return std::max(first, control_retrieval_edge.eval(t));
  }

  /// Input-side probe light: baseline pulse plus the storage pulse.
  double probe_input_envelope(double t) const {
    if (!in_span(t)) return 0.0;
    return baseline_pulse.eval(t) + input_pulse.eval(t);
  }

  /// Retrieved-pulse shape at unit efficiency.
  double retrieved_envelope_unit(double t) const {
    if (!in_span(t)) return 0.0;
    return retrieved_pulse_unit.eval(t);
  }

  double probe_envelope(double t) const {
    if (!in_span(t)) return 0.0;
    return probe_input_envelope(t) + retrieved_envelope_unit(t);
  }
};

inline SequenceProgram build_sequence(const SequenceTiming& timing) {
  timing.validate();
  SequenceProgram p;
  p.timing = timing;

  p.baseline_pulse = PulseShape{PulseShapeKind::kSquare,
                                timing.baseline_center,
                                timing.baseline_duration,
                                timing.baseline_amplitude};
  p.input_pulse = PulseShape{PulseShapeKind::kGaussian, timing.control_off,
                             timing.probe_fwhm, timing.probe_amplitude};
  const double retrieved_center = timing.retrieval_on() + timing.retrieved_delay;
  p.retrieved_pulse_unit = PulseShape{PulseShapeKind::kGaussian,
                                      retrieved_center, timing.probe_fwhm,
                                      timing.probe_amplitude};

  p.control_on_edge =
      PulseShape{PulseShapeKind::kHalfGaussianEdge, timing.control_on,
                 timing.control_edge_fwhm, 1.0, 1.0e-8, +1};
  p.control_off_edge =
      PulseShape{PulseShapeKind::kHalfGaussianEdge, timing.control_off,
                 timing.control_edge_fwhm, 1.0, 1.0e-8, -1};
  p.control_retrieval_edge =
      PulseShape{PulseShapeKind::kHalfGaussianEdge, timing.retrieval_on(),
                 timing.control_edge_fwhm, 1.0, 1.0e-8, +1};

  p.markers = SequenceMarkers{timing.baseline_center, timing.control_off,
                              timing.control_off, timing.retrieval_on(),
                              retrieved_center};
  return p;
}

/// Deterministic envelope lookup for the sequenced beams.
inline double envelope_at(const SequenceProgram& program, Channel channel,
                          double t) {
  switch (channel) {
    case Channel::kProbe:
      return program.probe_envelope(t);
    case Channel::kControl:
      return program.control_envelope(t);
    case Channel::kReference:
      break;
  }
  throw std::invalid_argument(
      "envelope_at: channel must be kProbe or kControl");
}

}  // namespace slv
