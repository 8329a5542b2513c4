#pragma once

// Per-pixel complex excitation synthesis: ideal sawtooth phase profile for a
// steering target, phase-range compensation strategies, phase-correlated
// amplitude perturbation, and circular/Gaussian windowing.
//
// Stage order is fixed: ideal phase -> amplitude perturbation -> phase-limit
// compensation -> windows. Perturbation is keyed to the ideal phase and
// windows are last because normalization uses final amplitudes.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "opa/array_model.hpp"
#include "opa/common.hpp"

namespace opa {

// Row-major grid, p slow, q fast: index = (p + N_x) * size_z + (q + N_z).
// `phase` is always wrapped to [0, 2*pi). `ideal_unwrapped` carries the
// unwrapped steering phase when the grid came from ideal_phase_profile (the
// Skip strategy needs it); grids built any other way mirror `phase` there.
struct PixelGrid {
  ArraySpec spec;
  std::vector<double> amplitude;
  std::vector<double> phase;
  std::vector<double> ideal_unwrapped;

  static PixelGrid uniform(const ArraySpec& spec) {
    spec.validate();
    PixelGrid g;
    g.spec = spec;
    const std::size_t n = static_cast<std::size_t>(spec.pixel_count());
    g.amplitude.assign(n, 1.0);
    g.phase.assign(n, 0.0);
    g.ideal_unwrapped.assign(n, 0.0);
    return g;
  }

  std::size_t index(int p, int q) const {
    return static_cast<std::size_t>(p + spec.half_extent_x) * spec.size_z() +
           static_cast<std::size_t>(q + spec.half_extent_z);
  }
  double& amp(int p, int q) { return amplitude[index(p, q)]; }
  double amp(int p, int q) const { return amplitude[index(p, q)]; }
  double& psi(int p, int q) { return phase[index(p, q)]; }
  double psi(int p, int q) const { return phase[index(p, q)]; }

  void validate() const {
    spec.validate();
    const std::size_t n = static_cast<std::size_t>(spec.pixel_count());
    if (amplitude.size() != n || phase.size() != n || ideal_unwrapped.size() != n)
      throw validation_error("PixelGrid: buffer sizes do not match the array spec");
    for (double a : amplitude)
      if (!std::isfinite(a) || a < 0.0)
        throw validation_error("PixelGrid: amplitudes must be finite and >= 0");
    for (double ps : phase)
      if (!(ps >= 0.0) || !(ps < two_pi))
        throw validation_error("PixelGrid: phases must lie in [0, 2*pi)");
  }
};

enum class PhaseStrategy { ReplaceByPsiMax, ReplaceBy2Pi, ReplaceHalfHalf, Skip };

inline const char* to_string(PhaseStrategy s) {
  switch (s) {
    case PhaseStrategy::ReplaceByPsiMax: return "replace_by_psi_max";
    case PhaseStrategy::ReplaceBy2Pi: return "replace_by_2pi";
    case PhaseStrategy::ReplaceHalfHalf: return "replace_half_half";
    case PhaseStrategy::Skip: return "skip";
  }
  return "?";
}

struct PhaseLimitSpec {
  double psi_max_deg = 360.0;  // realizable phase range (0, 360]
  PhaseStrategy strategy = PhaseStrategy::ReplaceHalfHalf;

  void validate() const {
    if (!std::isfinite(psi_max_deg) || psi_max_deg <= 0.0 || psi_max_deg > 360.0)
      throw validation_error("PhaseLimitSpec: psi_max must lie in (0, 360] degrees");
  }
  double psi_max_rad() const {
    return psi_max_deg == 360.0 ? two_pi : deg_to_rad(psi_max_deg);
  }
};

// Amplitude ripple |E~| = 1 + f_p, f_p = A + B*sin(P_d * psi) with psi the
// pixel's ideal sawtooth phase in [0, 2*pi). One ripple period therefore
// spans P_d cycles of the sinusoid per long-period d, whatever d is.
struct PerturbationSpec {
  double P_d = 1.0;  // sinusoid cycles per long-period, > 0
  double A = 0.0;    // offset
  double B = 0.0;    // sinusoid amplitude, >= 0

  void validate() const {
    if (!(P_d > 0.0) || !std::isfinite(P_d))
      throw validation_error("PerturbationSpec: P_d must be finite and > 0");
    if (!(B >= 0.0) || !std::isfinite(B) || !std::isfinite(A))
      throw validation_error("PerturbationSpec: need finite A and B >= 0");
  }
};

// Extremes of sin(u) over the closed keying range u in [0, 2*pi*P_d].
inline void perturbation_sine_extremes(double P_d, double* s_min, double* s_max) {
  const double u_end = two_pi * P_d;
  double lo = std::min(0.0, std::sin(u_end));
  double hi = std::max(0.0, std::sin(u_end));
  if (P_d >= 0.25) hi = 1.0;   // u reaches pi/2
  if (P_d >= 0.75) lo = -1.0;  // u reaches 3*pi/2
  *s_min = lo;
  *s_max = hi;
}

// Amplitude extremes of the continuum profile 1 + f_p over one long-period.
inline void perturbation_amplitude_extremes(const PerturbationSpec& pert,
                                            double* amp_min, double* amp_max) {
  double s_min, s_max;
  perturbation_sine_extremes(pert.P_d, &s_min, &s_max);
  *amp_min = 1.0 + pert.A + pert.B * s_min;
  *amp_max = 1.0 + pert.A + pert.B * s_max;
}

// Peak-to-peak variation (max-min)/(max+min) of the continuum profile.
inline double measured_variation(const PerturbationSpec& pert) {
  pert.validate();
  double amp_min, amp_max;
  perturbation_amplitude_extremes(pert, &amp_min, &amp_max);
  return (amp_max - amp_min) / (amp_max + amp_min);
}

// Solve (A, B) so the ripple is centered on 1 ((max+min)/2 = 1) and reaches
// the requested variation exactly. The extremes of sin over the keying range
// are known in closed form, so no numeric search is needed; the solve
// reduces to A = 0, B = target for P_d >= 1 (full cycle covered).
// `steering` and `spec` do not enter the closed form; they stay in the
// signature for call-site symmetry with apply_amplitude_perturbation.
inline PerturbationSpec solve_perturbation_params(
    double P_d, double target_var,
    [[maybe_unused]] const SteeringSpec& steering,
    [[maybe_unused]] const ArraySpec& spec) {
  if (!(P_d > 0.0) || !std::isfinite(P_d))
    throw validation_error("solve_perturbation_params: P_d must be finite and > 0");
  if (!std::isfinite(target_var) || target_var < 0.0)
    throw validation_error("solve_perturbation_params: target_var must be >= 0");
  if (target_var >= 1.0)
    throw infeasible_error(
        "solve_perturbation_params: variation >= 1 needs a negative minimum amplitude");
  PerturbationSpec pert;
  pert.P_d = P_d;
  if (target_var == 0.0) return pert;
  double s_min, s_max;
  perturbation_sine_extremes(P_d, &s_min, &s_max);
  pert.B = 2.0 * target_var / (s_max - s_min);
  pert.A = -pert.B * (s_max + s_min) / 2.0;
  return pert;
}

struct WindowSpec {
  bool circular = false;
  std::optional<double> gaussian_sigma;  // sigma of W_g, in units of N_x

  void validate() const {
    if (gaussian_sigma &&
        (!(*gaussian_sigma > 0.0) || !std::isfinite(*gaussian_sigma)))
      throw validation_error("WindowSpec: gaussian sigma must be finite and > 0");
  }
  bool is_identity() const { return !circular && !gaussian_sigma; }
};

// Ideal sawtooth profile: psi(p, q) = mod(k*sin(theta_s) *
// (p*a_x*cos(phi_s) + q*a_z*sin(phi_s)), 2*pi), unit amplitudes. The
// unwrapped phase is kept alongside for the Skip strategy.
inline PixelGrid ideal_phase_profile(const ArraySpec& spec, const SteeringSpec& steering) {
  steering.validate();
  PixelGrid g = PixelGrid::uniform(spec);
  const double s_theta = sin_deg(steering.theta_s_deg);
  const double gx = two_pi * s_theta * spec.pitch_x * cos_deg(steering.phi_s_deg);
  const double gz = two_pi * s_theta * spec.pitch_z * sin_deg(steering.phi_s_deg);
  std::size_t i = 0;
  for (int p = -spec.half_extent_x; p <= spec.half_extent_x; ++p) {
    for (int q = -spec.half_extent_z; q <= spec.half_extent_z; ++q, ++i) {
      const double unwrapped = gx * p + gz * q;
      g.ideal_unwrapped[i] = unwrapped;
      g.phase[i] = wrap_two_pi(unwrapped);
    }
  }
  return g;
}

// Rewrite phases the hardware cannot realize (ideal phase > psi_max).
// Replace strategies touch only forbidden pixels; Skip rebuilds every phase
// as mod(unwrapped ideal phase, psi_max), shortening the sawtooth period to
// d_skip = psi_max/delta_psi pixels and thereby shifting the steering angle.
inline PixelGrid apply_phase_limit(const PixelGrid& grid, const PhaseLimitSpec& limit) {
  limit.validate();
  const double m = limit.psi_max_rad();
  PixelGrid out = grid;
  if (limit.strategy == PhaseStrategy::Skip) {
    for (std::size_t i = 0; i < out.phase.size(); ++i) {
      double r = std::fmod(grid.ideal_unwrapped[i], m);
      if (r < 0.0) r += m;
      if (r == m) r = 0.0;
      out.phase[i] = r;
    }
    return out;
  }
  for (double& ps : out.phase) {
    if (ps <= m) continue;
    switch (limit.strategy) {
      case PhaseStrategy::ReplaceByPsiMax:
        ps = m;
        break;
      case PhaseStrategy::ReplaceBy2Pi:
        ps = 0.0;  // 2*pi wrapped into range
        break;
      case PhaseStrategy::ReplaceHalfHalf:
        // Nearest endpoint of the forbidden band; midpoint ties to psi_max.
        ps = (ps - m <= two_pi - ps) ? m : 0.0;
        break;
      case PhaseStrategy::Skip:
        break;  // handled above
    }
  }
  return out;
}

// Scale amplitudes by the ripple 1 + f_p keyed to the stored ideal phase.
// On the unit-amplitude ideal grid this sets amplitude = 1 + f_p exactly.
// `steering` is unused: the keying phase already lives in the grid.
inline PixelGrid apply_amplitude_perturbation(
    const PixelGrid& grid, const PerturbationSpec& pert,
    [[maybe_unused]] const SteeringSpec& steering) {
  pert.validate();
  double amp_min, amp_max;
  perturbation_amplitude_extremes(pert, &amp_min, &amp_max);
  if (amp_min < 0.0)
    throw infeasible_error("apply_amplitude_perturbation: ripple reaches negative amplitude");
  PixelGrid out = grid;
  for (std::size_t i = 0; i < out.amplitude.size(); ++i) {
    const double f = pert.A + pert.B * std::sin(pert.P_d * grid.phase[i]);
    out.amplitude[i] = grid.amplitude[i] * (1.0 + f);
  }
  return out;
}

// Amplitude-only windows: circular mask W_c (1 inside radius N_x) times
// Gaussian taper W_g = exp(-(p^2+q^2)/(sigma*N_x)^2). N_x = 0 keeps the
// single pixel at weight 1.
inline PixelGrid apply_windows(const PixelGrid& grid, const WindowSpec& window) {
  window.validate();
  PixelGrid out = grid;
  const std::int64_t r2_max =
      static_cast<std::int64_t>(grid.spec.half_extent_x) * grid.spec.half_extent_x;
  const bool gauss = window.gaussian_sigma.has_value();
  const double denom =
      gauss ? *window.gaussian_sigma * grid.spec.half_extent_x : 0.0;
  std::size_t i = 0;
  for (int p = -grid.spec.half_extent_x; p <= grid.spec.half_extent_x; ++p) {
    for (int q = -grid.spec.half_extent_z; q <= grid.spec.half_extent_z; ++q, ++i) {
      const std::int64_t r2 =
          static_cast<std::int64_t>(p) * p + static_cast<std::int64_t>(q) * q;
      if (window.circular && r2 > r2_max) {
        out.amplitude[i] = 0.0;
        continue;
      }
      if (gauss && r2 > 0)
        out.amplitude[i] *= std::exp(-static_cast<double>(r2) / (denom * denom));
    }
  }
  return out;
}

// Sum of final pixel amplitudes; the radiation layer squares it to normalize
// intensities. Pairwise over the same row-major order the array factor uses,
// so the broadside peak of a uniform grid normalizes to exactly 1.
inline double total_amplitude(const PixelGrid& grid) {
  return pairwise_sum(grid.amplitude);
}

}  // namespace opa
