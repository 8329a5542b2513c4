#pragma once

// Analytic layer: steering-law conversions, long-period (sawtooth)
// arithmetic, and closed-form lobe-direction predictions. Everything here is
// a pure function of small value types; no grids are touched.
//
// Conventions: the array lives in the xz-plane on a (2N_x+1)x(2N_z+1) lattice
// with pitches in units of the wavelength (lambda = 1, k = 2*pi). Steering is
// given by a polar angle theta_s from broadside and an in-plane azimuth phi_s
// measured from the x-axis.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "opa/common.hpp"

namespace opa {

struct ArraySpec {
  int half_extent_x = 100;  // N_x; indices p run -N_x..N_x
  int half_extent_z = 100;  // N_z; indices q run -N_z..N_z
  double pitch_x = 0.5;     // a_x, lambda units
  double pitch_z = 0.5;     // a_z, lambda units

  int size_x() const { return 2 * half_extent_x + 1; }
  int size_z() const { return 2 * half_extent_z + 1; }
  std::int64_t pixel_count() const {
    return static_cast<std::int64_t>(size_x()) * size_z();
  }

  void validate() const {
    if (half_extent_x < 0 || half_extent_z < 0)
      throw validation_error("ArraySpec: half extents must be >= 0");
    if (!(pitch_x > 0.0) || !std::isfinite(pitch_x) ||
        !(pitch_z > 0.0) || !std::isfinite(pitch_z))
      throw validation_error("ArraySpec: pitches must be finite and > 0");
  }
};

struct SteeringSpec {
  double theta_s_deg = 0.0;  // angle from broadside, within the steering plane
  double phi_s_deg = 0.0;    // steering-plane azimuth from the x-axis

  void validate() const {
    if (!std::isfinite(theta_s_deg) || std::fabs(theta_s_deg) > 90.0)
      throw validation_error("SteeringSpec: |theta_s| must be <= 90 degrees");
    if (!std::isfinite(phi_s_deg) || phi_s_deg < 0.0 || phi_s_deg >= 180.0)
      throw validation_error("SteeringSpec: phi_s must lie in [0, 180) degrees");
  }
};

// Sawtooth descriptor along the steering direction.
struct LongPeriodInfo {
  double M = 0.0;          // pixels per 2*pi sawtooth period
  double d = 0.0;          // long-period, lambda units; d = M * pitch
  int alpha = 1;           // smallest q with q*M integral within tolerance
  double delta_psi = 0.0;  // per-pixel phase step 2*pi/M, radians
  bool quasi_periodic = false;  // alpha search hit the cap; alpha is the cap
};

inline constexpr int alpha_cap = 1000;
inline constexpr double alpha_tolerance = 1e-6;

// Smallest q <= alpha_cap with |q*M - round(q*M)| < alpha_tolerance * q.
// Direct scan; the cap bounds the work and flags quasi-periodic profiles.
inline int rationalize_alpha(double M, bool* hit_cap = nullptr) {
  for (int q = 1; q <= alpha_cap; ++q) {
    const double r = q * M;
    if (std::fabs(r - std::round(r)) < alpha_tolerance * q) {
      if (hit_cap) *hit_cap = false;
      return q;
    }
  }
  if (hit_cap) *hit_cap = true;
  return alpha_cap;
}

// theta_s from the pixels-per-period count: sin(theta_s) = 1/(pitch*M).
// Positive steering only; callers negate for left steering.
inline double steering_from_M(double M, double pitch) {
  if (!(M > 1.0) || !std::isfinite(M))
    throw domain_error("steering_from_M: M must be finite and > 1");
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    throw domain_error("steering_from_M: pitch must be finite and > 0");
  const double s = 1.0 / (pitch * M);
  if (s > 1.0)
    throw domain_error("steering_from_M: pitch*M < 1 gives no real steering angle");
  if (s == 1.0) return 90.0;
  return rad_to_deg(std::asin(s));
}

inline LongPeriodInfo long_period_info(const SteeringSpec& steering, double pitch) {
  steering.validate();
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    throw domain_error("long_period_info: pitch must be finite and > 0");
  const double s = std::fabs(sin_deg(steering.theta_s_deg));
  if (s == 0.0)
    throw degenerate_steering_error(
        "long_period_info: broadside steering has an infinite long-period");
  LongPeriodInfo info;
  info.d = 1.0 / s;
  info.M = info.d / pitch;
  if (!(info.M > 1.0))
    throw domain_error("long_period_info: pitch exceeds the long-period (M <= 1)");
  info.delta_psi = two_pi / info.M;
  info.alpha = rationalize_alpha(info.M, &info.quasi_periodic);
  return info;
}

// Largest pitch with a grating-lobe-free field of view +-theta_s_max.
inline double max_pitch(double theta_s_max_deg) {
  if (!std::isfinite(theta_s_max_deg) || theta_s_max_deg <= 0.0 ||
      theta_s_max_deg > 90.0)
    throw domain_error("max_pitch: theta_s_max must lie in (0, 90] degrees");
  return 1.0 / (2.0 * sin_deg(theta_s_max_deg));
}

struct GratingLobe {
  int order = 0;  // m != 0
  double angle_deg = 0.0;
};

// All visible grating orders: sin(theta_m) = sin(theta_s) + m/pitch, |.| <= 1.
inline std::vector<GratingLobe> grating_lobe_directions(
    const SteeringSpec& steering, double pitch) {
  steering.validate();
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    throw domain_error("grating_lobe_directions: pitch must be finite and > 0");
  const double s0 = sin_deg(steering.theta_s_deg);
  const int m_span = static_cast<int>(std::ceil((1.0 + std::fabs(s0)) * pitch)) + 1;
  std::vector<GratingLobe> lobes;
  for (int m = -m_span; m <= m_span; ++m) {
    if (m == 0) continue;
    const double s = s0 + m / pitch;
    if (std::fabs(s) > 1.0) continue;
    lobes.push_back({m, s == 1.0 ? 90.0 : s == -1.0 ? -90.0 : rad_to_deg(std::asin(s))});
  }
  // m ascending already orders angles ascending (s is increasing in m).
  return lobes;
}

struct LpglLobe {
  int order = 0;  // l in [-l_max, l_max]; l = alpha is the main lobe
  double angle_deg = 0.0;
  bool is_main = false;
};

// Long-period grating lobes: sin(theta_l) = (l/alpha) * sin(theta_s) for
// l in [-l_max, l_max], l_max = int(alpha/|sin(theta_s)|). The entry l =
// alpha reproduces the main lobe and is flagged; the 2*l_max non-main
// entries include l = 0 (broadside) and negative orders.
inline std::vector<LpglLobe> lpgl_directions(const SteeringSpec& steering, int alpha) {
  steering.validate();
  if (alpha < 1) throw domain_error("lpgl_directions: alpha must be a positive integer");
  const double s0 = sin_deg(steering.theta_s_deg);
  if (s0 == 0.0)
    throw degenerate_steering_error("lpgl_directions: broadside has no LPGL lattice");
  const int l_max = static_cast<int>(alpha / std::fabs(s0));
  std::vector<LpglLobe> lobes;
  lobes.reserve(2 * l_max + 1);
  for (int l = -l_max; l <= l_max; ++l) {
    const double s = (static_cast<double>(l) / alpha) * s0;
    const double angle =
        s == 1.0 ? 90.0 : s == -1.0 ? -90.0 : rad_to_deg(std::asin(s));
    lobes.push_back({l, angle, l == alpha});
  }
  return lobes;
}

// Minimum realizable phase range for ideal steering at integer M:
// psi_max >= 360 * M / (M + 1) keeps every sampled sawtooth phase reachable.
inline double min_phase_range_for_ideal(int M) {
  if (M < 1) throw domain_error("min_phase_range_for_ideal: M must be >= 1");
  return 360.0 * M / (M + 1.0);
}

}  // namespace opa
