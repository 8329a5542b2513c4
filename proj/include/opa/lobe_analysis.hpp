#pragma once

// Lobe detection and bookkeeping on 1D pattern cuts: strict local maxima
// with parabolic refinement, FWHM by linear interpolation, classification of
// secondaries against the analytic grating/LPGL lattices, and the
// sidelobe-to-peak ratio (spr) that the sweep layer averages.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "opa/array_model.hpp"
#include "opa/common.hpp"
#include "opa/radiation.hpp"

namespace opa {

struct DetectedLobe {
  double angle_deg = 0.0;
  double intensity = 0.0;
};

// Strict interior local maxima (sample above both neighbors), refined by the
// 3-point parabola through the peak sample. Span endpoints are never lobes:
// a monotone skirt entering the span edge is not a maximum. Maxima below the
// floor (absolute intensity; pass a negative value for the default of 1e-8
// times the global maximum) are discarded. Result is sorted by angle.
inline std::vector<DetectedLobe> detect_lobes(const PatternCut& cut,
                                              double prominence_floor = -1.0) {
  const std::size_t n = cut.size();
  if (n < 3)
    throw validation_error("detect_lobes: cut needs at least 3 samples");
  double floor = prominence_floor;
  if (floor < 0.0) {
    const double peak = *std::max_element(cut.intensity.begin(), cut.intensity.end());
    floor = 1e-8 * peak;
  }
  std::vector<DetectedLobe> lobes;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ym = cut.intensity[i - 1], y0 = cut.intensity[i],
                 yp = cut.intensity[i + 1];
    if (!(y0 > ym) || !(y0 > yp)) continue;
    double angle = cut.theta_deg[i];
    double height = y0;
    const double curv = ym - 2.0 * y0 + yp;
    if (curv < 0.0) {
      double delta = 0.5 * (ym - yp) / curv;
      delta = std::clamp(delta, -0.5, 0.5);
      angle += delta * (cut.theta_deg[i + 1] - cut.theta_deg[i]);
      height = y0 - 0.25 * (ym - yp) * delta;
    }
    if (height >= floor) lobes.push_back({angle, height});
  }
  return lobes;
}

// Full width at half maximum of the lobe at `angle_deg`, by linear
// interpolation at half the given intensity. If only one half-power crossing
// lies inside the span the width is doubled from that side.
inline double measure_fwhm(const PatternCut& cut, double angle_deg, double intensity) {
  const std::size_t n = cut.size();
  if (n < 3) throw validation_error("measure_fwhm: cut needs at least 3 samples");
  const double res = cut.theta_deg[1] - cut.theta_deg[0];
  std::size_t i0 = static_cast<std::size_t>(std::clamp(
      std::llround((angle_deg - cut.theta_deg[0]) / res), 0ll,
      static_cast<long long>(n - 1)));
  const double half = 0.5 * intensity;

  const auto cross = [&](bool right) -> std::optional<double> {
    std::size_t i = i0;
    while (true) {
      const std::size_t next = right ? i + 1 : i - 1;
      if ((right && i + 1 >= n) || (!right && i == 0)) return std::nullopt;
      if (cut.intensity[next] <= half) {
        const double y1 = cut.intensity[i], y2 = cut.intensity[next];
        const double t = (y1 - half) / (y1 - y2);
        return cut.theta_deg[i] + t * (cut.theta_deg[next] - cut.theta_deg[i]);
      }
      i = next;
    }
  };
  const auto right = cross(true), left = cross(false);
  if (right && left) return *right - *left;
  if (right) return 2.0 * (*right - angle_deg);
  if (left) return 2.0 * (angle_deg - *left);
  throw validation_error("measure_fwhm: no half-power crossing inside the span");
}

// Linear interpolation of cut intensity at an arbitrary angle in span.
inline double sample_intensity(const PatternCut& cut, double angle_deg) {
  if (cut.size() < 2 || angle_deg < cut.theta_deg.front() ||
      angle_deg > cut.theta_deg.back())
    throw validation_error("sample_intensity: angle outside the cut span");
  const double res = cut.theta_deg[1] - cut.theta_deg[0];
  const std::size_t i = std::min(
      cut.size() - 2,
      static_cast<std::size_t>(std::max(0.0, (angle_deg - cut.theta_deg[0]) / res)));
  const double t = (angle_deg - cut.theta_deg[i]) / (cut.theta_deg[i + 1] - cut.theta_deg[i]);
  return cut.intensity[i] + t * (cut.intensity[i + 1] - cut.intensity[i]);
}

enum class LobeKind { Main, Side, Grating, Lpgl };

inline const char* to_string(LobeKind k) {
  switch (k) {
    case LobeKind::Main: return "main";
    case LobeKind::Side: return "side";
    case LobeKind::Grating: return "grating";
    case LobeKind::Lpgl: return "lpgl";
  }
  return "?";
}

struct Lobe {
  double angle_deg = 0.0;
  double intensity = 0.0;
  LobeKind kind = LobeKind::Side;
  int order = 0;  // grating m or LPGL l; 0 for Main/Side
  std::optional<double> prediction_error_deg;
};

// LPGL predictions are only meaningful while the lattice is resolvable;
// beyond this alpha the line spacing falls under any practical beamwidth.
inline constexpr int classification_alpha_cap = 64;

// Match detected lobes to the analytic predictions: the steering target
// itself (Main), grating orders m, and LPGL orders l; anything farther than
// `tolerance_deg` from every prediction stays Side. `main_index` pins which
// detected lobe is the main one when the caller already knows (there must be
// exactly one Main); otherwise the strongest lobe within tolerance of the
// target is tagged.
inline std::vector<Lobe> classify_lobes(
    const std::vector<DetectedLobe>& lobes, const SteeringSpec& steering,
    double pitch, int alpha, double tolerance_deg = 0.1,
    std::optional<std::size_t> main_index = std::nullopt) {
  steering.validate();
  if (!(tolerance_deg > 0.0))
    throw validation_error("classify_lobes: tolerance must be > 0");

  struct Prediction {
    double angle_deg;
    LobeKind kind;
    int order;
  };
  std::vector<Prediction> predictions;
  for (const auto& g : grating_lobe_directions(steering, pitch))
    predictions.push_back({g.angle_deg, LobeKind::Grating, g.order});
  if (sin_deg(steering.theta_s_deg) != 0.0 && alpha >= 1 &&
      alpha <= classification_alpha_cap) {
    for (const auto& l : lpgl_directions(steering, alpha))
      if (!l.is_main) predictions.push_back({l.angle_deg, LobeKind::Lpgl, l.order});
  }

  if (!main_index) {
    double best = -1.0;
    for (std::size_t i = 0; i < lobes.size(); ++i) {
      if (std::fabs(lobes[i].angle_deg - steering.theta_s_deg) <= tolerance_deg &&
          lobes[i].intensity > best) {
        best = lobes[i].intensity;
        main_index = i;
      }
    }
  }

  std::vector<Lobe> out;
  out.reserve(lobes.size());
  for (std::size_t i = 0; i < lobes.size(); ++i) {
    Lobe lobe;
    lobe.angle_deg = lobes[i].angle_deg;
    lobe.intensity = lobes[i].intensity;
    if (main_index && *main_index == i) {
      lobe.kind = LobeKind::Main;
      lobe.prediction_error_deg = std::fabs(lobe.angle_deg - steering.theta_s_deg);
    } else {
      const Prediction* nearest = nullptr;
      double dist = tolerance_deg;
      for (const auto& pred : predictions) {
        const double d = std::fabs(pred.angle_deg - lobe.angle_deg);
        if (d <= dist && (!nearest || d < dist)) {
          nearest = &pred;
          dist = d;
        }
      }
      if (nearest) {
        lobe.kind = nearest->kind;
        lobe.order = nearest->order;
        lobe.prediction_error_deg = dist;
      }
    }
    out.push_back(lobe);
  }
  return out;
}

struct LobeReport {
  SteeringSpec steering;
  std::vector<Lobe> lobes;  // main + secondaries outside the exclusion window
  double spr = 0.0;
  double main_angle_deg = 0.0;
  double main_intensity = 0.0;
  double main_lobe_fwhm_deg = 0.0;
  double main_lobe_angle_error_deg = 0.0;
  int excluded_scenarios = 0;  // nonzero only for averaged reports
};

struct AnalysisOptions {
  std::optional<double> pitch;       // enables grating/LPGL classification
  std::optional<int> alpha;          // LPGL lattice scale, from long_period_info
  double tolerance_deg = 0.1;        // prediction matching tolerance
  double prominence_floor = -1.0;    // forwarded to detect_lobes
  std::optional<double> fov_deg;     // restrict spr search to |angle| <= fov
};

// spr and the classified lobe list for one cut. The main lobe is the global
// detected maximum, required to land within +-exclusion of the steering
// target (otherwise the beam missed: missteer). Secondaries are the detected
// lobes outside the exclusion window; ripple shoulders inside it belong to
// the main lobe and are not secondaries.
inline LobeReport sidelobe_to_peak(const PatternCut& cut, const SteeringSpec& steering,
                                   double main_exclusion_halfwidth_deg,
                                   const AnalysisOptions& options = {}) {
  steering.validate();
  if (!(main_exclusion_halfwidth_deg > 0.0))
    throw validation_error("sidelobe_to_peak: exclusion halfwidth must be > 0");
  const auto detected = detect_lobes(cut, options.prominence_floor);
  if (detected.empty())
    throw missteer_error("sidelobe_to_peak: no lobes detected in the cut");

  std::size_t main_i = 0;
  for (std::size_t i = 1; i < detected.size(); ++i)
    if (detected[i].intensity > detected[main_i].intensity) main_i = i;
  const double angle_error =
      std::fabs(detected[main_i].angle_deg - steering.theta_s_deg);
  if (angle_error > main_exclusion_halfwidth_deg)
    throw missteer_error("sidelobe_to_peak: global maximum at " +
                         std::to_string(detected[main_i].angle_deg) +
                         " deg is outside the main-lobe window around " +
                         std::to_string(steering.theta_s_deg) + " deg");

  LobeReport report;
  report.steering = steering;
  report.main_angle_deg = detected[main_i].angle_deg;
  report.main_intensity = detected[main_i].intensity;
  report.main_lobe_angle_error_deg = angle_error;
  report.main_lobe_fwhm_deg =
      measure_fwhm(cut, detected[main_i].angle_deg, detected[main_i].intensity);

  std::vector<DetectedLobe> kept;
  std::optional<std::size_t> kept_main;
  double best_secondary = 0.0;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    if (i == main_i) {
      kept_main = kept.size();
      kept.push_back(detected[i]);
      continue;
    }
    if (std::fabs(detected[i].angle_deg - steering.theta_s_deg) <=
        main_exclusion_halfwidth_deg)
      continue;
    if (options.fov_deg && std::fabs(detected[i].angle_deg) > *options.fov_deg)
      continue;
    kept.push_back(detected[i]);
    best_secondary = std::max(best_secondary, detected[i].intensity);
  }
  report.spr = best_secondary / report.main_intensity;

  if (options.pitch) {
    report.lobes = classify_lobes(kept, steering, *options.pitch,
                                  options.alpha.value_or(1),
                                  options.tolerance_deg, kept_main);
  } else {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      Lobe lobe;
      lobe.angle_deg = kept[i].angle_deg;
      lobe.intensity = kept[i].intensity;
      lobe.kind = kept_main && *kept_main == i ? LobeKind::Main : LobeKind::Side;
      report.lobes.push_back(lobe);
    }
  }
  return report;
}

struct AverageSpr {
  double avg_spr = 0.0;
  int included = 0;
  int excluded = 0;  // missteered or infeasible scenarios
};

// Mean spr over evaluated scenarios in their given (plan) order; entries
// without a value are the excluded-and-flagged failures the contract calls
// for. The order-fixed running mean keeps the result deterministic.
inline AverageSpr average_spr_of(const std::vector<std::optional<double>>& sprs) {
  AverageSpr out;
  double sum = 0.0;
  for (const auto& s : sprs) {
    if (s) {
      sum += *s;
      ++out.included;
    } else {
      ++out.excluded;
    }
  }
  if (out.included == 0)
    throw validation_error("average_spr: no scenario produced a valid spr");
  out.avg_spr = sum / out.included;
  return out;
}

}  // namespace opa
