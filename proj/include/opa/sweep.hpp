#pragma once

// Scenario pipeline and declarative parameter sweeps. A Scenario bundles
// everything one evaluation needs (array, steering, window, phase limit,
// perturbation, element, cut sampling); expand_plan builds the Cartesian
// product over named axes; run_sweep executes scenarios independently with
// per-scenario failure isolation and bitwise worker-count invariance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "opa/array_model.hpp"
#include "opa/common.hpp"
#include "opa/excitation.hpp"
#include "opa/lobe_analysis.hpp"
#include "opa/radiation.hpp"

namespace opa {

struct PerturbationTarget {
  double P_d = 0.01;       // ripple cycles per long-period
  double target_var = 0.0; // requested |E~|_var

  void validate() const {
    if (!(P_d > 0.0) || !std::isfinite(P_d))
      throw validation_error("PerturbationTarget: P_d must be finite and > 0");
    if (!std::isfinite(target_var) || target_var < 0.0)
      throw validation_error("PerturbationTarget: target_var must be >= 0");
    // target_var >= 1 is left to the solver, which reports it as infeasible;
    // sweeps record that as a per-scenario status instead of failing upfront.
  }
};

struct Scenario {
  std::string id;
  ArraySpec array;
  SteeringSpec steering;
  WindowSpec window{true, 0.5};  // circular + Gaussian sigma = 0.5
  PhaseLimitSpec phase_limit;
  std::optional<PerturbationTarget> perturbation;
  ElementPattern element = ElementPattern::dipole_z();
  double cut_resolution_deg = 0.01;
  double cut_lo_deg = -90.0;
  double cut_hi_deg = 90.0;

  CutSpec cut_spec() const {
    return {steering.phi_s_deg, cut_resolution_deg, cut_lo_deg, cut_hi_deg};
  }

  void validate() const {
    array.validate();
    steering.validate();
    window.validate();
    phase_limit.validate();
    if (perturbation) perturbation->validate();
    element.validate();
    cut_spec().validate();
  }
};

// The unperturbed, unlimited reference cut must put its strongest lobe on
// the steering target; otherwise the scenario geometry itself cannot steer
// there (e.g. endfire, where the beam peak sits on the span boundary) and
// the scenario is excluded as a missteer.
inline constexpr double reference_missteer_tolerance_deg = 0.5;

struct EvaluateOptions {
  bool keep_cut = false;
  double exclusion_scale = 3.0;            // exclusion = scale * reference FWHM
  std::optional<double> exclusion_deg;     // absolute override
  std::optional<double> fov_deg;           // restrict spr search
  double tolerance_deg = 0.1;              // classification match tolerance
  double prominence_floor = -1.0;          // detect_lobes floor
  unsigned workers = 1;                    // angle-level parallelism
};

struct ScenarioOutcome {
  LobeReport report;
  double reference_fwhm_deg = 0.0;
  double exclusion_deg = 0.0;
  std::optional<PatternCut> cut;            // kept on request
  std::optional<PatternCut> reference_cut;  // kept on request
};

// Grid synthesis for a scenario: ideal phase -> amplitude perturbation ->
// phase-limit compensation -> windows.
inline PixelGrid build_grid(const Scenario& s) {
  PixelGrid grid = ideal_phase_profile(s.array, s.steering);
  if (s.perturbation && s.perturbation->target_var > 0.0) {
    const auto pert = solve_perturbation_params(
        s.perturbation->P_d, s.perturbation->target_var, s.steering, s.array);
    grid = apply_amplitude_perturbation(grid, pert, s.steering);
  }
  grid = apply_phase_limit(grid, s.phase_limit);
  grid = apply_windows(grid, s.window);
  return grid;
}

// Ideal-phase, windowed-only companion grid used for the reference cut.
inline PixelGrid build_reference_grid(const Scenario& s) {
  return apply_windows(ideal_phase_profile(s.array, s.steering), s.window);
}

// Full pipeline for one scenario: reference cut (main-lobe validation and
// FWHM-scaled exclusion window), scenario cut, then spr analysis with
// classification against the grating/LPGL lattices of the cut axis.
// Throws missteer_error or infeasible_error; anything else means the
// scenario violated a precondition and should have failed validation.
inline ScenarioOutcome evaluate_scenario(const Scenario& s,
                                         const EvaluateOptions& options = {}) {
  s.validate();
  const CutSpec cut_spec = s.cut_spec();

  const PatternCut reference =
      compute_cut(build_reference_grid(s), s.element, cut_spec, options.workers);
  const auto ref_lobes = detect_lobes(reference, options.prominence_floor);
  if (ref_lobes.empty())
    throw missteer_error("evaluate_scenario: reference cut has no detectable lobes");
  std::size_t ref_main = 0;
  for (std::size_t i = 1; i < ref_lobes.size(); ++i)
    if (ref_lobes[i].intensity > ref_lobes[ref_main].intensity) ref_main = i;
  if (std::fabs(ref_lobes[ref_main].angle_deg - s.steering.theta_s_deg) >
      reference_missteer_tolerance_deg)
    throw missteer_error(
        "evaluate_scenario: reference beam does not form at the steering target");

  ScenarioOutcome outcome;
  outcome.reference_fwhm_deg = measure_fwhm(reference, ref_lobes[ref_main].angle_deg,
                                            ref_lobes[ref_main].intensity);
  outcome.exclusion_deg = options.exclusion_deg.value_or(
      options.exclusion_scale * outcome.reference_fwhm_deg);

  AnalysisOptions analysis;
  analysis.tolerance_deg = options.tolerance_deg;
  analysis.prominence_floor = options.prominence_floor;
  analysis.fov_deg = options.fov_deg;
  // Lobe predictions live on the cut axis; only axis-aligned cuts map to a
  // single lattice pitch.
  if (sin_deg(s.steering.phi_s_deg) == 0.0)
    analysis.pitch = s.array.pitch_x;
  else if (cos_deg(s.steering.phi_s_deg) == 0.0)
    analysis.pitch = s.array.pitch_z;
  if (analysis.pitch && sin_deg(s.steering.theta_s_deg) != 0.0) {
    try {
      analysis.alpha = long_period_info(s.steering, *analysis.pitch).alpha;
    } catch (const domain_error&) {
      // pitch longer than the sawtooth period: no LPGL lattice
    }
  }

  PatternCut cut = compute_cut(build_grid(s), s.element, cut_spec, options.workers);
  outcome.report = sidelobe_to_peak(cut, s.steering, outcome.exclusion_deg, analysis);
  if (options.keep_cut) {
    outcome.cut = std::move(cut);
    outcome.reference_cut = std::move(reference);
  }
  return outcome;
}

// Spec-shaped entry point: mean spr over a scenario list, missteered or
// infeasible entries excluded and counted.
inline AverageSpr average_spr(const std::vector<Scenario>& scenarios,
                              const EvaluateOptions& options = {}) {
  if (scenarios.empty())
    throw validation_error("average_spr: scenario list is empty");
  std::vector<std::optional<double>> sprs(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    try {
      sprs[i] = evaluate_scenario(scenarios[i], options).report.spr;
    } catch (const missteer_error&) {
    } catch (const infeasible_error&) {
    }
  }
  return average_spr_of(sprs);
}

// ---------------------------------------------------------------------------
// Plans.

using AxisValue = std::variant<double, std::string>;

struct SweepAxis {
  std::string name;
  std::vector<AxisValue> values;
};

inline PhaseStrategy parse_strategy(const std::string& name) {
  if (name == "replace_by_psi_max") return PhaseStrategy::ReplaceByPsiMax;
  if (name == "replace_by_2pi") return PhaseStrategy::ReplaceBy2Pi;
  if (name == "replace_half_half") return PhaseStrategy::ReplaceHalfHalf;
  if (name == "skip") return PhaseStrategy::Skip;
  throw validation_error("unknown phase strategy '" + name + "'");
}

namespace detail {

// Canonical axis order for plan expansion; the product iterates the first
// listed axis slowest regardless of how the caller ordered the map.
inline const std::vector<std::string>& canonical_axes() {
  static const std::vector<std::string> order = {
      "theta_s_deg", "phi_s_deg", "pitch", "pitch_x", "pitch_z", "half_extent",
      "psi_max_deg", "strategy",  "var",   "p_d",     "gaussian_sigma", "circular"};
  return order;
}

inline double require_number(const AxisValue& v, const std::string& axis) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw validation_error("axis '" + axis + "': expected a numeric value");
}

inline void apply_axis_value(Scenario& s, const std::string& axis, const AxisValue& v) {
  if (axis == "theta_s_deg") {
    s.steering.theta_s_deg = require_number(v, axis);
  } else if (axis == "phi_s_deg") {
    s.steering.phi_s_deg = require_number(v, axis);
  } else if (axis == "pitch") {
    s.array.pitch_x = s.array.pitch_z = require_number(v, axis);
  } else if (axis == "pitch_x") {
    s.array.pitch_x = require_number(v, axis);
  } else if (axis == "pitch_z") {
    s.array.pitch_z = require_number(v, axis);
  } else if (axis == "half_extent") {
    const double n = require_number(v, axis);
    if (n < 0.0 || n != std::floor(n))
      throw validation_error("axis 'half_extent': expected a nonnegative integer");
    s.array.half_extent_x = s.array.half_extent_z = static_cast<int>(n);
  } else if (axis == "psi_max_deg") {
    s.phase_limit.psi_max_deg = require_number(v, axis);
  } else if (axis == "strategy") {
    if (const std::string* name = std::get_if<std::string>(&v))
      s.phase_limit.strategy = parse_strategy(*name);
    else
      throw validation_error("axis 'strategy': expected a strategy name");
  } else if (axis == "var") {
    if (!s.perturbation) s.perturbation = PerturbationTarget{};
    s.perturbation->target_var = require_number(v, axis);
  } else if (axis == "p_d") {
    if (!s.perturbation) s.perturbation = PerturbationTarget{};
    s.perturbation->P_d = require_number(v, axis);
  } else if (axis == "gaussian_sigma") {
    s.window.gaussian_sigma = require_number(v, axis);
  } else if (axis == "circular") {
    s.window.circular = require_number(v, axis) != 0.0;
  } else {
    throw validation_error("unknown sweep axis '" + axis + "'");
  }
}

inline std::string axis_value_label(const AxisValue& v) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::get<double>(v));
  return buf;
}

// Axis value read back from a scenario, for grouping and CSV columns.
inline AxisValue read_axis_value(const Scenario& s, const std::string& axis) {
  if (axis == "theta_s_deg") return s.steering.theta_s_deg;
  if (axis == "phi_s_deg") return s.steering.phi_s_deg;
  if (axis == "pitch" || axis == "pitch_x") return s.array.pitch_x;
  if (axis == "pitch_z") return s.array.pitch_z;
  if (axis == "half_extent") return static_cast<double>(s.array.half_extent_x);
  if (axis == "psi_max_deg") return s.phase_limit.psi_max_deg;
  if (axis == "strategy") return std::string(to_string(s.phase_limit.strategy));
  if (axis == "var") return s.perturbation ? s.perturbation->target_var : 0.0;
  if (axis == "p_d") return s.perturbation ? s.perturbation->P_d : 0.0;
  if (axis == "gaussian_sigma")
    return s.window.gaussian_sigma ? *s.window.gaussian_sigma : 0.0;
  if (axis == "circular") return s.window.circular ? 1.0 : 0.0;
  throw validation_error("unknown sweep axis '" + axis + "'");
}

}  // namespace detail

// Cartesian product of the axes applied over a base scenario. Axes are
// reordered canonically, the first axis varies slowest, and ids are stable:
// a zero-padded ordinal plus the axis assignments.
inline std::vector<Scenario> expand_plan(const Scenario& base,
                                         std::vector<SweepAxis> axes) {
  if (axes.empty())
    throw validation_error("expand_plan: need at least one axis");
  const auto& canon = detail::canonical_axes();
  std::stable_sort(axes.begin(), axes.end(),
                   [&](const SweepAxis& a, const SweepAxis& b) {
                     const auto ia = std::find(canon.begin(), canon.end(), a.name);
                     const auto ib = std::find(canon.begin(), canon.end(), b.name);
                     return ia < ib;
                   });
  std::size_t count = 1;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto& axis = axes[k];
    if (std::find(canon.begin(), canon.end(), axis.name) == canon.end())
      throw validation_error("expand_plan: unknown sweep axis '" + axis.name + "'");
    for (std::size_t j = k + 1; j < axes.size(); ++j)
      if (axes[j].name == axis.name)
        throw validation_error("expand_plan: duplicate sweep axis '" + axis.name + "'");
    if (axis.values.empty())
      throw validation_error("expand_plan: axis '" + axis.name + "' has no values");
    // Each value must be applicable and valid on its own.
    for (const auto& v : axis.values) {
      Scenario probe = base;
      detail::apply_axis_value(probe, axis.name, v);
      try {
        probe.validate();
      } catch (const validation_error& e) {
        throw validation_error("expand_plan: axis '" + axis.name + "' value " +
                               detail::axis_value_label(v) + ": " + e.what());
      }
    }
    count *= axis.values.size();
  }

  std::vector<Scenario> plan;
  plan.reserve(count);
  std::vector<std::size_t> cursor(axes.size(), 0);
  int id_width = 1;
  for (std::size_t c = count; c >= 10; c /= 10) ++id_width;
  for (std::size_t ordinal = 0; ordinal < count; ++ordinal) {
    Scenario s = base;
    std::string label;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const auto& v = axes[k].values[cursor[k]];
      detail::apply_axis_value(s, axes[k].name, v);
      label += "_" + axes[k].name + "=" + detail::axis_value_label(v);
    }
    char ord[24];
    std::snprintf(ord, sizeof ord, "s%0*zu", id_width, ordinal);
    s.id = ord + label;
    s.validate();
    plan.push_back(std::move(s));
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++cursor[k] < axes[k].values.size()) break;
      cursor[k] = 0;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Execution.

enum class SweepStatus { Ok, Missteer, Infeasible };

inline const char* to_string(SweepStatus s) {
  switch (s) {
    case SweepStatus::Ok: return "ok";
    case SweepStatus::Missteer: return "missteer";
    case SweepStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct SweepResult {
  std::string id;
  SweepStatus status = SweepStatus::Ok;
  std::optional<LobeReport> report;  // present iff status == Ok
  std::string message;               // failure detail
  double elapsed_seconds = 0.0;
};

// Evaluate every scenario, one result per scenario in plan order. Failures
// (missteer, infeasible) are isolated: they set the status of their own
// entry and nothing else. Scenario-level parallelism is the primary axis;
// the angle-level workers inside compute_cut are only engaged when the plan
// is too small to occupy the pool. Results are bitwise independent of
// worker_count by construction (each result slot is computed by a pure
// function of its scenario alone).
inline std::vector<SweepResult> run_sweep(const std::vector<Scenario>& plan,
                                          unsigned worker_count = 1,
                                          const EvaluateOptions& options = {}) {
  std::vector<SweepResult> results(plan.size());
  if (plan.empty()) return results;
  const unsigned workers = worker_count == 0 ? 1 : worker_count;
  const unsigned scenario_workers =
      static_cast<unsigned>(std::min<std::size_t>(workers, plan.size()));
  EvaluateOptions per_scenario = options;
  per_scenario.workers = plan.size() == 1 ? workers : 1;

  parallel_for(plan.size(), scenario_workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepResult& r = results[i];
    r.id = plan[i].id;
    try {
      r.report = evaluate_scenario(plan[i], per_scenario).report;
      r.status = SweepStatus::Ok;
    } catch (const missteer_error& e) {
      r.status = SweepStatus::Missteer;
      r.message = e.what();
    } catch (const infeasible_error& e) {
      r.status = SweepStatus::Infeasible;
      r.message = e.what();
    }
    r.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation.

struct AggregateRow {
  std::string key;                     // "axis=value" pairs joined with ","
  std::vector<AxisValue> group_values; // one per group_by axis
  double avg_spr = 0.0;
  int included = 0;
  int excluded = 0;
};

// Mean spr per group of scenarios sharing the group_by axis values, rows in
// first-appearance (plan) order. Groups where every scenario failed cannot
// be averaged and raise the empty-group error.
inline std::vector<AggregateRow> aggregate_avg_spr(
    const std::vector<Scenario>& plan, const std::vector<SweepResult>& results,
    const std::vector<std::string>& group_by) {
  if (plan.empty() || results.size() != plan.size())
    throw validation_error("aggregate_avg_spr: results do not match the plan");
  std::vector<AggregateRow> rows;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    std::string key;
    std::vector<AxisValue> values;
    for (const auto& axis : group_by) {
      const AxisValue v = detail::read_axis_value(plan[i], axis);
      if (!key.empty()) key += ",";
      key += axis + "=" + detail::axis_value_label(v);
      values.push_back(v);
    }
    auto [it, inserted] = row_of.try_emplace(key, rows.size());
    if (inserted) {
      AggregateRow row;
      row.key = key;
      row.group_values = std::move(values);
      rows.push_back(std::move(row));
    }
    AggregateRow& row = rows[it->second];
    if (results[i].status == SweepStatus::Ok) {
      row.avg_spr += results[i].report->spr;  // running sum; divided below
      ++row.included;
    } else {
      ++row.excluded;
    }
  }
  for (auto& row : rows) {
    if (row.included == 0)
      throw validation_error("aggregate_avg_spr: group '" + row.key +
                             "' has no successful scenarios");
    row.avg_spr /= row.included;
  }
  return rows;
}

}  // namespace opa
