#pragma once

// Run configuration: JSON scenario/sweep descriptions with strict key
// checking (unknown keys are errors, not warnings) and defaults matching the
// reference setup: N = 201 (half extent 100), pitch 0.5, circular mask plus
// Gaussian sigma = 0.5, z-dipole elements, phi_s = 0, 0.01-degree cuts over
// [-90, 90].

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opa/common.hpp"
#include "opa/radiation.hpp"
#include "opa/sweep.hpp"

namespace opa {

using ordered_json = nlohmann::ordered_json;

enum class RunMode { Cut, Pattern3D, Analyze, Sweep };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Cut: return "cut";
    case RunMode::Pattern3D: return "pattern3d";
    case RunMode::Analyze: return "analyze";
    case RunMode::Sweep: return "sweep";
  }
  return "?";
}

inline RunMode parse_run_mode(const std::string& name) {
  if (name == "cut") return RunMode::Cut;
  if (name == "pattern3d") return RunMode::Pattern3D;
  if (name == "analyze") return RunMode::Analyze;
  if (name == "sweep") return RunMode::Sweep;
  throw validation_error("unknown mode '" + name +
                         "' (expected cut, pattern3d, analyze, or sweep)");
}

struct Pattern3DSpec {
  double theta_resolution_deg = 1.0;
  double phi_resolution_deg = 1.0;

  void validate() const {
    if (!(theta_resolution_deg > 0.0) || !(phi_resolution_deg > 0.0))
      throw validation_error("pattern3d: resolutions must be > 0");
  }
};

struct ExportToggles {
  bool cut = true;
  bool phase_map = false;
  bool report = true;
  bool reports_archive = false;  // sweep mode: full LobeReport JSON archive
};

struct RunConfig {
  RunMode mode = RunMode::Cut;
  Scenario scenario;
  std::vector<SweepAxis> axes;        // sweep mode
  std::vector<std::string> group_by;  // sweep aggregation axes
  Pattern3DSpec pattern3d;
  EvaluateOptions analysis;
  ExportToggles exports;

  void validate() const {
    scenario.validate();
    pattern3d.validate();
    if (mode == RunMode::Sweep && axes.empty())
      throw validation_error("sweep mode needs at least one sweep axis");
    if (!(analysis.exclusion_scale > 0.0))
      throw validation_error("analysis: exclusion_scale must be > 0");
    if (analysis.exclusion_deg && !(*analysis.exclusion_deg > 0.0))
      throw validation_error("analysis: exclusion_deg must be > 0");
    if (!(analysis.tolerance_deg > 0.0))
      throw validation_error("analysis: tolerance_deg must be > 0");
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) { known = true; break; }
    if (!known)
      throw validation_error("unknown key '" + key + "' in " + section);
  }
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw validation_error(where + ": expected a number");
  return v.get<double>();
}

inline bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean())
    throw validation_error(where + ": expected true or false");
  return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string())
    throw validation_error(where + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> as_number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw validation_error(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(e, where));
  return out;
}

inline ElementPattern parse_element(const json& e) {
  check_keys(e, "element",
             {"kind", "orientation_deg", "theta_grid_deg", "phi_grid_deg", "gains"});
  const std::string kind = as_string(e.at("kind"), "element.kind");
  if (kind == "isotropic") return ElementPattern::isotropic();
  if (kind == "dipole_z") return ElementPattern::dipole_z();
  if (kind == "dipole_in_xz")
    return ElementPattern::dipole_in_xz(
        as_number(e.at("orientation_deg"), "element.orientation_deg"));
  if (kind == "tabulated")
    return ElementPattern::tabulated(
        as_number_array(e.at("theta_grid_deg"), "element.theta_grid_deg"),
        as_number_array(e.at("phi_grid_deg"), "element.phi_grid_deg"),
        as_number_array(e.at("gains"), "element.gains"));
  throw validation_error("element.kind: unknown kind '" + kind + "'");
}

inline json element_to_json(const ElementPattern& e) {
  json j;
  switch (e.kind) {
    case ElementPattern::Kind::Isotropic: j["kind"] = "isotropic"; break;
    case ElementPattern::Kind::DipoleZ: j["kind"] = "dipole_z"; break;
    case ElementPattern::Kind::DipoleInXZ:
      j["kind"] = "dipole_in_xz";
      j["orientation_deg"] = e.orientation_deg;
      break;
    case ElementPattern::Kind::Tabulated:
      j["kind"] = "tabulated";
      j["theta_grid_deg"] = e.theta_grid_deg;
      j["phi_grid_deg"] = e.phi_grid_deg;
      j["gains"] = e.gains;
      break;
  }
  return j;
}

}  // namespace detail

// Parse and fully validate a JSON run configuration. Top-level shorthands
// (theta_s, psi_max, strategy, pitch, var, p_d, ...) cover the common
// single-scenario runs; nested sections override defaults field by field.
inline RunConfig parse_config(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw parse_error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw parse_error("config: top level must be an object");

  detail::check_keys(
      j, "config",
      {"mode", "array", "steering", "window", "phase_limit", "perturbation",
       "element", "cut", "pattern3d", "analysis", "sweep", "export",
       // single-scenario shorthands
       "theta_s", "theta_s_deg", "phi_s", "phi_s_deg", "psi_max", "psi_max_deg",
       "strategy", "pitch", "var", "p_d", "gaussian_sigma", "half_extent"});

  RunConfig config;
  if (!j.contains("mode"))
    throw validation_error("config: missing required key 'mode'");
  config.mode = parse_run_mode(detail::as_string(j.at("mode"), "mode"));
  config.scenario.id = "run";

  if (j.contains("array")) {
    const auto& a = j.at("array");
    detail::check_keys(a, "array",
                       {"half_extent_x", "half_extent_z", "pitch_x", "pitch_z"});
    auto& spec = config.scenario.array;
    if (a.contains("half_extent_x"))
      spec.half_extent_x =
          static_cast<int>(detail::as_number(a.at("half_extent_x"), "array.half_extent_x"));
    if (a.contains("half_extent_z"))
      spec.half_extent_z =
          static_cast<int>(detail::as_number(a.at("half_extent_z"), "array.half_extent_z"));
    if (a.contains("pitch_x"))
      spec.pitch_x = detail::as_number(a.at("pitch_x"), "array.pitch_x");
    if (a.contains("pitch_z"))
      spec.pitch_z = detail::as_number(a.at("pitch_z"), "array.pitch_z");
  }

  if (j.contains("steering")) {
    const auto& s = j.at("steering");
    detail::check_keys(s, "steering", {"theta_s_deg", "phi_s_deg"});
    if (s.contains("theta_s_deg"))
      config.scenario.steering.theta_s_deg =
          detail::as_number(s.at("theta_s_deg"), "steering.theta_s_deg");
    if (s.contains("phi_s_deg"))
      config.scenario.steering.phi_s_deg =
          detail::as_number(s.at("phi_s_deg"), "steering.phi_s_deg");
  }

  if (j.contains("window")) {
    const auto& w = j.at("window");
    detail::check_keys(w, "window", {"circular", "gaussian_sigma"});
    if (w.contains("circular"))
      config.scenario.window.circular = detail::as_bool(w.at("circular"), "window.circular");
    if (w.contains("gaussian_sigma")) {
      if (w.at("gaussian_sigma").is_null())
        config.scenario.window.gaussian_sigma.reset();
      else
        config.scenario.window.gaussian_sigma =
            detail::as_number(w.at("gaussian_sigma"), "window.gaussian_sigma");
    }
  }

  if (j.contains("phase_limit")) {
    const auto& p = j.at("phase_limit");
    detail::check_keys(p, "phase_limit", {"psi_max_deg", "strategy"});
    if (p.contains("psi_max_deg"))
      config.scenario.phase_limit.psi_max_deg =
          detail::as_number(p.at("psi_max_deg"), "phase_limit.psi_max_deg");
    if (p.contains("strategy"))
      config.scenario.phase_limit.strategy =
          parse_strategy(detail::as_string(p.at("strategy"), "phase_limit.strategy"));
  }

  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    detail::check_keys(p, "perturbation", {"p_d", "target_var"});
    PerturbationTarget target;
    if (p.contains("p_d")) target.P_d = detail::as_number(p.at("p_d"), "perturbation.p_d");
    if (p.contains("target_var"))
      target.target_var = detail::as_number(p.at("target_var"), "perturbation.target_var");
    config.scenario.perturbation = target;
  }

  if (j.contains("element")) config.scenario.element = detail::parse_element(j.at("element"));

  if (j.contains("cut")) {
    const auto& c = j.at("cut");
    detail::check_keys(c, "cut", {"resolution_deg", "span_deg"});
    if (c.contains("resolution_deg"))
      config.scenario.cut_resolution_deg =
          detail::as_number(c.at("resolution_deg"), "cut.resolution_deg");
    if (c.contains("span_deg")) {
      const auto span = detail::as_number_array(c.at("span_deg"), "cut.span_deg");
      if (span.size() != 2)
        throw validation_error("cut.span_deg: expected [lo, hi]");
      config.scenario.cut_lo_deg = span[0];
      config.scenario.cut_hi_deg = span[1];
    }
  }

  if (j.contains("pattern3d")) {
    const auto& p = j.at("pattern3d");
    detail::check_keys(p, "pattern3d", {"theta_resolution_deg", "phi_resolution_deg"});
    if (p.contains("theta_resolution_deg"))
      config.pattern3d.theta_resolution_deg =
          detail::as_number(p.at("theta_resolution_deg"), "pattern3d.theta_resolution_deg");
    if (p.contains("phi_resolution_deg"))
      config.pattern3d.phi_resolution_deg =
          detail::as_number(p.at("phi_resolution_deg"), "pattern3d.phi_resolution_deg");
  }

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    detail::check_keys(a, "analysis",
                       {"exclusion_scale", "exclusion_deg", "tolerance_deg", "fov_deg",
                        "prominence_floor"});
    if (a.contains("exclusion_scale"))
      config.analysis.exclusion_scale =
          detail::as_number(a.at("exclusion_scale"), "analysis.exclusion_scale");
    if (a.contains("exclusion_deg") && !a.at("exclusion_deg").is_null())
      config.analysis.exclusion_deg =
          detail::as_number(a.at("exclusion_deg"), "analysis.exclusion_deg");
    if (a.contains("tolerance_deg"))
      config.analysis.tolerance_deg =
          detail::as_number(a.at("tolerance_deg"), "analysis.tolerance_deg");
    if (a.contains("fov_deg") && !a.at("fov_deg").is_null())
      config.analysis.fov_deg = detail::as_number(a.at("fov_deg"), "analysis.fov_deg");
    if (a.contains("prominence_floor") && !a.at("prominence_floor").is_null())
      config.analysis.prominence_floor =
          detail::as_number(a.at("prominence_floor"), "analysis.prominence_floor");
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::check_keys(s, "sweep", {"axes", "group_by", "archive_reports"});
    if (s.contains("axes")) {
      const auto& axes = s.at("axes");
      if (!axes.is_object())
        throw validation_error("sweep.axes: expected an object of value lists");
      for (const auto& [name, values] : axes.items()) {
        SweepAxis axis;
        axis.name = name;
        if (!values.is_array())
          throw validation_error("sweep.axes." + name + ": expected an array");
        for (const auto& v : values) {
          if (v.is_number())
            axis.values.emplace_back(v.get<double>());
          else if (v.is_string())
            axis.values.emplace_back(v.get<std::string>());
          else
            throw validation_error("sweep.axes." + name +
                                   ": values must be numbers or strings");
        }
        config.axes.push_back(std::move(axis));
      }
    }
    if (s.contains("group_by")) {
      if (!s.at("group_by").is_array())
        throw validation_error("sweep.group_by: expected an array of axis names");
      for (const auto& g : s.at("group_by"))
        config.group_by.push_back(detail::as_string(g, "sweep.group_by"));
    }
    if (s.contains("archive_reports"))
      config.exports.reports_archive =
          detail::as_bool(s.at("archive_reports"), "sweep.archive_reports");
  }

  if (j.contains("export")) {
    const auto& e = j.at("export");
    detail::check_keys(e, "export", {"cut", "phase_map", "report", "reports_archive"});
    if (e.contains("cut")) config.exports.cut = detail::as_bool(e.at("cut"), "export.cut");
    if (e.contains("phase_map"))
      config.exports.phase_map = detail::as_bool(e.at("phase_map"), "export.phase_map");
    if (e.contains("report"))
      config.exports.report = detail::as_bool(e.at("report"), "export.report");
    if (e.contains("reports_archive"))
      config.exports.reports_archive =
          detail::as_bool(e.at("reports_archive"), "export.reports_archive");
  }

  // Top-level shorthands; applied after the sections, so a shorthand wins
  // over the equivalent nested field when both are present.
  const auto num_shorthand = [&](const char* key, const char* alias) -> std::optional<double> {
    if (j.contains(key)) return detail::as_number(j.at(key), key);
    if (alias && j.contains(alias)) return detail::as_number(j.at(alias), alias);
    return std::nullopt;
  };
  if (auto v = num_shorthand("theta_s_deg", "theta_s"))
    config.scenario.steering.theta_s_deg = *v;
  if (auto v = num_shorthand("phi_s_deg", "phi_s")) config.scenario.steering.phi_s_deg = *v;
  if (auto v = num_shorthand("psi_max_deg", "psi_max"))
    config.scenario.phase_limit.psi_max_deg = *v;
  if (j.contains("strategy"))
    config.scenario.phase_limit.strategy =
        parse_strategy(detail::as_string(j.at("strategy"), "strategy"));
  if (auto v = num_shorthand("pitch", nullptr))
    config.scenario.array.pitch_x = config.scenario.array.pitch_z = *v;
  if (auto v = num_shorthand("half_extent", nullptr)) {
    config.scenario.array.half_extent_x = config.scenario.array.half_extent_z =
        static_cast<int>(*v);
  }
  if (auto v = num_shorthand("gaussian_sigma", nullptr))
    config.scenario.window.gaussian_sigma = *v;
  if (auto v = num_shorthand("var", nullptr)) {
    if (!config.scenario.perturbation) config.scenario.perturbation = PerturbationTarget{};
    config.scenario.perturbation->target_var = *v;
  }
  if (auto v = num_shorthand("p_d", nullptr)) {
    if (!config.scenario.perturbation) config.scenario.perturbation = PerturbationTarget{};
    config.scenario.perturbation->P_d = *v;
  }

  config.validate();
  return config;
}

// Canonical JSON for a RunConfig; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& config) {
  ordered_json j;
  j["mode"] = to_string(config.mode);
  j["array"] = {{"half_extent_x", config.scenario.array.half_extent_x},
                {"half_extent_z", config.scenario.array.half_extent_z},
                {"pitch_x", config.scenario.array.pitch_x},
                {"pitch_z", config.scenario.array.pitch_z}};
  j["steering"] = {{"theta_s_deg", config.scenario.steering.theta_s_deg},
                   {"phi_s_deg", config.scenario.steering.phi_s_deg}};
  j["window"]["circular"] = config.scenario.window.circular;
  if (config.scenario.window.gaussian_sigma)
    j["window"]["gaussian_sigma"] = *config.scenario.window.gaussian_sigma;
  else
    j["window"]["gaussian_sigma"] = nullptr;
  j["phase_limit"] = {{"psi_max_deg", config.scenario.phase_limit.psi_max_deg},
                      {"strategy", to_string(config.scenario.phase_limit.strategy)}};
  if (config.scenario.perturbation)
    j["perturbation"] = {{"p_d", config.scenario.perturbation->P_d},
                         {"target_var", config.scenario.perturbation->target_var}};
  j["element"] = detail::element_to_json(config.scenario.element);
  j["cut"] = {{"resolution_deg", config.scenario.cut_resolution_deg},
              {"span_deg", {config.scenario.cut_lo_deg, config.scenario.cut_hi_deg}}};
  j["pattern3d"] = {{"theta_resolution_deg", config.pattern3d.theta_resolution_deg},
                    {"phi_resolution_deg", config.pattern3d.phi_resolution_deg}};
  ordered_json analysis;
  analysis["exclusion_scale"] = config.analysis.exclusion_scale;
  analysis["exclusion_deg"] =
      config.analysis.exclusion_deg ? ordered_json(*config.analysis.exclusion_deg)
                                    : ordered_json(nullptr);
  analysis["tolerance_deg"] = config.analysis.tolerance_deg;
  analysis["fov_deg"] = config.analysis.fov_deg ? ordered_json(*config.analysis.fov_deg)
                                                : ordered_json(nullptr);
  if (config.analysis.prominence_floor >= 0.0)
    analysis["prominence_floor"] = config.analysis.prominence_floor;
  j["analysis"] = std::move(analysis);
  if (!config.axes.empty() || !config.group_by.empty()) {
    ordered_json axes = ordered_json::object();
    for (const auto& axis : config.axes) {
      ordered_json values = ordered_json::array();
      for (const auto& v : axis.values) {
        if (const double* d = std::get_if<double>(&v))
          values.push_back(*d);
        else
          values.push_back(std::get<std::string>(v));
      }
      axes[axis.name] = std::move(values);
    }
    j["sweep"]["axes"] = std::move(axes);
    j["sweep"]["group_by"] = config.group_by;
    j["sweep"]["archive_reports"] = config.exports.reports_archive;
  }
  j["export"] = {{"cut", config.exports.cut},
                 {"phase_map", config.exports.phase_map},
                 {"report", config.exports.report},
                 {"reports_archive", config.exports.reports_archive}};
  return j.dump(2);
}

}  // namespace opa
