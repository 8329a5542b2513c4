#pragma once

// CSV/JSON serialization for cuts, grids, reports, 3D patterns, and sweep
// tables. Intensity columns carry 17 significant digits so every double
// round-trips bit-exactly; angle columns print the exact decimals they were
// sampled on.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opa/common.hpp"
#include "opa/excitation.hpp"
#include "opa/lobe_analysis.hpp"
#include "opa/radiation.hpp"
#include "opa/sweep.hpp"

namespace opa {

using ordered_json = nlohmann::ordered_json;

// 17 significant digits, compact exponent: 1.0 -> "1.0000000000000000e0".
inline std::string format_intensity(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  std::string s = buf;
  const auto e = s.find('e');
  std::string mant = s.substr(0, e);
  std::string exp = s.substr(e + 1);
  const bool neg = !exp.empty() && exp[0] == '-';
  if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) exp.erase(0, 1);
  while (exp.size() > 1 && exp[0] == '0') exp.erase(0, 1);
  return mant + "e" + (neg ? "-" : "") + exp;
}

// Shortest representation that still round-trips (for metadata columns).
// Low precision is not automatically short ("%.1g" turns -90 into "-9e+01"),
// so pick by string length over all round-tripping precisions.
inline std::string format_double(double v) {
  char best[40];
  std::snprintf(best, sizeof best, "%.17g", v);
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v && std::strlen(probe) < std::strlen(best))
      std::memcpy(best, probe, std::strlen(probe) + 1);
  }
  return best;
}

// Fixed-decimal digits reproducing every sample of a decimal-stepped angle
// grid, or -1 when the grid is not on a decimal lattice.
inline int angle_decimals(double lo_deg, double resolution_deg) {
  for (int k = 0; k <= 9; ++k) {
    const double scale = std::pow(10.0, k);
    const double l = lo_deg * scale, r = resolution_deg * scale;
    if (std::fabs(l - std::round(l)) < 1e-6 && std::fabs(r - std::round(r)) < 1e-6 &&
        std::round(r) != 0.0)
      return k;
  }
  return -1;
}

inline std::string format_angle(double v, int decimals) {
  char buf[40];
  if (decimals >= 0)
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open '" + path + "' for reading");
  return is;
}

inline void finish(std::ostream& os, const std::string& path) {
  os.flush();
  if (!os) throw io_error("write failed for '" + path + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pattern cut CSV.

inline void emit_cut_csv(const PatternCut& cut, std::ostream& os) {
  const int decimals =
      cut.size() >= 2
          ? angle_decimals(cut.theta_deg.front(), cut.theta_deg[1] - cut.theta_deg[0])
          : -1;
  os << "theta_s_deg,intensity\n";
  for (std::size_t i = 0; i < cut.size(); ++i)
    os << format_angle(cut.theta_deg[i], decimals) << ','
       << format_intensity(cut.intensity[i]) << '\n';
}

inline void emit_cut_csv(const PatternCut& cut, const std::string& path) {
  auto os = detail::open_out(path);
  emit_cut_csv(cut, os);
  detail::finish(os, path);
}

// Reads back what emit_cut_csv wrote: theta and intensity columns only
// (plane and normalization are not part of the format).
inline PatternCut parse_cut_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "theta_s_deg,intensity")
    throw parse_error("cut CSV: expected header 'theta_s_deg,intensity'");
  PatternCut cut;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw parse_error("cut CSV line " + std::to_string(lineno) + ": missing comma");
    char* end = nullptr;
    const double theta = std::strtod(line.c_str(), &end);
    const double intensity = std::strtod(line.c_str() + comma + 1, &end);
    cut.theta_deg.push_back(theta);
    cut.intensity.push_back(intensity);
  }
  if (cut.size() >= 2) cut.resolution_deg = cut.theta_deg[1] - cut.theta_deg[0];
  return cut;
}

inline PatternCut parse_cut_csv(const std::string& path) {
  auto is = detail::open_in(path);
  return parse_cut_csv(is);
}

// ---------------------------------------------------------------------------
// Phase map CSV (grid dump).

inline void emit_phase_map(const PixelGrid& grid, std::ostream& os) {
  os << "p,q,amplitude,phase_deg\n";
  std::size_t i = 0;
  for (int p = -grid.spec.half_extent_x; p <= grid.spec.half_extent_x; ++p)
    for (int q = -grid.spec.half_extent_z; q <= grid.spec.half_extent_z; ++q, ++i)
      os << p << ',' << q << ',' << format_double(grid.amplitude[i]) << ','
         << format_double(rad_to_deg(grid.phase[i])) << '\n';
}

inline void emit_phase_map(const PixelGrid& grid, const std::string& path) {
  auto os = detail::open_out(path);
  emit_phase_map(grid, os);
  detail::finish(os, path);
}

// ---------------------------------------------------------------------------
// Lobe report JSON.

inline ordered_json report_to_json(const LobeReport& report) {
  ordered_json j;
  j["steering"] = {{"theta_s_deg", report.steering.theta_s_deg},
                   {"phi_s_deg", report.steering.phi_s_deg}};
  j["spr"] = report.spr;
  j["main"] = {{"angle_deg", report.main_angle_deg},
               {"intensity", report.main_intensity},
               {"fwhm_deg", report.main_lobe_fwhm_deg},
               {"angle_error_deg", report.main_lobe_angle_error_deg}};
  j["lobes"] = ordered_json::array();
  for (const auto& lobe : report.lobes) {
    ordered_json lj;
    lj["angle_deg"] = lobe.angle_deg;
    lj["intensity"] = lobe.intensity;
    lj["kind"] = to_string(lobe.kind);
    lj["order"] = lobe.order;
    if (lobe.prediction_error_deg)
      lj["prediction_error_deg"] = *lobe.prediction_error_deg;
    else
      lj["prediction_error_deg"] = nullptr;
    j["lobes"].push_back(std::move(lj));
  }
  j["excluded_scenarios"] = report.excluded_scenarios;
  return j;
}

inline void emit_report_json(const LobeReport& report, std::ostream& os) {
  os << report_to_json(report).dump(2) << '\n';
}

inline void emit_report_json(const LobeReport& report, const std::string& path) {
  auto os = detail::open_out(path);
  emit_report_json(report, os);
  detail::finish(os, path);
}

// ---------------------------------------------------------------------------
// 3D pattern: long CSV plus JSON sidecar next to it (.json extension).

inline void emit_pattern3d(const Pattern3D& p3d, std::ostream& csv, std::ostream& sidecar) {
  const int td = p3d.theta_deg.size() >= 2
                     ? angle_decimals(p3d.theta_deg.front(),
                                      p3d.theta_deg[1] - p3d.theta_deg[0])
                     : -1;
  const int pd = p3d.phi_deg.size() >= 2
                     ? angle_decimals(p3d.phi_deg.front(),
                                      p3d.phi_deg[1] - p3d.phi_deg[0])
                     : -1;
  csv << "theta_deg,phi_deg,intensity\n";
  std::size_t i = 0;
  for (std::size_t it = 0; it < p3d.theta_deg.size(); ++it)
    for (std::size_t ip = 0; ip < p3d.phi_deg.size(); ++ip, ++i)
      csv << format_angle(p3d.theta_deg[it], td) << ','
          << format_angle(p3d.phi_deg[ip], pd) << ','
          << format_intensity(p3d.intensity[i]) << '\n';

  ordered_json j;
  j["theta_count"] = p3d.theta_deg.size();
  j["phi_count"] = p3d.phi_deg.size();
  j["theta_resolution_deg"] =
      p3d.theta_deg.size() >= 2 ? p3d.theta_deg[1] - p3d.theta_deg[0] : 0.0;
  j["phi_resolution_deg"] =
      p3d.phi_deg.size() >= 2 ? p3d.phi_deg[1] - p3d.phi_deg[0] : 0.0;
  j["normalization"] = p3d.normalization;
  if (p3d.steering)
    j["steering"] = {{"theta_s_deg", p3d.steering->theta_s_deg},
                     {"phi_s_deg", p3d.steering->phi_s_deg}};
  else
    j["steering"] = nullptr;
  sidecar << j.dump(2) << '\n';
}

inline void emit_pattern3d(const Pattern3D& p3d, const std::string& csv_path) {
  const std::string sidecar_path =
      std::filesystem::path(csv_path).replace_extension(".json").string();
  auto csv = detail::open_out(csv_path);
  auto sidecar = detail::open_out(sidecar_path);
  emit_pattern3d(p3d, csv, sidecar);
  detail::finish(csv, csv_path);
  detail::finish(sidecar, sidecar_path);
}

// ---------------------------------------------------------------------------
// Sweep tables.

inline void emit_sweep_csv(const std::vector<Scenario>& plan,
                           const std::vector<std::string>& axis_names,
                           const std::vector<SweepResult>& results, std::ostream& os) {
  if (plan.size() != results.size())
    throw validation_error("emit_sweep_csv: results do not match the plan");
  os << "id";
  for (const auto& a : axis_names) os << ',' << a;
  os << ",spr,status\n";
  for (std::size_t i = 0; i < plan.size(); ++i) {
    os << results[i].id;
    for (const auto& a : axis_names)
      os << ',' << detail::axis_value_label(detail::read_axis_value(plan[i], a));
    os << ',';
    if (results[i].status == SweepStatus::Ok)
      os << format_intensity(results[i].report->spr);
    os << ',' << to_string(results[i].status) << '\n';
  }
}

inline void emit_aggregate_csv(const std::vector<AggregateRow>& rows,
                               const std::vector<std::string>& group_by,
                               std::ostream& os) {
  for (const auto& a : group_by) os << a << ',';
  os << "avg_spr,included,excluded\n";
  for (const auto& row : rows) {
    for (const auto& v : row.group_values) os << detail::axis_value_label(v) << ',';
    os << format_intensity(row.avg_spr) << ',' << row.included << ','
       << row.excluded << '\n';
  }
}

// Machine-readable error envelope the CLI prints on stderr.
inline std::string error_json(const std::string& type, const std::string& message) {
  ordered_json j;
  j["error"] = {{"type", type}, {"message", message}};
  return j.dump();
}

}  // namespace opa
