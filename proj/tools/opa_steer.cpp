// opa-steer: command-line front end for the opa beam-steering simulator.
//
//   opa-steer <cut|pattern3d|analyze|sweep> --config <file> [--out <dir>] [--workers <n>]
//
// The config file carries the scenario (see README for the schema); the
// subcommand must agree with the config's "mode". Outputs land in --out
// (default: current directory). Validation failures print a machine-readable
// JSON envelope on stderr and exit nonzero.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "opa/config.hpp"
#include "opa/io.hpp"
#include "opa/sweep.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw opa::io_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string join(const std::filesystem::path& dir, const char* name) {
  return (dir / name).string();
}

int run(opa::RunMode cli_mode, const std::string& config_path,
        const std::string& out_dir, unsigned workers) {
  opa::RunConfig config = opa::parse_config(read_file(config_path));
  if (config.mode != cli_mode)
    throw opa::validation_error(std::string("config mode '") +
                                opa::to_string(config.mode) +
                                "' does not match subcommand '" +
                                opa::to_string(cli_mode) + "'");
  const std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);

  const opa::Scenario& s = config.scenario;
  switch (config.mode) {
    case opa::RunMode::Cut: {
      const opa::PixelGrid grid = opa::build_grid(s);
      const opa::PatternCut cut =
          opa::compute_cut(grid, s.element, s.cut_spec(), workers);
      opa::emit_cut_csv(cut, join(out, "cut.csv"));
      std::cout << "wrote " << join(out, "cut.csv") << "\n";
      if (config.exports.phase_map) {
        opa::emit_phase_map(grid, join(out, "phase_map.csv"));
        std::cout << "wrote " << join(out, "phase_map.csv") << "\n";
      }
      break;
    }
    case opa::RunMode::Pattern3D: {
      const opa::PixelGrid grid = opa::build_grid(s);
      opa::Pattern3D p3d =
          opa::compute_3d(grid, s.element, config.pattern3d.theta_resolution_deg,
                          config.pattern3d.phi_resolution_deg, workers);
      p3d.steering = s.steering;
      opa::emit_pattern3d(p3d, join(out, "pattern3d.csv"));
      std::cout << "wrote " << join(out, "pattern3d.csv") << " and sidecar\n";
      if (config.exports.phase_map) {
        opa::emit_phase_map(grid, join(out, "phase_map.csv"));
        std::cout << "wrote " << join(out, "phase_map.csv") << "\n";
      }
      break;
    }
    case opa::RunMode::Analyze: {
      opa::EvaluateOptions options = config.analysis;
      options.workers = workers;
      options.keep_cut = config.exports.cut;
      const opa::ScenarioOutcome outcome = opa::evaluate_scenario(s, options);
      if (config.exports.report) {
        opa::emit_report_json(outcome.report, join(out, "report.json"));
        std::cout << "wrote " << join(out, "report.json") << " (spr "
                  << opa::format_intensity(outcome.report.spr) << ")\n";
      } else {
        std::cout << "spr " << opa::format_intensity(outcome.report.spr) << "\n";
      }
      if (outcome.cut) {
        opa::emit_cut_csv(*outcome.cut, join(out, "cut.csv"));
        std::cout << "wrote " << join(out, "cut.csv") << "\n";
      }
      if (config.exports.phase_map) {
        opa::emit_phase_map(opa::build_grid(s), join(out, "phase_map.csv"));
        std::cout << "wrote " << join(out, "phase_map.csv") << "\n";
      }
      break;
    }
    case opa::RunMode::Sweep: {
      const std::vector<opa::Scenario> plan = opa::expand_plan(s, config.axes);
      opa::EvaluateOptions options = config.analysis;
      const std::vector<opa::SweepResult> results =
          opa::run_sweep(plan, workers, options);
      std::vector<std::string> axis_names;
      for (const auto& axis : config.axes) axis_names.push_back(axis.name);
      {
        auto os = opa::detail::open_out(join(out, "sweep.csv"));
        opa::emit_sweep_csv(plan, axis_names, results, os);
      }
      std::cout << "wrote " << join(out, "sweep.csv") << " (" << plan.size()
                << " scenarios)\n";
      if (!config.group_by.empty()) {
        const auto rows = opa::aggregate_avg_spr(plan, results, config.group_by);
        auto os = opa::detail::open_out(join(out, "aggregate.csv"));
        opa::emit_aggregate_csv(rows, config.group_by, os);
        std::cout << "wrote " << join(out, "aggregate.csv") << " (" << rows.size()
                  << " groups)\n";
      }
      if (config.exports.reports_archive) {
        opa::ordered_json archive = opa::ordered_json::array();
        for (std::size_t i = 0; i < results.size(); ++i) {
          opa::ordered_json entry;
          entry["id"] = results[i].id;
          entry["status"] = opa::to_string(results[i].status);
          entry["elapsed_seconds"] = results[i].elapsed_seconds;
          if (results[i].report)
            entry["report"] = opa::report_to_json(*results[i].report);
          else
            entry["message"] = results[i].message;
          archive.push_back(std::move(entry));
        }
        auto os = opa::detail::open_out(join(out, "reports.json"));
        os << archive.dump(2) << "\n";
        std::cout << "wrote " << join(out, "reports.json") << "\n";
      }
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optical phased-array beam-steering simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  unsigned workers = 1;
  app.add_option("--config", config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (created if missing)");
  app.add_option("--workers", workers, "worker thread cap")
      ->check(CLI::PositiveNumber);

  const auto add_mode = [&](const char* name, const char* desc) {
    // Options live on the app; fallthrough lets them follow the subcommand
    // as the synopsis documents.
    return app.add_subcommand(name, desc)->fallthrough();
  };
  add_mode("cut", "1D pattern cut CSV");
  add_mode("pattern3d", "hemispherical pattern CSV + JSON sidecar");
  add_mode("analyze", "lobe report JSON for one scenario");
  add_mode("sweep", "scenario grid: spr table and aggregates");

  CLI11_PARSE(app, argc, argv);
  const std::string mode_name = app.get_subcommands().front()->get_name();

  try {
    return run(opa::parse_run_mode(mode_name), config_path, out_dir, workers);
  } catch (const opa::parse_error& e) {
    std::cerr << opa::error_json("parse", e.what()) << "\n";
    return 2;
  } catch (const opa::infeasible_error& e) {
    std::cerr << opa::error_json("infeasible", e.what()) << "\n";
    return 4;
  } catch (const opa::missteer_error& e) {
    std::cerr << opa::error_json("missteer", e.what()) << "\n";
    return 4;
  } catch (const opa::validation_error& e) {
    std::cerr << opa::error_json("validation", e.what()) << "\n";
    return 2;
  } catch (const opa::io_error& e) {
    std::cerr << opa::error_json("io", e.what()) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << opa::error_json("internal", e.what()) << "\n";
    return 1;
  }
}
