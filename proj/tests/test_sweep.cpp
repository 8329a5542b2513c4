#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "opa/sweep.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using namespace opa;

namespace {

// Desk-scale base: 101x101 pixels keep full sweeps fast while preserving the
// steering physics (the beam just gets twice as wide).
Scenario small_base() {
  Scenario s;
  s.array = {50, 50, 0.5, 0.5};
  s.steering = {steering_from_M(14.0, 0.5), 0.0};
  return s;
}

const std::vector<std::string> kStrategies = {
    "replace_by_psi_max", "replace_by_2pi", "replace_half_half", "skip"};

std::vector<AxisValue> numbers(std::initializer_list<double> vals) {
  std::vector<AxisValue> out;
  for (double v : vals) out.emplace_back(v);
  return out;
}

std::vector<AxisValue> names(const std::vector<std::string>& vals) {
  std::vector<AxisValue> out;
  for (const auto& v : vals) out.emplace_back(v);
  return out;
}

}  // namespace

TEST_CASE("expand_plan lays out the strategy-by-range product") {
  std::vector<SweepAxis> axes = {{"strategy", names(kStrategies)},
                                 {"psi_max_deg", numbers({240, 270, 300, 330})}};
  const auto plan = expand_plan(small_base(), axes);
  REQUIRE(plan.size() == 16);
  // Canonical order puts psi_max_deg before strategy, so the range varies
  // slowest no matter how the caller listed the axes.
  REQUIRE(plan[0].phase_limit.psi_max_deg == 240.0);
  REQUIRE(plan[0].phase_limit.strategy == PhaseStrategy::ReplaceByPsiMax);
  REQUIRE(plan[3].phase_limit.psi_max_deg == 240.0);
  REQUIRE(plan[3].phase_limit.strategy == PhaseStrategy::Skip);
  REQUIRE(plan[4].phase_limit.psi_max_deg == 270.0);
  REQUIRE(plan[15].phase_limit.psi_max_deg == 330.0);
  REQUIRE(plan[15].phase_limit.strategy == PhaseStrategy::Skip);
  REQUIRE(plan[0].id == "s00_psi_max_deg=240_strategy=replace_by_psi_max");
  REQUIRE(plan[15].id == "s15_psi_max_deg=330_strategy=skip");
  for (std::size_t i = 0; i < plan.size(); ++i)
    for (std::size_t j = i + 1; j < plan.size(); ++j)
      REQUIRE(plan[i].id != plan[j].id);
}

TEST_CASE("expand_plan scales to production-sized grids without evaluating") {
  std::vector<AxisValue> thetas;
  for (int t = 1; t <= 90; ++t) thetas.emplace_back(static_cast<double>(t));
  std::vector<SweepAxis> axes = {
      {"theta_s_deg", thetas},
      {"psi_max_deg", numbers({240, 270, 300, 330, 360})},
      {"var", numbers({0.0, 0.1, 0.2, 0.3, 0.5})}};
  const auto plan = expand_plan(small_base(), axes);
  REQUIRE(plan.size() == 90u * 5u * 5u);
  REQUIRE(plan[0].id.substr(0, 6) == "s0000_");
  // theta slowest, var fastest.
  REQUIRE(plan[0].steering.theta_s_deg == 1.0);
  REQUIRE(plan[24].steering.theta_s_deg == 1.0);
  REQUIRE(plan[25].steering.theta_s_deg == 2.0);
  REQUIRE(plan[1].perturbation.has_value());
  REQUIRE(plan[1].perturbation->target_var == 0.1);
}

TEST_CASE("expand_plan rejects malformed plans") {
  const auto base = small_base();
  REQUIRE_THROWS_AS(expand_plan(base, {}), validation_error);
  REQUIRE_THROWS_WITH(expand_plan(base, {{"psi_max", numbers({270})}}),
                      ContainsSubstring("psi_max"));
  REQUIRE_THROWS_WITH(
      expand_plan(base, {{"psi_max_deg", numbers({270})},
                         {"psi_max_deg", numbers({300})}}),
      ContainsSubstring("duplicate"));
  REQUIRE_THROWS_WITH(expand_plan(base, {{"psi_max_deg", {}}}),
                      ContainsSubstring("no values"));
  // Invalid values are reported with their axis and value.
  REQUIRE_THROWS_WITH(expand_plan(base, {{"psi_max_deg", numbers({400})}}),
                      ContainsSubstring("psi_max_deg") && ContainsSubstring("400"));
  REQUIRE_THROWS_WITH(expand_plan(base, {{"theta_s_deg", numbers({91})}}),
                      ContainsSubstring("theta_s_deg"));
  REQUIRE_THROWS_AS(expand_plan(base, {{"strategy", numbers({1})}}), validation_error);
  REQUIRE_THROWS_AS(expand_plan(base, {{"strategy", names({"replace_everything"})}}),
                    validation_error);
}

TEST_CASE("parse_strategy") {
  REQUIRE(parse_strategy("replace_by_psi_max") == PhaseStrategy::ReplaceByPsiMax);
  REQUIRE(parse_strategy("replace_by_2pi") == PhaseStrategy::ReplaceBy2Pi);
  REQUIRE(parse_strategy("replace_half_half") == PhaseStrategy::ReplaceHalfHalf);
  REQUIRE(parse_strategy("skip") == PhaseStrategy::Skip);
  REQUIRE_THROWS_AS(parse_strategy("Skip"), validation_error);
}

TEST_CASE("build_grid applies perturbation before the phase limit") {
  // The ripple keys to the ideal sawtooth (period M = 14 px), not to the
  // skip-shortened profile (period 10.5 px); windows are disabled so the
  // periodicity is visible.
  Scenario s = small_base();
  s.window = {false, std::nullopt};
  s.phase_limit = {270.0, PhaseStrategy::Skip};
  s.perturbation = PerturbationTarget{1.0, 0.3};
  const auto grid = build_grid(s);
  for (int p = -50; p + 14 <= 50; ++p)
    REQUIRE_THAT(grid.amp(p + 14, 0), WithinAbs(grid.amp(p, 0), 1e-9));
  // The phases, by contrast, follow the skip profile: 21-pixel period.
  bool phase_14_periodic = true;
  for (int p = -50; p + 14 <= 50; ++p) {
    double diff = std::fabs(grid.psi(p + 14, 0) - grid.psi(p, 0));
    diff = std::min(diff, two_pi - diff);
    if (diff > 1e-9) phase_14_periodic = false;
  }
  REQUIRE_FALSE(phase_14_periodic);
  for (int p = -50; p + 21 <= 50; ++p) {
    double diff = std::fabs(grid.psi(p + 21, 0) - grid.psi(p, 0));
    diff = std::min(diff, two_pi - diff);
    REQUIRE_THAT(diff, WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("run_sweep output is bitwise independent of worker count", "[pipeline]") {
  std::vector<SweepAxis> axes = {{"psi_max_deg", numbers({240, 270, 300, 330})},
                                 {"strategy", names(kStrategies)}};
  const auto plan = expand_plan(small_base(), axes);
  const auto serial = run_sweep(plan, 1);
  const auto parallel = run_sweep(plan, 8);
  REQUIRE(serial.size() == plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    REQUIRE(serial[i].id == plan[i].id);
    REQUIRE(serial[i].status == parallel[i].status);
    if (serial[i].status == SweepStatus::Ok) {
      REQUIRE(serial[i].report.has_value());
      REQUIRE(serial[i].report->spr == parallel[i].report->spr);
      REQUIRE(serial[i].report->main_angle_deg == parallel[i].report->main_angle_deg);
    }
  }
  // The replace strategies steer correctly everywhere. Skip shortens the
  // sawtooth and drags the beam off target at every range below the full
  // turn: either far enough to missteer outright, or at least past any
  // sensible pointing budget.
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].phase_limit.strategy == PhaseStrategy::Skip) {
      if (serial[i].status == SweepStatus::Ok)
        REQUIRE(serial[i].report->main_lobe_angle_error_deg > 0.1);
      else
        REQUIRE(serial[i].status == SweepStatus::Missteer);
    } else {
      REQUIRE(serial[i].status == SweepStatus::Ok);
      REQUIRE(serial[i].report->main_lobe_angle_error_deg <= 0.1);
    }
  }
}

TEST_CASE("failing scenarios are isolated and flagged", "[pipeline]") {
  Scenario base = small_base();
  base.steering = {10.0, 0.0};
  std::vector<SweepAxis> axes = {{"var", numbers({0.1, 1.2, 0.3})}};
  const auto plan = expand_plan(base, axes);
  REQUIRE(plan.size() == 3);
  const auto results = run_sweep(plan, 1);
  REQUIRE(results[0].status == SweepStatus::Ok);
  REQUIRE(results[1].status == SweepStatus::Infeasible);
  REQUIRE_FALSE(results[1].report.has_value());
  REQUIRE(results[1].message.find("variation") != std::string::npos);
  REQUIRE(results[2].status == SweepStatus::Ok);
  // Each healthy scenario produces exactly what it produces alone.
  for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
    const auto solo = run_sweep({plan[i]}, 1);
    REQUIRE(solo[0].status == SweepStatus::Ok);
    REQUIRE(solo[0].report->spr == results[i].report->spr);
  }
}

TEST_CASE("endfire steering is excluded as a missteer", "[pipeline]") {
  Scenario base = small_base();
  std::vector<SweepAxis> axes = {{"theta_s_deg", numbers({10, 90})}};
  const auto results = run_sweep(expand_plan(base, axes), 1);
  REQUIRE(results[0].status == SweepStatus::Ok);
  REQUIRE(results[1].status == SweepStatus::Missteer);
}

TEST_CASE("run_sweep on an empty plan") {
  REQUIRE(run_sweep({}, 4).empty());
}

TEST_CASE("average_spr over scenarios", "[pipeline]") {
  Scenario base = small_base();
  base.steering = {10.0, 0.0};
  SECTION("identical scenarios average to the single value") {
    const auto one = evaluate_scenario(base).report.spr;
    const auto avg = average_spr({base, base});
    REQUIRE_THAT(avg.avg_spr, WithinAbs(one, 1e-15));
    REQUIRE(avg.included == 2);
    REQUIRE(avg.excluded == 0);
  }
  SECTION("failures are excluded and counted") {
    Scenario bad = base;
    bad.perturbation = PerturbationTarget{0.01, 1.2};
    const auto avg = average_spr({base, bad});
    REQUIRE(avg.included == 1);
    REQUIRE(avg.excluded == 1);
  }
  SECTION("an empty list is an error") {
    REQUIRE_THROWS_AS(average_spr({}), validation_error);
  }
}

TEST_CASE("aggregate_avg_spr groups in first-appearance order", "[pipeline]") {
  Scenario base = small_base();
  base.steering = {10.0, 0.0};
  std::vector<SweepAxis> axes = {{"theta_s_deg", numbers({10, 30})},
                                 {"gaussian_sigma", numbers({0.5, 0.75})}};
  const auto plan = expand_plan(base, axes);
  const auto results = run_sweep(plan, 1);
  for (const auto& r : results) REQUIRE(r.status == SweepStatus::Ok);

  SECTION("grouping by one axis") {
    const auto rows = aggregate_avg_spr(plan, results, {"theta_s_deg"});
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].key == "theta_s_deg=10");
    REQUIRE(rows[1].key == "theta_s_deg=30");
    REQUIRE(rows[0].included == 2);
    const double expected =
        (results[0].report->spr + results[1].report->spr) / 2.0;
    REQUIRE_THAT(rows[0].avg_spr, WithinAbs(expected, 1e-15));
  }
  SECTION("empty group_by pools everything") {
    const auto rows = aggregate_avg_spr(plan, results, {});
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].included == 4);
  }
  SECTION("mismatched results are rejected") {
    auto short_results = results;
    short_results.pop_back();
    REQUIRE_THROWS_AS(aggregate_avg_spr(plan, short_results, {}), validation_error);
  }
}

TEST_CASE("aggregate_avg_spr rejects groups with no survivors", "[pipeline]") {
  Scenario base = small_base();
  base.steering = {10.0, 0.0};
  std::vector<SweepAxis> axes = {{"var", numbers({0.1, 1.2})}};
  const auto plan = expand_plan(base, axes);
  const auto results = run_sweep(plan, 1);
  REQUIRE(results[1].status == SweepStatus::Infeasible);
  REQUIRE_THROWS_WITH(aggregate_avg_spr(plan, results, {"var"}),
                      ContainsSubstring("var=1.2"));
  // Pooled across the var axis the group still has one survivor.
  REQUIRE(aggregate_avg_spr(plan, results, {}).size() == 1);
}

TEST_CASE("scenario validation") {
  Scenario s = small_base();
  s.cut_lo_deg = 10.0;
  s.cut_hi_deg = -10.0;
  REQUIRE_THROWS_AS(s.validate(), validation_error);
  s = small_base();
  s.perturbation = PerturbationTarget{0.0, 0.1};
  REQUIRE_THROWS_AS(s.validate(), validation_error);
  s = small_base();
  s.perturbation = PerturbationTarget{1.0, -0.2};
  REQUIRE_THROWS_AS(s.validate(), validation_error);
  // A variation of 1.2 passes validation; the solver reports it infeasible
  // at evaluation time so sweeps can record it per-scenario.
  s = small_base();
  s.perturbation = PerturbationTarget{1.0, 1.2};
  REQUIRE_NOTHROW(s.validate());
}
