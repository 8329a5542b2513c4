#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

#include "opa/lobe_analysis.hpp"
#include "opa/sweep.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace opa;

namespace {

PatternCut make_cut(double lo, double hi, double res,
                    const std::function<double(double)>& fn) {
  PatternCut cut;
  cut.resolution_deg = res;
  cut.theta_deg = uniform_angles(lo, hi, res);
  cut.intensity.reserve(cut.theta_deg.size());
  for (double t : cut.theta_deg) cut.intensity.push_back(fn(t));
  cut.normalization = 1.0;
  return cut;
}

double bump(double t, double center, double width, double height) {
  const double x = (t - center) / width;
  return height * std::exp(-x * x);
}

Scenario m14_scenario(double psi_max_deg, PhaseStrategy strategy) {
  Scenario s;
  s.array = {100, 100, 0.5, 0.5};
  s.steering = {steering_from_M(14.0, 0.5), 0.0};
  s.phase_limit = {psi_max_deg, strategy};
  return s;
}

}  // namespace

TEST_CASE("detect_lobes recovers an off-grid parabola vertex exactly") {
  const auto cut = make_cut(-10.0, 10.0, 0.1, [](double t) {
    return std::max(0.0, 1.0 - 0.1 * (t - 3.07) * (t - 3.07));
  });
  const auto lobes = detect_lobes(cut);
  REQUIRE(lobes.size() == 1);
  REQUIRE_THAT(lobes[0].angle_deg, WithinAbs(3.07, 1e-6));
  REQUIRE_THAT(lobes[0].intensity, WithinAbs(1.0, 1e-9));
}

TEST_CASE("detect_lobes strictness") {
  SECTION("span endpoints are never lobes") {
    REQUIRE(detect_lobes(make_cut(0.0, 10.0, 0.5, [](double t) { return t; })).empty());
    REQUIRE(detect_lobes(make_cut(0.0, 10.0, 0.5, [](double t) { return 20.0 - t; }))
                .empty());
  }
  SECTION("a flat plateau has no strict maximum") {
    const auto cut = make_cut(-5.0, 5.0, 0.5, [](double t) {
      return std::min(1.0, std::max(0.0, 3.0 - std::fabs(t)));
    });
    REQUIRE(detect_lobes(cut).empty());
  }
  SECTION("equal twin peaks are both reported") {
    const auto cut = make_cut(-30.0, 30.0, 0.1, [](double t) {
      return bump(t, -12.0, 2.0, 0.8) + bump(t, 12.0, 2.0, 0.8);
    });
    const auto lobes = detect_lobes(cut);
    REQUIRE(lobes.size() == 2);
    REQUIRE_THAT(lobes[0].angle_deg, WithinAbs(-12.0, 1e-3));
    REQUIRE_THAT(lobes[1].angle_deg, WithinAbs(12.0, 1e-3));
  }
}

TEST_CASE("detect_lobes floor") {
  const auto cut = make_cut(-30.0, 30.0, 0.1, [](double t) {
    return bump(t, 0.0, 1.5, 1.0) + bump(t, 15.0, 1.5, 1e-9) +
           bump(t, -20.0, 1.5, 1e-7);
  });
  SECTION("default floor is 1e-8 of the global maximum") {
    const auto lobes = detect_lobes(cut);
    REQUIRE(lobes.size() == 2);  // the 1e-9 bump is below the floor
  }
  SECTION("explicit floor") {
    REQUIRE(detect_lobes(cut, 0.5).size() == 1);
    REQUIRE(detect_lobes(cut, 0.0).size() == 3);
  }
  REQUIRE_THROWS_AS(detect_lobes(PatternCut{}), validation_error);
}

TEST_CASE("measure_fwhm") {
  SECTION("triangular lobe has its exact linear width") {
    const auto cut = make_cut(-20.0, 20.0, 0.5, [](double t) {
      return std::max(0.0, 1.0 - std::fabs(t - 2.0) / 5.0);
    });
    REQUIRE_THAT(measure_fwhm(cut, 2.0, 1.0), WithinAbs(5.0, 1e-9));
  }
  SECTION("one-sided measurement doubles the visible half") {
    const auto cut = make_cut(-90.0, 90.0, 0.5, [](double t) {
      return std::max(0.0, 1.0 - std::fabs(t - 88.0) / 10.0);
    });
    REQUIRE_THAT(measure_fwhm(cut, 88.0, 1.0), WithinAbs(10.0, 1e-9));
  }
  SECTION("no crossing in span") {
    const auto cut = make_cut(-10.0, 10.0, 0.5, [](double) { return 1.0; });
    REQUIRE_THROWS_AS(measure_fwhm(cut, 0.0, 1.0), validation_error);
  }
}

TEST_CASE("sample_intensity interpolates linearly") {
  const auto cut = make_cut(-10.0, 10.0, 0.5, [](double t) { return 2.0 * t + 25.0; });
  REQUIRE_THAT(sample_intensity(cut, 3.33), WithinAbs(2.0 * 3.33 + 25.0, 1e-12));
  REQUIRE_THAT(sample_intensity(cut, -10.0), WithinAbs(5.0, 1e-12));
  REQUIRE_THAT(sample_intensity(cut, 10.0), WithinAbs(45.0, 1e-12));
  REQUIRE_THROWS_AS(sample_intensity(cut, 10.01), validation_error);
  REQUIRE_THROWS_AS(sample_intensity(cut, -10.01), validation_error);
}

TEST_CASE("classify_lobes") {
  SECTION("grating comb around broadside at pitch 2") {
    const std::vector<DetectedLobe> detected = {
        {-90.0, 0.4}, {-30.0, 0.6}, {0.0, 1.0}, {30.0, 0.6}, {90.0, 0.4}};
    const auto lobes = classify_lobes(detected, {0.0, 0.0}, 2.0, 1);
    REQUIRE(lobes.size() == 5);
    REQUIRE(lobes[0].kind == LobeKind::Grating);
    REQUIRE(lobes[0].order == -2);
    REQUIRE(lobes[1].kind == LobeKind::Grating);
    REQUIRE(lobes[1].order == -1);
    REQUIRE(lobes[2].kind == LobeKind::Main);
    REQUIRE(lobes[3].order == 1);
    REQUIRE(lobes[4].order == 2);
  }
  SECTION("lpgl lattice and a stray side lobe") {
    const double theta = steering_from_M(14.0, 0.5);
    const double s = sin_deg(theta);
    const std::vector<DetectedLobe> detected = {
        {rad_to_deg(std::asin(-2.0 * s)), 0.02},
        {0.0, 0.03},
        {rad_to_deg(std::asin(2.0 * s)), 0.02},
        {theta, 1.0},
        {50.0, 0.01}};
    const auto lobes = classify_lobes(detected, {theta, 0.0}, 0.5, 1);
    REQUIRE(lobes[0].kind == LobeKind::Lpgl);
    REQUIRE(lobes[0].order == -2);
    REQUIRE(lobes[1].kind == LobeKind::Lpgl);
    REQUIRE(lobes[1].order == 0);
    REQUIRE(lobes[2].kind == LobeKind::Lpgl);
    REQUIRE(lobes[2].order == 2);
    REQUIRE(lobes[3].kind == LobeKind::Main);
    REQUIRE(lobes[4].kind == LobeKind::Side);
    REQUIRE_FALSE(lobes[4].prediction_error_deg.has_value());
  }
  SECTION("a pinned main index wins over the strongest-in-window rule") {
    const std::vector<DetectedLobe> detected = {{9.95, 1.0}, {10.02, 0.9}};
    const auto pinned = classify_lobes(detected, {10.0, 0.0}, 0.5, 1, 0.1,
                                       std::optional<std::size_t>{1});
    REQUIRE(pinned[1].kind == LobeKind::Main);
    REQUIRE(pinned[0].kind != LobeKind::Main);
    const auto free = classify_lobes(detected, {10.0, 0.0}, 0.5, 1, 0.1);
    REQUIRE(free[0].kind == LobeKind::Main);
  }
  SECTION("matching honors the tolerance") {
    const std::vector<DetectedLobe> detected = {{10.0, 1.0}, {0.3, 0.1}};
    // 0.3 degrees from the l = 0 line with tolerance 0.1: stays Side.
    const auto lobes = classify_lobes(detected, {10.0, 0.0}, 0.5, 1, 0.1);
    REQUIRE(lobes[1].kind == LobeKind::Side);
    const auto loose = classify_lobes(detected, {10.0, 0.0}, 0.5, 1, 0.5);
    REQUIRE(loose[1].kind == LobeKind::Lpgl);
    REQUIRE(loose[1].order == 0);
  }
}

TEST_CASE("sidelobe_to_peak on synthetic cuts") {
  const auto cut = make_cut(-90.0, 90.0, 0.05, [](double t) {
    return bump(t, 10.0, 0.5, 1.0) + bump(t, 11.5, 0.4, 0.3) +
           bump(t, 25.0, 0.5, 0.5) + bump(t, -40.0, 0.5, 0.125);
  });
  SECTION("shoulders inside the exclusion window are not secondaries") {
    const auto report = sidelobe_to_peak(cut, {10.0, 0.0}, 2.0);
    REQUIRE_THAT(report.spr, WithinAbs(0.5, 1e-3));
    REQUIRE_THAT(report.main_angle_deg, WithinAbs(10.0, 1e-3));
    REQUIRE(report.main_lobe_angle_error_deg <= 1e-3);
    // Main + the 25 and -40 degree bumps; the 11.5 shoulder is excluded.
    REQUIRE(report.lobes.size() == 3);
  }
  SECTION("field-of-view restriction") {
    AnalysisOptions options;
    options.fov_deg = 30.0;
    const auto narrow = sidelobe_to_peak(cut, {10.0, 0.0}, 2.0, options);
    REQUIRE_THAT(narrow.spr, WithinAbs(0.5, 1e-3));
    options.fov_deg = 20.0;
    const auto tight = sidelobe_to_peak(cut, {10.0, 0.0}, 2.0, options);
    REQUIRE(tight.spr < 1e-6);  // both secondaries outside the FoV
  }
  SECTION("spr is invariant under intensity rescaling") {
    PatternCut scaled = cut;
    for (double& v : scaled.intensity) v *= 4.0;  // exact in binary
    const auto a = sidelobe_to_peak(cut, {10.0, 0.0}, 2.0);
    const auto b = sidelobe_to_peak(scaled, {10.0, 0.0}, 2.0);
    REQUIRE(a.spr == b.spr);
  }
  SECTION("a displaced global maximum is a missteer") {
    REQUIRE_THROWS_AS(sidelobe_to_peak(cut, {25.0, 0.0}, 2.0), missteer_error);
    const auto ramp = make_cut(-90.0, 90.0, 0.5, [](double t) { return t + 100.0; });
    REQUIRE_THROWS_AS(sidelobe_to_peak(ramp, {0.0, 0.0}, 2.0), missteer_error);
  }
  SECTION("parameter validation") {
    REQUIRE_THROWS_AS(sidelobe_to_peak(cut, {10.0, 0.0}, 0.0), validation_error);
  }
}

TEST_CASE("average_spr_of") {
  REQUIRE_THAT(average_spr_of({{0.5}}).avg_spr, WithinAbs(0.5, 1e-15));
  const auto mixed = average_spr_of({{0.2}, std::nullopt, {0.4}, std::nullopt});
  REQUIRE_THAT(mixed.avg_spr, WithinAbs(0.3, 1e-15));
  REQUIRE(mixed.included == 2);
  REQUIRE(mixed.excluded == 2);
  REQUIRE_THROWS_AS(average_spr_of({}), validation_error);
  REQUIRE_THROWS_AS(average_spr_of({std::nullopt, std::nullopt}), validation_error);
}

// ---------------------------------------------------------------------------
// Full-pipeline checks at production scale (201x201 pixels, 0.01 deg cuts).

TEST_CASE("ideal steering to 10 degrees has a deep sidelobe floor", "[pipeline]") {
  Scenario s;
  s.array = {100, 100, 0.5, 0.5};
  s.steering = {10.0, 0.0};
  const auto outcome = evaluate_scenario(s);
  REQUIRE(outcome.report.spr < 1e-3);
  REQUIRE(outcome.report.main_lobe_angle_error_deg <= 0.02);
  REQUIRE_THAT(outcome.report.main_lobe_fwhm_deg, WithinAbs(0.92, 0.05));
  REQUIRE_THAT(outcome.reference_fwhm_deg,
               WithinAbs(outcome.report.main_lobe_fwhm_deg, 1e-9));
  REQUIRE_THAT(outcome.exclusion_deg, WithinAbs(3.0 * outcome.reference_fwhm_deg, 1e-12));
}

TEST_CASE("phase-range compensation strategies rank as expected", "[pipeline]") {
  for (double psi_max : {240.0, 330.0}) {
    const auto hh =
        evaluate_scenario(m14_scenario(psi_max, PhaseStrategy::ReplaceHalfHalf));
    const auto up =
        evaluate_scenario(m14_scenario(psi_max, PhaseStrategy::ReplaceByPsiMax));
    const auto down =
        evaluate_scenario(m14_scenario(psi_max, PhaseStrategy::ReplaceBy2Pi));
    REQUIRE(hh.report.spr <= up.report.spr);
    REQUIRE(up.report.spr <= down.report.spr);
    if (psi_max != 240.0) continue;
    // With a strong truncation comb the residual lobes live on the LPGL
    // lattice; near-full ranges bury the comb under the window floor.
    auto secondaries = hh.report.lobes;
    secondaries.erase(std::remove_if(secondaries.begin(), secondaries.end(),
                                     [](const Lobe& l) { return l.kind == LobeKind::Main; }),
                      secondaries.end());
    std::sort(secondaries.begin(), secondaries.end(),
              [](const Lobe& a, const Lobe& b) { return a.intensity > b.intensity; });
    for (std::size_t i = 0; i < std::min<std::size_t>(4, secondaries.size()); ++i) {
      REQUIRE(secondaries[i].kind == LobeKind::Lpgl);
      REQUIRE(*secondaries[i].prediction_error_deg <= 0.1);
    }
  }
  // A wider realizable range never hurts, strategy by strategy.
  for (auto strat : {PhaseStrategy::ReplaceHalfHalf, PhaseStrategy::ReplaceByPsiMax,
                     PhaseStrategy::ReplaceBy2Pi}) {
    REQUIRE(evaluate_scenario(m14_scenario(330.0, strat)).report.spr <=
            evaluate_scenario(m14_scenario(240.0, strat)).report.spr);
  }
}

TEST_CASE("skip strategy below threshold missteers the beam", "[pipeline]") {
  REQUIRE_THROWS_AS(evaluate_scenario(m14_scenario(240.0, PhaseStrategy::Skip)),
                    missteer_error);
}

TEST_CASE("integer-period phase truncation populates the LPGL comb", "[pipeline]") {
  const auto outcome =
      evaluate_scenario(m14_scenario(270.0, PhaseStrategy::ReplaceHalfHalf));
  REQUIRE(outcome.report.spr > 1e-3);
  REQUIRE(outcome.report.spr < 5e-2);
  int lpgl_count = 0;
  for (const auto& lobe : outcome.report.lobes)
    if (lobe.kind == LobeKind::Lpgl) ++lpgl_count;
  REQUIRE(lpgl_count >= 8);
}

TEST_CASE("integer-P_d ripple pumps two LPGL orders", "[pipeline]") {
  Scenario s = m14_scenario(360.0, PhaseStrategy::ReplaceHalfHalf);
  s.perturbation = PerturbationTarget{1.0, 0.3};
  const auto outcome = evaluate_scenario(s);
  auto secondaries = outcome.report.lobes;
  secondaries.erase(std::remove_if(secondaries.begin(), secondaries.end(),
                                   [](const Lobe& l) { return l.kind == LobeKind::Main; }),
                    secondaries.end());
  std::sort(secondaries.begin(), secondaries.end(),
            [](const Lobe& a, const Lobe& b) { return a.intensity > b.intensity; });
  REQUIRE(secondaries.size() >= 2);
  // P_d = 1 pumps l = 1 -+ 1: broadside and the doubled-sine line at 16.6 deg.
  REQUIRE(secondaries[0].kind == LobeKind::Lpgl);
  REQUIRE(secondaries[1].kind == LobeKind::Lpgl);
  const int lo = std::min(secondaries[0].order, secondaries[1].order);
  const int hi = std::max(secondaries[0].order, secondaries[1].order);
  REQUIRE(lo == 0);
  REQUIRE(hi == 2);
  REQUIRE_THAT(secondaries[0].intensity, WithinRel(secondaries[1].intensity, 0.05));
  REQUIRE_THAT(secondaries[0].intensity + secondaries[1].intensity,
               WithinAbs(2.0 * 2.25e-2, 0.5e-2));
}
