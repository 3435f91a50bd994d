#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stimtomo/error.hpp"
#include "stimtomo/experiments.hpp"
#include "stimtomo/quadrature.hpp"

using namespace stimtomo;

namespace {

const ReportPoint& only_point(const ExperimentReport& r) {
  REQUIRE(r.points.size() == 1);
  return r.points.front();
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  for (auto k : {ExperimentKind::BellCompare, ExperimentKind::ConcurrenceSweep,
                 ExperimentKind::PuritySweep, ExperimentKind::AngleScan,
                 ExperimentKind::PdlDemo, ExperimentKind::AngleAverage}) {
    CHECK(experiment_kind_from_string(to_string(k)) == k);
    CHECK_NOTHROW(default_spec(k).validate());
  }
  CHECK_THROWS_AS(experiment_kind_from_string("fig6"), ConfigError);
}

TEST_CASE("spec validation") {
  auto s = default_spec(ExperimentKind::ConcurrenceSweep);
  s.sweep.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = default_spec(ExperimentKind::PuritySweep);
  s.replicates = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = default_spec(ExperimentKind::AngleScan);
  s.sweep = {-1, 1};
  CHECK_THROWS_AS(run_angle_scan(s), ConfigError);
  s = default_spec(ExperimentKind::AngleAverage);
  s.sweep = {2.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = default_spec(ExperimentKind::PdlDemo);
  s.pdl_cases.push_back({"bad", -1.0, 1.0});
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("line fit, unwrap and Gaussian width helpers") {
  const std::vector<double> x{-2, -1, 0, 1, 2};
  std::vector<double> y;
  for (double t : x) y.push_back(0.7 * t - 0.2);
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(-0.2).epsilon(1e-14));
  // Weights do not change an exact line.
  CHECK(fit_line(x, y, {1, 5, 2, 9, 0.1}).slope == doctest::Approx(0.7).epsilon(1e-12));
  // A weight concentrated on two points gives their chord.
  const auto w = fit_line({0, 1, 2}, {0, 1, 5}, {1, 1, 0});
  CHECK(w.slope == doctest::Approx(1.0));

  const double pi = std::numbers::pi;
  std::vector<double> wrapped, truth;
  for (int k = 0; k < 20; ++k) {
    truth.push_back(0.9 * k);
    wrapped.push_back(std::remainder(0.9 * k, 2 * pi));
  }
  const auto un = unwrap_phases(wrapped);
  for (std::size_t k = 0; k < un.size(); ++k) CHECK(un[k] == doctest::Approx(truth[k]));

  std::vector<double> gx, gy;
  for (int k = -5; k <= 5; ++k) {
    gx.push_back(0.8 * k);
    gy.push_back(3.0 * std::exp(-0.5 * std::pow((0.8 * k - 0.3) / 2.2, 2)));
  }
  CHECK(gaussian_width(gx, gy) == doctest::Approx(2.2).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_width({0, 1, 2}, {4, 2, 4}), NumericalError);
}

TEST_CASE("PDL cases map ratios to amplitude transmissions") {
  for (double r : {1.0, 10.5, 11.6, 1.16, 0.064}) {
    const PdlCase c{"x", r, r};
    const auto cfg = c.to_config();
    CHECK(cfg.signal_ratio_hv() == doctest::Approx(r).epsilon(1e-14));
    CHECK(std::max(cfg.signal_loss_hv[0], cfg.signal_loss_hv[1]) == 1.0);
  }
}

TEST_CASE("bell_compare without systematics: identical truth") {
  auto s = default_spec(ExperimentKind::BellCompare);
  s.source.phase_slope = 0.0;
  s.set_theta_mrad = 0.0;
  const auto r = run_bell_compare(s);
  const auto& p = only_point(r);
  CHECK(p.extra.at("mutual_fidelity") >= 1 - 1e-6);
  CHECK(std::abs(p.extra.at("phase_difference")) <= 1e-6);
  CHECK(p.qst->fidelity_vs_bell >= 1 - 1e-6);
  CHECK(p.set->fidelity_vs_bell >= 1 - 1e-6);
}

TEST_CASE("bell_compare with an angle-dependent phase") {
  auto s = default_spec(ExperimentKind::BellCompare);
  s.source.phase_slope = 0.312;
  s.source.collection_halfwidth_mrad = 4.0;
  s.set_theta_mrad = 1.0;
  const auto r = run_bell_compare(s);
  const auto& p = only_point(r);
  // Symmetric window: the averaged phase stays at phase0, so the offset is
  // the slope times the seed angle.
  CHECK(p.extra.at("phase_difference") == doctest::Approx(0.312).epsilon(1e-6));
  CHECK(r.summary.at("expected_phase_difference") == doctest::Approx(0.312).epsilon(1e-9));
  CHECK(p.extra.at("aligned_fidelity") > p.extra.at("mutual_fidelity"));
  // Averaging over the window lowers the QST coherence.
  CHECK(p.qst->concurrence == doctest::Approx(p.extra.at("truth_averaged_concurrence")).epsilon(1e-6));
  CHECK(p.set->concurrence == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bell_compare with noise stays near Bell") {
  auto s = default_spec(ExperimentKind::BellCompare);
  s.source.phase_slope = 0.0;
  s.set_theta_mrad = 0.0;
  s.noise = true;
  s.replicates = 15;
  const auto r = run_bell_compare(s);
  CHECK(r.points.size() == 15);
  CHECK(r.summary.at("median_qst_fidelity_bell") >= 0.99);
  CHECK(r.summary.at("median_set_fidelity_bell") >= 0.99);
  for (int k = 0; k < 15; ++k) CHECK(r.points[k].replicate == k);
}

TEST_CASE("concurrence sweep at zero noise follows the closed form") {
  auto s = default_spec(ExperimentKind::ConcurrenceSweep);
  s.source.phase0 = 0.3;
  const auto r = run_concurrence_sweep(s);
  CHECK(r.points.size() == 11);
  for (const auto& p : r.points) {
    const double c = 2 * std::sqrt(p.value * (1 - p.value));
    CHECK(std::abs(p.qst->concurrence - c) <= 1e-6);
    CHECK(std::abs(p.set->concurrence - c) <= 1e-6);
    CHECK(std::abs(p.set->concurrence - p.qst->concurrence) <= 1e-6);
  }
  CHECK(r.summary.at("max_median_abs_dev_set") <= 1e-6);
  CHECK(r.curve.front().y == 0.0);
  CHECK(r.curve[50].y == doctest::Approx(1.0));
}

TEST_CASE("purity sweep at zero noise lies on y = x") {
  const auto r = run_purity_sweep(default_spec(ExperimentKind::PuritySweep));
  CHECK(r.points.size() == 6);
  CHECK(r.points.front().qst->purity == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(r.points.back().set->purity - 1.0) <= 1e-6);
  CHECK(r.summary.at("max_abs_delta_purity") <= 1e-6);
}

TEST_CASE("angle scan recovers the injected slope") {
  for (double slope : {0.0, 0.312, 0.461, -1.0, 1.0}) {
    auto s = default_spec(ExperimentKind::AngleScan);
    s.source.phase_slope = slope;
    const auto r = run_angle_scan(s);
    CHECK(std::abs(r.summary.at("slope") - slope) <= 1e-8);
    CHECK(r.summary.at("envelope_sigma_mrad") ==
          doctest::Approx(effective_sigma_mrad(s.source)).epsilon(1e-9));
    for (const auto& p : r.points) {
      CHECK(!p.qst);
      CHECK(!p.skip_reason.empty());
    }
  }
  auto s = default_spec(ExperimentKind::AngleScan);
  s.weighted_slope_fit = true;
  CHECK(run_angle_scan(s).summary.at("slope") == doctest::Approx(0.312).epsilon(1e-8));
}

TEST_CASE("PDL demo: matched loss is harmless, mismatched loss is not") {
  const auto r = run_pdl_demo(default_spec(ExperimentKind::PdlDemo));
  REQUIRE(r.points.size() == 3);
  const double truth = r.summary.at("truth_concurrence");
  CHECK(truth == doctest::Approx(0.916).epsilon(1e-12));
  CHECK(r.points[0].label == "none");
  CHECK(std::abs(r.points[0].set->concurrence - truth) <= 1e-6);
  CHECK(std::abs(r.points[1].set->concurrence - truth) <= 0.01);
  CHECK(r.points[1].extra.at("signal_ratio_hv") == doctest::Approx(10.5));
  CHECK(truth - r.points[2].set->concurrence >= 0.3);
  for (const auto& p : r.points) CHECK(std::abs(p.qst->concurrence - truth) <= 1e-6);
}

TEST_CASE("angle averaging reconciles SET with QST") {
  auto s = default_spec(ExperimentKind::AngleAverage);
  s.source.phase_slope = 0.312;
  const auto r = run_angle_average(s);
  REQUIRE(r.points.size() == 2);
  const double coarse = r.points[0].extra.at("fidelity_average_vs_qst");
  const double fine = r.points[1].extra.at("fidelity_average_vs_qst");
  CHECK(fine >= 0.999);
  CHECK(coarse < fine);

  s.source.phase_slope = 0.0;
  s.sweep = {5};
  const auto flat = run_angle_average(s);
  CHECK(only_point(flat).extra.at("fidelity_average_vs_qst") >= 1 - 1e-9);
}

TEST_CASE("reports do not depend on the thread count") {
  auto s = default_spec(ExperimentKind::PuritySweep);
  s.noise = true;
  s.replicates = 2;
  s.threads = 1;
  const auto a = run_purity_sweep(s);
  s.threads = 4;
  const auto b = run_purity_sweep(s);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].value == b.points[i].value);
    CHECK(a.points[i].set->purity == b.points[i].set->purity);
    CHECK(a.points[i].qst->purity == b.points[i].qst->purity);
  }
  // Different seeds give different noisy data.
  s.seed = 7;
  CHECK(run_purity_sweep(s).points[0].qst->purity != a.points[0].qst->purity);
}
