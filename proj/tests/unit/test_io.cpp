#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "stimtomo/error.hpp"
#include "stimtomo/io.hpp"
#include "stimtomo/plot.hpp"

using namespace stimtomo;

TEST_CASE("format_number is shortest round-trip") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1234.0) == "1234");
  CHECK(format_number(0.1) == "0.1");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng);
    CHECK(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("density matrices survive JSON") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto rho = fixtures::random_state(rng);
    const auto back = density_from_json(parse_json(to_json(rho).dump(), "rho"));
    CHECK(back == rho);
  }
  CHECK_THROWS_AS(density_from_json(Json{{"dim", 3}}), DataError);
}

TEST_CASE("source config parsing is strict") {
  const auto s = source_from_json(parse_json(R"({"alpha_sq": 0.3, "phase_slope": 0.461})", "s"));
  CHECK(s.alpha_sq == 0.3);
  CHECK(s.phase_slope == 0.461);
  CHECK(s.collection_halfwidth_mrad == 5.0);

  // A waist without an explicit half-width sets it: 800 nm / (pi 50 um).
  const auto w = source_from_json(Json{{"waist_qst_um", 50.0}});
  CHECK(w.collection_halfwidth_mrad == doctest::Approx(800.0 / (M_PI * 50.0)).epsilon(1e-14));
  CHECK(w.collection_halfwidth_mrad == doctest::Approx(5.093).epsilon(1e-3));
  const auto both = source_from_json(Json{{"waist_qst_um", 50.0}, {"collection_halfwidth_mrad", 4.0}});
  CHECK(both.collection_halfwidth_mrad == 4.0);

  auto message = [](const Json& j) {
    try {
      source_from_json(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(Json{{"alpha", 0.5}}).find("alpha") != std::string::npos);
  CHECK(message(Json{{"alpha_sq", "half"}}).find("alpha_sq") != std::string::npos);
  CHECK(message(Json{{"alpha_sq", 1.5}}).find("alpha_sq") != std::string::npos);
  CHECK(message(Json{{"quadrature_nodes", 40.5}}).find("quadrature_nodes") != std::string::npos);
  CHECK_THROWS_AS(source_from_json(Json::array()), ConfigError);
  CHECK_THROWS_AS(parse_json("{", "broken.json"), ConfigError);
}

TEST_CASE("configs round-trip through JSON") {
  SourceConfig s;
  s.alpha_sq = 0.2;
  s.decoherence = 0.7;
  CHECK(to_json(source_from_json(to_json(s))) == to_json(s));
  QstAcquisitionConfig q;
  q.integration_s = 3.0;
  q.expectation_only = true;
  CHECK(to_json(qst_config_from_json(to_json(q))) == to_json(q));
  SetAcquisitionConfig a;
  a.coupling_idler = 4.0;
  a.seed_rng = 0xffffffffffffffffull;
  CHECK(set_config_from_json(to_json(a)).seed_rng == a.seed_rng);
  FitOptions f;
  f.weighting = Weighting::InverseVariance;
  f.settings = SettingsSubset::Minimal16;
  f.init = InitStrategy::Mixed;
  const auto f2 = fit_options_from_json(to_json(f));
  CHECK(f2.weighting == f.weighting);
  CHECK(f2.settings == f.settings);
  CHECK(f2.init == f.init);
  CHECK_THROWS_AS(fit_options_from_json(Json{{"settings", 20}}), ConfigError);
  PdlConfig p;
  p.idler_loss_hv = {0.5, 1.0};
  CHECK(pdl_from_json(to_json(p)).idler_loss_hv == p.idler_loss_hv);
  CHECK_THROWS_AS(pdl_from_json(Json{{"idler_loss_hv", {1.0}}}), ConfigError);
  SeedDistortion d{0.2, 1.1};
  CHECK(distortion_from_json(to_json(d)).amp_ratio == 1.1);
}

TEST_CASE("experiment specs start from the experiment defaults") {
  const auto s = experiment_spec_from_json(Json{{"name", "pdl_demo"}});
  CHECK(s.kind == ExperimentKind::PdlDemo);
  CHECK(s.pdl_cases.size() == 3);
  CHECK(s.source.decoherence == 0.916);
  const auto t = experiment_spec_from_json(
      Json{{"name", "angle_scan"}, {"source", {{"phase_slope", 0.461}}}, {"replicates", 2}});
  CHECK(t.source.phase_slope == 0.461);
  CHECK(t.replicates == 2);
  CHECK(t.sweep.size() == 9);
  CHECK(to_json(experiment_spec_from_json(to_json(t))) == to_json(t));
  CHECK_THROWS_AS(experiment_spec_from_json(Json{{"name", "nope"}}), ConfigError);
  CHECK_THROWS_AS(experiment_spec_from_json(Json::object()), ConfigError);
  try {
    experiment_spec_from_json(Json{{"name", "angle_scan"}, {"source", {{"bogus", 1}}}});
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("source.bogus") != std::string::npos);
  }
}

TEST_CASE("records CSV round-trips exactly") {
  QstAcquisitionConfig q;
  q.seed_rng = 9;
  auto rec = simulate_qst_counts(bell_state(0.4), q);
  SetAcquisitionConfig a;
  a.seed_rng = 4;
  SourceConfig src;
  const auto set = simulate_set_scan(src, 1.3, {0.1, 1.1}, {}, a);
  rec.insert(rec.end(), set.begin(), set.end());
  const std::string text = records_csv(rec);
  CHECK(text.rfind("kind,signal,idler,port,value,theta_mrad,rng_seed\n", 0) == 0);
  CHECK(parse_records_csv(text) == rec);
  // Counts are printed as integers.
  CHECK(text.find("qst_count,H,H,transmitted,") != std::string::npos);
  CHECK(records_csv(parse_records_csv(text)) == text);
}

TEST_CASE("records CSV errors carry the line number") {
  auto err = [](const std::string& text) {
    try {
      parse_records_csv(text);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "kind,signal,idler,port,value,theta_mrad,rng_seed\n";
  CHECK(err("") .find("line 1") != std::string::npos);
  CHECK(err("a,b\n").find("line 1") != std::string::npos);
  CHECK(err(header).find("no data") != std::string::npos);
  CHECK(err(header + "qst_count,H,H,transmitted,5,0,1\nqst_count,H,V\n").find("line 3") !=
        std::string::npos);
  CHECK(err(header + "qst_count,X,H,transmitted,5,0,1\n").find("signal") != std::string::npos);
  CHECK(err(header + "qst_count,H,H,sideways,5,0,1\n").find("line 2") != std::string::npos);
  CHECK(err(header + "qst_count,H,H,transmitted,five,0,1\n").find("value") != std::string::npos);
  CHECK(err(header + "qst_count,H,H,transmitted,-1,0,1\n").find("nonnegative") != std::string::npos);
  CHECK(err(header + "qst_count,H,H,transmitted,1,0,-1\n").find("rng_seed") != std::string::npos);
  CHECK(err(header + "photon,H,H,transmitted,1,0,1\n").find("line 2") != std::string::npos);
  // Windows line endings are accepted.
  CHECK(parse_records_csv("kind,signal,idler,port,value,theta_mrad,rng_seed\r\n"
                          "qst_count,H,H,transmitted,5,0,1\r\n")
            .size() == 1);
}

TEST_CASE("reconstruction results serialise with their audit trail") {
  QstAcquisitionConfig q;
  q.expectation_only = true;
  const auto r = reconstruct_qst(simulate_qst_counts(bell_state(), q));
  const Json j = to_json(r);
  CHECK(j.at("audit").size() == 36);
  CHECK(j.at("audit")[0].at("operator_hash").get<std::string>().size() == 16);
  CHECK(j.at("converged").get<bool>());
  CHECK(density_from_json(j.at("rho")) == r.rho);
  CHECK(j.at("metrics").at("concurrence").get<double>() == r.metrics.concurrence);
}

TEST_CASE("report CSV and JSON carry every point") {
  ExperimentReport rep;
  rep.name = "concurrence_sweep";
  rep.parameter = "alpha_sq";
  ReportPoint a;
  a.value = 0.5;
  a.qst = Metrics{1, 1, 1, 0};
  a.set = Metrics{1, 1, 1, 0};
  a.extra["x"] = 2.5;
  ReportPoint b;
  b.value = 0.1;
  b.skip_reason = "no data, really";
  b.extra["y"] = 1.0;
  rep.points = {b, a};
  rep.curve = {{0, 0}, {0.5, 1}};
  const auto csv = report_csv(rep);
  CHECK(csv.rfind("alpha_sq,label,replicate,truth_purity", 0) == 0);
  CHECK(csv.find(",x,y,skip_reason\n") != std::string::npos);
  CHECK(csv.find("no data; really") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const Json j = to_json(rep);
  CHECK(j.at("points").size() == 2);
  CHECK(j.at("points")[0].at("qst").is_null());
  CHECK(j.at("points")[1].at("set").at("purity").get<double>() == 1.0);

  const auto svg = render_svg(report_plot(rep));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("2 sqrt(a(1-a))") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("acceptance results serialise without timings") {
  std::vector<CriterionResult> r{{1, "one", true, "ok", 3.5}, {2, "two", false, "bad", 0.1}};
  const Json j = to_json(r);
  CHECK_FALSE(j.at("all_passed").get<bool>());
  CHECK(j.dump().find("3.5") == std::string::npos);
  CHECK(format_criterion(r[1]) == "FAIL  2 two: bad");
}
