#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stimtomo/acceptance.hpp"
#include "stimtomo/error.hpp"
#include "stimtomo/experiments.hpp"
#include "stimtomo/io.hpp"
#include "stimtomo/plot.hpp"

using namespace stimtomo;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

struct SimulateArgs {
  std::string source;
  std::string acquisition;
  bool qst = false;
  bool set = false;
  double theta = 0.0;
  double seconds = 1.0;
  std::uint64_t seed = 42;
  bool noiseless = false;
  std::string out = ".";
};

struct ReconstructArgs {
  std::string qst;
  std::string set;
  std::string seed_tomo;
  std::string weights = "none";
  int settings = 36;
  std::uint64_t seed = 0x5e7u;
  std::string out = ".";
};

struct ExperimentArgs {
  std::string spec;
  std::vector<std::string> formats{"json", "csv", "svg"};
  std::optional<double> slope;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
};

struct ValidateArgs {
  std::uint64_t seed = 42;
  int threads = 0;
  std::string out = ".";
};

fs::path out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError(dir + ": cannot create output directory");
  return fs::path(dir);
}

Json load_json(const std::string& path) { return parse_json(read_file(path), path); }

std::vector<MeasurementRecord> load_records(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_records_csv(text);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

int cmd_simulate(const SimulateArgs& a) {
  if (!a.qst && !a.set) throw ConfigError("simulate: pass --qst and/or --set");
  const SourceConfig src = source_from_json(load_json(a.source));
  QstAcquisitionConfig qst;
  SetAcquisitionConfig set;
  SeedDistortion distortion;
  PdlConfig pdl;
  if (!a.acquisition.empty()) {
    const Json j = load_json(a.acquisition);
    if (!j.is_object()) throw ConfigError(a.acquisition + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k == "qst") qst = qst_config_from_json(v);
      else if (k == "set") set = set_config_from_json(v);
      else if (k == "distortion") distortion = distortion_from_json(v);
      else if (k == "pdl") pdl = pdl_from_json(v);
      else throw ConfigError(k + ": unknown field");
    }
  }
  if (!(a.seconds > 0.0)) throw ConfigError("--seconds: must be positive");
  qst.integration_s = a.seconds;
  qst.seed_rng = a.seed;
  set.seed_rng = a.seed;
  if (a.noiseless) {
    qst.expectation_only = true;
    set.intensity_noise_rel = 0.0;
  }
  const fs::path dir = out_dir(a.out);

  Json truth{{"source", to_json(src)}, {"theta_mrad", a.theta}};
  if (a.qst) {
    const auto averaged = angle_averaged_state(src);
    write_file((dir / "qst_records.csv").string(),
               records_csv(simulate_qst_counts(averaged, qst)));
    truth["angle_averaged_state"] = to_json(averaged);
    truth["angle_averaged_metrics"] = to_json(compute_metrics(averaged));
    std::printf("wrote %s\n", (dir / "qst_records.csv").string().c_str());
  }
  if (a.set) {
    const auto state = true_state(src, a.theta);
    write_file((dir / "set_records.csv").string(),
               records_csv(simulate_set_scan(src, a.theta, distortion, pdl, set)));
    SetAcquisitionConfig tomo = set;
    tomo.seed_rng = a.seed + 1;
    write_file((dir / "seed_tomography.csv").string(),
               records_csv(simulate_seed_tomography(distortion, pdl, tomo, a.theta)));
    truth["state_at_theta"] = to_json(state);
    truth["metrics_at_theta"] = to_json(compute_metrics(state));
    std::printf("wrote %s and %s\n", (dir / "set_records.csv").string().c_str(),
                (dir / "seed_tomography.csv").string().c_str());
  }
  write_file((dir / "truth.json").string(), truth.dump(2) + "\n");
  return kOk;
}

int cmd_reconstruct(const ReconstructArgs& a) {
  const bool qst = !a.qst.empty();
  const bool set = !a.set.empty() || !a.seed_tomo.empty();
  if (qst == set) throw ConfigError("reconstruct: pass either --qst or --set with --seed-tomo");
  if (set && (a.set.empty() || a.seed_tomo.empty()))
    throw ConfigError("reconstruct: --set needs --seed-tomo");
  FitOptions fit;
  fit.weighting = a.weights == "inverse-variance" ? Weighting::InverseVariance : Weighting::None;
  fit.settings = a.settings == 16 ? SettingsSubset::Minimal16 : SettingsSubset::All36;
  fit.seed = a.seed;
  const fs::path dir = out_dir(a.out);
  const ReconstructionResult r =
      qst ? reconstruct_qst(load_records(a.qst), fit)
          : reconstruct_set(load_records(a.set), load_records(a.seed_tomo), fit);
  write_file((dir / "result.json").string(), to_json(r).dump(2) + "\n");
  std::printf("%-18s %s\n", "method", qst ? "QST" : "SET");
  std::printf("%-18s %.6f\n", "purity", r.metrics.purity);
  std::printf("%-18s %.6f\n", "concurrence", r.metrics.concurrence);
  std::printf("%-18s %.6f\n", "fidelity_vs_bell", r.metrics.fidelity_vs_bell);
  std::printf("%-18s %.6f\n", "phase_hh_vv", r.metrics.phase_hh_vv);
  std::printf("%-18s %.3e\n", "residual", r.residual);
  std::printf("%-18s %s\n", "converged", r.converged ? "yes" : "no");
  if (!r.converged) {
    std::fprintf(stderr, "fit did not converge; partial result written\n");
    return kNumerical;
  }
  return kOk;
}

int cmd_experiment(const ExperimentArgs& a) {
  ExperimentSpec spec = experiment_spec_from_json(load_json(a.spec));
  if (a.slope) spec.source.phase_slope = *a.slope;
  if (a.seed) spec.seed = *a.seed;
  if (a.threads) spec.threads = *a.threads;
  spec.validate();
  const fs::path dir = out_dir(a.out);
  const auto report = run_experiment(spec);
  const std::string stem = to_string(spec.kind);
  for (const auto& f : a.formats) {
    const fs::path path = dir / (stem + "." + f);
    if (f == "json") write_file(path.string(), to_json(report).dump(2) + "\n");
    else if (f == "csv") write_file(path.string(), report_csv(report));
    else write_file(path.string(), render_svg(report_plot(report)));
    std::printf("wrote %s\n", path.string().c_str());
  }
  for (const auto& [k, v] : report.summary) std::printf("%-34s %s\n", k.c_str(), format_number(v).c_str());
  return kOk;
}

int cmd_validate(const ValidateArgs& a) {
  const fs::path dir = out_dir(a.out);
  AcceptanceOptions opts;
  opts.seed = a.seed;
  opts.threads = a.threads;
  opts.on_result = [](const CriterionResult& r) {
    std::printf("%s  [%.2f s]\n", format_criterion(r).c_str(), r.seconds);
    std::fflush(stdout);
  };
  const auto results = run_acceptance(opts);
  std::string text;
  bool all = true;
  for (const auto& r : results) {
    text += format_criterion(r) + "\n";
    all = all && r.passed;
  }
  write_file((dir / "acceptance.json").string(), to_json(results).dump(2) + "\n");
  write_file((dir / "acceptance.txt").string(), text);
  return all ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and reconstruct two-photon polarisation states by coincidence "
               "tomography and by stimulated-emission tomography"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "write measurement records for a source");
  s->add_option("--source", sim.source, "source config JSON")->required();
  s->add_option("--acquisition", sim.acquisition,
                "JSON with optional qst, set, distortion and pdl objects");
  s->add_flag("--qst", sim.qst, "coincidence counts of the angle-averaged state");
  s->add_flag("--set", sim.set, "stimulated and seed intensities at --theta");
  s->add_option("--theta", sim.theta, "seed angle in mrad");
  s->add_option("--seconds", sim.seconds, "QST integration time per basis pair");
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_flag("--noiseless", sim.noiseless, "Poisson means and noiseless diodes");
  s->add_option("--out", sim.out, "output directory");

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "fit a density matrix to records");
  r->add_option("--qst", rec.qst, "QST records CSV");
  r->add_option("--set", rec.set, "SET records CSV");
  r->add_option("--seed-tomo", rec.seed_tomo, "seed tomography records CSV");
  r->add_option("--weights", rec.weights, "residual weighting")
      ->check(CLI::IsMember({"none", "inverse-variance"}));
  r->add_option("--settings", rec.settings, "measurement settings used")
      ->check(CLI::IsMember({16, 36}));
  r->add_option("--seed", rec.seed, "seed for random restarts");
  r->add_option("--out", rec.out, "output directory");

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "run an experiment spec");
  e->add_option("spec", exp.spec, "experiment spec JSON")->required();
  e->add_option("--format", exp.formats, "json, csv and/or svg")
      ->delimiter(',')
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  e->add_option("--slope", exp.slope, "override the phase slope (rad/mrad)");
  e->add_option("--seed", exp.seed, "override the RNG seed");
  e->add_option("--threads", exp.threads, "worker threads, 0 for all cores");
  e->add_option("--out", exp.out, "output directory");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "run the acceptance suite");
  v->add_option("--seed", val.seed, "RNG seed");
  v->add_option("--threads", val.threads, "worker threads, 0 for all cores");
  v->add_option("--out", val.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfig;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*r) return cmd_reconstruct(rec);
    if (*e) return cmd_experiment(exp);
    return cmd_validate(val);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kConfig;
  } catch (const DataError& err) {
    std::fprintf(stderr, "data error: %s\n", err.what());
    return kData;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "numerical error: %s\n", err.what());
    return kNumerical;
  }
}
