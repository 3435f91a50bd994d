#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "stimtomo/acquisition.hpp"
#include "stimtomo/error.hpp"
#include "stimtomo/reconstruction.hpp"

using namespace stimtomo;

namespace {

MeasurementRecord qst(PolLabel s, PolLabel i, double value) {
  const Port port = s == transmitted_label(basis_of(s)) ? Port::Transmitted
                                                        : Port::Reflected;
  return {RecordKind::QstCount, {s, i}, port, value};
}

std::vector<MeasurementRecord> exact_qst(const DensityMatrix& rho) {
  QstAcquisitionConfig cfg;
  cfg.expectation_only = true;
  return simulate_qst_counts(rho, cfg);
}

SetAcquisitionConfig noiseless(double eps_ratio = 1.0) {
  SetAcquisitionConfig acq;
  acq.intensity_noise_rel = 0.0;
  acq.coupling_idler = eps_ratio;
  return acq;
}

// Central differences of the cost, compared entry by entry.
double max_gradient_error(const LeastSquaresCost& cost, std::vector<double> x) {
  std::vector<double> g(16), scratch(16);
  cost.value_and_gradient(x, g);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    const double keep = x[k];
    x[k] = keep + h;
    const double up = cost.value(x);
    x[k] = keep - h;
    const double down = cost.value(x);
    x[k] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(g[k]), 1e-3});
    worst = std::max(worst, std::abs(fd - g[k]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("qst probabilities normalise each basis pair") {
  std::vector<MeasurementRecord> rec;
  for (Basis bs : kAllBases)
    for (Basis bi : kAllBases) {
      const PolLabel s0 = transmitted_label(bs), s1 = reflected_label(bs);
      const PolLabel i0 = transmitted_label(bi), i1 = reflected_label(bi);
      const bool hv = bs == Basis::HV && bi == Basis::HV;
      rec.push_back(qst(s0, i0, hv ? 100 : 50));
      rec.push_back(qst(s0, i1, hv ? 0 : 50));
      rec.push_back(qst(s1, i0, hv ? 0 : 50));
      rec.push_back(qst(s1, i1, hv ? 100 : 50));
    }
  const auto table = qst_probabilities(rec);
  CHECK(table.entries.size() == 36);
  CHECK(table.entries.at({PolLabel::H, PolLabel::H}) == doctest::Approx(0.5));
  CHECK(table.entries.at({PolLabel::V, PolLabel::V}) == doctest::Approx(0.5));
  CHECK(table.entries.at({PolLabel::H, PolLabel::V}) == 0.0);
  CHECK(table.entries.at({PolLabel::D, PolLabel::R}) == doctest::Approx(0.25));
  CHECK(table.totals.at({PolLabel::H, PolLabel::H}) == 200.0);

  for (auto& r : rec)
    if (basis_of(r.setting.signal) == Basis::DA && basis_of(r.setting.idler) == Basis::RL)
      r.value = 0.0;
  try {
    qst_probabilities(rec);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("D/A x R/L") != std::string::npos);
  }
  rec.pop_back();
  CHECK_THROWS_AS(qst_probabilities(rec), DataError);
}

TEST_CASE("qst probability of HH from sampled Bell counts stays near one half") {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    QstAcquisitionConfig cfg;
    cfg.seed_rng = seed;
    const auto table = qst_probabilities(simulate_qst_counts(bell_state(), cfg));
    if (std::abs(table.entries.at({PolLabel::H, PolLabel::H}) - 0.5) <= 0.03) ++inside;
  }
  // 0.03 is about 2.8 binomial standard deviations at n = 2250.
  CHECK(inside >= 190);
}

TEST_CASE("set ideal probabilities are intensity ratios") {
  std::vector<MeasurementRecord> rec;
  for (PolLabel i : kAllLabels) {
    const double v = i == PolLabel::H ? 0.15 : 0.05;
    rec.push_back({RecordKind::SetIntensity, {PolLabel::D, i}, Port::Transmitted, v});
    rec.push_back({RecordKind::SetIntensity, {PolLabel::D, i}, Port::Reflected, 0.3});
  }
  rec.push_back({RecordKind::SeedIntensity, {PolLabel::D, PolLabel::H}, Port::Transmitted, 0.6});
  rec.push_back({RecordKind::SeedIntensity, {PolLabel::D, PolLabel::H}, Port::Reflected, 0.4});
  auto table = set_ideal_probabilities(rec);
  CHECK(table.mode == ProbabilityMode::SetIdeal);
  CHECK(table.entries.at({PolLabel::D, PolLabel::H}) == doctest::Approx(0.15));

  for (auto& r : rec)
    if (r.kind == RecordKind::SetIntensity) r.value *= 2.0;
  table = set_ideal_probabilities(rec);
  CHECK(table.entries.at({PolLabel::D, PolLabel::H}) == doctest::Approx(0.30));

  for (auto& r : rec)
    if (r.kind == RecordKind::SeedIntensity) r.value = 0.0;
  CHECK_THROWS_AS(set_ideal_probabilities(rec), DataError);
  rec.front().theta_mrad = 1.0;
  CHECK_THROWS_AS(set_ideal_probabilities(rec), DataError);
}

TEST_CASE("Bell source with an H seed stimulates only H") {
  const auto rec = simulate_set_scan(bell_state(), {}, {}, noiseless());
  const auto table = set_ideal_probabilities(rec);
  CHECK(table.entries.at({PolLabel::H, PolLabel::H}) > 0.4);
  CHECK(table.entries.at({PolLabel::H, PolLabel::V}) == 0.0);
}

TEST_CASE("renormalisation divides by the group sum") {
  ProbabilityTable ideal;
  ideal.mode = ProbabilityMode::SetIdeal;
  const double kappa = 3.7;
  for (const auto& s : all_settings()) ideal.entries[s] = kappa * 0.25;
  ideal.entries[{PolLabel::D, PolLabel::H}] = 0.3 * kappa;
  ideal.entries[{PolLabel::D, PolLabel::V}] = 0.1 * kappa;
  ideal.entries[{PolLabel::A, PolLabel::H}] = 0.1 * kappa;
  ideal.entries[{PolLabel::A, PolLabel::V}] = 0.5 * kappa;
  const auto out = set_renormalize(ideal);
  CHECK(out.mode == ProbabilityMode::SetRenormalized);
  CHECK(out.entries.at({PolLabel::D, PolLabel::H}) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(out.entries.at({PolLabel::A, PolLabel::V}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out.entries.at({PolLabel::R, PolLabel::L}) == doctest::Approx(0.25).epsilon(1e-14));

  for (PolLabel s : {PolLabel::R, PolLabel::L})
    for (PolLabel i : {PolLabel::H, PolLabel::V}) ideal.entries[{s, i}] = 0.0;
  try {
    set_renormalize(ideal);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("R/L x idler H/V") != std::string::npos);
  }
  CHECK_THROWS_AS(set_renormalize(qst_probabilities(exact_qst(bell_state()))), DataError);
}

TEST_CASE("coupling factor cancels in the renormalised table") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = fixtures::random_state(rng);
    const SeedDistortion dist{0.2, 1.1};
    const auto ref = set_renormalize(
        set_ideal_probabilities(simulate_set_scan(rho, dist, {}, noiseless(1.0))));
    for (double ratio : {0.1, 0.2, 5.0, 10.0}) {
      const auto t = set_renormalize(
          set_ideal_probabilities(simulate_set_scan(rho, dist, {}, noiseless(ratio))));
      for (const auto& [s, p] : ref.entries) CHECK(std::abs(t.entries.at(s) - p) <= 1e-12);
    }
  }
}

TEST_CASE("single-photon reconstruction inverts exact intensities") {
  SetAcquisitionConfig acq = noiseless();
  const auto d = DensityMatrix::from_matrix(projector(PolLabel::D));
  CHECK(max_abs_diff(reconstruct_single_photon(measure_seed_singlephoton(d, acq)).matrix(),
                     d.matrix()) <= 1e-12);

  for (const auto& f : fixtures::table_seed_matrices()) {
    const auto rho = DensityMatrix::from_matrix(f.rho);
    const auto back = reconstruct_single_photon(measure_seed_singlephoton(rho, acq, f.label));
    CHECK(max_abs_diff(back.matrix(), f.rho) <= 1e-9);
  }

  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const auto rho = fixtures::random_state(rng, 2);
    acq.coupling_signal = 0.1 + k;
    const auto back = reconstruct_single_photon(measure_seed_singlephoton(rho, acq));
    CHECK(trace_distance(back, rho) <= 1e-10);
  }

  auto zero = measure_seed_singlephoton(d, acq);
  for (auto& r : zero) r.value = 0.0;
  CHECK_THROWS_AS(reconstruct_single_photon(zero), DataError);
}

TEST_CASE("unphysical Stokes vectors are projected onto states") {
  std::vector<MeasurementRecord> rec;
  // H, D and R all fully transmitted: |S| = sqrt(3).
  for (PolLabel a : kAllLabels) {
    const bool pass = a == PolLabel::H || a == PolLabel::D || a == PolLabel::R;
    rec.push_back({RecordKind::SeedIntensity, {PolLabel::H, a}, Port::Transmitted, pass ? 1.0 : 0.0});
    rec.push_back({RecordKind::SeedIntensity, {PolLabel::H, a}, Port::Reflected, pass ? 0.0 : 1.0});
  }
  const auto rho = reconstruct_single_photon(rec);
  CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rho(0, 0).real() == doctest::Approx(0.5 + 0.5 / std::sqrt(3.0)));
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  const auto rho = fixtures::random_state(rng);
  const LeastSquaresCost plain(qst_probabilities(exact_qst(fixtures::random_state(rng))),
                               ideal_operators(), {});
  const auto stim = simulate_set_scan(rho, SeedDistortion{0.25, 1.2}, {}, noiseless(2.0));
  const auto tomo = simulate_seed_tomography(SeedDistortion{0.25, 1.2}, {}, noiseless());
  const LeastSquaresCost grouped(set_renormalize(set_ideal_probabilities(stim)),
                                 rotated_operators(reconstruct_seed_states(tomo)), {});
  CHECK(grouped.grouped());
  CHECK_FALSE(plain.grouped());
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(16);
    for (double& v : x) v = normal(rng);
    CHECK(max_gradient_error(plain, x) <= 1e-6);
    CHECK(max_gradient_error(grouped, x) <= 1e-6);
  }
}

TEST_CASE("exact Bell probabilities fit to the Bell state") {
  const auto result = reconstruct_qst(exact_qst(bell_state()));
  CHECK(result.converged);
  CHECK(result.residual <= 1e-14);
  CHECK(fidelity(result.rho, bell_state()) >= 1.0 - 1e-8);
  CHECK(result.metrics.concurrence == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.audit.size() == 36);
}

TEST_CASE("exact mixture fits to purity one half") {
  const ComplexMatrix mix = ComplexMatrix::diagonal(std::vector<double>{0.5, 0, 0, 0.5});
  const auto result = reconstruct_qst(exact_qst(DensityMatrix::from_matrix(mix)));
  CHECK(result.metrics.purity == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(result.metrics.concurrence <= 1e-4);
}

TEST_CASE("adversarial probabilities still give a physical state") {
  ProbabilityTable table;
  table.mode = ProbabilityMode::Qst;
  for (const auto& s : all_settings()) table.entries[s] = 0.0;
  for (PolLabel l : {PolLabel::H, PolLabel::D, PolLabel::R}) table.entries[{l, l}] = 1.0;
  const auto result = fit_least_squares(table, ideal_operators());
  CHECK(result.residual > 0.0);
  CHECK(eigen_hermitian(result.rho.matrix()).values.back() >= -1e-10);
  CHECK(std::abs(result.rho.matrix().trace() - 1.0) <= 1e-12);
}

TEST_CASE("random exact states round-trip through the QST fit") {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 25; ++k) {
    const auto rho = fixtures::random_state(rng);
    const auto result = reconstruct_qst(exact_qst(rho));
    CHECK(result.residual <= 1e-13);
    CHECK(trace_distance(result.rho, rho) <= 1e-6);
  }
}

TEST_CASE("injected phase is recovered") {
  for (double phase : {-2.5, -0.289, 0.0, 0.289, 1.3, 3.0}) {
    SourceConfig src;
    src.phase0 = phase;
    src.alpha_sq = 0.3;
    const auto result = reconstruct_qst(exact_qst(true_state(src, 0.0)));
    CHECK(std::abs(result.metrics.phase_hh_vv - phase) <= 1e-3);
    const auto bell = bell_state(phase);
    CHECK(std::abs(reconstruct_qst(exact_qst(bell)).metrics.phase_hh_vv -
                   phase_hh_vv(bell)) <= 1e-3);
  }
}

TEST_CASE("rotated operators correct seed distortion") {
  const SeedDistortion dist{0.2, 1.1};
  const auto truth = fixtures::two_term_pure(0.5, 0.4);
  const auto stim = simulate_set_scan(truth, dist, {}, noiseless(3.0));
  const auto tomo = simulate_seed_tomography(dist, {}, noiseless());
  const auto rotated = reconstruct_set(stim, tomo);
  const auto naive = reconstruct_set(stim, tomo, {}, SetOperators::Ideal);
  CHECK(rotated.rotated_operators);
  CHECK_FALSE(naive.rotated_operators);
  CHECK(fidelity(rotated.rho, truth) >= 1.0 - 1e-4);
  CHECK(fidelity(naive.rho, truth) < fidelity(rotated.rho, truth));
}

TEST_CASE("SET and QST agree on an undistorted Bell state") {
  const auto stim = simulate_set_scan(bell_state(), {}, {}, noiseless());
  const auto tomo = simulate_seed_tomography({}, {}, noiseless());
  const auto set = reconstruct_set(stim, tomo);
  const auto qst_fit = reconstruct_qst(exact_qst(bell_state()));
  CHECK(fidelity(set.rho, qst_fit.rho) >= 1.0 - 1e-6);
}

TEST_CASE("the minimal subset fits with sixteen settings") {
  FitOptions opts;
  opts.settings = SettingsSubset::Minimal16;
  std::mt19937_64 rng(8);
  const auto rho = fixtures::random_state(rng);
  const auto result = reconstruct_qst(exact_qst(rho), opts);
  CHECK(result.audit.size() == 16);
  CHECK(trace_distance(result.rho, rho) <= 1e-6);
}

TEST_CASE("rank-deficient operator sets are rejected") {
  const auto table = qst_probabilities(exact_qst(bell_state()));
  OperatorSet diag;
  for (const auto& s : all_settings())
    diag.emplace(s, pair_operator({basis_of(s.signal) == Basis::HV ? s.signal : PolLabel::H,
                                   basis_of(s.idler) == Basis::HV ? s.idler : PolLabel::H}));
  CHECK_THROWS_AS(fit_least_squares(table, diag), NumericalError);

  FitOptions opts;
  opts.settings = SettingsSubset::Minimal16;
  ProbabilityTable small = table;
  small.entries.erase({PolLabel::R, PolLabel::R});
  CHECK_THROWS_AS(fit_least_squares(small, ideal_operators(), opts), NumericalError);
}

TEST_CASE("iteration cap is reported as non-convergence") {
  std::mt19937_64 rng(3);
  FitOptions opts;
  opts.max_iterations = 1;
  opts.restarts = 1;
  opts.init = InitStrategy::Mixed;
  const auto result = reconstruct_qst(exact_qst(fixtures::random_state(rng)), opts);
  CHECK_FALSE(result.converged);
}

TEST_CASE("inverse-variance weighting needs counts") {
  FitOptions opts;
  opts.weighting = Weighting::InverseVariance;
  QstAcquisitionConfig cfg;
  cfg.seed_rng = 4;
  const auto weighted = reconstruct_qst(simulate_qst_counts(bell_state(), cfg), opts);
  CHECK(weighted.metrics.fidelity_vs_bell > 0.97);

  const auto stim = simulate_set_scan(bell_state(), {}, {}, noiseless());
  const auto tomo = simulate_seed_tomography({}, {}, noiseless());
  CHECK_THROWS_AS(reconstruct_set(stim, tomo, opts), ConfigError);
}

TEST_CASE("fit options are validated") {
  FitOptions opts;
  opts.restarts = 0;
  CHECK_THROWS_AS(opts.validate(), ConfigError);
  opts = {};
  opts.max_iterations = 0;
  CHECK_THROWS_AS(opts.validate(), ConfigError);
}

TEST_CASE("operator hashes are stable and distinguish operators") {
  const auto a = operator_hash(pair_operator({PolLabel::H, PolLabel::D}));
  CHECK(a == operator_hash(pair_operator({PolLabel::H, PolLabel::D})));
  CHECK(a != operator_hash(pair_operator({PolLabel::H, PolLabel::A})));
}
