#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "stimtomo/acquisition.hpp"
#include "stimtomo/error.hpp"

using namespace stimtomo;

namespace {

double value_of(const std::vector<MeasurementRecord>& rec, RecordKind kind,
                PolLabel s, PolLabel i, Port port) {
  for (const auto& r : rec)
    if (r.kind == kind && r.setting.signal == s && r.setting.idler == i && r.port == port)
      return r.value;
  FAIL("record not found");
  return 0.0;
}

double qst_value(const std::vector<MeasurementRecord>& rec, PolLabel s, PolLabel i) {
  for (const auto& r : rec)
    if (r.setting.signal == s && r.setting.idler == i) return r.value;
  FAIL("record not found");
  return 0.0;
}

}  // namespace

TEST_CASE("qst counts in the noiseless limit") {
  QstAcquisitionConfig cfg;
  cfg.expectation_only = true;
  const auto hh = DensityMatrix::pure(std::vector<Complex>{1, 0, 0, 0});
  auto rec = simulate_qst_counts(hh, cfg);
  CHECK(rec.size() == 36);
  CHECK(qst_value(rec, PolLabel::H, PolLabel::H) == doctest::Approx(2250.0));
  CHECK(qst_value(rec, PolLabel::H, PolLabel::V) == 0.0);
  CHECK(qst_value(rec, PolLabel::V, PolLabel::V) == 0.0);

  rec = simulate_qst_counts(bell_state(), cfg);
  CHECK(qst_value(rec, PolLabel::D, PolLabel::D) == doctest::Approx(qst_value(rec, PolLabel::A, PolLabel::A)));
  CHECK(qst_value(rec, PolLabel::D, PolLabel::A) <= 1e-9);
  CHECK(qst_value(rec, PolLabel::A, PolLabel::D) <= 1e-9);
  for (const auto& r : rec) {
    CHECK(r.kind == RecordKind::QstCount);
    CHECK(r.port == (r.setting.signal == transmitted_label(basis_of(r.setting.signal))
                         ? Port::Transmitted
                         : Port::Reflected));
  }
}

TEST_CASE("qst counts are Poisson with the expected totals") {
  const double mean_total = 15000.0 * 0.15;
  double sum_hh = 0.0, sum_total = 0.0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed) {
    QstAcquisitionConfig cfg;
    cfg.seed_rng = static_cast<std::uint64_t>(seed);
    const auto rec = simulate_qst_counts(bell_state(), cfg);
    sum_hh += qst_value(rec, PolLabel::H, PolLabel::H);
    double total = 0.0;
    for (const auto& r : rec) {
      CHECK(r.value == std::floor(r.value));
      CHECK(r.value >= 0.0);
      if (basis_of(r.setting.signal) == Basis::HV && basis_of(r.setting.idler) == Basis::HV)
        total += r.value;
    }
    sum_total += total;
  }
  const double hh_mean = 0.5 * mean_total;
  CHECK(std::abs(sum_hh / runs - hh_mean) <= 4.0 * std::sqrt(hh_mean / runs));
  CHECK(std::abs(sum_total / runs - mean_total) <= 3.0 * std::sqrt(mean_total / runs));
}

TEST_CASE("qst acquisition is deterministic per seed") {
  QstAcquisitionConfig cfg;
  cfg.seed_rng = 42;
  CHECK(simulate_qst_counts(bell_state(), cfg) == simulate_qst_counts(bell_state(), cfg));
  QstAcquisitionConfig other = cfg;
  other.seed_rng = 43;
  CHECK(simulate_qst_counts(bell_state(), cfg) != simulate_qst_counts(bell_state(), other));
  cfg.pair_rate_hz = 0.0;
  CHECK_THROWS_AS(simulate_qst_counts(bell_state(), cfg), ConfigError);
  cfg = {};
  cfg.efficiency_pair = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("background adds to every outcome") {
  QstAcquisitionConfig cfg;
  cfg.expectation_only = true;
  cfg.background_counts = 3.0;
  const auto rec = simulate_qst_counts(bell_state(), cfg);
  CHECK(qst_value(rec, PolLabel::H, PolLabel::V) == doctest::Approx(3.0));
}

TEST_CASE("set intensities") {
  SourceConfig src;
  src.phase_slope = 0.0;
  SetAcquisitionConfig acq;
  acq.intensity_noise_rel = 0.0;
  auto rec = simulate_set_intensities(src, PolLabel::H, 0.0, {}, {}, acq);
  CHECK(rec.size() == 14);
  CHECK(value_of(rec, RecordKind::SetIntensity, PolLabel::H, PolLabel::H, Port::Transmitted) > 0.0);
  CHECK(value_of(rec, RecordKind::SetIntensity, PolLabel::H, PolLabel::V, Port::Transmitted) == 0.0);
  CHECK(value_of(rec, RecordKind::SetIntensity, PolLabel::H, PolLabel::H, Port::Reflected) == 0.0);
  CHECK(value_of(rec, RecordKind::SeedIntensity, PolLabel::H, PolLabel::H, Port::Transmitted) +
            value_of(rec, RecordKind::SeedIntensity, PolLabel::H, PolLabel::H, Port::Reflected) ==
        doctest::Approx(1.0));

  src.decoherence = 0.0;
  rec = simulate_set_intensities(src, PolLabel::D, 0.0, {}, {}, acq);
  CHECK(value_of(rec, RecordKind::SetIntensity, PolLabel::D, PolLabel::D, Port::Transmitted) ==
        doctest::Approx(value_of(rec, RecordKind::SetIntensity, PolLabel::D, PolLabel::A, Port::Transmitted)));

  src = {};
  const auto base = simulate_set_intensities(src, PolLabel::R, 1.0, {}, {}, acq);
  SetAcquisitionConfig scaled = acq;
  scaled.coupling_idler = 2.0;
  scaled.coupling_signal = 3.0;
  const auto twice = simulate_set_intensities(src, PolLabel::R, 1.0, {}, {}, scaled);
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double factor = base[k].kind == RecordKind::SetIntensity ? 2.0 : 3.0;
    CHECK(twice[k].value == doctest::Approx(factor * base[k].value).epsilon(1e-14));
  }
  CHECK(simulate_set_scan(src, 1.0, {}, {}, acq).size() == 84);
}

TEST_CASE("zero stimulated light gives zero intensities, not an error") {
  const auto hh = DensityMatrix::pure(std::vector<Complex>{1, 0, 0, 0});
  SetAcquisitionConfig acq;
  const auto rec = simulate_set_intensities(hh, PolLabel::V, {}, {}, acq);
  for (const auto& r : rec)
    if (r.kind == RecordKind::SetIntensity) CHECK(r.value == 0.0);
}

TEST_CASE("diode noise is multiplicative, deterministic and small") {
  SourceConfig src;
  SetAcquisitionConfig acq;
  acq.seed_rng = 9;
  const auto a = simulate_set_scan(src, 0.5, {}, {}, acq);
  CHECK(a == simulate_set_scan(src, 0.5, {}, {}, acq));
  SetAcquisitionConfig clean = acq;
  clean.intensity_noise_rel = 0.0;
  const auto b = simulate_set_scan(src, 0.5, {}, {}, clean);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].value >= 0.0);
    if (b[k].value > 1e-6) worst = std::max(worst, std::abs(a[k].value / b[k].value - 1.0));
  }
  CHECK(worst > 0.0);
  CHECK(worst < 0.03);
  acq.intensity_noise_rel = -1.0;
  CHECK_THROWS_AS(acq.validate(), ConfigError);
}

TEST_CASE("single-photon seed analysis") {
  SetAcquisitionConfig acq;
  acq.intensity_noise_rel = 0.0;
  auto rec = measure_seed_singlephoton(DensityMatrix::from_matrix(projector(PolLabel::D)), acq);
  CHECK(rec.size() == 12);
  CHECK(value_of(rec, RecordKind::SeedIntensity, PolLabel::H, PolLabel::D, Port::Transmitted) == doctest::Approx(1.0));
  CHECK(value_of(rec, RecordKind::SeedIntensity, PolLabel::H, PolLabel::D, Port::Reflected) <= 1e-15);

  const auto d_seed = DensityMatrix::from_matrix(fixtures::table_seed_matrices()[2].rho);
  rec = measure_seed_singlephoton(d_seed, acq, PolLabel::D);
  CHECK(value_of(rec, RecordKind::SeedIntensity, PolLabel::D, PolLabel::H, Port::Transmitted) ==
        doctest::Approx(0.506));

  rec = measure_seed_singlephoton(DensityMatrix::maximally_mixed(2), acq);
  for (const auto& r : rec) CHECK(r.value == doctest::Approx(0.5));
  CHECK(simulate_seed_tomography({}, {}, acq).size() == 72);
}

TEST_CASE("record strings") {
  for (auto k : {RecordKind::QstCount, RecordKind::SetIntensity, RecordKind::SeedIntensity})
    CHECK(record_kind_from_string(to_string(k)) == k);
  CHECK(port_from_string("reflected") == Port::Reflected);
  CHECK_THROWS_AS(record_kind_from_string("counts"), DataError);
  CHECK_THROWS_AS(port_from_string("left"), DataError);
  const MeasurementRecord r{RecordKind::SetIntensity, {PolLabel::D, PolLabel::R}, Port::Reflected, 1.0};
  CHECK(r.projected().idler == PolLabel::L);
}
