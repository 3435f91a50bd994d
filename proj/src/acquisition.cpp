#include "stimtomo/acquisition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "stimtomo/error.hpp"

namespace stimtomo {

namespace {

enum class Stream : std::uint32_t { Qst = 1, Stimulated = 2, SeedTomography = 3 };

// Independent generator per (call kind, seed, sub-index, angle) so that
// results never depend on call order.
std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint32_t index,
                         double theta_mrad = 0.0) {
  const auto theta_bits = std::bit_cast<std::uint64_t>(theta_mrad);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    index,
                    static_cast<std::uint32_t>(theta_bits),
                    static_cast<std::uint32_t>(theta_bits >> 32)};
  return std::mt19937_64(seq);
}

double expectation(const ComplexMatrix& op, const ComplexMatrix& m) {
  return std::max(0.0, trace_of_product(op, m).real());
}

class DiodeNoise {
 public:
  DiodeNoise(double rel, std::mt19937_64 rng) : rel_(rel), rng_(std::move(rng)) {}
  double operator()(double value) {
    if (rel_ == 0.0) return value;
    return std::max(0.0, value * (1.0 + rel_ * normal_(rng_)));
  }

 private:
  double rel_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint32_t label_index(PolLabel label) {
  return static_cast<std::uint32_t>(label);
}

std::vector<MeasurementRecord> set_records(const DensityMatrix& pair_state,
                                           PolLabel seed_label,
                                           double theta_mrad,
                                           double signal_scale,
                                           double idler_scale,
                                           const SeedDistortion& distortion,
                                           const PdlConfig& pdl,
                                           const SetAcquisitionConfig& acq) {
  acq.validate();
  const JonesVector seed = jones_of(seed_label);
  const ComplexMatrix idler =
      stimulated_idler_matrix(pair_state, seed, distortion, pdl);
  const ComplexMatrix detected = detected_seed_matrix(seed, distortion, pdl);
  DiodeNoise noise(acq.intensity_noise_rel,
                   make_rng(acq.seed_rng, Stream::Stimulated,
                            label_index(seed_label), theta_mrad));

  std::vector<MeasurementRecord> out;
  out.reserve(14);
  const double stim_scale = acq.coupling_idler * idler_scale;
  for (PolLabel a : kAllLabels) {
    for (Port port : {Port::Transmitted, Port::Reflected}) {
      const PolLabel proj = port == Port::Transmitted ? a : orthogonal(a);
      out.push_back({RecordKind::SetIntensity, {seed_label, a}, port,
                     noise(stim_scale * expectation(projector(proj), idler)),
                     theta_mrad, acq.seed_rng});
    }
  }
  const double seed_scale = acq.coupling_signal * signal_scale;
  for (Port port : {Port::Transmitted, Port::Reflected}) {
    const PolLabel proj = port == Port::Transmitted ? PolLabel::H : PolLabel::V;
    out.push_back({RecordKind::SeedIntensity, {seed_label, PolLabel::H}, port,
                   noise(seed_scale * expectation(projector(proj), detected)),
                   theta_mrad, acq.seed_rng});
  }
  return out;
}

}  // namespace

std::string to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::QstCount: return "qst_count";
    case RecordKind::SetIntensity: return "set_intensity";
    case RecordKind::SeedIntensity: return "seed_intensity";
  }
  return "?";
}

std::string to_string(Port port) {
  return port == Port::Transmitted ? "transmitted" : "reflected";
}

RecordKind record_kind_from_string(const std::string& s) {
  if (s == "qst_count") return RecordKind::QstCount;
  if (s == "set_intensity") return RecordKind::SetIntensity;
  if (s == "seed_intensity") return RecordKind::SeedIntensity;
  throw DataError("unknown record kind '" + s + "'");
}

Port port_from_string(const std::string& s) {
  if (s == "transmitted") return Port::Transmitted;
  if (s == "reflected") return Port::Reflected;
  throw DataError("unknown port '" + s + "'");
}

MeasurementSetting MeasurementRecord::projected() const {
  if (kind == RecordKind::QstCount || port == Port::Transmitted) return setting;
  return {setting.signal, orthogonal(setting.idler)};
}

void QstAcquisitionConfig::validate() const {
  if (!(pair_rate_hz > 0.0)) throw ConfigError("pair_rate_hz: must be positive");
  if (!(integration_s > 0.0)) throw ConfigError("integration_s: must be positive");
  if (!(efficiency_pair > 0.0 && efficiency_pair <= 1.0)) {
    throw ConfigError("efficiency_pair: must lie in (0, 1]");
  }
  if (!(background_counts >= 0.0)) {
    throw ConfigError("background_counts: must be nonnegative");
  }
}

void SetAcquisitionConfig::validate() const {
  if (!(coupling_signal > 0.0)) throw ConfigError("coupling_signal: must be positive");
  if (!(coupling_idler > 0.0)) throw ConfigError("coupling_idler: must be positive");
  if (!(intensity_noise_rel >= 0.0)) {
    throw ConfigError("intensity_noise_rel: must be nonnegative");
  }
}

std::vector<MeasurementRecord> simulate_qst_counts(
    const DensityMatrix& rho, const QstAcquisitionConfig& cfg) {
  cfg.validate();
  if (rho.dim() != 4) throw InvalidStateError("QST needs a two-photon state");
  const double pairs = cfg.expected_pairs();
  std::vector<MeasurementRecord> out;
  out.reserve(36);
  std::uint32_t index = 0;
  for (Basis bs : kAllBases) {
    for (Basis bi : kAllBases) {
      auto rng = make_rng(cfg.seed_rng, Stream::Qst, index++);
      for (Port ps : {Port::Transmitted, Port::Reflected}) {
        for (Port pi : {Port::Transmitted, Port::Reflected}) {
          const MeasurementSetting setting{
              ps == Port::Transmitted ? transmitted_label(bs) : reflected_label(bs),
              pi == Port::Transmitted ? transmitted_label(bi) : reflected_label(bi)};
          const double mean =
              pairs * expectation(pair_operator(setting), rho.matrix()) +
              cfg.background_counts;
          double value = mean;
          if (!cfg.expectation_only) {
            value = mean > 0.0
                        ? static_cast<double>(
                              std::poisson_distribution<std::int64_t>(mean)(rng))
                        : 0.0;
          }
          out.push_back({RecordKind::QstCount, setting, ps, value, 0.0,
                         cfg.seed_rng});
        }
      }
    }
  }
  return out;
}

std::vector<MeasurementRecord> simulate_set_intensities(
    const SourceConfig& source, PolLabel seed_label, double theta_mrad,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq) {
  return set_records(true_state(source, theta_mrad), seed_label, theta_mrad,
                     signal_coupling(source, theta_mrad),
                     idler_coupling(source, theta_mrad), distortion, pdl, acq);
}

std::vector<MeasurementRecord> simulate_set_intensities(
    const DensityMatrix& pair_state, PolLabel seed_label,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq) {
  return set_records(pair_state, seed_label, 0.0, 1.0, 1.0, distortion, pdl, acq);
}

std::vector<MeasurementRecord> measure_seed_singlephoton(
    const DensityMatrix& distorted_seed, const SetAcquisitionConfig& acq,
    PolLabel seed_label, double theta_mrad) {
  acq.validate();
  if (distorted_seed.dim() != 2) {
    throw InvalidStateError("seed tomography needs a single-photon state");
  }
  DiodeNoise noise(acq.intensity_noise_rel,
                   make_rng(acq.seed_rng, Stream::SeedTomography,
                            label_index(seed_label), theta_mrad));
  std::vector<MeasurementRecord> out;
  out.reserve(12);
  for (PolLabel a : kAllLabels) {
    for (Port port : {Port::Transmitted, Port::Reflected}) {
      const PolLabel proj = port == Port::Transmitted ? a : orthogonal(a);
      out.push_back(
          {RecordKind::SeedIntensity, {seed_label, a}, port,
           noise(acq.coupling_signal *
                 expectation(projector(proj), distorted_seed.matrix())),
           theta_mrad, acq.seed_rng});
    }
  }
  return out;
}

std::vector<MeasurementRecord> simulate_seed_tomography(
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq, double theta_mrad) {
  std::vector<MeasurementRecord> out;
  for (PolLabel s : kAllLabels) {
    const auto detected = DensityMatrix::normalized(
        detected_seed_matrix(jones_of(s), distortion, pdl));
    auto rows = measure_seed_singlephoton(detected, acq, s, theta_mrad);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

std::vector<MeasurementRecord> simulate_set_scan(
    const SourceConfig& source, double theta_mrad,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq) {
  std::vector<MeasurementRecord> out;
  for (PolLabel s : kAllLabels) {
    auto rows = simulate_set_intensities(source, s, theta_mrad, distortion, pdl, acq);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

std::vector<MeasurementRecord> simulate_set_scan(
    const DensityMatrix& pair_state, const SeedDistortion& distortion,
    const PdlConfig& pdl, const SetAcquisitionConfig& acq) {
  std::vector<MeasurementRecord> out;
  for (PolLabel s : kAllLabels) {
    auto rows = simulate_set_intensities(pair_state, s, distortion, pdl, acq);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace stimtomo
