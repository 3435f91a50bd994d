#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stimtomo/polarization.hpp"
#include "stimtomo/quantum.hpp"
#include "stimtomo/source.hpp"

namespace stimtomo {

enum class RecordKind { QstCount, SetIntensity, SeedIntensity };
enum class Port { Transmitted, Reflected };

std::string to_string(RecordKind kind);
std::string to_string(Port port);
RecordKind record_kind_from_string(const std::string& s);
Port port_from_string(const std::string& s);

/// One acquisition row.
///
/// qst_count: `setting` is the projection the coincidence belongs to, e.g.
/// (H, V) for the signal transmitted / idler reflected in the H/V x H/V
/// basis pair; `port` is the signal-arm PBS output.
///
/// set_intensity: `setting.signal` is the seed label, `setting.idler` the
/// idler analyser label; the reflected port carries the orthogonal
/// projection.
///
/// seed_intensity: `setting.signal` is the seed label, `setting.idler` the
/// signal analyser label; summing both ports gives the coupled seed power.
struct MeasurementRecord {
  RecordKind kind;
  MeasurementSetting setting;
  Port port;
  double value;
  double theta_mrad = 0.0;
  std::uint64_t rng_seed = 0;

  /// The projection this record measures, after accounting for the port.
  MeasurementSetting projected() const;

  friend bool operator==(const MeasurementRecord&,
                         const MeasurementRecord&) = default;
};

struct QstAcquisitionConfig {
  double pair_rate_hz = 15000.0;
  double integration_s = 1.0;  ///< per basis pair
  double efficiency_pair = 0.15;
  std::uint64_t seed_rng = 0;
  /// Emit the Poisson means instead of samples (noiseless limit).
  bool expectation_only = false;
  /// Mean accidental/dark coincidences added to every outcome.
  double background_counts = 0.0;

  void validate() const;
  double expected_pairs() const {
    return pair_rate_hz * integration_s * efficiency_pair;
  }
};

struct SetAcquisitionConfig {
  double coupling_signal = 1.0;  ///< epsilon_s
  double coupling_idler = 1.0;   ///< epsilon_i
  double intensity_noise_rel = 0.005;
  std::uint64_t seed_rng = 0;

  void validate() const;
};

/// Nine basis pairs x four PBS port combinations of coincidence counts.
std::vector<MeasurementRecord> simulate_qst_counts(
    const DensityMatrix& rho, const QstAcquisitionConfig& cfg);

/// Twelve stimulated-idler records and two seed-power records for one seed
/// label at seed angle theta.
std::vector<MeasurementRecord> simulate_set_intensities(
    const SourceConfig& source, PolLabel seed_label, double theta_mrad,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq);

/// Same for an arbitrary two-photon state; the angular coupling factors are
/// taken as 1.
std::vector<MeasurementRecord> simulate_set_intensities(
    const DensityMatrix& pair_state, PolLabel seed_label,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq);

/// Classical polarisation analysis of the coupled seed: six analysers x two
/// ports, proportional to Tr[P rho]. `seed_label` tags the records.
std::vector<MeasurementRecord> measure_seed_singlephoton(
    const DensityMatrix& distorted_seed, const SetAcquisitionConfig& acq,
    PolLabel seed_label = PolLabel::H, double theta_mrad = 0.0);

/// Seed tomography for every label: the detected seed for each label passed
/// through measure_seed_singlephoton.
std::vector<MeasurementRecord> simulate_seed_tomography(
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq, double theta_mrad = 0.0);

/// All six seed labels of simulate_set_intensities concatenated.
std::vector<MeasurementRecord> simulate_set_scan(
    const SourceConfig& source, double theta_mrad,
    const SeedDistortion& distortion, const PdlConfig& pdl,
    const SetAcquisitionConfig& acq);

std::vector<MeasurementRecord> simulate_set_scan(
    const DensityMatrix& pair_state, const SeedDistortion& distortion,
    const PdlConfig& pdl, const SetAcquisitionConfig& acq);

}  // namespace stimtomo
