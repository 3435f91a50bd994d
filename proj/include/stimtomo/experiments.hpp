#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stimtomo/acquisition.hpp"
#include "stimtomo/reconstruction.hpp"
#include "stimtomo/source.hpp"

namespace stimtomo {

enum class ExperimentKind {
  BellCompare,
  ConcurrenceSweep,
  PuritySweep,
  AngleScan,
  PdlDemo,
  AngleAverage
};

std::string to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& name);

/// One polarisation-dependent-loss configuration, given as the H/V intensity
/// ratios a D-polarised beam shows after the seed and idler paths.
struct PdlCase {
  std::string label;
  double signal_ratio_hv = 1.0;
  double idler_ratio_hv = 1.0;

  /// Loss only on the weaker polarisation; the stronger one passes fully.
  PdlConfig to_config() const;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::BellCompare;
  SourceConfig source;
  QstAcquisitionConfig qst;
  SetAcquisitionConfig set;
  SeedDistortion distortion;
  FitOptions fit;
  /// Swept values: alpha_sq, decoherence, seed angle (mrad) or grid size,
  /// depending on the experiment. Unused by bell_compare and pdl_demo.
  std::vector<double> sweep;
  int replicates = 1;
  /// false: Poisson means and noiseless diodes. true: sampled data.
  bool noise = false;
  /// Seed angle of the single-angle SET runs.
  double set_theta_mrad = 0.0;
  /// angle_scan: weight the phase fit by the measured envelope.
  bool weighted_slope_fit = false;
  std::vector<PdlCase> pdl_cases;
  std::uint64_t seed = 42;
  /// 0 picks the hardware concurrency.
  int threads = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Sensible sweep and case defaults for each experiment.
ExperimentSpec default_spec(ExperimentKind kind);

struct ReportPoint {
  double value = 0.0;
  std::string label;  ///< pdl_demo case name, empty elsewhere
  int replicate = 0;
  std::optional<Metrics> truth;
  std::optional<Metrics> qst;
  std::optional<Metrics> set;
  std::map<std::string, double> extra;
  std::string skip_reason;
};

struct CurvePoint {
  double x;
  double y;
};

struct ExperimentReport {
  std::string name;
  std::string parameter;  ///< what ReportPoint::value holds
  /// Sorted by value, then replicate.
  std::vector<ReportPoint> points;
  std::map<std::string, double> summary;
  /// Closed-form or fitted overlay, e.g. 2 sqrt(a(1-a)) or the phase line.
  std::vector<CurvePoint> curve;
  std::vector<std::string> notes;
};

ExperimentReport run_experiment(const ExperimentSpec& spec);

ExperimentReport run_bell_compare(const ExperimentSpec& spec);
ExperimentReport run_concurrence_sweep(const ExperimentSpec& spec);
ExperimentReport run_purity_sweep(const ExperimentSpec& spec);
ExperimentReport run_angle_scan(const ExperimentSpec& spec);
ExperimentReport run_pdl_demo(const ExperimentSpec& spec);
ExperimentReport run_angle_average(const ExperimentSpec& spec);

/// Least-squares line y = slope x + intercept, optionally weighted.
struct LineFit {
  double slope;
  double intercept;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights = {});

/// Removes 2 pi jumps between consecutive phases.
std::vector<double> unwrap_phases(const std::vector<double>& phases);

/// Width of a centred-or-not Gaussian from a quadratic fit to log(y).
/// Throws NumericalError if the log-curvature is not negative.
double gaussian_width(const std::vector<double>& x, const std::vector<double>& y);

/// SET of every seed label at one angle: stimulated records and the seed
/// tomography, reconstructed with rotated operators.
ReconstructionResult set_pipeline(const SourceConfig& source, double theta_mrad,
                                  const SeedDistortion& distortion,
                                  const PdlConfig& pdl,
                                  const SetAcquisitionConfig& acq,
                                  const FitOptions& fit);

/// QST of the angle-averaged state the coincidence optics collect.
ReconstructionResult qst_pipeline(const SourceConfig& source,
                                  const QstAcquisitionConfig& acq,
                                  const FitOptions& fit);

}  // namespace stimtomo
