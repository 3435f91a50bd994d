#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stimtomo/acquisition.hpp"
#include "stimtomo/polarization.hpp"
#include "stimtomo/quantum.hpp"

namespace stimtomo {

enum class ProbabilityMode { Qst, SetIdeal, SetRenormalized };

std::string to_string(ProbabilityMode mode);
std::string to_string(Basis basis);

struct ProbabilityTable {
  ProbabilityMode mode = ProbabilityMode::Qst;
  std::map<MeasurementSetting, double> entries;
  /// QST only: the four-outcome count total behind each entry.
  std::map<MeasurementSetting, double> totals;
};

using OperatorSet = std::map<MeasurementSetting, ComplexMatrix>;

/// |s><s| ⊗ |i><i| for all 36 settings.
OperatorSet ideal_operators();

/// rho_s ⊗ |i><i| for every seed label in `seed_states`.
OperatorSet rotated_operators(const std::map<PolLabel, DensityMatrix>& seed_states);

enum class InitStrategy { LinearInversion, Mixed, Random };
enum class Weighting { None, InverseVariance };
enum class SettingsSubset { All36, Minimal16 };

struct FitOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-10;
  int restarts = 5;  ///< random starts after the `init` start
  InitStrategy init = InitStrategy::LinearInversion;
  Weighting weighting = Weighting::None;
  SettingsSubset settings = SettingsSubset::All36;
  std::uint64_t seed = 0x5e7u;

  void validate() const;
};

struct Metrics {
  double purity = 0.0;
  double concurrence = 0.0;
  double fidelity_vs_bell = 0.0;
  double phase_hh_vv = 0.0;
};

Metrics compute_metrics(const DensityMatrix& rho);

struct AuditEntry {
  MeasurementSetting setting;
  double probability;
  std::uint64_t operator_hash;
};

struct ReconstructionResult {
  DensityMatrix rho;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  int best_start = 0;
  bool rotated_operators = false;
  Metrics metrics;
  std::vector<AuditEntry> audit;
  std::vector<std::string> provenance;
};

/// FNV-1a over the operator entries printed to 12 significant digits.
std::uint64_t operator_hash(const ComplexMatrix& op);

/// P = count / (sum of the four outcomes of the same basis pair).
ProbabilityTable qst_probabilities(std::span<const MeasurementRecord> records);

/// P^ideal(s, i) = I^stim(s, i) / I^seed(s), transmitted idler port.
ProbabilityTable set_ideal_probabilities(std::span<const MeasurementRecord> records);

/// Divides each ideal ratio by the sum over its {seed basis} x {idler basis}
/// group, cancelling the coupling factor epsilon_i / epsilon_s.
ProbabilityTable set_renormalize(const ProbabilityTable& ideal);

/// Stokes-parameter inversion of one seed's analyser intensities, projected
/// onto the PSD cone if needed.
DensityMatrix reconstruct_single_photon(std::span<const MeasurementRecord> records);

/// reconstruct_single_photon per seed label found in `records`.
std::map<PolLabel, DensityMatrix> reconstruct_seed_states(
    std::span<const MeasurementRecord> records);

/// Least-squares cost over the triangular parameters. For renormalised SET
/// tables the model value of each setting is divided by the model sum over
/// its normalisation group, matching what the renormalised data measure;
/// with ideal operators the divisor is identically one.
class LeastSquaresCost {
 public:
  LeastSquaresCost(const ProbabilityTable& probs, const OperatorSet& operators,
                   const FitOptions& opts);

  std::size_t parameter_count() const { return 16; }
  std::size_t residual_count() const { return terms_.size(); }

  double value(std::span<const double> params) const;
  double value_and_gradient(std::span<const double> params,
                            std::span<double> gradient) const;

  /// Unconstrained linear least-squares estimate, projected to a state.
  DensityMatrix linear_inversion() const;

  const std::vector<AuditEntry>& audit() const { return audit_; }
  bool grouped() const { return !group_sums_.empty(); }

 private:
  struct Term {
    ComplexMatrix op;
    double target;
    double weight;
    int group;  ///< index into group_sums_, or -1
  };
  double evaluate(std::span<const double> params, std::span<double> gradient,
                  bool with_gradient) const;

  std::vector<Term> terms_;
  std::vector<ComplexMatrix> group_sums_;
  std::vector<AuditEntry> audit_;
};

/// Minimises the cost from `1 + opts.restarts` starts and keeps the lowest
/// residual (ties to the earliest start). Throws NumericalError when the
/// operators do not span the two-qubit operator space. A result whose best
/// start hit max_iterations has converged == false.
ReconstructionResult fit_least_squares(const ProbabilityTable& probs,
                                       const OperatorSet& operators,
                                       const FitOptions& opts = {});

ReconstructionResult reconstruct_qst(std::span<const MeasurementRecord> records,
                                     const FitOptions& opts = {});

enum class SetOperators { Rotated, Ideal };

ReconstructionResult reconstruct_set(
    std::span<const MeasurementRecord> stim_records,
    std::span<const MeasurementRecord> seed_tomo_records,
    const FitOptions& opts = {}, SetOperators operators = SetOperators::Rotated);

}  // namespace stimtomo
