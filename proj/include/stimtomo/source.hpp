#pragma once

#include <array>

#include "stimtomo/polarization.hpp"
#include "stimtomo/quantum.hpp"

namespace stimtomo {

/// Parameters of the simulated sandwich source. Angles are in mrad, phases
/// in radians.
struct SourceConfig {
  double alpha_sq = 0.5;        ///< |alpha|^2, weight of |HH>
  double phase0 = 0.0;          ///< HH-VV phase at normal incidence
  double decoherence = 1.0;     ///< gamma: 1 coherent, 0 incoherent mixture
  double phase_slope = 0.312;   ///< d(phase)/d(theta), rad per mrad
  double emission_sigma_mrad = 3.5;
  double collection_halfwidth_mrad = 5.0;
  double wavelength_nm = 800.0;
  double waist_qst_um = 50.0;
  double waist_seed_um = 1000.0;
  int quadrature_nodes = 64;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// lambda / (pi w), in mrad.
double collection_halfwidth_from_waist(double wavelength_nm, double waist_um);

/// Width of the collected angular distribution: emission and collection
/// Gaussians multiplied, 1/sigma^2 = 1/sigma_e^2 + 1/sigma_c^2.
double effective_sigma_mrad(const SourceConfig& cfg);

/// Unnormalised collected-pair weight; zero beyond the collection half-width.
double angular_weight(const SourceConfig& cfg, double theta_mrad);

/// Phase of the HH-VV coherence at seed/emission angle theta.
double pair_phase(const SourceConfig& cfg, double theta_mrad);

/// diag(a, 0, 0, 1-a) with rho[HH,VV] = gamma sqrt(a(1-a)) e^{i phase(theta)}.
DensityMatrix true_state(const SourceConfig& cfg, double theta_mrad);

/// Angular average of true_state under angular_weight, by Gauss-Legendre
/// quadrature over the collection window.
DensityMatrix angle_averaged_state(const SourceConfig& cfg);

/// Relative fibre coupling at seed angle theta for the seed in the signal
/// mode and for the stimulated idler. Their product is the scan envelope.
double signal_coupling(const SourceConfig& cfg, double theta_mrad);
double idler_coupling(const SourceConfig& cfg, double theta_mrad);

/// Birefringent phase and H/V amplitude imbalance picked up by the seed on
/// its way into the signal fibre.
struct SeedDistortion {
  double birefringent_phase = 0.0;
  double amp_ratio = 1.0;  ///< |a|/|b| for an equal-amplitude input

  void validate() const;
  /// (amp_ratio h, e^{i phase} v), renormalised.
  JonesVector apply(const JonesVector& seed) const;
};

/// Amplitude transmissions (t_H, t_V) of the seed-detection path and of the
/// stimulated-idler path.
struct PdlConfig {
  std::array<double, 2> signal_loss_hv{1.0, 1.0};
  std::array<double, 2> idler_loss_hv{1.0, 1.0};

  void validate() const;
  /// Intensity ratio H/V that a D-polarised beam shows after each path.
  double signal_ratio_hv() const;
  double idler_ratio_hv() const;
};

struct StimulatedResponse {
  DensityMatrix idler_state;    ///< normalised, after idler-path loss
  DensityMatrix seed_detected;  ///< normalised, after signal-path loss
  double gain;                  ///< stimulated trace before normalisation
  double seed_throughput;       ///< detected fraction of the coupled seed
};

/// Unnormalised stimulated idler polarisation matrix
///   K_i Tr_s[(|s'><s'| ⊗ 1) rho] K_i^dagger
/// with s' the distorted seed. Projecting the signal onto s' conjugates the
/// seed amplitudes in the idler, so R seeds produce L idlers for Phi+.
ComplexMatrix stimulated_idler_matrix(const DensityMatrix& pair_state,
                                      const JonesVector& seed,
                                      const SeedDistortion& distortion,
                                      const PdlConfig& pdl);

/// Seed polarisation as it reaches the detectors, unnormalised.
ComplexMatrix detected_seed_matrix(const JonesVector& seed,
                                   const SeedDistortion& distortion,
                                   const PdlConfig& pdl);

/// Throws DegenerateError when no light reaches the idler or seed detector.
StimulatedResponse stimulated_response(const DensityMatrix& pair_state,
                                       const JonesVector& seed,
                                       const SeedDistortion& distortion,
                                       const PdlConfig& pdl);

StimulatedResponse stimulated_response(const SourceConfig& cfg,
                                       const JonesVector& seed,
                                       double theta_mrad,
                                       const SeedDistortion& distortion,
                                       const PdlConfig& pdl);

}  // namespace stimtomo
