#include "stimtomo/source.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stimtomo/error.hpp"
#include "stimtomo/quadrature.hpp"

namespace stimtomo {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

double gaussian(double x, double sigma) {
  return std::exp(-0.5 * (x / sigma) * (x / sigma));
}

// The two-photon matrix is nonzero only in the HH/VV corners.
DensityMatrix family_state(double alpha_sq, double coherence, double phase) {
  ComplexMatrix m(4);
  m(0, 0) = alpha_sq;
  m(3, 3) = 1.0 - alpha_sq;
  const Complex off =
      coherence * std::sqrt(alpha_sq * (1.0 - alpha_sq)) * std::polar(1.0, phase);
  m(0, 3) = off;
  m(3, 0) = std::conj(off);
  return DensityMatrix::normalized(m);
}

}  // namespace

void SourceConfig::validate() const {
  require(alpha_sq >= 0.0 && alpha_sq <= 1.0, "alpha_sq", "must lie in [0, 1]");
  require(decoherence >= 0.0 && decoherence <= 1.0, "decoherence",
          "must lie in [0, 1]");
  require(std::isfinite(phase0), "phase0", "must be finite");
  require(std::isfinite(phase_slope), "phase_slope", "must be finite");
  require(emission_sigma_mrad > 0.0, "emission_sigma_mrad", "must be positive");
  require(collection_halfwidth_mrad > 0.0, "collection_halfwidth_mrad",
          "must be positive");
  require(wavelength_nm > 0.0, "wavelength_nm", "must be positive");
  require(waist_qst_um > 0.0, "waist_qst_um", "must be positive");
  require(waist_seed_um > 0.0, "waist_seed_um", "must be positive");
  require(quadrature_nodes >= 33, "quadrature_nodes", "must be at least 33");
}

double collection_halfwidth_from_waist(double wavelength_nm, double waist_um) {
  // nm / um = 1e-3 rad = 1 mrad
  return wavelength_nm / (std::numbers::pi * waist_um);
}

double effective_sigma_mrad(const SourceConfig& cfg) {
  const double e = cfg.emission_sigma_mrad, c = cfg.collection_halfwidth_mrad;
  return e * c / std::sqrt(e * e + c * c);
}

double angular_weight(const SourceConfig& cfg, double theta_mrad) {
  if (std::abs(theta_mrad) > cfg.collection_halfwidth_mrad) return 0.0;
  return gaussian(theta_mrad, effective_sigma_mrad(cfg));
}

double pair_phase(const SourceConfig& cfg, double theta_mrad) {
  return cfg.phase0 + cfg.phase_slope * theta_mrad;
}

DensityMatrix true_state(const SourceConfig& cfg, double theta_mrad) {
  cfg.validate();
  return family_state(cfg.alpha_sq, cfg.decoherence, pair_phase(cfg, theta_mrad));
}

DensityMatrix angle_averaged_state(const SourceConfig& cfg) {
  cfg.validate();
  const double h = cfg.collection_halfwidth_mrad;
  const auto rule = gauss_legendre(cfg.quadrature_nodes, -h, h);
  Complex coherence = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double w = rule.weights[k] * angular_weight(cfg, rule.nodes[k]);
    coherence += w * std::polar(1.0, pair_phase(cfg, rule.nodes[k]));
    norm += w;
  }
  coherence /= norm;
  return family_state(cfg.alpha_sq, cfg.decoherence * std::abs(coherence),
                      std::arg(coherence));
}

double signal_coupling(const SourceConfig& cfg, double theta_mrad) {
  return gaussian(theta_mrad, cfg.collection_halfwidth_mrad);
}

double idler_coupling(const SourceConfig& cfg, double theta_mrad) {
  return gaussian(theta_mrad, cfg.emission_sigma_mrad);
}

void SeedDistortion::validate() const {
  require(std::isfinite(birefringent_phase), "birefringent_phase",
          "must be finite");
  require(std::isfinite(amp_ratio) && amp_ratio > 0.0, "amp_ratio",
          "must be finite and positive");
}

JonesVector SeedDistortion::apply(const JonesVector& seed) const {
  validate();
  return JonesVector::normalized(amp_ratio * seed.h(),
                                 std::polar(1.0, birefringent_phase) * seed.v());
}

void PdlConfig::validate() const {
  for (double t : signal_loss_hv)
    require(t > 0.0 && t <= 1.0, "signal_loss_hv", "transmissions must lie in (0, 1]");
  for (double t : idler_loss_hv)
    require(t > 0.0 && t <= 1.0, "idler_loss_hv", "transmissions must lie in (0, 1]");
}

double PdlConfig::signal_ratio_hv() const {
  return std::pow(signal_loss_hv[0] / signal_loss_hv[1], 2);
}

double PdlConfig::idler_ratio_hv() const {
  return std::pow(idler_loss_hv[0] / idler_loss_hv[1], 2);
}

ComplexMatrix stimulated_idler_matrix(const DensityMatrix& pair_state,
                                      const JonesVector& seed,
                                      const SeedDistortion& distortion,
                                      const PdlConfig& pdl) {
  if (pair_state.dim() != 4) {
    throw InvalidStateError("stimulated response needs a two-photon state");
  }
  pdl.validate();
  const JonesVector s = distortion.apply(seed);
  ComplexMatrix idler(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          idler(a, b) += s.amplitudes()[k] * std::conj(s.amplitudes()[j]) *
                         pair_state(2 * j + a, 2 * k + b);
  const std::array<double, 2> t = pdl.idler_loss_hv;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) idler(a, b) *= t[a] * t[b];
  return idler;
}

ComplexMatrix detected_seed_matrix(const JonesVector& seed,
                                   const SeedDistortion& distortion,
                                   const PdlConfig& pdl) {
  pdl.validate();
  const JonesVector s = distortion.apply(seed);
  const std::array<Complex, 2> out{pdl.signal_loss_hv[0] * s.h(),
                                   pdl.signal_loss_hv[1] * s.v()};
  return ComplexMatrix::outer(out, out);
}

StimulatedResponse stimulated_response(const DensityMatrix& pair_state,
                                       const JonesVector& seed,
                                       const SeedDistortion& distortion,
                                       const PdlConfig& pdl) {
  const ComplexMatrix idler =
      stimulated_idler_matrix(pair_state, seed, distortion, pdl);
  const ComplexMatrix detected = detected_seed_matrix(seed, distortion, pdl);
  const double gain = idler.trace().real();
  const double throughput = detected.trace().real();
  if (!(gain > 0.0)) {
    throw DegenerateError("no stimulated light reaches the idler detector");
  }
  if (!(throughput > 0.0)) {
    throw DegenerateError("no seed light reaches the signal detector");
  }
  return {DensityMatrix::normalized(idler), DensityMatrix::normalized(detected),
          gain, throughput};
}

StimulatedResponse stimulated_response(const SourceConfig& cfg,
                                       const JonesVector& seed,
                                       double theta_mrad,
                                       const SeedDistortion& distortion,
                                       const PdlConfig& pdl) {
  return stimulated_response(true_state(cfg, theta_mrad), seed, distortion, pdl);
}

}  // namespace stimtomo
