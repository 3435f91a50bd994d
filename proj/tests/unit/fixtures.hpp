#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "stimtomo/polarization.hpp"
#include "stimtomo/quantum.hpp"

namespace fixtures {

using stimtomo::Complex;
using stimtomo::ComplexMatrix;
using stimtomo::DensityMatrix;
using stimtomo::PolLabel;

inline ComplexMatrix mat2(double a, Complex b, double d) {
  return ComplexMatrix(2, {Complex(a), b, std::conj(b), Complex(d)});
}

// Experimentally reconstructed seed matrices from the supplementary table.
struct SeedFixture {
  PolLabel label;
  ComplexMatrix rho;
};

inline std::vector<SeedFixture> table_seed_matrices() {
  return {
      {PolLabel::H, mat2(0.996, {-0.020, 0.058}, 0.004)},
      {PolLabel::V, mat2(0.002, {0.025, -0.031}, 0.998)},
      {PolLabel::D, mat2(0.506, {0.492, -0.068}, 0.494)},
      {PolLabel::A, mat2(0.449, {-0.484, 0.107}, 0.551)},
      {PolLabel::R, mat2(0.525, {-0.080, -0.489}, 0.475)},
      {PolLabel::L, mat2(0.430, {0.081, 0.484}, 0.570)},
  };
}

inline DensityMatrix random_state(std::mt19937_64& rng, int dim = 4) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim == 2 ? 4 : 16);
  for (double& x : v) x = normal(rng);
  return stimtomo::params_to_density(stimtomo::TriangularParams(v));
}

// Pure state a|HH> + e^{i phase} b|VV>.
inline DensityMatrix two_term_pure(double alpha_sq, double phase = 0.0) {
  const std::vector<Complex> psi{std::sqrt(alpha_sq), 0.0, 0.0,
                                 std::polar(std::sqrt(1.0 - alpha_sq), phase)};
  return DensityMatrix::pure(psi);
}

}  // namespace fixtures
