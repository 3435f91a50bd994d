#pragma once

#include <span>
#include <vector>

#include "stimtomo/matrix.hpp"

namespace stimtomo {

/// Hermitian, unit-trace, positive-semidefinite state of one (dim 2) or two
/// (dim 4) polarisation qubits. Every instance satisfies the invariants:
///   max|rho - rho^dagger| <= 1e-12, |Tr rho - 1| <= 1e-12, lambda_min >= -1e-10.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kEigenTol = 1e-10;

  /// Validates `m` as-is. Throws InvalidStateError on any violation.
  static DensityMatrix from_matrix(const ComplexMatrix& m);

  /// Hermitises and trace-normalises `m`, then validates positivity.
  /// Use for results of arithmetic that only drift by rounding.
  static DensityMatrix normalized(const ComplexMatrix& m);

  /// |psi><psi| / <psi|psi>
  static DensityMatrix pure(std::span<const Complex> psi);

  static DensityMatrix maximally_mixed(int dim);

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return m_.dim(); }
  Complex operator()(int row, int col) const { return m_(row, col); }

  friend bool operator==(const DensityMatrix&, const DensityMatrix&) = default;

 private:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

/// Real parameters of a lower-triangular factor T with rho = T T^dagger /
/// Tr(T T^dagger). Layout: the dim real diagonal entries, then the real and
/// imaginary parts of the strictly lower entries in row-major order.
class TriangularParams {
 public:
  /// Throws DegenerateError when every value is zero and
  /// std::invalid_argument when the count is neither 4 nor 16.
  explicit TriangularParams(std::vector<double> values);

  int dim() const { return values_.size() == 4 ? 2 : 4; }
  std::span<const double> values() const { return values_; }

  static std::size_t count_for_dim(int dim) { return dim == 2 ? 4 : 16; }

 private:
  std::vector<double> values_;
};

/// Assembles the triangular factor without normalisation.
ComplexMatrix triangular_factor(std::span<const double> values);

/// Inverse of triangular_factor.
std::vector<double> factor_values(const ComplexMatrix& lower);

DensityMatrix params_to_density(const TriangularParams& t);

/// Parameters reproducing `rho` (up to scale). The state is mixed with
/// `mixing` of the identity first so that the Cholesky factor exists for
/// rank-deficient input.
TriangularParams density_to_params(const DensityMatrix& rho,
                                   double mixing = 1e-10);

double purity(const DensityMatrix& rho);

/// Wootters concurrence; rho must be two-qubit.
double concurrence(const DensityMatrix& rho);

/// Jozsa fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Half the trace norm of rho - sigma.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

/// arg rho[HH, VV] in (-pi, pi].
double phase_hh_vv(const DensityMatrix& rho);

/// Two-qubit Bell state (|HH> + e^{i phase}|VV>)/sqrt2.
DensityMatrix bell_state(double phase = 0.0);

/// Reduced state of the signal (first) or idler (second) photon.
DensityMatrix partial_trace_idler(const DensityMatrix& rho);
DensityMatrix partial_trace_signal(const DensityMatrix& rho);

/// U rho U^dagger
DensityMatrix transform(const DensityMatrix& rho, const ComplexMatrix& unitary);

}  // namespace stimtomo
