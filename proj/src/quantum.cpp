#include "stimtomo/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stimtomo/error.hpp"

namespace stimtomo {

namespace {

void require_two_qubit(const DensityMatrix& rho, const char* what) {
  if (rho.dim() != 4) {
    throw std::invalid_argument(std::string(what) +
                                " requires a two-qubit state");
  }
}

double min_eigenvalue(const ComplexMatrix& m) {
  return eigen_hermitian(m).values.back();
}

// Sum of square roots of the (clamped) eigenvalues of a PSD matrix.
// sigma_y ⊗ sigma_y in the {HH, HV, VH, VV} basis.
ComplexMatrix spin_flip() {
  ComplexMatrix m(4);
  m(0, 3) = -1.0;
  m(1, 2) = 1.0;
  m(2, 1) = 1.0;
  m(3, 0) = -1.0;
  return m;
}

}  // namespace

DensityMatrix DensityMatrix::from_matrix(const ComplexMatrix& m) {
  if (!is_hermitian(m, kHermitianTol)) {
    throw InvalidStateError("density matrix is not Hermitian");
  }
  const Complex tr = m.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw InvalidStateError("density matrix trace is " +
                            std::to_string(tr.real()) + ", expected 1");
  }
  const double lmin = min_eigenvalue(m);
  if (lmin < -kEigenTol) {
    throw InvalidStateError("density matrix has negative eigenvalue " +
                            std::to_string(lmin));
  }
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::normalized(const ComplexMatrix& m) {
  ComplexMatrix h = m + m.adjoint();
  h *= 0.5;
  const double tr = h.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw InvalidStateError("cannot normalise a matrix with trace " +
                            std::to_string(tr));
  }
  h *= 1.0 / tr;
  return from_matrix(h);
}

DensityMatrix DensityMatrix::pure(std::span<const Complex> psi) {
  return normalized(ComplexMatrix::outer(psi, psi));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(ComplexMatrix::identity(dim) * Complex(1.0 / dim));
}

TriangularParams::TriangularParams(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.size() != 4 && values_.size() != 16) {
    throw std::invalid_argument("triangular parameters need 4 or 16 values");
  }
  if (std::all_of(values_.begin(), values_.end(),
                  [](double v) { return v == 0.0; })) {
    throw DegenerateError("all-zero triangular parameterisation");
  }
}

ComplexMatrix triangular_factor(std::span<const double> values) {
  const int dim = values.size() == 4 ? 2 : 4;
  ComplexMatrix t(dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i) t(i, i) = values[k++];
  for (int i = 1; i < dim; ++i)
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(values[k], values[k + 1]);
      k += 2;
    }
  return t;
}

std::vector<double> factor_values(const ComplexMatrix& lower) {
  std::vector<double> v;
  v.reserve(TriangularParams::count_for_dim(lower.dim()));
  for (int i = 0; i < lower.dim(); ++i) v.push_back(lower(i, i).real());
  for (int i = 1; i < lower.dim(); ++i)
    for (int j = 0; j < i; ++j) {
      v.push_back(lower(i, j).real());
      v.push_back(lower(i, j).imag());
    }
  return v;
}

DensityMatrix params_to_density(const TriangularParams& t) {
  const ComplexMatrix f = triangular_factor(t.values());
  return DensityMatrix::normalized(f * f.adjoint());
}

TriangularParams density_to_params(const DensityMatrix& rho, double mixing) {
  const int n = rho.dim();
  ComplexMatrix a = rho.matrix() * Complex(1.0 - mixing) +
                    ComplexMatrix::identity(n) * Complex(mixing / n);
  ComplexMatrix l(n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (int k = 0; k < j; ++k) d -= std::norm(l(j, k));
    const double ljj = std::sqrt(std::max(d, 0.0));
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      Complex s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = ljj > 0.0 ? s / ljj : Complex{};
    }
  }
  return TriangularParams(factor_values(l));
}

double purity(const DensityMatrix& rho) {
  return trace_of_product(rho.matrix(), rho.matrix()).real();
}

double concurrence(const DensityMatrix& rho) {
  require_two_qubit(rho, "concurrence");
  const ComplexMatrix flip = spin_flip();
  // sqrt of the spectrum of sqrt(rho) rho~ sqrt(rho) = singular values of
  // sqrt(rho) sqrt(rho~), with sqrt(rho~) = flip sqrt(rho)* flip.
  const ComplexMatrix root = psd_sqrt(rho.matrix());
  const auto lam = singular_values(root * flip * root.conjugate() * flip);
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw std::invalid_argument("fidelity of states with different dimension");
  }
  // Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the trace norm of sqrt(rho) sqrt(sigma).
  double f = 0.0;
  for (double s : singular_values(psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix()))) f += s;
  return std::clamp(f * f, 0.0, 1.0);
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  double s = 0.0;
  for (double l : eigen_hermitian(rho.matrix() - sigma.matrix()).values)
    s += std::abs(l);
  return 0.5 * s;
}

double phase_hh_vv(const DensityMatrix& rho) {
  require_two_qubit(rho, "phase_hh_vv");
  const double p = std::arg(rho(0, 3));
  return p <= -std::numbers::pi ? std::numbers::pi : p;
}

DensityMatrix bell_state(double phase) {
  const double a = 1.0 / std::numbers::sqrt2;
  const std::vector<Complex> psi{a, 0.0, 0.0, a * std::polar(1.0, phase)};
  return DensityMatrix::pure(psi);
}

DensityMatrix partial_trace_idler(const DensityMatrix& rho) {
  require_two_qubit(rho, "partial trace");
  ComplexMatrix m(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 2; ++k) m(a, b) += rho(2 * a + k, 2 * b + k);
  return DensityMatrix::normalized(m);
}

DensityMatrix partial_trace_signal(const DensityMatrix& rho) {
  require_two_qubit(rho, "partial trace");
  ComplexMatrix m(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 2; ++k) m(a, b) += rho(2 * k + a, 2 * k + b);
  return DensityMatrix::normalized(m);
}

DensityMatrix transform(const DensityMatrix& rho, const ComplexMatrix& unitary) {
  return DensityMatrix::normalized(unitary * rho.matrix() * unitary.adjoint());
}

}  // namespace stimtomo
