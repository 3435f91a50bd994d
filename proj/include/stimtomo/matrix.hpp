#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace stimtomo {

using Complex = std::complex<double>;

/// Dense square complex matrix of dimension 2 (one photon) or 4 (a pair),
/// stored row-major. Basis order for dim 4 is {HH, HV, VH, VV}.
class ComplexMatrix {
 public:
  static constexpr int kMaxDim = 4;

  /// 2x2 zero matrix.
  ComplexMatrix() : ComplexMatrix(2) {}
  explicit ComplexMatrix(int dim);
  ComplexMatrix(int dim, std::span<const Complex> row_major);
  ComplexMatrix(int dim, std::initializer_list<Complex> row_major);

  static ComplexMatrix identity(int dim);
  static ComplexMatrix diagonal(std::span<const double> diag);
  /// |a><b|
  static ComplexMatrix outer(std::span<const Complex> a,
                             std::span<const Complex> b);

  int dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(dim_ * dim_); }

  Complex& operator()(int row, int col) { return data_[row * dim_ + col]; }
  const Complex& operator()(int row, int col) const {
    return data_[row * dim_ + col];
  }

  std::span<const Complex> entries() const { return {data_.data(), size()}; }

  ComplexMatrix adjoint() const;
  ComplexMatrix conjugate() const;
  Complex trace() const;
  /// Largest entry modulus.
  double max_abs() const;
  double frobenius_norm() const;

  ComplexMatrix& operator+=(const ComplexMatrix& rhs);
  ComplexMatrix& operator-=(const ComplexMatrix& rhs);
  ComplexMatrix& operator*=(Complex s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    return a += b;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    return a -= b;
  }
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a,
                                 const ComplexMatrix& b);

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  int dim_;
  std::array<Complex, kMaxDim * kMaxDim> data_{};
};

/// Entrywise max |a - b|. Dimensions must agree.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// Tr[a b] without forming the product.
Complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b);

bool is_hermitian(const ComplexMatrix& m, double tol);

/// Kronecker product a ⊗ b; the result dimension must be 2 or 4.
ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Matrix-vector product.
std::vector<Complex> apply(const ComplexMatrix& m, std::span<const Complex> v);

struct HermitianEigen {
  std::vector<double> values;  ///< descending
  ComplexMatrix vectors;       ///< column k belongs to values[k]
};

/// Cyclic complex Jacobi diagonalisation of a Hermitian matrix.
/// Throws NumericalError for non-Hermitian input (tolerance 1e-10).
HermitianEigen eigen_hermitian(const ComplexMatrix& m);

/// V diag(values) V^dagger
ComplexMatrix from_eigen(std::span<const double> values,
                         const ComplexMatrix& vectors);

/// Eigenvalues below this are treated as zero when taking square roots.
/// Jacobi leaves O(1e-16) noise on exactly-singular spectra, whose square
/// roots would otherwise contribute O(1e-8) to traces.
inline constexpr double kSqrtEigenFloor = 1e-14;

/// Principal square root of a PSD Hermitian matrix via eigendecomposition.
/// Eigenvalues below kSqrtEigenFloor (including small negatives) become 0.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

/// Singular values, descending, by one-sided Jacobi (no squaring, so small
/// values keep absolute accuracy).
std::vector<double> singular_values(const ComplexMatrix& m);

}  // namespace stimtomo
