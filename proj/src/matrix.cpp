#include "stimtomo/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stimtomo/error.hpp"

namespace stimtomo {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 4) {
    throw std::invalid_argument("matrix dimension must be 2 or 4, got " +
                                std::to_string(dim));
  }
}

void check_same_dim(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("matrix dimension mismatch");
  }
}

constexpr double kHermitianTol = 1e-10;
constexpr double kOffDiagonalTol = 1e-13;
constexpr int kMaxSweeps = 100;

}  // namespace

ComplexMatrix::ComplexMatrix(int dim) : dim_(dim) { check_dim(dim); }

ComplexMatrix::ComplexMatrix(int dim, std::span<const Complex> row_major)
    : ComplexMatrix(dim) {
  if (row_major.size() != size()) {
    throw std::invalid_argument("expected " + std::to_string(size()) +
                                " entries, got " +
                                std::to_string(row_major.size()));
  }
  std::copy(row_major.begin(), row_major.end(), data_.begin());
}

ComplexMatrix::ComplexMatrix(int dim, std::initializer_list<Complex> row_major)
    : ComplexMatrix(dim, std::span<const Complex>(row_major.begin(),
                                                  row_major.size())) {}

ComplexMatrix ComplexMatrix::identity(int dim) {
  ComplexMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> diag) {
  ComplexMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim(); ++i) m(i, i) = diag[i];
  return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const Complex> a,
                                   std::span<const Complex> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("outer product of unequal-length vectors");
  }
  ComplexMatrix m(static_cast<int>(a.size()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) m(i, j) = a[i] * std::conj(b[j]);
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix m(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = std::conj((*this)(j, i));
  return m;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix m(dim_);
  for (std::size_t k = 0; k < size(); ++k) m.data_[k] = std::conj(data_[k]);
  return m;
}

Complex ComplexMatrix::trace() const {
  Complex t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < size(); ++k) m = std::max(m, std::abs(data_[k]));
  return m;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += std::norm(data_[k]);
  return std::sqrt(s);
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
  check_same_dim(*this, rhs);
  for (std::size_t k = 0; k < size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
  check_same_dim(*this, rhs);
  for (std::size_t k = 0; k < size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (std::size_t k = 0; k < size(); ++k) data_[k] *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  check_same_dim(a, b);
  const int n = a.dim();
  ComplexMatrix c(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).max_abs();
}

Complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  check_same_dim(a, b);
  Complex t = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int k = 0; k < a.dim(); ++k) t += a(i, k) * b(k, i);
  return t;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  for (int i = 0; i < m.dim(); ++i)
    for (int j = i; j < m.dim(); ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
  return true;
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  const int n = a.dim() * b.dim();
  ComplexMatrix m(n);
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j)
      for (int k = 0; k < b.dim(); ++k)
        for (int l = 0; l < b.dim(); ++l)
          m(i * b.dim() + k, j * b.dim() + l) = a(i, j) * b(k, l);
  return m;
}

std::vector<Complex> apply(const ComplexMatrix& m, std::span<const Complex> v) {
  if (static_cast<int>(v.size()) != m.dim()) {
    throw std::invalid_argument("vector length does not match matrix");
  }
  std::vector<Complex> out(v.size());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

HermitianEigen eigen_hermitian(const ComplexMatrix& m) {
  const int n = m.dim();
  if (!is_hermitian(m, kHermitianTol * std::max(1.0, m.max_abs()))) {
    throw NumericalError("eigen_hermitian: matrix is not Hermitian");
  }
  ComplexMatrix a = m;
  for (int i = 0; i < n; ++i) {
    a(i, i) = a(i, i).real();
    for (int j = i + 1; j < n; ++j) {
      const Complex avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
      a(i, j) = avg;
      a(j, i) = std::conj(avg);
    }
  }
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double threshold = kOffDiagonalTol * std::max(1.0, a.frobenius_norm());

  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > threshold) {
    if (++sweep > kMaxSweeps) {
      throw NumericalError("eigen_hermitian: Jacobi did not converge");
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Complex b = a(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        // Phase-rotate the (p,q) block to a real symmetric one, then apply
        // the classical rotation that annihilates its off-diagonal element.
        const Complex phase = std::conj(b) / mag;  // e^{-i arg b}
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Complex upp = c, upq = s, uqp = -s * phase, uqq = c * phase;

        for (int k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (int k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (int k = 0; k < n; ++k) {
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return a(i, i).real() > a(j, j).real();
  });
  HermitianEigen out{std::vector<double>(n), ComplexMatrix(n)};
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (int r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

ComplexMatrix from_eigen(std::span<const double> values,
                         const ComplexMatrix& vectors) {
  const int n = vectors.dim();
  ComplexMatrix m(n);
  for (int k = 0; k < n; ++k) {
    if (values[k] == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) += values[k] * vectors(i, k) * std::conj(vectors(j, k));
  }
  return m;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  auto eig = eigen_hermitian(m);
  for (double& l : eig.values) l = l > kSqrtEigenFloor ? std::sqrt(l) : 0.0;
  return from_eigen(eig.values, eig.vectors);
}

std::vector<double> singular_values(const ComplexMatrix& m) {
  // One-sided Jacobi: rotate column pairs until they are orthogonal; the
  // column norms are then the singular values, accurate to eps * |m|.
  const int n = m.dim();
  ComplexMatrix a = m;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0;
        Complex gamma = 0.0;
        for (int r = 0; r < n; ++r) {
          alpha += std::norm(a(r, p));
          beta += std::norm(a(r, q));
          gamma += std::conj(a(r, p)) * a(r, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = std::conj(gamma) / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < n; ++r) {
          const Complex ap = a(r, p);
          const Complex aq = a(r, q) * phase;
          a(r, p) = c * ap - s * aq;
          a(r, q) = s * ap + c * aq;
        }
      }
    if (!rotated) break;
  }
  std::vector<double> out(n);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < n; ++r) s += std::norm(a(r, c));
    out[c] = std::sqrt(s);
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace stimtomo
