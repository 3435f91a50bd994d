#pragma once

#include <vector>

namespace stimtomo {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped onto [lo, hi].
QuadratureRule gauss_legendre(int n, double lo, double hi);

}  // namespace stimtomo
