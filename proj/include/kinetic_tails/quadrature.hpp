#pragma once

#include <vector>

namespace kt {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Gauss-Jacobi rule for weight (1-x)^alpha (1+x)^beta on [-1, 1] (Golub-Welsch).
Rule1D gauss_jacobi(int n, double alpha, double beta);

/// Surface measure of the unit sphere S^{m} embedded in R^{m+1}.
double sphere_area(int m);

}  // namespace kt
