#pragma once

#include <vector>

namespace semrom {

// Gauss-Lobatto-Legendre rule on [-1,1]. Nodes include the endpoints;
// exact for polynomials up to degree 2q-3.
struct QuadratureRule {
    int count = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gll_rule(int q);

// Legendre polynomial P_n and derivative at x.
void legendre(int n, double x, double& value, double& deriv);

// Jacobi polynomial P_n^(a,b) and derivative at x.
void jacobi(int n, double a, double b, double x, double& value, double& deriv);

} // namespace semrom
