#include "semrom/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace semrom {

void legendre(int n, double x, double& value, double& deriv)
{
    if (n == 0) { value = 1.0; deriv = 0.0; return; }
    double pm1 = 1.0, p = x;
    for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
        pm1 = p;
        p = pk;
    }
    value = p;
    // (1-x^2) P_n' = n (P_{n-1} - x P_n)
    double omx2 = 1.0 - x * x;
    if (omx2 > 1e-14) {
        deriv = n * (pm1 - x * p) / omx2;
    } else {
        // P_n'(1) = n(n+1)/2, P_n'(-1) = (-1)^(n-1) n(n+1)/2
        double endval = 0.5 * n * (n + 1.0);
        deriv = (x > 0) ? endval : (n % 2 == 0 ? -endval : endval);
    }
}

void jacobi(int n, double a, double b, double x, double& value, double& deriv)
{
    if (n == 0) { value = 1.0; deriv = 0.0; return; }
    double pm1 = 1.0;
    double p = 0.5 * (a + b + 2.0) * x + 0.5 * (a - b);
    for (int k = 2; k <= n; ++k) {
        double a1 = 2.0 * k * (k + a + b) * (2.0 * k + a + b - 2.0);
        double a2 = (2.0 * k + a + b - 1.0) * (a * a - b * b);
        double a3 = (2.0 * k + a + b - 2.0) * (2.0 * k + a + b - 1.0) * (2.0 * k + a + b);
        double a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * (2.0 * k + a + b);
        double pk = ((a2 + a3 * x) * p - a4 * pm1) / a1;
        pm1 = p;
        p = pk;
    }
    value = p;
    // d/dx P_n^(a,b) = (n+a+b+1)/2 P_{n-1}^(a+1,b+1)
    double v, d;
    jacobi(n - 1, a + 1.0, b + 1.0, x, v, d);
    deriv = 0.5 * (n + a + b + 1.0) * v;
}

QuadratureRule gll_rule(int q)
{
    if (q < 2) throw std::invalid_argument("gll_rule: need q >= 2");
    QuadratureRule rule;
    rule.count = q;
    rule.nodes.resize(q);
    rule.weights.resize(q);
    const int n = q - 1; // nodes are roots of (1-x^2) P_n'
    rule.nodes[0] = -1.0;
    rule.nodes[n] = 1.0;
    for (int i = 1; i < n; ++i) {
        // Chebyshev-Gauss-Lobatto initial guess, refined by Newton on P_n'.
        double x = -std::cos(M_PI * i / n);
        for (int it = 0; it < 100; ++it) {
            double p, dp;
            legendre(n, x, p, dp);
            // second derivative from Legendre ODE: (1-x^2) P'' = 2x P' - n(n+1) P
            double d2p = (2.0 * x * dp - n * (n + 1.0) * p) / (1.0 - x * x);
            double dx = dp / d2p;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
    }
    for (int i = 0; i < q; ++i) {
        double p, dp;
        legendre(n, rule.nodes[i], p, dp);
        rule.weights[i] = 2.0 / (q * n * p * p);
    }
    return rule;
}

} // namespace semrom
