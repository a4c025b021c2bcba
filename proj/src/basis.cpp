#include "semrom/basis.hpp"

#include <stdexcept>

#include "semrom/quadrature.hpp"

namespace semrom {

void Basis1D::eval(int m, double xi, double& value, double& deriv) const
{
    if (m < 0 || m > p_) throw std::out_of_range("Basis1D::eval: mode index");
    if (m == 0) {
        value = 0.5 * (1.0 - xi);
        deriv = -0.5;
        return;
    }
    if (m == p_) {
        value = 0.5 * (1.0 + xi);
        deriv = 0.5;
        return;
    }
    double j, dj;
    jacobi(m - 1, 1.0, 1.0, xi, j, dj);
    double bubble = 0.25 * (1.0 - xi) * (1.0 + xi);
    value = bubble * j;
    deriv = -0.5 * xi * j + bubble * dj;
}

Eigen::MatrixXd Basis1D::values(const std::vector<double>& pts) const
{
    Eigen::MatrixXd out(count(), pts.size());
    for (int m = 0; m <= p_; ++m)
        for (size_t k = 0; k < pts.size(); ++k) {
            double v, d;
            eval(m, pts[k], v, d);
            out(m, k) = v;
        }
    return out;
}

Eigen::MatrixXd Basis1D::derivatives(const std::vector<double>& pts) const
{
    Eigen::MatrixXd out(count(), pts.size());
    for (int m = 0; m <= p_; ++m)
        for (size_t k = 0; k < pts.size(); ++k) {
            double v, d;
            eval(m, pts[k], v, d);
            out(m, k) = d;
        }
    return out;
}

} // namespace semrom
