#pragma once

#include <vector>

#include <Eigen/Dense>

namespace semrom {

// Modal 1D basis of order p: two boundary (hat) modes and p-1 interior
// bubble modes built from Jacobi P^(1,1) polynomials.
//   mode 0:      (1-x)/2
//   mode m (1..p-1): (1-x)(1+x)/4 * P_{m-1}^(1,1)(x)
//   mode p:      (1+x)/2
class Basis1D {
public:
    explicit Basis1D(int order) : p_(order) {}

    int order() const { return p_; }
    int count() const { return p_ + 1; }

    void eval(int m, double xi, double& value, double& deriv) const;

    // Tabulate values/derivatives of all modes at the given points.
    // Rows are modes, columns are points.
    Eigen::MatrixXd values(const std::vector<double>& pts) const;
    Eigen::MatrixXd derivatives(const std::vector<double>& pts) const;

private:
    int p_;
};

} // namespace semrom
