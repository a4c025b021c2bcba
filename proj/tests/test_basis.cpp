#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "semrom/basis.hpp"
#include "semrom/quadrature.hpp"

using namespace semrom;

TEST_CASE("boundary modes interpolate the endpoints")
{
    Basis1D b(6);
    double v, d;
    b.eval(0, -1.0, v, d);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    b.eval(0, 1.0, v, d);
    CHECK(std::abs(v) < 1e-15);
    b.eval(6, 1.0, v, d);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    b.eval(6, -1.0, v, d);
    CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("boundary modes form a partition of unity")
{
    Basis1D b(5);
    for (double xi : {-0.7, 0.0, 0.3, 0.99}) {
        double v0, v1, d;
        b.eval(0, xi, v0, d);
        b.eval(5, xi, v1, d);
        CHECK(v0 + v1 == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("interior modes vanish at both endpoints")
{
    for (int p : {3, 5, 8}) {
        Basis1D b(p);
        for (int m = 1; m < p; ++m) {
            double v, d;
            b.eval(m, -1.0, v, d);
            CHECK(std::abs(v) < 1e-14);
            b.eval(m, 1.0, v, d);
            CHECK(std::abs(v) < 1e-14);
        }
    }
}

TEST_CASE("derivatives match central finite differences")
{
    const int p = 8;
    Basis1D b(p);
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-0.99, 0.99);
    const double h = 1e-6;
    double max_err = 0.0;
    for (int k = 0; k < 20; ++k) {
        double xi = dist(rng);
        for (int m = 0; m <= p; ++m) {
            double vp, vm, v, d, dd;
            b.eval(m, xi + h, vp, dd);
            b.eval(m, xi - h, vm, dd);
            b.eval(m, xi, v, d);
            max_err = std::max(max_err, std::abs(d - (vp - vm) / (2 * h)));
        }
    }
    CHECK(max_err <= 1e-7);
}

TEST_CASE("modes are linearly independent (finite Gram condition)")
{
    const int p = 7;
    Basis1D b(p);
    QuadratureRule r = gll_rule(p + 2);
    Eigen::MatrixXd vals(p + 1, r.count);
    for (int m = 0; m <= p; ++m)
        for (int i = 0; i < r.count; ++i) {
            double v, d;
            b.eval(m, r.nodes[i], v, d);
            vals(m, i) = v;
        }
    Eigen::MatrixXd gram = vals * Eigen::VectorXd::Map(r.weights.data(), r.count)
                                      .asDiagonal() *
                           vals.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    double cond = svd.singularValues()(0) / svd.singularValues()(p);
    CHECK(std::isfinite(cond));
    CHECK(svd.singularValues()(p) > 1e-12);
}

TEST_CASE("tabulations agree with pointwise evaluation")
{
    const int p = 5;
    Basis1D b(p);
    QuadratureRule r = gll_rule(p + 2);
    Eigen::MatrixXd v = b.values(r.nodes);
    Eigen::MatrixXd d = b.derivatives(r.nodes);
    for (int m = 0; m <= p; ++m)
        for (int i = 0; i < r.count; ++i) {
            double vv, dd;
            b.eval(m, r.nodes[i], vv, dd);
            CHECK(v(m, i) == doctest::Approx(vv).epsilon(1e-14));
            CHECK(d(m, i) == doctest::Approx(dd).epsilon(1e-14));
        }
}
