#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semrom/geometry.hpp"

namespace semrom {

struct SnapshotSet {
    Eigen::MatrixXd states; // N_delta x N_s, one converged solve per column
    std::vector<ParameterPoint> parameters;
    std::vector<double> observables;
    std::vector<char> converged;
};

struct ReducedBasis {
    Eigen::MatrixXd u;               // N_delta x N, orthonormal columns
    Eigen::VectorXd singular_values; // full spectrum
    int n = 0;                       // retained mode count
    double energy_fraction = 0.0;
};

// POD via the Gram-matrix eigenproblem, truncated by the cumulative
// squared-singular-value energy rule.
ReducedBasis pod(const Eigen::MatrixXd& snapshots, double energy_fraction = 0.9999);

struct DecayRow {
    int mode = 0;
    double sigma = 0.0;
    double cumulative_energy = 0.0;
};

std::vector<DecayRow> pod_decay_report(const ReducedBasis& basis);

void write_decay_csv(const std::vector<DecayRow>& rows, const std::string& path);
void write_decay_svg(const std::vector<DecayRow>& rows, const std::string& path);

} // namespace semrom
