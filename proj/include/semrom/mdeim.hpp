#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "semrom/block_system.hpp"

namespace semrom {

// Submatrix roles of the gathered system; Rhs covers the lifted forcing
// vector, which is geometry-dependent through the Dirichlet columns.
enum class Role { A = 0, B, Bt, C, Dbnd, Dint, Rhs };
constexpr int kMatrixRoleCount = 6;
constexpr int kRoleCount = 7;
const char* role_name(Role role);

// Global sparsity pattern of one role's contribution to the system.
// Entries are (row, col) with values carrying the Eq-system sign; the D
// roles also place each value at the transposed position (mirrored).
// The Rhs role stores rows only (col = -1).
struct RolePattern {
    Role role = Role::A;
    bool mirrored = false;
    std::vector<std::pair<int, int>> entries;
};

struct RolePatternSet {
    std::vector<RolePattern> roles; // indexed by Role
    // iteration-aligned slot ids for fast per-snapshot value extraction
    std::vector<std::vector<int>> slots; // matrix roles only
};

RolePatternSet build_role_patterns(const Mesh& mesh, const DofLayout& layout);

void role_values(const BlockSystem& sys, const RolePatternSet& pat, Role role,
                 Eigen::VectorXd& out);
void rhs_role_values(const DofLayout& layout, const Eigen::VectorXd& rhs,
                     const RolePatternSet& pat, Eigen::VectorXd& out);

// Materializes one basis matrix A_i (or any pattern-valued vector) as a
// global sparse matrix.
Eigen::SparseMatrix<double> role_matrix(const RolePattern& pattern,
                                        const Eigen::VectorXd& values, int n);

struct MatrixSnapshotSet {
    RolePattern pattern;
    std::vector<Eigen::VectorXd> vectors;
};

struct AffineExpansion {
    Role role = Role::A;
    bool mirrored = false;
    int q = 0;
    Eigen::MatrixXd basis;                          // pattern length x Q
    std::vector<int> interp_pos;                    // positions into pattern
    std::vector<std::pair<int, int>> interp_entries; // global coordinates
    Eigen::MatrixXd interp_matrix;                  // Q x Q rows of basis
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double condition = 0.0;
    double energy_captured = 0.0;
    std::vector<std::pair<int, int>> pattern_entries;
};

// POD of the vectorized matrices plus greedy DEIM point selection
// (argmax residual, ties broken by lowest pattern index).
AffineExpansion mdeim_build(const MatrixSnapshotSet& set, double energy_fraction = 0.9999);

// Solves the QxQ interpolation system from Q true entry evaluations.
Eigen::VectorXd mdeim_coefficients(const AffineExpansion& exp,
                                   const std::function<double(int, int)>& entry_eval);

Eigen::VectorXd mdeim_reconstruct(const AffineExpansion& exp, const Eigen::VectorXd& tau);

Eigen::MatrixXd assemble_reduced(const Eigen::VectorXd& tau,
                                 const std::vector<Eigen::MatrixXd>& projected);

} // namespace semrom
