#pragma once

#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "semrom/mdeim.hpp"
#include "semrom/pod.hpp"
#include "semrom/steady.hpp"

namespace semrom {

// Element-local restriction of the reduced basis to one support element:
// modal velocity rows in tensor order, plus the Dirichlet part.
struct ElementSlice {
    Eigen::MatrixXd rx, ry; // n2 x N
    Eigen::VectorXd dx, dy; // n2
};

struct RomArtifacts {
    ReducedBasis basis;
    std::vector<AffineExpansion> matrix_exp; // one per matrix role
    AffineExpansion rhs_exp;

    std::vector<std::vector<Eigen::MatrixXd>> projected; // [role][q] N x N
    std::vector<Eigen::VectorXd> projected_rhs;          // [q] N

    Eigen::MatrixXd snapshot_proj; // N x N_s, reduced training states
    std::vector<ParameterPoint> train_params;
    std::vector<double> train_observables;

    std::map<int, ElementSlice> support; // interpolation support elements

    double nu_min = 0.0, nu_max = 1.0, c_min = 0.0, c_max = 1.0;
    uint64_t mesh_fingerprint = 0;
};

std::vector<int> support_elements(const DofLayout& layout, int g);

// Projects the affine terms and slices the basis onto the interpolation
// support; everything the online solve needs, nothing sized by N_delta
// except the basis itself (kept for reconstruction and reporting).
RomArtifacts rom_offline(const SnapshotSet& snapshots, const ReducedBasis& basis,
                         std::vector<AffineExpansion> matrix_exp,
                         AffineExpansion rhs_exp, const Mesh& mesh,
                         const DofLayout& layout);

struct RomSolveResult {
    Eigen::VectorXd x_n;
    double observable = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> step_seconds;
    int touched_elements = 0; // elements with operators built online
};

// Binds the artifacts to the channel geometry; meshes are rebuilt per
// curvature (cached) and element operators are built lazily, only on the
// interpolation support.
class RomSolver {
public:
    RomSolver(const RomArtifacts& art, const ChannelSpec& spec,
              const Refinement& refinement, int p);

    // n_override > 0 truncates the reduced space for convergence studies.
    RomSolveResult solve(const ParameterPoint& mu, const OseenConfig& config,
                         int n_override = -1);

    // Full-order reconstruction of a reduced state at curvature c.
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& x_n) const;
    double evaluate_observable(double curvature, const Eigen::VectorXd& x_n);

private:
    struct Context {
        Mesh mesh;
        DofLayout layout;
        std::unique_ptr<LazyOps> lazy;
    };
    Context& context(double curvature);

    const RomArtifacts& art_;
    ChannelSpec spec_;
    Refinement refinement_;
    int p_;
    std::map<long long, Context> contexts_; // keyed by curvature bits
};

// Reference reduced solve without interpolation: assembles the full
// linearized system each iteration and projects it. Test oracle for the
// interpolated online path.
RomSolveResult online_solve_exact(const Mesh& mesh, const MeshOps& ops,
                                  const DofLayout& layout, const ReducedBasis& basis,
                                  const ParameterPoint& mu, const OseenConfig& config,
                                  const Eigen::VectorXd& x0);

struct RomSweepRow {
    ParameterPoint mu;
    double v_obs = 0.0;
    bool converged = false;
    int iterations = 0;
    double online_ms = 0.0;
};

std::vector<RomSweepRow> rom_sweep(RomSolver& solver, const SweepGrid& grid,
                                   const OseenConfig& config, int n_override = -1);

} // namespace semrom
