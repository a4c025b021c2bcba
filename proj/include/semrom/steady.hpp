#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "semrom/block_system.hpp"
#include "semrom/geometry.hpp"

namespace semrom {

struct FlowState {
    Eigen::VectorXd x; // gathered free dofs: [v_bnd | p | v_int]
};

struct OseenConfig {
    double rel_tol = 1e-8;
    int max_iter = 100;
    // deterministic branch selection: downward body force for the first
    // perturb_iters iterations of the first continuation stage
    double perturb_force = 0.1;
    int perturb_iters = 5;
    double continuation_start = 0.2;
    double continuation_step = 0.005;
    // intermediate continuation stages only need to hand over a usable
    // warm start; the target stage converges to rel_tol
    double intermediate_tol = 1e-4;
    double relaxation = 1.0;
};

struct SteadyResult {
    FlowState state;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history; // relative iterate differences
    std::vector<double> step_seconds;     // wall time per Oseen step
};

class SteadySolver {
public:
    SteadySolver(const Mesh& mesh, const MeshOps& ops, const DofLayout& layout);

    // One linearized solve: frozen advection u_k (nullptr = Stokes).
    FlowState oseen_step(double nu, const FlowState* u_k, Vec2 force);

    // iterate_hook (optional) observes every iterate of the target stage.
    SteadyResult solve_steady(const ParameterPoint& params, const OseenConfig& config,
                              const FlowState* warm_start = nullptr,
                              const std::function<void(int, const FlowState&)>*
                                  iterate_hook = nullptr);

    double observable(const FlowState& state) const;
    // || D v || / || v || with the Dirichlet data included.
    double divergence_residual(const FlowState& state) const;
    double velocity_norm(const Eigen::VectorXd& x) const;

    const Mesh& mesh() const { return mesh_; }
    const MeshOps& ops() const { return ops_; }
    const DofLayout& layout() const { return layout_; }

private:
    const Mesh& mesh_;
    const MeshOps& ops_;
    const DofLayout& layout_;
    Eigen::SparseMatrix<double> mass_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    bool analyzed_ = false;
};

double observable(const Mesh& mesh, const DofLayout& layout, const FlowState& state);

struct SweepGrid {
    std::vector<double> nus_desc; // descending
    std::vector<double> curvatures;
};

SweepGrid uniform_grid(double nu_min, double nu_max, int n_nu, double c_min,
                       double c_max, int n_c);

// Called once per parameter point in sweep order (outer loop: curvature,
// inner loop: descending viscosity with warm starts).
using SnapshotCallback =
    std::function<void(int index, const ParameterPoint& mu, const Mesh& mesh,
                       const MeshOps& ops, const DofLayout& layout,
                       const SteadyResult& result)>;

void snapshot_sweep(const ChannelSpec& spec, const Refinement& refinement, int p,
                    const SweepGrid& grid, const OseenConfig& config,
                    const SnapshotCallback& on_point,
                    const std::function<void(int, int, const FlowState&)>*
                        iterate_hook = nullptr);

} // namespace semrom
