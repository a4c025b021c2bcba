#include "semrom/steady.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace semrom {

SteadySolver::SteadySolver(const Mesh& mesh, const MeshOps& ops, const DofLayout& layout)
    : mesh_(mesh), ops_(ops), layout_(layout), mass_(velocity_mass(mesh, ops, layout))
{
}

double SteadySolver::velocity_norm(const Eigen::VectorXd& x) const
{
    return std::sqrt(std::max(0.0, x.dot(mass_ * x)));
}

FlowState SteadySolver::oseen_step(double nu, const FlowState* u_k, Vec2 force)
{
    LocalVelocityFn adv;
    if (u_k) adv = local_velocity_from_state(layout_, u_k->x);
    BlockSystem blocks = assemble_blocks(mesh_, ops_, layout_, nu,
                                         u_k ? &adv : nullptr, force);
    GlobalSystem sys = gather_globalize(blocks);
    sys.A.makeCompressed();
    if (!analyzed_) {
        lu_.analyzePattern(sys.A);
        analyzed_ = true;
    }
    lu_.factorize(sys.A);
    if (lu_.info() != Eigen::Success)
        throw std::runtime_error("oseen_step: singular factorization at nu=" +
                                 std::to_string(nu));
    FlowState out;
    out.x = lu_.solve(sys.rhs);
    return out;
}

SteadyResult SteadySolver::solve_steady(const ParameterPoint& params,
                                        const OseenConfig& config,
                                        const FlowState* warm_start,
                                        const std::function<void(int, const FlowState&)>*
                                            iterate_hook)
{
    std::vector<double> ladder;
    if (warm_start || params.nu >= config.continuation_start - 1e-12) {
        ladder.push_back(params.nu);
    } else {
        for (double v = config.continuation_start; v > params.nu + 1e-12;
             v -= config.continuation_step)
            ladder.push_back(v);
        ladder.push_back(params.nu);
    }

    SteadyResult res;
    bool have_state = false;
    if (warm_start) {
        res.state = *warm_start;
        have_state = true;
    }

    int first_stage_iters = 0;
    for (size_t stage = 0; stage < ladder.size(); ++stage) {
        double nu = ladder[stage];
        bool last_stage = stage + 1 == ladder.size();
        double tol = last_stage ? config.rel_tol
                                : std::max(config.rel_tol, config.intermediate_tol);
        bool stage_converged = false;
        for (int it = 0; it < config.max_iter; ++it) {
            Vec2 force{};
            if (stage == 0 && !warm_start && first_stage_iters < config.perturb_iters)
                force = {0.0, -config.perturb_force};
            if (stage == 0) ++first_stage_iters;

            auto t0 = std::chrono::steady_clock::now();
            FlowState next = oseen_step(nu, have_state ? &res.state : nullptr, force);
            auto t1 = std::chrono::steady_clock::now();
            res.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
            ++res.iterations;

            if (config.relaxation != 1.0 && have_state)
                next.x = config.relaxation * next.x + (1.0 - config.relaxation) * res.state.x;
            if (iterate_hook && last_stage) (*iterate_hook)(it, next);

            if (have_state) {
                double denom = velocity_norm(res.state.x);
                double diff = velocity_norm(next.x - res.state.x);
                double rel = denom > 0.0 ? diff / denom : diff;
                res.residual_history.push_back(rel);
                res.state = std::move(next);
                // the perturbation phase is not a fixed-point iteration yet
                bool perturbing = stage == 0 && !warm_start &&
                                  first_stage_iters <= config.perturb_iters;
                if (!perturbing && rel <= tol) {
                    stage_converged = true;
                    break;
                }
            } else {
                res.state = std::move(next);
                have_state = true;
            }
        }
        res.converged = stage_converged;
    }
    return res;
}

double SteadySolver::observable(const FlowState& state) const
{
    return semrom::observable(mesh_, layout_, state);
}

double observable(const Mesh& mesh, const DofLayout& layout, const FlowState& state)
{
    return evaluate_solution(mesh, layout, state.x, {2.0, 1.5}).uy;
}

double SteadySolver::divergence_residual(const FlowState& state) const
{
    const ModeTables& m = layout_.modes;
    LocalVelocityFn local = local_velocity_from_state(layout_, state.x);
    double div2 = 0.0;
    Eigen::VectorXd ux, uy;
    for (int e = 0; e < mesh_.element_count(); ++e) {
        const ElementOps& op = ops_.element(e);
        local(e, ux, uy);
        Eigen::VectorXd d = op.Dx * ux + op.Dy * uy;
        div2 += d.squaredNorm();
    }
    double vn = velocity_norm(state.x);
    return vn > 0.0 ? std::sqrt(div2) / vn : std::sqrt(div2);
}

SweepGrid uniform_grid(double nu_min, double nu_max, int n_nu, double c_min,
                       double c_max, int n_c)
{
    SweepGrid g;
    for (int i = 0; i < n_nu; ++i)
        g.nus_desc.push_back(n_nu == 1 ? nu_max
                                       : nu_max - (nu_max - nu_min) * i / (n_nu - 1));
    for (int i = 0; i < n_c; ++i)
        g.curvatures.push_back(n_c == 1 ? c_min
                                        : c_min + (c_max - c_min) * i / (n_c - 1));
    return g;
}

void snapshot_sweep(const ChannelSpec& spec, const Refinement& refinement, int p,
                    const SweepGrid& grid, const OseenConfig& config,
                    const SnapshotCallback& on_point,
                    const std::function<void(int, int, const FlowState&)>* iterate_hook)
{
    int index = 0;
    for (double c : grid.curvatures) {
        Mesh mesh = generate_mesh(spec, c, refinement, p);
        DofLayout layout = build_dof_layout(mesh);
        MeshOps ops(mesh, layout);
        SteadySolver solver(mesh, ops, layout);
        bool have_warm = false;
        FlowState warm;
        for (double nu : grid.nus_desc) {
            ParameterPoint mu{nu, c};
            std::function<void(int, const FlowState&)> hook;
            if (iterate_hook)
                hook = [&, idx = index](int it, const FlowState& s) {
                    (*iterate_hook)(idx, it, s);
                };
            SteadyResult res = solver.solve_steady(mu, config,
                                                   have_warm ? &warm : nullptr,
                                                   iterate_hook ? &hook : nullptr);
            warm = res.state;
            have_warm = true;
            on_point(index++, mu, mesh, ops, layout, res);
        }
    }
}

} // namespace semrom
