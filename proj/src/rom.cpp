#include "semrom/rom.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace semrom {

std::vector<int> support_elements(const DofLayout& layout, int g)
{
    std::vector<int> out;
    const ModeTables& m = layout.modes;
    if (g < layout.n_bnd_free) {
        int sid = layout.free_scalar[g];
        for (auto [e, lb] : layout.bnd_support[sid]) {
            (void)lb;
            out.push_back(e);
        }
    } else if (g < layout.interior_offset) {
        out.push_back((g - layout.pressure_offset) / m.np2);
    } else {
        out.push_back((g - layout.interior_offset) / (2 * m.ni2));
    }
    return out;
}

namespace {

ElementSlice slice_element(const DofLayout& lay, const Eigen::MatrixXd& u, int e)
{
    const ModeTables& m = lay.modes;
    const int n = static_cast<int>(u.cols());
    ElementSlice s;
    s.rx = Eigen::MatrixXd::Zero(m.n2, n);
    s.ry = Eigen::MatrixXd::Zero(m.n2, n);
    s.dx = Eigen::VectorXd::Zero(m.n2);
    s.dy = Eigen::VectorXd::Zero(m.n2);
    for (int lb = 0; lb < m.nbl; ++lb) {
        int sid = lay.elem_bnd_scalar[e][lb];
        int t = m.bnd_tensor[lb];
        int gx = lay.vel_global(sid, 0), gy = lay.vel_global(sid, 1);
        if (gx >= 0) s.rx.row(t) = u.row(gx);
        else s.dx(t) = lay.vel_value(sid, 0);
        if (gy >= 0) s.ry.row(t) = u.row(gy);
        else s.dy(t) = lay.vel_value(sid, 1);
    }
    for (int li = 0; li < m.ni2; ++li) {
        int t = m.int_tensor[li];
        s.rx.row(t) = u.row(lay.interior_global(e, li, 0));
        s.ry.row(t) = u.row(lay.interior_global(e, li, 1));
    }
    return s;
}

LocalVelocityFn slice_velocity(const std::map<int, ElementSlice>& support,
                               const Eigen::VectorXd& x_n)
{
    return [&support, x_n](int e, Eigen::VectorXd& ux, Eigen::VectorXd& uy) {
        auto it = support.find(e);
        if (it == support.end())
            throw std::runtime_error("online advection requested outside support");
        const ElementSlice& s = it->second;
        const int n = static_cast<int>(x_n.size());
        ux = s.dx + s.rx.leftCols(n) * x_n;
        uy = s.dy + s.ry.leftCols(n) * x_n;
    };
}

} // namespace

RomArtifacts rom_offline(const SnapshotSet& snapshots, const ReducedBasis& basis,
                         std::vector<AffineExpansion> matrix_exp,
                         AffineExpansion rhs_exp, const Mesh& mesh,
                         const DofLayout& layout)
{
    if (matrix_exp.size() != static_cast<size_t>(kMatrixRoleCount))
        throw std::invalid_argument("rom_offline: expected one expansion per matrix role");

    RomArtifacts art;
    art.basis = basis;
    art.matrix_exp = std::move(matrix_exp);
    art.rhs_exp = std::move(rhs_exp);
    art.mesh_fingerprint = mesh.fingerprint();

    const Eigen::MatrixXd& u = basis.u;
    art.projected.resize(kMatrixRoleCount);
    for (int r = 0; r < kMatrixRoleCount; ++r) {
        const AffineExpansion& exp = art.matrix_exp[r];
        RolePattern pat;
        pat.role = exp.role;
        pat.mirrored = exp.mirrored;
        pat.entries = exp.pattern_entries;
        for (int q = 0; q < exp.q; ++q) {
            Eigen::SparseMatrix<double> aq =
                role_matrix(pat, exp.basis.col(q), layout.n_delta);
            art.projected[r].push_back(u.transpose() * (aq * u));
        }
    }
    // the rhs pattern enumerates every gathered row, so each basis column
    // is already a full-length vector
    for (int q = 0; q < art.rhs_exp.q; ++q)
        art.projected_rhs.push_back(u.transpose() * art.rhs_exp.basis.col(q));

    art.snapshot_proj = u.transpose() * snapshots.states;
    art.train_params = snapshots.parameters;
    art.train_observables = snapshots.observables;
    art.nu_min = art.nu_max = snapshots.parameters.front().nu;
    art.c_min = art.c_max = snapshots.parameters.front().curvature;
    for (const auto& mu : snapshots.parameters) {
        art.nu_min = std::min(art.nu_min, mu.nu);
        art.nu_max = std::max(art.nu_max, mu.nu);
        art.c_min = std::min(art.c_min, mu.curvature);
        art.c_max = std::max(art.c_max, mu.curvature);
    }

    std::set<int> elems;
    for (const auto& exp : art.matrix_exp)
        for (const auto& [i, j] : exp.interp_entries) {
            for (int e : support_elements(layout, i)) elems.insert(e);
            for (int e : support_elements(layout, j)) elems.insert(e);
        }
    for (const auto& [i, j] : art.rhs_exp.interp_entries) {
        (void)j;
        for (int e : support_elements(layout, i)) elems.insert(e);
    }
    for (int e : elems) art.support.emplace(e, slice_element(layout, u, e));
    return art;
}

RomSolver::RomSolver(const RomArtifacts& art, const ChannelSpec& spec,
                     const Refinement& refinement, int p)
    : art_(art), spec_(spec), refinement_(refinement), p_(p)
{
}

RomSolver::Context& RomSolver::context(double curvature)
{
    long long key;
    static_assert(sizeof(key) == sizeof(curvature));
    std::memcpy(&key, &curvature, sizeof(key));
    auto it = contexts_.find(key);
    if (it == contexts_.end()) {
        Context ctx;
        ctx.mesh = generate_mesh(spec_, curvature, refinement_, p_);
        ctx.layout = build_dof_layout(ctx.mesh);
        it = contexts_.emplace(key, std::move(ctx)).first;
        it->second.lazy = std::make_unique<LazyOps>(it->second.mesh,
                                                    it->second.layout.modes);
    }
    return it->second;
}

RomSolveResult RomSolver::solve(const ParameterPoint& mu, const OseenConfig& config,
                                int n_override)
{
    Context& ctx = context(mu.curvature);
    const int n = n_override > 0 ? std::min(n_override, art_.basis.n) : art_.basis.n;

    // initial guess: reduced coordinates of the nearest training snapshot
    // (parameter distance normalized by the training box)
    double dnu = std::max(art_.nu_max - art_.nu_min, 1e-12);
    double dc = std::max(art_.c_max - art_.c_min, 1e-12);
    int jbest = 0;
    double best = 1e300;
    for (size_t j = 0; j < art_.train_params.size(); ++j) {
        double a = (art_.train_params[j].nu - mu.nu) / dnu;
        double b = (art_.train_params[j].curvature - mu.curvature) / dc;
        double d = a * a + b * b;
        if (d < best) {
            best = d;
            jbest = static_cast<int>(j);
        }
    }
    Eigen::VectorXd x = art_.snapshot_proj.col(jbest).head(n);

    RomSolveResult res;
    for (int it = 0; it < config.max_iter; ++it) {
        auto t0 = std::chrono::steady_clock::now();
        LocalVelocityFn adv = slice_velocity(art_.support, x);
        EntryEvaluator ev(ctx.mesh, *ctx.lazy, ctx.layout, mu.nu, &adv);

        Eigen::MatrixXd ared = Eigen::MatrixXd::Zero(n, n);
        for (int r = 0; r < kMatrixRoleCount; ++r) {
            const AffineExpansion& exp = art_.matrix_exp[r];
            Eigen::VectorXd tau = mdeim_coefficients(
                exp, [&](int i, int j) { return ev.matrix_entry(i, j); });
            for (int q = 0; q < exp.q; ++q)
                ared += tau(q) * art_.projected[r][q].topLeftCorner(n, n);
        }
        Eigen::VectorXd fred = Eigen::VectorXd::Zero(n);
        {
            const AffineExpansion& exp = art_.rhs_exp;
            Eigen::VectorXd tau = mdeim_coefficients(
                exp, [&](int i, int) { return ev.rhs_entry(i); });
            for (int q = 0; q < exp.q; ++q)
                fred += tau(q) * art_.projected_rhs[q].head(n);
        }
        Eigen::VectorXd xn = ared.partialPivLu().solve(fred);
        auto t1 = std::chrono::steady_clock::now();
        res.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        ++res.iterations;

        if (config.relaxation != 1.0)
            xn = config.relaxation * xn + (1.0 - config.relaxation) * x;
        double denom = x.norm();
        double rel = denom > 0.0 ? (xn - x).norm() / denom : (xn - x).norm();
        res.residual_history.push_back(rel);
        x = std::move(xn);
        if (rel <= config.rel_tol) {
            res.converged = true;
            break;
        }
    }
    res.x_n = x;
    res.touched_elements = ctx.lazy->built_count();
    res.observable =
        evaluate_solution(ctx.mesh, ctx.layout, reconstruct(x), {2.0, 1.5}).uy;
    return res;
}

Eigen::VectorXd RomSolver::reconstruct(const Eigen::VectorXd& x_n) const
{
    return art_.basis.u.leftCols(x_n.size()) * x_n;
}

double RomSolver::evaluate_observable(double curvature, const Eigen::VectorXd& x_n)
{
    Context& ctx = context(curvature);
    return evaluate_solution(ctx.mesh, ctx.layout, reconstruct(x_n), {2.0, 1.5}).uy;
}

RomSolveResult online_solve_exact(const Mesh& mesh, const MeshOps& ops,
                                  const DofLayout& layout, const ReducedBasis& basis,
                                  const ParameterPoint& mu, const OseenConfig& config,
                                  const Eigen::VectorXd& x0)
{
    const Eigen::MatrixXd& u = basis.u;
    const int n = static_cast<int>(x0.size());
    Eigen::VectorXd x = x0;
    RomSolveResult res;
    for (int it = 0; it < config.max_iter; ++it) {
        Eigen::VectorXd full = u.leftCols(n) * x;
        LocalVelocityFn adv = local_velocity_from_state(layout, full);
        BlockSystem blocks = assemble_blocks(mesh, ops, layout, mu.nu, &adv, {});
        GlobalSystem sys = gather_globalize(blocks);
        Eigen::MatrixXd ared = u.leftCols(n).transpose() * (sys.A * u.leftCols(n));
        Eigen::VectorXd fred = u.leftCols(n).transpose() * sys.rhs;
        Eigen::VectorXd xn = ared.partialPivLu().solve(fred);
        ++res.iterations;
        double denom = x.norm();
        double rel = denom > 0.0 ? (xn - x).norm() / denom : (xn - x).norm();
        res.residual_history.push_back(rel);
        x = std::move(xn);
        if (rel <= config.rel_tol) {
            res.converged = true;
            break;
        }
    }
    res.x_n = x;
    res.observable =
        evaluate_solution(mesh, layout, u.leftCols(n) * x, {2.0, 1.5}).uy;
    (void)ops;
    return res;
}

std::vector<RomSweepRow> rom_sweep(RomSolver& solver, const SweepGrid& grid,
                                   const OseenConfig& config, int n_override)
{
    std::vector<RomSweepRow> rows;
    for (double c : grid.curvatures)
        for (double nu : grid.nus_desc) {
            ParameterPoint mu{nu, c};
            RomSolveResult r = solver.solve(mu, config, n_override);
            double ms = 0.0;
            for (double s : r.step_seconds) ms += 1e3 * s;
            rows.push_back({mu, r.observable, r.converged, r.iterations, ms});
        }
    return rows;
}

} // namespace semrom
