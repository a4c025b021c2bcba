#include "semrom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "semrom/store.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace semrom {

namespace {

std::string num(int i, int width = 4)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, i);
    return buf;
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_csv(line));
    return rows;
}

void csv_value(std::ofstream& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

} // namespace

std::string run_config_dump(const RunConfig& cfg)
{
    json j;
    j["channel"] = {{"length", cfg.spec.length},
                    {"height", cfg.spec.height},
                    {"block_x_left", cfg.spec.block_x_left},
                    {"block_x_right", cfg.spec.block_x_right},
                    {"gap_lo", cfg.spec.gap_lo},
                    {"gap_hi", cfg.spec.gap_hi}};
    j["grid"] = {{"nu_min", cfg.nu_min}, {"nu_max", cfg.nu_max}, {"n_nu", cfg.n_nu},
                 {"c_min", cfg.c_min},   {"c_max", cfg.c_max},   {"n_c", cfg.n_c}};
    j["discretization"] = {{"order", cfg.order},
                           {"upstream_x", cfg.refinement.upstream_x},
                           {"orifice_x", cfg.refinement.orifice_x},
                           {"downstream_x", cfg.refinement.downstream_x},
                           {"gap_y", cfg.refinement.gap_y},
                           {"block_y", cfg.refinement.block_y},
                           {"downstream_ratio", cfg.refinement.downstream_ratio}};
    j["pod_energy"] = cfg.pod_energy;
    j["mdeim_energy"] = cfg.mdeim_energy;
    j["oseen"] = {{"rel_tol", cfg.oseen.rel_tol},
                  {"max_iter", cfg.oseen.max_iter},
                  {"perturb_force", cfg.oseen.perturb_force},
                  {"perturb_iters", cfg.oseen.perturb_iters},
                  {"continuation_start", cfg.oseen.continuation_start},
                  {"continuation_step", cfg.oseen.continuation_step},
                  {"intermediate_tol", cfg.oseen.intermediate_tol},
                  {"relaxation", cfg.oseen.relaxation}};
    j["collect_every"] = cfg.collect_every;
    return j.dump(2);
}

uint64_t run_config_hash(const RunConfig& cfg)
{
    return store::fnv1a(run_config_dump(cfg));
}

static RunConfig config_from_json(const json& j)
{
    RunConfig cfg;
    if (j.contains("channel")) {
        const auto& c = j["channel"];
        cfg.spec.length = c.value("length", cfg.spec.length);
        cfg.spec.height = c.value("height", cfg.spec.height);
        cfg.spec.block_x_left = c.value("block_x_left", cfg.spec.block_x_left);
        cfg.spec.block_x_right = c.value("block_x_right", cfg.spec.block_x_right);
        cfg.spec.gap_lo = c.value("gap_lo", cfg.spec.gap_lo);
        cfg.spec.gap_hi = c.value("gap_hi", cfg.spec.gap_hi);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        cfg.nu_min = g.value("nu_min", cfg.nu_min);
        cfg.nu_max = g.value("nu_max", cfg.nu_max);
        cfg.n_nu = g.value("n_nu", cfg.n_nu);
        cfg.c_min = g.value("c_min", cfg.c_min);
        cfg.c_max = g.value("c_max", cfg.c_max);
        cfg.n_c = g.value("n_c", cfg.n_c);
    }
    if (j.contains("discretization")) {
        const auto& d = j["discretization"];
        cfg.order = d.value("order", cfg.order);
        cfg.refinement.upstream_x = d.value("upstream_x", cfg.refinement.upstream_x);
        cfg.refinement.orifice_x = d.value("orifice_x", cfg.refinement.orifice_x);
        cfg.refinement.downstream_x = d.value("downstream_x", cfg.refinement.downstream_x);
        cfg.refinement.gap_y = d.value("gap_y", cfg.refinement.gap_y);
        cfg.refinement.block_y = d.value("block_y", cfg.refinement.block_y);
        cfg.refinement.downstream_ratio =
            d.value("downstream_ratio", cfg.refinement.downstream_ratio);
    }
    cfg.pod_energy = j.value("pod_energy", cfg.pod_energy);
    cfg.mdeim_energy = j.value("mdeim_energy", cfg.mdeim_energy);
    if (j.contains("oseen")) {
        const auto& o = j["oseen"];
        cfg.oseen.rel_tol = o.value("rel_tol", cfg.oseen.rel_tol);
        cfg.oseen.max_iter = o.value("max_iter", cfg.oseen.max_iter);
        cfg.oseen.perturb_force = o.value("perturb_force", cfg.oseen.perturb_force);
        cfg.oseen.perturb_iters = o.value("perturb_iters", cfg.oseen.perturb_iters);
        cfg.oseen.continuation_start =
            o.value("continuation_start", cfg.oseen.continuation_start);
        cfg.oseen.continuation_step =
            o.value("continuation_step", cfg.oseen.continuation_step);
        cfg.oseen.intermediate_tol =
            o.value("intermediate_tol", cfg.oseen.intermediate_tol);
        cfg.oseen.relaxation = o.value("relaxation", cfg.oseen.relaxation);
    }
    cfg.collect_every = j.value("collect_every", cfg.collect_every);
    cfg.store_dir = j.value("store_dir", cfg.store_dir);
    return cfg;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j = json::parse(in);
    return config_from_json(j);
}

SweepGrid config_grid(const RunConfig& cfg)
{
    return uniform_grid(cfg.nu_min, cfg.nu_max, cfg.n_nu, cfg.c_min, cfg.c_max, cfg.n_c);
}

RunConfig load_store_config(const std::string& store_dir)
{
    std::ifstream in(fs::path(store_dir) / "meta.json");
    if (!in) throw std::runtime_error("no meta.json in " + store_dir);
    json j = json::parse(in);
    RunConfig cfg = config_from_json(j["config"]);
    cfg.store_dir = store_dir;
    return cfg;
}

namespace {

struct PointRow {
    int index = 0;
    ParameterPoint mu;
    double v_obs = 0.0;
    int converged = 0, iterations = 0;
    double solve_seconds = 0.0;
};

void write_point_table(const fs::path& path, const std::vector<PointRow>& rows)
{
    std::ofstream out(path);
    out << "index,nu,curvature,v_obs,converged,iterations,solve_seconds\n";
    for (const auto& r : rows) {
        out << r.index << ',';
        csv_value(out, r.mu.nu);
        out << ',';
        csv_value(out, r.mu.curvature);
        out << ',';
        csv_value(out, r.v_obs);
        out << ',' << r.converged << ',' << r.iterations << ',';
        csv_value(out, r.solve_seconds);
        out << '\n';
    }
}

std::vector<PointRow> read_point_table(const fs::path& path)
{
    std::vector<PointRow> rows;
    for (const auto& cells : read_csv(path)) {
        PointRow r;
        r.index = std::stoi(cells[0]);
        r.mu = {std::stod(cells[1]), std::stod(cells[2])};
        r.v_obs = std::stod(cells[3]);
        r.converged = std::stoi(cells[4]);
        r.iterations = std::stoi(cells[5]);
        r.solve_seconds = std::stod(cells[6]);
        rows.push_back(r);
    }
    return rows;
}

void collect_matrix_snapshots(const fs::path& mat_dir, const Mesh& mesh,
                              const MeshOps& ops, const DofLayout& layout,
                              const RolePatternSet& patterns, double nu,
                              const Eigen::VectorXd& state, int counter)
{
    LocalVelocityFn adv = local_velocity_from_state(layout, state);
    BlockSystem blocks = assemble_blocks(mesh, ops, layout, nu, &adv, {});
    Eigen::VectorXd vals;
    for (int r = 0; r < kMatrixRoleCount; ++r) {
        role_values(blocks, patterns, static_cast<Role>(r), vals);
        store::write_vector(mat_dir / (std::string(role_name(static_cast<Role>(r))) +
                                       "_" + num(counter) + ".bin"),
                            vals);
    }
    GlobalSystem sys = gather_globalize(blocks);
    rhs_role_values(layout, sys.rhs, patterns, vals);
    store::write_vector(mat_dir / (std::string("Rhs_") + num(counter) + ".bin"), vals);
}

SnapshotSet load_converged_snapshots(const fs::path& snap_dir)
{
    std::vector<PointRow> rows = read_point_table(snap_dir / "table.csv");
    std::vector<int> keep;
    for (const auto& r : rows)
        if (r.converged) keep.push_back(r.index);
    if (keep.empty()) throw std::runtime_error("no converged snapshots in store");

    SnapshotSet set;
    Eigen::VectorXd first =
        store::read_vector(snap_dir / ("state_" + num(keep[0]) + ".bin"));
    set.states.resize(first.size(), static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
        set.states.col(j) =
            store::read_vector(snap_dir / ("state_" + num(keep[j]) + ".bin"));
        set.parameters.push_back(rows[keep[j]].mu);
        set.observables.push_back(rows[keep[j]].v_obs);
        set.converged.push_back(1);
    }
    return set;
}

void write_bifurcation_csv(const fs::path& path, const std::vector<RomSweepRow>& rows)
{
    std::ofstream out(path);
    out << "nu,curvature,v_obs,converged,iterations,online_ms\n";
    for (const auto& r : rows) {
        csv_value(out, r.mu.nu);
        out << ',';
        csv_value(out, r.mu.curvature);
        out << ',';
        csv_value(out, r.v_obs);
        out << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ',';
        csv_value(out, r.online_ms);
        out << '\n';
    }
}

void write_bifurcation_svg(const fs::path& path, const std::vector<RomSweepRow>& rows)
{
    std::ofstream out(path);
    const double w = 720, h = 480, ml = 70, mb = 50, mt = 20, mr = 20;
    double nmin = 1e300, nmax = -1e300, vmin = 1e300, vmax = -1e300;
    std::vector<double> curvatures;
    for (const auto& r : rows) {
        nmin = std::min(nmin, r.mu.nu);
        nmax = std::max(nmax, r.mu.nu);
        vmin = std::min(vmin, r.v_obs);
        vmax = std::max(vmax, r.v_obs);
        if (std::find(curvatures.begin(), curvatures.end(), r.mu.curvature) ==
            curvatures.end())
            curvatures.push_back(r.mu.curvature);
    }
    if (rows.empty()) {
        out << "<svg xmlns='http://www.w3.org/2000/svg'/>\n";
        return;
    }
    if (nmax - nmin < 1e-12) nmax = nmin + 1.0;
    double vpad = std::max(1e-6, 0.05 * (vmax - vmin));
    vmin -= vpad;
    vmax += vpad;
    auto sx = [&](double nu) { return ml + (w - ml - mr) * (nu - nmin) / (nmax - nmin); };
    auto sy = [&](double v) { return h - mb - (h - mt - mb) * (v - vmin) / (vmax - vmin); };
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
        << h - mb << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    if (vmin < 0.0 && vmax > 0.0)
        out << "<line x1='" << ml << "' y1='" << sy(0.0) << "' x2='" << w - mr
            << "' y2='" << sy(0.0) << "' stroke='#ccc'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - 10
        << "' text-anchor='middle'>viscosity</text>\n";
    out << "<text x='16' y='" << h / 2 << "' transform='rotate(-90 16 " << h / 2
        << ")' text-anchor='middle'>vertical velocity at probe</text>\n";
    for (size_t ci = 0; ci < curvatures.size(); ++ci) {
        int hue = static_cast<int>(300.0 * ci / std::max<size_t>(1, curvatures.size() - 1));
        out << "<polyline fill='none' stroke='hsl(" << hue
            << ",70%,45%)' stroke-width='1.5' points='";
        std::vector<const RomSweepRow*> line;
        for (const auto& r : rows)
            if (r.mu.curvature == curvatures[ci]) line.push_back(&r);
        std::sort(line.begin(), line.end(),
                  [](const RomSweepRow* a, const RomSweepRow* b) {
                      return a->mu.nu < b->mu.nu;
                  });
        for (const auto* r : line) out << sx(r->mu.nu) << ',' << sy(r->v_obs) << ' ';
        out << "'/>\n";
    }
    out << "</svg>\n";
}

} // namespace

int cmd_offline(const RunConfig& cfg)
{
    fs::path dir(cfg.store_dir);
    fs::path snap = dir / "snapshots";
    fs::path mat = snap / "matrices";
    fs::path bas = dir / "basis";
    fs::path romdir = dir / "rom";
    fs::create_directories(mat);
    fs::create_directories(bas);
    fs::create_directories(romdir);

    uint64_t hash = run_config_hash(cfg);
    fs::path meta_path = dir / "meta.json";
    if (fs::exists(meta_path)) {
        std::ifstream in(meta_path);
        json meta = json::parse(in);
        if (meta.value("config_hash", uint64_t(0)) != hash) {
            std::cerr << "store " << dir << " was produced with a different "
                      << "configuration (hash " << meta.value("config_hash", uint64_t(0))
                      << " vs " << hash << "); refusing to mix artifacts\n";
            return 1;
        }
    }

    Mesh mesh0 = generate_mesh(cfg.spec, cfg.c_min, cfg.refinement, cfg.order);
    DofLayout layout0 = build_dof_layout(mesh0);
    {
        json meta;
        meta["config"] = json::parse(run_config_dump(cfg));
        meta["config_hash"] = hash;
        meta["mesh_fingerprint"] = mesh0.fingerprint();
        meta["n_elements"] = mesh0.element_count();
        meta["n_delta"] = layout0.n_delta;
        std::ofstream(meta_path) << meta.dump(2) << '\n';
    }

    // role patterns depend only on the mesh topology, which is shared by
    // every curvature of the family
    RolePatternSet patterns = build_role_patterns(mesh0, layout0);

    if (!store::stage_done(snap)) {
        std::cout << "[offline] snapshot sweep: " << cfg.n_nu << " x " << cfg.n_c
                  << " parameter points, " << layout0.n_delta << " dofs\n";
        std::vector<PointRow> rows;
        std::vector<double> step_times;
        int mat_counter = 0;
        std::vector<std::pair<int, Eigen::VectorXd>> pending_iterates;

        std::function<void(int, int, const FlowState&)> hook =
            [&](int, int it, const FlowState& s) {
                if (cfg.collect_every > 0 && (it + 1) % cfg.collect_every == 0)
                    pending_iterates.emplace_back(it, s.x);
            };

        auto on_point = [&](int index, const ParameterPoint& mu, const Mesh& mesh,
                            const MeshOps& ops, const DofLayout& layout,
                            const SteadyResult& res) {
            PointRow row;
            row.index = index;
            row.mu = mu;
            row.converged = res.converged ? 1 : 0;
            row.iterations = res.iterations;
            row.v_obs = observable(mesh, layout, res.state);
            for (double s : res.step_seconds) row.solve_seconds += s;
            rows.push_back(row);
            step_times.insert(step_times.end(), res.step_seconds.begin(),
                              res.step_seconds.end());

            store::write_vector(snap / ("state_" + num(index) + ".bin"), res.state.x);
            if (res.converged) {
                for (const auto& [it, x] : pending_iterates)
                    collect_matrix_snapshots(mat, mesh, ops, layout, patterns, mu.nu,
                                             x, mat_counter++);
                collect_matrix_snapshots(mat, mesh, ops, layout, patterns, mu.nu,
                                         res.state.x, mat_counter++);
            }
            pending_iterates.clear();
            std::cout << "  point " << index << " nu=" << mu.nu
                      << " c=" << mu.curvature << " v=" << row.v_obs
                      << (res.converged ? "" : " (NOT CONVERGED)") << " ["
                      << res.iterations << " it, " << row.solve_seconds << " s]\n";
        };

        snapshot_sweep(cfg.spec, cfg.refinement, cfg.order, config_grid(cfg),
                       cfg.oseen, on_point, cfg.collect_every > 0 ? &hook : nullptr);

        write_point_table(snap / "table.csv", rows);
        json timing;
        timing["median_step_seconds"] = median(step_times);
        timing["matrix_snapshots"] = mat_counter;
        std::ofstream(snap / "timing.json") << timing.dump(2) << '\n';
        store::mark_stage_done(snap);
    } else {
        std::cout << "[offline] snapshots already complete, skipping\n";
    }

    if (!store::stage_done(bas)) {
        SnapshotSet set = load_converged_snapshots(snap);
        ReducedBasis basis = pod(set.states, cfg.pod_energy);
        std::cout << "[offline] reduced basis: " << basis.n << " of "
                  << set.states.cols() << " modes\n";
        store::write_matrix(bas / "u.bin", basis.u);
        store::write_vector(bas / "sigma.bin", basis.singular_values);
        auto decay = pod_decay_report(basis);
        write_decay_csv(decay, (bas / "decay.csv").string());
        write_decay_svg(decay, (bas / "decay.svg").string());
        store::mark_stage_done(bas);
    } else {
        std::cout << "[offline] basis already complete, skipping\n";
    }

    if (!store::stage_done(romdir)) {
        ReducedBasis basis;
        basis.u = store::read_matrix(bas / "u.bin");
        basis.singular_values = store::read_vector(bas / "sigma.bin");
        basis.n = static_cast<int>(basis.u.cols());
        basis.energy_fraction = cfg.pod_energy;

        int n_mat = 0;
        {
            std::ifstream in(snap / "timing.json");
            json t = json::parse(in);
            n_mat = t.value("matrix_snapshots", 0);
        }
        if (n_mat == 0) throw std::runtime_error("no matrix snapshots in store");

        fs::create_directories(romdir / "mdeim");
        std::ofstream expcsv(romdir / "mdeim" / "expansion.csv");
        expcsv << "role,q,condition_number,energy_captured\n";

        std::vector<AffineExpansion> matrix_exp;
        AffineExpansion rhs_exp;
        for (int r = 0; r < kRoleCount; ++r) {
            Role role = static_cast<Role>(r);
            MatrixSnapshotSet mset;
            mset.pattern = patterns.roles[r];
            for (int k = 0; k < n_mat; ++k)
                mset.vectors.push_back(store::read_vector(
                    mat / (std::string(role_name(role)) + "_" + num(k) + ".bin")));
            AffineExpansion exp = mdeim_build(mset, cfg.mdeim_energy);
            std::cout << "[offline] interpolation for " << role_name(role)
                      << ": q=" << exp.q << " cond=" << exp.condition << '\n';
            expcsv << role_name(role) << ',' << exp.q << ',';
            csv_value(expcsv, exp.condition);
            expcsv << ',';
            csv_value(expcsv, exp.energy_captured);
            expcsv << '\n';
            if (role == Role::Rhs) rhs_exp = std::move(exp);
            else matrix_exp.push_back(std::move(exp));
        }

        SnapshotSet set = load_converged_snapshots(snap);
        RomArtifacts art = rom_offline(set, basis, std::move(matrix_exp),
                                       std::move(rhs_exp), mesh0, layout0);

        // persist only what the online phase needs; role bases and
        // patterns stay offline (the projections already encode them)
        for (int r = 0; r < kMatrixRoleCount; ++r) {
            fs::path rd = romdir / ("role_" + std::string(role_name(static_cast<Role>(r))));
            fs::create_directories(rd);
            const AffineExpansion& exp = art.matrix_exp[r];
            Eigen::MatrixXd ent(exp.q, 2);
            for (int i = 0; i < exp.q; ++i) {
                ent(i, 0) = exp.interp_entries[i].first;
                ent(i, 1) = exp.interp_entries[i].second;
            }
            store::write_matrix(rd / "interp_entries.bin", ent);
            store::write_matrix(rd / "interp_matrix.bin", exp.interp_matrix);
            for (int q = 0; q < exp.q; ++q)
                store::write_matrix(rd / ("projected_" + num(q) + ".bin"),
                                    art.projected[r][q]);
        }
        {
            fs::path rd = romdir / "role_Rhs";
            fs::create_directories(rd);
            const AffineExpansion& exp = art.rhs_exp;
            Eigen::MatrixXd ent(exp.q, 2);
            for (int i = 0; i < exp.q; ++i) {
                ent(i, 0) = exp.interp_entries[i].first;
                ent(i, 1) = exp.interp_entries[i].second;
            }
            store::write_matrix(rd / "interp_entries.bin", ent);
            store::write_matrix(rd / "interp_matrix.bin", exp.interp_matrix);
            for (int q = 0; q < exp.q; ++q)
                store::write_vector(rd / ("projected_" + num(q) + ".bin"),
                                    art.projected_rhs[q]);
        }
        store::write_matrix(romdir / "snapshot_proj.bin", art.snapshot_proj);
        Eigen::MatrixXd tp(art.train_params.size(), 3);
        for (size_t i = 0; i < art.train_params.size(); ++i) {
            tp(i, 0) = art.train_params[i].nu;
            tp(i, 1) = art.train_params[i].curvature;
            tp(i, 2) = art.train_observables[i];
        }
        store::write_matrix(romdir / "train_points.bin", tp);

        fs::path supp = romdir / "support";
        fs::create_directories(supp);
        Eigen::VectorXd ids(art.support.size());
        int si = 0;
        for (const auto& [e, slice] : art.support) {
            ids(si++) = e;
            store::write_matrix(supp / ("elem_" + num(e) + "_rx.bin"), slice.rx);
            store::write_matrix(supp / ("elem_" + num(e) + "_ry.bin"), slice.ry);
            store::write_vector(supp / ("elem_" + num(e) + "_dx.bin"), slice.dx);
            store::write_vector(supp / ("elem_" + num(e) + "_dy.bin"), slice.dy);
        }
        store::write_vector(supp / "elements.bin", ids);
        std::cout << "[offline] " << art.support.size()
                  << " support elements of " << mesh0.element_count() << '\n';
        store::mark_stage_done(romdir);
    } else {
        std::cout << "[offline] reduced operators already complete, skipping\n";
    }
    std::cout << "[offline] store ready: " << dir << '\n';
    return 0;
}

RomArtifacts load_rom_artifacts(const std::string& store_dir)
{
    fs::path dir(store_dir);
    fs::path bas = dir / "basis";
    fs::path romdir = dir / "rom";
    if (!store::stage_done(romdir))
        throw std::runtime_error("store " + store_dir + " has no completed offline run");

    RomArtifacts art;
    art.basis.u = store::read_matrix(bas / "u.bin");
    art.basis.singular_values = store::read_vector(bas / "sigma.bin");
    art.basis.n = static_cast<int>(art.basis.u.cols());

    auto load_exp = [&](const fs::path& rd, Role role) {
        AffineExpansion exp;
        exp.role = role;
        exp.mirrored = role == Role::Dbnd || role == Role::Dint;
        Eigen::MatrixXd ent = store::read_matrix(rd / "interp_entries.bin");
        exp.q = static_cast<int>(ent.rows());
        for (int i = 0; i < exp.q; ++i)
            exp.interp_entries.emplace_back(static_cast<int>(ent(i, 0)),
                                            static_cast<int>(ent(i, 1)));
        exp.interp_matrix = store::read_matrix(rd / "interp_matrix.bin");
        exp.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(exp.interp_matrix);
        return exp;
    };

    art.projected.resize(kMatrixRoleCount);
    for (int r = 0; r < kMatrixRoleCount; ++r) {
        fs::path rd = romdir / ("role_" + std::string(role_name(static_cast<Role>(r))));
        art.matrix_exp.push_back(load_exp(rd, static_cast<Role>(r)));
        for (int q = 0; q < art.matrix_exp.back().q; ++q)
            art.projected[r].push_back(
                store::read_matrix(rd / ("projected_" + num(q) + ".bin")));
    }
    {
        fs::path rd = romdir / "role_Rhs";
        art.rhs_exp = load_exp(rd, Role::Rhs);
        for (int q = 0; q < art.rhs_exp.q; ++q)
            art.projected_rhs.push_back(
                store::read_vector(rd / ("projected_" + num(q) + ".bin")));
    }
    art.snapshot_proj = store::read_matrix(romdir / "snapshot_proj.bin");
    Eigen::MatrixXd tp = store::read_matrix(romdir / "train_points.bin");
    for (int i = 0; i < tp.rows(); ++i) {
        art.train_params.push_back({tp(i, 0), tp(i, 1)});
        art.train_observables.push_back(tp(i, 2));
    }
    art.nu_min = art.nu_max = art.train_params.front().nu;
    art.c_min = art.c_max = art.train_params.front().curvature;
    for (const auto& mu : art.train_params) {
        art.nu_min = std::min(art.nu_min, mu.nu);
        art.nu_max = std::max(art.nu_max, mu.nu);
        art.c_min = std::min(art.c_min, mu.curvature);
        art.c_max = std::max(art.c_max, mu.curvature);
    }
    fs::path supp = romdir / "support";
    Eigen::VectorXd ids = store::read_vector(supp / "elements.bin");
    for (int i = 0; i < ids.size(); ++i) {
        int e = static_cast<int>(ids(i));
        ElementSlice s;
        s.rx = store::read_matrix(supp / ("elem_" + num(e) + "_rx.bin"));
        s.ry = store::read_matrix(supp / ("elem_" + num(e) + "_ry.bin"));
        s.dx = store::read_vector(supp / ("elem_" + num(e) + "_dx.bin"));
        s.dy = store::read_vector(supp / ("elem_" + num(e) + "_dy.bin"));
        art.support.emplace(e, std::move(s));
    }
    return art;
}

int cmd_online(const std::string& store_dir, const OnlineOptions& opts)
{
    RunConfig cfg = load_store_config(store_dir);
    RomArtifacts art = load_rom_artifacts(store_dir);
    RomSolver solver(art, cfg.spec, cfg.refinement, cfg.order);
    fs::path reports = fs::path(store_dir) / "reports";
    fs::create_directories(reports);

    SweepGrid grid = config_grid(cfg);
    if (opts.n_nu > 0 && opts.n_c > 0)
        grid = uniform_grid(cfg.nu_min, cfg.nu_max, opts.n_nu, cfg.c_min, cfg.c_max,
                            opts.n_c);
    if (opts.point) {
        grid.nus_desc = {opts.point->nu};
        grid.curvatures = {opts.point->curvature};
    }

    std::vector<RomSweepRow> rows = rom_sweep(solver, grid, cfg.oseen, opts.n_override);
    write_bifurcation_csv(reports / "bifurcation.csv", rows);
    write_bifurcation_svg(reports / "bifurcation.svg", rows);
    for (const char* f : {"decay.csv", "decay.svg"})
        fs::copy_file(fs::path(store_dir) / "basis" / f, reports / f,
                      fs::copy_options::overwrite_existing);
    for (const auto& r : rows)
        std::cout << "nu=" << r.mu.nu << " c=" << r.mu.curvature << " v=" << r.v_obs
                  << (r.converged ? "" : " (NOT CONVERGED)") << " [" << r.iterations
                  << " it, " << r.online_ms << " ms]\n";

    if (!opts.point) {
        // reduced solves at the training points against the stored
        // full-order observables
        std::ofstream err(reports / "errors.csv");
        err << "nu,curvature,v_fom,v_rom,abs_err\n";
        std::vector<double> rom_ms;
        for (size_t i = 0; i < art.train_params.size(); ++i) {
            RomSolveResult r = solver.solve(art.train_params[i], cfg.oseen,
                                            opts.n_override);
            double ms = 0.0;
            for (double s : r.step_seconds) ms += 1e3 * s;
            rom_ms.push_back(ms);
            csv_value(err, art.train_params[i].nu);
            err << ',';
            csv_value(err, art.train_params[i].curvature);
            err << ',';
            csv_value(err, art.train_observables[i]);
            err << ',';
            csv_value(err, r.observable);
            err << ',';
            csv_value(err, std::abs(r.observable - art.train_observables[i]));
            err << '\n';
        }

        double fom_point_s = 0.0;
        {
            std::vector<PointRow> prow =
                read_point_table(fs::path(store_dir) / "snapshots" / "table.csv");
            std::vector<double> fs_;
            for (const auto& r : prow) fs_.push_back(r.solve_seconds);
            fom_point_s = median(fs_);
        }
        double rom_point_s = median(rom_ms) * 1e-3;
        std::ofstream tim(reports / "timing.csv");
        tim << "quantity,value\n";
        tim << "fom_median_point_seconds,";
        csv_value(tim, fom_point_s);
        tim << "\nrom_median_point_seconds,";
        csv_value(tim, rom_point_s);
        tim << "\nspeedup,";
        csv_value(tim, rom_point_s > 0.0 ? fom_point_s / rom_point_s : 0.0);
        tim << '\n';
        std::cout << "median full solve " << fom_point_s << " s, median reduced solve "
                  << rom_point_s << " s\n";
    }
    return 0;
}

int cmd_report(const std::string& store_dir)
{
    fs::path dir(store_dir);
    RunConfig cfg = load_store_config(store_dir);
    ReynoldsConvention re;
    std::cout << "parameter plane: nu in [" << cfg.nu_min << ", " << cfg.nu_max
              << "] (Re " << re.re(cfg.nu_max) << ".." << re.re(cfg.nu_min)
              << "), curvature in [" << cfg.c_min << ", " << cfg.c_max << "], "
              << cfg.n_nu << " x " << cfg.n_c << " training grid\n";

    Eigen::VectorXd sigma = store::read_vector(dir / "basis" / "sigma.bin");
    Eigen::MatrixXd u = store::read_matrix(dir / "basis" / "u.bin");
    std::cout << "reduced basis: " << u.cols() << " modes (of " << sigma.size()
              << " snapshots), leading sigma " << sigma(0) << '\n';

    for (const auto& cells : read_csv(dir / "rom" / "mdeim" / "expansion.csv"))
        std::cout << "  role " << cells[0] << ": q=" << cells[1]
                  << " cond=" << cells[2] << " energy=" << cells[3] << '\n';

    fs::path errs = dir / "reports" / "errors.csv";
    if (fs::exists(errs)) {
        int n = 0, small = 0, mid = 0;
        for (const auto& cells : read_csv(errs)) {
            double e = std::stod(cells[4]);
            ++n;
            if (e < 0.01) ++small;
            if (e < 0.1) ++mid;
        }
        std::cout << "observable errors at " << n << " training points: " << small
                  << " below 0.01, " << mid << " below 0.1\n";
    }
    fs::path tim = dir / "reports" / "timing.csv";
    if (fs::exists(tim))
        for (const auto& cells : read_csv(tim))
            std::cout << "  " << cells[0] << " = " << cells[1] << '\n';
    return 0;
}

} // namespace semrom
