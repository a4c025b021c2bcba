#include <iostream>

#include <CLI11.hpp>

#include "semrom/pipeline.hpp"
#include "semrom/store.hpp"

using namespace semrom;

int main(int argc, char** argv)
{
    CLI::App app{"spectral-element channel flow with a reduced-order online phase"};
    app.require_subcommand(1);

    // offline
    auto* offline = app.add_subcommand("offline", "snapshot sweep + reduced operators");
    std::string config_path;
    std::string store_override;
    offline->add_option("--config", config_path, "JSON run configuration");
    offline->add_option("--store", store_override, "artifact directory override");

    // online
    auto* online = app.add_subcommand("online", "reduced solves over the parameter plane");
    std::string online_store = "rom_store";
    std::string grid_override;
    std::vector<double> point_override;
    int n_modes = -1;
    online->add_option("--store", online_store, "artifact directory");
    online->add_option("--grid", grid_override,
                       "override evaluation grid, N_NUxN_C (e.g. 24x27)");
    online->add_option("--point", point_override, "single parameter point: NU CURVATURE")
        ->expected(2);
    online->add_option("--n-modes", n_modes, "truncate the reduced space");

    // report
    auto* report = app.add_subcommand("report", "summarize a completed store");
    std::string report_store = "rom_store";
    report->add_option("--store", report_store, "artifact directory");

    // mesh
    auto* meshcmd = app.add_subcommand("mesh", "export the mesh for one curvature");
    double mesh_c = 0.0;
    int mesh_p = 8;
    std::string mesh_out = "mesh.svg";
    meshcmd->add_option("--curvature", mesh_c, "leading-face bow")->check(CLI::Range(0.0, 0.4));
    meshcmd->add_option("--order", mesh_p, "polynomial order");
    meshcmd->add_option("--mesh-out", mesh_out, "output path (.svg or .txt)");

    // fom-solve
    auto* fom = app.add_subcommand("fom-solve", "one full-order steady solve");
    double fom_nu = 0.2, fom_c = 0.0;
    int fom_p = 8;
    bool no_perturb = false;
    std::string dump_matrix;
    fom->add_option("--nu", fom_nu, "kinematic viscosity");
    fom->add_option("--curvature", fom_c, "leading-face bow")->check(CLI::Range(0.0, 0.4));
    fom->add_option("--order", fom_p, "polynomial order");
    fom->add_flag("--no-perturb", no_perturb, "skip the symmetry-breaking forcing");
    fom->add_option("--dump-matrix", dump_matrix, "write the Stokes system (MatrixMarket)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*offline) {
            RunConfig cfg;
            if (!config_path.empty()) cfg = load_run_config(config_path);
            if (!store_override.empty()) cfg.store_dir = store_override;
            return cmd_offline(cfg);
        }
        if (*online) {
            OnlineOptions opts;
            if (!grid_override.empty()) {
                auto x = grid_override.find('x');
                if (x == std::string::npos)
                    throw std::runtime_error("--grid expects N_NUxN_C, e.g. 24x27");
                opts.n_nu = std::stoi(grid_override.substr(0, x));
                opts.n_c = std::stoi(grid_override.substr(x + 1));
            }
            if (point_override.size() == 2)
                opts.point = ParameterPoint{point_override[0], point_override[1]};
            opts.n_override = n_modes;
            return cmd_online(online_store, opts);
        }
        if (*report) return cmd_report(report_store);
        if (*meshcmd) {
            Mesh mesh = generate_mesh(ChannelSpec{}, mesh_c, Refinement{}, mesh_p);
            if (mesh_out.size() > 4 && mesh_out.substr(mesh_out.size() - 4) == ".txt")
                export_mesh_text(mesh, mesh_out);
            else
                export_mesh_svg(mesh, mesh_out);
            std::cout << mesh.element_count() << " elements -> " << mesh_out << '\n';
            return 0;
        }
        if (*fom) {
            Mesh mesh = generate_mesh(ChannelSpec{}, fom_c, Refinement{}, fom_p);
            DofLayout layout = build_dof_layout(mesh);
            MeshOps ops(mesh, layout);
            if (!dump_matrix.empty()) {
                BlockSystem blocks = assemble_blocks(mesh, ops, layout, fom_nu,
                                                     nullptr, {});
                dump_matrix_market(gather_globalize(blocks).A, dump_matrix);
                std::cout << "wrote " << dump_matrix << '\n';
                return 0;
            }
            SteadySolver solver(mesh, ops, layout);
            OseenConfig cfg;
            if (no_perturb) cfg.perturb_iters = 0;
            SteadyResult res = solver.solve_steady({fom_nu, fom_c}, cfg);
            std::cout << "converged=" << res.converged << " iterations="
                      << res.iterations << " v(2,1.5)=" << solver.observable(res.state)
                      << " div_res=" << solver.divergence_residual(res.state) << '\n';
            return res.converged ? 0 : 2;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
