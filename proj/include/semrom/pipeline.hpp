#pragma once

#include <optional>
#include <string>

#include "semrom/rom.hpp"
#include "semrom/steady.hpp"

namespace semrom {

// Everything a full offline/online run depends on. Serialized to JSON in
// the artifact store so re-runs can detect configuration drift.
struct RunConfig {
    ChannelSpec spec;
    double nu_min = 0.15, nu_max = 0.2;
    int n_nu = 8;
    double c_min = 0.0, c_max = 0.4;
    int n_c = 9;
    int order = 8;
    Refinement refinement;
    double pod_energy = 0.9999;
    double mdeim_energy = 0.9999;
    OseenConfig oseen;
    // 0: matrices only at converged states; k > 0: also every k-th iterate
    int collect_every = 0;
    std::string store_dir = "rom_store";
};

RunConfig load_run_config(const std::string& path);
std::string run_config_dump(const RunConfig& cfg);
uint64_t run_config_hash(const RunConfig& cfg);

SweepGrid config_grid(const RunConfig& cfg);

// Snapshot sweep + reduced basis + matrix interpolation + projection,
// streamed through the store directory. Stages already marked complete
// (with a matching config hash) are skipped.
int cmd_offline(const RunConfig& cfg);

struct OnlineOptions {
    int n_nu = -1, n_c = -1;             // grid override
    std::optional<ParameterPoint> point; // single-point override
    int n_override = -1;                 // reduced dimension override
};

int cmd_online(const std::string& store_dir, const OnlineOptions& opts);
int cmd_report(const std::string& store_dir);

RunConfig load_store_config(const std::string& store_dir);
RomArtifacts load_rom_artifacts(const std::string& store_dir);

} // namespace semrom
