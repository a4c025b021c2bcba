#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace semrom::store {

// On-disk array format: 8-byte magic "SEMROM01", u32 rank, u32 shape per
// dimension, then the payload as little-endian f64 (column-major for
// rank-2 arrays).
void write_array(const std::filesystem::path& path, const double* data,
                 const std::vector<uint32_t>& shape);
std::vector<double> read_array(const std::filesystem::path& path,
                               std::vector<uint32_t>& shape);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

// FNV-1a over a byte string; used for config fingerprints.
uint64_t fnv1a(const std::string& bytes);

// Stage completion markers for idempotent offline re-runs.
bool stage_done(const std::filesystem::path& dir);
void mark_stage_done(const std::filesystem::path& dir);

} // namespace semrom::store
