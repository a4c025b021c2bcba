#include "semrom/store.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace semrom::store {

namespace {
constexpr char kMagic[8] = {'S', 'E', 'M', 'R', 'O', 'M', '0', '1'};

// The build targets little-endian hosts; the format is defined as LE.
static_assert(sizeof(double) == 8);
} // namespace

void write_array(const std::filesystem::path& path, const double* data,
                 const std::vector<uint32_t>& shape)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(kMagic, 8);
    uint32_t rank = static_cast<uint32_t>(shape.size());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    size_t count = 1;
    for (uint32_t s : shape) {
        out.write(reinterpret_cast<const char*>(&s), 4);
        count *= s;
    }
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<double> read_array(const std::filesystem::path& path,
                               std::vector<uint32_t>& shape)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("bad array header in " + path.string());
    uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    if (rank > 8) throw std::runtime_error("implausible array rank in " + path.string());
    shape.resize(rank);
    size_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        in.read(reinterpret_cast<char*>(&shape[i]), 4);
        count *= shape[i];
    }
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("short read from " + path.string());
    return data;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m)
{
    write_array(path, m.data(),
                {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())});
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v)
{
    write_array(path, v.data(), {static_cast<uint32_t>(v.size())});
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path)
{
    std::vector<uint32_t> shape;
    std::vector<double> data = read_array(path, shape);
    if (shape.size() != 2) throw std::runtime_error("expected rank-2 array: " + path.string());
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), shape[0], shape[1]);
}

Eigen::VectorXd read_vector(const std::filesystem::path& path)
{
    std::vector<uint32_t> shape;
    std::vector<double> data = read_array(path, shape);
    if (shape.size() != 1) throw std::runtime_error("expected rank-1 array: " + path.string());
    return Eigen::Map<const Eigen::VectorXd>(data.data(), shape[0]);
}

uint64_t fnv1a(const std::string& bytes)
{
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

bool stage_done(const std::filesystem::path& dir)
{
    return std::filesystem::exists(dir / ".complete");
}

void mark_stage_done(const std::filesystem::path& dir)
{
    std::ofstream(dir / ".complete") << "done\n";
}

} // namespace semrom::store
