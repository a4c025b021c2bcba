#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace semrom {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

// Channel with a curvature-parametrized narrowing. Two blocks pinch the
// flow to an orifice of height gap_hi - gap_lo; the leading face of each
// block bows upstream with the curvature parameter.
struct ChannelSpec {
    double length = 18.0;
    double height = 3.0;
    double block_x_left = 0.5;
    double block_x_right = 1.0;
    double gap_lo = 1.0;
    double gap_hi = 2.0;
};

struct ParameterPoint {
    double nu = 0.2;       // kinematic viscosity
    double curvature = 0.0; // upstream bow of the leading-face midpoint
};

constexpr double kCurvatureMax = 0.4;

// Peak inflow speed and orifice height fix the Reynolds convention used
// in all reports: Re = U*L/nu.
struct ReynoldsConvention {
    double u_char = 2.25;
    double l_char = 1.0;
    double re(double nu) const { return u_char * l_char / nu; }
};

enum class EdgeKind : uint8_t { Straight, Quadratic };

// Edge geometry between two element corners; Quadratic edges interpolate
// the corners and a stored midpoint with the 3-node Lagrange curve.
struct EdgeShape {
    EdgeKind kind = EdgeKind::Straight;
    Vec2 mid{};
};

enum class BoundaryTag : uint8_t { None, Inlet, Outlet, Wall };

// Local edge order: 0 bottom (v0->v1), 1 right (v1->v2), 2 top (v3->v2),
// 3 left (v0->v3). Edge parameters run in the +xi / +eta direction, so
// shared edges of the structured mesh always agree on orientation.
struct Element {
    std::array<Vec2, 4> corner{};
    std::array<EdgeShape, 4> edge{};
    std::array<BoundaryTag, 4> tag{};
    std::array<int, 4> vertex_id{};
    std::array<int, 4> edge_id{};
};

struct Refinement {
    int upstream_x = 4;
    int orifice_x = 2;
    int downstream_x = 10;
    int gap_y = 2;
    int block_y = 3;
    double downstream_ratio = 1.3;
};

struct Mesh {
    ChannelSpec spec;
    double curvature = 0.0;
    int order = 8; // velocity polynomial order p
    std::vector<Element> elements;
    std::vector<Vec2> nodes;
    int edge_count = 0;

    int element_count() const { return static_cast<int>(elements.size()); }
    uint64_t fingerprint() const;
};

// The three control points of a block's curved leading face.
// side: 0 = bottom block, 1 = top block.
enum class WallSide { Bottom, Top };
void wall_edge_points(const ChannelSpec& spec, double c, WallSide side,
                      Vec2& a, Vec2& m, Vec2& t);

// Lagrange-quadratic curve through (A, M, T) at s=-1, 0, 1.
Vec2 quadratic_edge(Vec2 a, Vec2 m, Vec2 t, double s);
Vec2 quadratic_edge_deriv(Vec2 a, Vec2 m, Vec2 t, double s);

Mesh generate_mesh(const ChannelSpec& spec, double curvature,
                   const Refinement& refinement, int p);

// Straight rectangular channel without blocks (test geometry).
Mesh plain_channel_mesh(const ChannelSpec& spec, int nx, int ny, int p);

// Reference-to-physical map (Gordon-Hall blending for curved edges).
void element_mapping(const Element& elem, double xi, double eta,
                     Vec2& x, std::array<double, 4>& jac, double& det_j);

// Inverse of element_mapping by damped Newton; returns false if the point
// does not land inside [-1,1]^2 (with a small tolerance).
bool element_locate(const Element& elem, Vec2 pt, double& xi, double& eta);

void export_mesh_text(const Mesh& mesh, const std::string& path);
void export_mesh_svg(const Mesh& mesh, const std::string& path);

} // namespace semrom
