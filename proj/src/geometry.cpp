#include "semrom/geometry.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "semrom/quadrature.hpp"

namespace semrom {

namespace {

uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull)
{
    const auto* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

void wall_edge_points(const ChannelSpec& spec, double c, WallSide side,
                      Vec2& a, Vec2& m, Vec2& t)
{
    if (c < 0.0 || c > spec.block_x_left - 0.1)
        throw std::domain_error("wall_edge_points: curvature out of range");
    if (side == WallSide::Bottom) {
        a = {spec.block_x_left, 0.0};
        m = {spec.block_x_left - c, 0.5 * spec.gap_lo};
        t = {spec.block_x_left, spec.gap_lo};
    } else {
        a = {spec.block_x_left, spec.height};
        m = {spec.block_x_left - c, 0.5 * (spec.gap_hi + spec.height)};
        t = {spec.block_x_left, spec.gap_hi};
    }
}

Vec2 quadratic_edge(Vec2 a, Vec2 m, Vec2 t, double s)
{
    double pm = 0.5 * s * (s - 1.0);
    double p0 = 1.0 - s * s;
    double pp = 0.5 * s * (s + 1.0);
    return pm * a + p0 * m + pp * t;
}

Vec2 quadratic_edge_deriv(Vec2 a, Vec2 m, Vec2 t, double s)
{
    return (s - 0.5) * a + (-2.0 * s) * m + (s + 0.5) * t;
}

namespace {

Vec2 edge_point(const Element& e, int k, double s)
{
    static const int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
    Vec2 a = e.corner[ends[k][0]];
    Vec2 b = e.corner[ends[k][1]];
    if (e.edge[k].kind == EdgeKind::Straight)
        return 0.5 * (1.0 - s) * a + 0.5 * (1.0 + s) * b;
    return quadratic_edge(a, e.edge[k].mid, b, s);
}

Vec2 edge_deriv(const Element& e, int k, double s)
{
    static const int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
    Vec2 a = e.corner[ends[k][0]];
    Vec2 b = e.corner[ends[k][1]];
    if (e.edge[k].kind == EdgeKind::Straight)
        return 0.5 * (b - a);
    return quadratic_edge_deriv(a, e.edge[k].mid, b, s);
}

} // namespace

void element_mapping(const Element& e, double xi, double eta,
                     Vec2& x, std::array<double, 4>& jac, double& det_j)
{
    Vec2 eb = edge_point(e, 0, xi), et = edge_point(e, 2, xi);
    Vec2 el = edge_point(e, 3, eta), er = edge_point(e, 1, eta);
    Vec2 deb = edge_deriv(e, 0, xi), det_ = edge_deriv(e, 2, xi);
    Vec2 del = edge_deriv(e, 3, eta), der = edge_deriv(e, 1, eta);
    const Vec2 v0 = e.corner[0], v1 = e.corner[1], v2 = e.corner[2], v3 = e.corner[3];

    double lm = 0.5 * (1.0 - xi), lp = 0.5 * (1.0 + xi);
    double mm = 0.5 * (1.0 - eta), mp = 0.5 * (1.0 + eta);

    Vec2 q = (lm * mm) * v0 + (lp * mm) * v1 + (lp * mp) * v2 + (lm * mp) * v3;
    x = mm * eb + mp * et + lm * el + lp * er - q;

    Vec2 dq_dxi = (0.5 * mm) * (v1 - v0) + (0.5 * mp) * (v2 - v3);
    Vec2 dq_deta = (0.5 * lm) * (v3 - v0) + (0.5 * lp) * (v2 - v1);
    Vec2 dxi = mm * deb + mp * det_ + (-0.5) * el + 0.5 * er - dq_dxi;
    Vec2 deta = (-0.5) * eb + 0.5 * et + lm * del + lp * der - dq_deta;

    jac = {dxi.x, deta.x, dxi.y, deta.y}; // [dx/dxi dx/deta; dy/dxi dy/deta]
    det_j = dxi.x * deta.y - deta.x * dxi.y;
}

bool element_locate(const Element& elem, Vec2 pt, double& xi, double& eta)
{
    xi = 0.0;
    eta = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vec2 x;
        std::array<double, 4> j;
        double det;
        element_mapping(elem, xi, eta, x, j, det);
        double rx = x.x - pt.x, ry = x.y - pt.y;
        if (std::abs(rx) + std::abs(ry) < 1e-12) break;
        if (std::abs(det) < 1e-300) return false;
        double dxi = (j[3] * rx - j[1] * ry) / det;
        double deta = (-j[2] * rx + j[0] * ry) / det;
        // keep Newton iterates near the reference square
        double damp = 1.0;
        double mag = std::max(std::abs(dxi), std::abs(deta));
        if (mag > 1.0) damp = 1.0 / mag;
        xi -= damp * dxi;
        eta -= damp * deta;
        xi = std::clamp(xi, -1.5, 1.5);
        eta = std::clamp(eta, -1.5, 1.5);
    }
    Vec2 x;
    std::array<double, 4> j;
    double det;
    element_mapping(elem, xi, eta, x, j, det);
    if (std::abs(x.x - pt.x) + std::abs(x.y - pt.y) > 1e-9) return false;
    const double tol = 1e-8;
    return xi >= -1.0 - tol && xi <= 1.0 + tol && eta >= -1.0 - tol && eta <= 1.0 + tol;
}

namespace {

// x-coordinate of the (possibly curved) leading wall at height y.
double wall_x(const ChannelSpec& spec, double c, double y)
{
    if (y <= spec.gap_lo) {
        double t = y / spec.gap_lo;
        return spec.block_x_left - 4.0 * c * t * (1.0 - t);
    }
    if (y >= spec.gap_hi) {
        double t = (spec.height - y) / (spec.height - spec.gap_hi);
        return spec.block_x_left - 4.0 * c * t * (1.0 - t);
    }
    return spec.block_x_left;
}

void validate_jacobians(Mesh& mesh)
{
    QuadratureRule rule = gll_rule(mesh.order + 2);
    for (int e = 0; e < mesh.element_count(); ++e) {
        for (double xi : rule.nodes)
            for (double eta : rule.nodes) {
                Vec2 x;
                std::array<double, 4> j;
                double det;
                element_mapping(mesh.elements[e], xi, eta, x, j, det);
                if (!(det > 0.0))
                    throw std::runtime_error("generate_mesh: non-positive Jacobian in element " +
                                             std::to_string(e));
            }
    }
}

struct EdgeRegistry {
    std::map<std::pair<int, int>, int> ids;
    int add(int a, int b)
    {
        auto key = std::make_pair(a, b);
        auto rev = std::make_pair(b, a);
        if (ids.count(rev))
            throw std::logic_error("mesh edge orientation mismatch");
        auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
        return it->second;
    }
};

void finalize_element_edges(Mesh& mesh, EdgeRegistry& reg)
{
    static const int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
    for (auto& el : mesh.elements)
        for (int k = 0; k < 4; ++k)
            el.edge_id[k] = reg.add(el.vertex_id[ends[k][0]], el.vertex_id[ends[k][1]]);
    mesh.edge_count = static_cast<int>(reg.ids.size());
}

} // namespace

Mesh generate_mesh(const ChannelSpec& spec, double curvature,
                   const Refinement& ref, int p)
{
    if (curvature < 0.0 || curvature > spec.block_x_left - 0.1)
        throw std::domain_error("generate_mesh: curvature out of range");
    if (p < 3) throw std::invalid_argument("generate_mesh: need p >= 3");
    if (ref.upstream_x < 1 || ref.orifice_x < 1 || ref.downstream_x < 1 ||
        ref.gap_y < 1 || ref.block_y < 1)
        throw std::invalid_argument("generate_mesh: refinement counts must be >= 1");

    Mesh mesh;
    mesh.spec = spec;
    mesh.curvature = curvature;
    mesh.order = p;

    // row heights: uniform within block bands and gap
    std::vector<double> ys;
    for (int i = 0; i <= ref.block_y; ++i)
        ys.push_back(spec.gap_lo * i / ref.block_y);
    for (int i = 1; i <= ref.gap_y; ++i)
        ys.push_back(spec.gap_lo + (spec.gap_hi - spec.gap_lo) * i / ref.gap_y);
    for (int i = 1; i <= ref.block_y; ++i)
        ys.push_back(spec.gap_hi + (spec.height - spec.gap_hi) * i / ref.block_y);
    const int nrows = static_cast<int>(ys.size()) - 1;
    const int gap_row0 = ref.block_y;
    const int gap_row1 = ref.block_y + ref.gap_y; // one past last gap row index

    // downstream column positions, geometrically graded away from the orifice
    std::vector<double> xdown(ref.downstream_x + 1);
    {
        double r = ref.downstream_ratio;
        double total = spec.length - spec.block_x_right;
        double denom = (std::abs(r - 1.0) < 1e-12)
                           ? ref.downstream_x
                           : (std::pow(r, ref.downstream_x) - 1.0) / (r - 1.0);
        double h0 = total / denom;
        xdown[0] = spec.block_x_right;
        double h = h0;
        for (int i = 1; i <= ref.downstream_x; ++i) {
            xdown[i] = xdown[i - 1] + h;
            h *= r;
        }
        xdown[ref.downstream_x] = spec.length;
    }

    const int nu = ref.upstream_x, no = ref.orifice_x, nd = ref.downstream_x;
    const int ncols = nu + no + nd; // cells in x

    auto node_exists = [&](int ci, int rj) {
        if (ci <= nu || ci >= nu + no) return true;
        return rj >= gap_row0 && rj <= gap_row1;
    };
    auto node_coord = [&](int ci, int rj) -> Vec2 {
        double y = ys[rj];
        if (ci <= nu) {
            // columns biased toward the inlet: the straight interior edges
            // must clear the sag of the quadratic wall between row nodes
            // (gap (1-frac)*chord vs sag c*dy^2), which uniform fractions
            // violate near the apex at large curvature
            double frac = std::pow(static_cast<double>(ci) / nu, 1.75);
            return {frac * wall_x(spec, curvature, y), y};
        }
        if (ci <= nu + no) {
            double frac = static_cast<double>(ci - nu) / no;
            return {spec.block_x_left + frac * (spec.block_x_right - spec.block_x_left), y};
        }
        return {xdown[ci - nu - no], y};
    };

    std::map<std::pair<int, int>, int> node_id;
    for (int ci = 0; ci <= ncols; ++ci)
        for (int rj = 0; rj <= nrows; ++rj)
            if (node_exists(ci, rj)) {
                node_id[{ci, rj}] = static_cast<int>(mesh.nodes.size());
                mesh.nodes.push_back(node_coord(ci, rj));
            }

    auto cell_exists = [&](int ci, int rj) {
        if (ci < nu || ci >= nu + no) return true;
        return rj >= gap_row0 && rj < gap_row1;
    };

    for (int ci = 0; ci < ncols; ++ci)
        for (int rj = 0; rj < nrows; ++rj) {
            if (!cell_exists(ci, rj)) continue;
            Element el;
            el.vertex_id = {node_id.at({ci, rj}), node_id.at({ci + 1, rj}),
                            node_id.at({ci + 1, rj + 1}), node_id.at({ci, rj + 1})};
            for (int k = 0; k < 4; ++k) el.corner[k] = mesh.nodes[el.vertex_id[k]];

            bool band = rj < gap_row0 || rj >= gap_row1;
            bool orifice = ci >= nu && ci < nu + no;

            if (ci == 0) el.tag[3] = BoundaryTag::Inlet;
            if (ci + 1 == ncols) el.tag[1] = BoundaryTag::Outlet;
            if (rj == 0) el.tag[0] = BoundaryTag::Wall;
            if (rj + 1 == nrows) el.tag[2] = BoundaryTag::Wall;
            if (band && ci + 1 == nu) el.tag[1] = BoundaryTag::Wall;     // leading face
            if (band && ci == nu + no) el.tag[3] = BoundaryTag::Wall;    // trailing face
            if (orifice && rj == gap_row0) el.tag[0] = BoundaryTag::Wall;
            if (orifice && rj + 1 == gap_row1) el.tag[2] = BoundaryTag::Wall;

            if (band && ci + 1 == nu && curvature > 0.0) {
                double ymid = 0.5 * (ys[rj] + ys[rj + 1]);
                el.edge[1] = {EdgeKind::Quadratic, {wall_x(spec, curvature, ymid), ymid}};
            }
            mesh.elements.push_back(el);
        }

    EdgeRegistry reg;
    finalize_element_edges(mesh, reg);
    validate_jacobians(mesh);
    return mesh;
}

Mesh plain_channel_mesh(const ChannelSpec& spec, int nx, int ny, int p)
{
    Mesh mesh;
    mesh.spec = spec;
    mesh.order = p;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes.push_back({spec.length * i / nx, spec.height * j / ny});
    auto nid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            Element el;
            el.vertex_id = {nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)};
            for (int k = 0; k < 4; ++k) el.corner[k] = mesh.nodes[el.vertex_id[k]];
            if (i == 0) el.tag[3] = BoundaryTag::Inlet;
            if (i + 1 == nx) el.tag[1] = BoundaryTag::Outlet;
            if (j == 0) el.tag[0] = BoundaryTag::Wall;
            if (j + 1 == ny) el.tag[2] = BoundaryTag::Wall;
            mesh.elements.push_back(el);
        }
    EdgeRegistry reg;
    finalize_element_edges(mesh, reg);
    validate_jacobians(mesh);
    return mesh;
}

uint64_t Mesh::fingerprint() const
{
    uint64_t h = fnv1a(&order, sizeof(order));
    h = fnv1a(&curvature, sizeof(curvature), h);
    for (const auto& n : nodes) h = fnv1a(&n, sizeof(n), h);
    for (const auto& e : elements) {
        h = fnv1a(e.vertex_id.data(), sizeof(e.vertex_id), h);
        for (const auto& ed : e.edge) {
            h = fnv1a(&ed.kind, sizeof(ed.kind), h);
            h = fnv1a(&ed.mid, sizeof(ed.mid), h);
        }
        h = fnv1a(e.tag.data(), sizeof(e.tag), h);
    }
    return h;
}

void export_mesh_text(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    static const char* tag_names[] = {"none", "inlet", "outlet", "wall"};
    out.precision(17);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        out << e;
        for (const auto& c : el.corner) out << ' ' << c.x << ' ' << c.y;
        for (int k = 0; k < 4; ++k) {
            if (el.edge[k].kind == EdgeKind::Straight)
                out << " straight";
            else
                out << " quadratic(" << el.edge[k].mid.x << ',' << el.edge[k].mid.y << ')';
            out << ':' << tag_names[static_cast<int>(el.tag[k])];
        }
        out << '\n';
    }
}

void export_mesh_svg(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    const double scale = 60.0, pad = 10.0;
    double w = mesh.spec.length * scale + 2 * pad, h = mesh.spec.height * scale + 2 * pad;
    auto px = [&](Vec2 v) { return std::make_pair(pad + v.x * scale, pad + (mesh.spec.height - v.y) * scale); };
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    for (const auto& el : mesh.elements)
        for (int k = 0; k < 4; ++k) {
            out << "<polyline fill='none' stroke='"
                << (el.tag[k] == BoundaryTag::None ? "#999" : "#c00") << "' stroke-width='1' points='";
            for (int s = 0; s <= 8; ++s) {
                auto [x, y] = px(edge_point(el, k, -1.0 + 0.25 * s));
                out << x << ',' << y << ' ';
            }
            out << "'/>\n";
        }
    out << "</svg>\n";
}

} // namespace semrom
