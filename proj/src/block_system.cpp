#include "semrom/block_system.hpp"

#include <fstream>
#include <stdexcept>

namespace semrom {

ModeTables build_mode_tables(int p)
{
    ModeTables t;
    t.p = p;
    t.n2 = (p + 1) * (p + 1);
    t.nbl = 4 + 4 * (p - 1);
    t.ni2 = (p - 1) * (p - 1);
    t.np2 = (p - 1) * (p - 1);
    auto ten = [p](int i, int j) { return i * (p + 1) + j; };
    t.bnd_tensor = {ten(0, 0), ten(p, 0), ten(p, p), ten(0, p)};
    for (int k = 1; k < p; ++k) t.bnd_tensor.push_back(ten(k, 0)); // bottom
    for (int k = 1; k < p; ++k) t.bnd_tensor.push_back(ten(p, k)); // right
    for (int k = 1; k < p; ++k) t.bnd_tensor.push_back(ten(k, p)); // top
    for (int k = 1; k < p; ++k) t.bnd_tensor.push_back(ten(0, k)); // left
    for (int i = 1; i < p; ++i)
        for (int j = 1; j < p; ++j) t.int_tensor.push_back(ten(i, j));
    return t;
}

namespace {

// Modal coefficients of a 1D trace f(s) on [-1,1] by interpolation at the
// p+1 GLL nodes (exact whenever f lies in P_p).
Eigen::VectorXd trace_coefficients(const Basis1D& basis,
                                   const std::function<double(double)>& f)
{
    int n = basis.count();
    QuadratureRule nodes = gll_rule(n);
    Eigen::MatrixXd vand(n, n);
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
            double v, d;
            basis.eval(m, nodes.nodes[k], v, d);
            vand(k, m) = v;
        }
        rhs(k) = f(nodes.nodes[k]);
    }
    return vand.fullPivLu().solve(rhs);
}

} // namespace

DofLayout build_dof_layout(const Mesh& mesh)
{
    const int p = mesh.order;
    DofLayout lay;
    lay.p = p;
    lay.modes = build_mode_tables(p);
    lay.n_nodes = static_cast<int>(mesh.nodes.size());
    lay.n_edges = mesh.edge_count;
    lay.n_bnd_scalar = lay.n_nodes + lay.n_edges * (p - 1);

    const int ne = mesh.element_count();
    lay.elem_bnd_scalar.resize(ne);
    lay.bnd_support.resize(lay.n_bnd_scalar);
    for (int e = 0; e < ne; ++e) {
        auto& ids = lay.elem_bnd_scalar[e];
        ids.resize(lay.modes.nbl);
        for (int lb = 0; lb < lay.modes.nbl; ++lb) {
            if (lb < 4) {
                ids[lb] = mesh.elements[e].vertex_id[lb];
            } else {
                int edge = (lb - 4) / (p - 1);
                int k = (lb - 4) % (p - 1);
                ids[lb] = lay.n_nodes + mesh.elements[e].edge_id[edge] * (p - 1) + k;
            }
            lay.bnd_support[ids[lb]].push_back({e, lb});
        }
    }

    // Dirichlet data: inlet parabola (x-component) and no-slip walls.
    std::vector<char> is_dir(2 * lay.n_bnd_scalar, 0);
    lay.dirichlet.assign(2 * lay.n_bnd_scalar, 0.0);
    Basis1D basis(p);
    static const int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
    auto mark = [&](int sid, int comp, double value) {
        is_dir[2 * sid + comp] = 1;
        lay.dirichlet[2 * sid + comp] = value;
    };
    for (int e = 0; e < ne; ++e) {
        const Element& el = mesh.elements[e];
        for (int k = 0; k < 4; ++k) {
            if (el.tag[k] != BoundaryTag::Inlet) continue;
            Vec2 a = el.corner[ends[k][0]], b = el.corner[ends[k][1]];
            auto profile = [&](double s) {
                double y = 0.5 * (1.0 - s) * a.y + 0.5 * (1.0 + s) * b.y;
                return y * (mesh.spec.height - y);
            };
            Eigen::VectorXd c = trace_coefficients(basis, profile);
            int va = el.vertex_id[ends[k][0]], vb = el.vertex_id[ends[k][1]];
            mark(va, 0, c(0));
            mark(vb, 0, c(p));
            mark(va, 1, 0.0);
            mark(vb, 1, 0.0);
            for (int m = 1; m < p; ++m) {
                int sid = lay.n_nodes + el.edge_id[k] * (p - 1) + (m - 1);
                mark(sid, 0, c(m));
                mark(sid, 1, 0.0);
            }
        }
    }
    for (int e = 0; e < ne; ++e) {
        const Element& el = mesh.elements[e];
        for (int k = 0; k < 4; ++k) {
            if (el.tag[k] != BoundaryTag::Wall) continue;
            for (int comp = 0; comp < 2; ++comp) {
                mark(el.vertex_id[ends[k][0]], comp, 0.0);
                mark(el.vertex_id[ends[k][1]], comp, 0.0);
                for (int m = 1; m < p; ++m)
                    mark(lay.n_nodes + el.edge_id[k] * (p - 1) + (m - 1), comp, 0.0);
            }
        }
    }

    lay.vel_index.assign(2 * lay.n_bnd_scalar, -1);
    for (int sid = 0; sid < lay.n_bnd_scalar; ++sid)
        for (int comp = 0; comp < 2; ++comp)
            if (!is_dir[2 * sid + comp]) {
                lay.vel_index[2 * sid + comp] = lay.n_bnd_free;
                lay.free_scalar.push_back(sid);
                lay.free_comp.push_back(comp);
                ++lay.n_bnd_free;
            }

    lay.n_pressure = ne * lay.modes.np2;
    lay.n_interior = ne * 2 * lay.modes.ni2;
    lay.pressure_offset = lay.n_bnd_free;
    lay.interior_offset = lay.n_bnd_free + lay.n_pressure;
    lay.n_delta = lay.n_bnd_free + lay.n_pressure + lay.n_interior;

    lay.elem_dirichlet.resize(ne);
    for (int e = 0; e < ne; ++e)
        for (int lb = 0; lb < lay.modes.nbl; ++lb) {
            int sid = lay.elem_bnd_scalar[e][lb];
            for (int comp = 0; comp < 2; ++comp)
                if (is_dir[2 * sid + comp]) {
                    double v = lay.dirichlet[2 * sid + comp];
                    lay.elem_dirichlet[e].push_back({lb, comp, v});
                }
        }
    return lay;
}

OpsTables build_ops_tables(int p)
{
    OpsTables t;
    t.p = p;
    t.q = p + 2;
    t.rule = gll_rule(t.q);
    Basis1D vel(p);
    t.vel_v = vel.values(t.rule.nodes);
    t.vel_d = vel.derivatives(t.rule.nodes);
    t.pr_v.resize(p - 1, t.q);
    for (int m = 0; m <= p - 2; ++m)
        for (int k = 0; k < t.q; ++k) {
            double v, d;
            legendre(m, t.rule.nodes[k], v, d);
            t.pr_v(m, k) = v;
        }
    return t;
}

ElementOps build_element_ops(const Mesh& mesh, int e, const OpsTables& tab,
                             const ModeTables& modes)
{
    const int p = tab.p, q = tab.q;
    const int n2 = modes.n2, np2 = modes.np2, nq = q * q;
    ElementOps ops;
    ops.V.resize(n2, nq);
    ops.Gx.resize(n2, nq);
    ops.Gy.resize(n2, nq);
    ops.Pv.resize(np2, nq);
    ops.wdet.resize(nq);

    const Element& el = mesh.elements[e];
    for (int iq = 0; iq < q; ++iq)
        for (int jq = 0; jq < q; ++jq) {
            int qq = iq * q + jq;
            Vec2 x;
            std::array<double, 4> j;
            double det;
            element_mapping(el, tab.rule.nodes[iq], tab.rule.nodes[jq], x, j, det);
            if (!(det > 0.0))
                throw std::runtime_error("non-positive Jacobian in element " + std::to_string(e));
            double dxidx = j[3] / det, dxidy = -j[1] / det;
            double detadx = -j[2] / det, detady = j[0] / det;
            ops.wdet(qq) = tab.rule.weights[iq] * tab.rule.weights[jq] * det;
            for (int i = 0; i <= p; ++i)
                for (int jj = 0; jj <= p; ++jj) {
                    int t = i * (p + 1) + jj;
                    double v = tab.vel_v(i, iq) * tab.vel_v(jj, jq);
                    double dxi = tab.vel_d(i, iq) * tab.vel_v(jj, jq);
                    double deta = tab.vel_v(i, iq) * tab.vel_d(jj, jq);
                    ops.V(t, qq) = v;
                    ops.Gx(t, qq) = dxi * dxidx + deta * detadx;
                    ops.Gy(t, qq) = dxi * dxidy + deta * detady;
                }
            for (int i = 0; i <= p - 2; ++i)
                for (int jj = 0; jj <= p - 2; ++jj)
                    ops.Pv(i * (p - 1) + jj, qq) = tab.pr_v(i, iq) * tab.pr_v(jj, jq);
        }

    Eigen::MatrixXd gxw = ops.Gx * ops.wdet.asDiagonal();
    Eigen::MatrixXd gyw = ops.Gy * ops.wdet.asDiagonal();
    ops.Klap = gxw * ops.Gx.transpose() + gyw * ops.Gy.transpose();
    ops.MassS = ops.V * ops.wdet.asDiagonal() * ops.V.transpose();
    ops.Dx = ops.Pv * gxw.transpose();
    ops.Dy = ops.Pv * gyw.transpose();
    return ops;
}

MeshOps::MeshOps(const Mesh& mesh, const DofLayout& layout)
    : tables_(build_ops_tables(mesh.order))
{
    elem_.reserve(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        elem_.push_back(build_element_ops(mesh, e, tables_, layout.modes));
}

LazyOps::LazyOps(const Mesh& mesh, const ModeTables& modes)
    : mesh_(mesh), modes_(modes), tables_(build_ops_tables(mesh.order))
{
}

const ElementOps& LazyOps::element(int e) const
{
    auto it = cache_.find(e);
    if (it == cache_.end())
        it = cache_.emplace(e, build_element_ops(mesh_, e, tables_, modes_)).first;
    return it->second;
}

LocalVelocityFn local_velocity_from_state(const DofLayout& layout, const Eigen::VectorXd& x)
{
    const DofLayout* lay = &layout;
    const Eigen::VectorXd* xv = &x;
    return [lay, xv](int e, Eigen::VectorXd& ux, Eigen::VectorXd& uy) {
        const ModeTables& m = lay->modes;
        ux.setZero(m.n2);
        uy.setZero(m.n2);
        for (int lb = 0; lb < m.nbl; ++lb) {
            int sid = lay->elem_bnd_scalar[e][lb];
            int t = m.bnd_tensor[lb];
            int gx = lay->vel_global(sid, 0), gy = lay->vel_global(sid, 1);
            ux(t) = gx >= 0 ? (*xv)(gx) : lay->vel_value(sid, 0);
            uy(t) = gy >= 0 ? (*xv)(gy) : lay->vel_value(sid, 1);
        }
        for (int li = 0; li < m.ni2; ++li) {
            int t = m.int_tensor[li];
            ux(t) = (*xv)(lay->interior_global(e, li, 0));
            uy(t) = (*xv)(lay->interior_global(e, li, 1));
        }
    };
}

BlockSystem assemble_blocks(const Mesh& mesh, const OpsProvider& ops,
                            const DofLayout& layout, double nu,
                            const LocalVelocityFn* advection, Vec2 body_force)
{
    const ModeTables& m = layout.modes;
    const int ne = mesh.element_count();
    BlockSystem sys;
    sys.mesh = &mesh;
    sys.layout = &layout;
    sys.nu = nu;
    sys.A.resize(ne);
    sys.B.resize(ne);
    sys.Bt.resize(ne);
    sys.C.resize(ne);
    sys.Dbnd.resize(ne);
    sys.Dint.resize(ne);
    sys.f_bnd.resize(ne);
    sys.f_int.resize(ne);

    Eigen::VectorXd ux, uy;
    for (int e = 0; e < ne; ++e) {
        const ElementOps& op = ops.element(e);
        Eigen::MatrixXd k = nu * op.Klap;
        if (advection) {
            (*advection)(e, ux, uy);
            Eigen::VectorXd uxq = op.V.transpose() * ux;
            Eigen::VectorXd uyq = op.V.transpose() * uy;
            Eigen::VectorXd wx = op.wdet.cwiseProduct(uxq);
            Eigen::VectorXd wy = op.wdet.cwiseProduct(uyq);
            k.noalias() += op.V * (wx.asDiagonal() * op.Gx.transpose() +
                                   wy.asDiagonal() * op.Gy.transpose());
        }

        sys.A[e].setZero(2 * m.nbl, 2 * m.nbl);
        sys.B[e].setZero(2 * m.nbl, 2 * m.ni2);
        sys.Bt[e].setZero(2 * m.ni2, 2 * m.nbl);
        sys.C[e].setZero(2 * m.ni2, 2 * m.ni2);
        sys.Dbnd[e].setZero(m.np2, 2 * m.nbl);
        sys.Dint[e].setZero(m.np2, 2 * m.ni2);

        for (int a = 0; a < m.nbl; ++a)
            for (int b = 0; b < m.nbl; ++b) {
                double v = k(m.bnd_tensor[a], m.bnd_tensor[b]);
                sys.A[e](2 * a, 2 * b) = v;
                sys.A[e](2 * a + 1, 2 * b + 1) = v;
            }
        for (int a = 0; a < m.nbl; ++a)
            for (int b = 0; b < m.ni2; ++b) {
                double v = k(m.bnd_tensor[a], m.int_tensor[b]);
                sys.B[e](2 * a, 2 * b) = v;
                sys.B[e](2 * a + 1, 2 * b + 1) = v;
                double w = k(m.int_tensor[b], m.bnd_tensor[a]);
                sys.Bt[e](2 * b, 2 * a) = w;
                sys.Bt[e](2 * b + 1, 2 * a + 1) = w;
            }
        for (int a = 0; a < m.ni2; ++a)
            for (int b = 0; b < m.ni2; ++b) {
                double v = k(m.int_tensor[a], m.int_tensor[b]);
                sys.C[e](2 * a, 2 * b) = v;
                sys.C[e](2 * a + 1, 2 * b + 1) = v;
            }
        for (int kk = 0; kk < m.np2; ++kk) {
            for (int b = 0; b < m.nbl; ++b) {
                sys.Dbnd[e](kk, 2 * b) = op.Dx(kk, m.bnd_tensor[b]);
                sys.Dbnd[e](kk, 2 * b + 1) = op.Dy(kk, m.bnd_tensor[b]);
            }
            for (int b = 0; b < m.ni2; ++b) {
                sys.Dint[e](kk, 2 * b) = op.Dx(kk, m.int_tensor[b]);
                sys.Dint[e](kk, 2 * b + 1) = op.Dy(kk, m.int_tensor[b]);
            }
        }

        sys.f_bnd[e].setZero(2 * m.nbl);
        sys.f_int[e].setZero(2 * m.ni2);
        if (body_force.x != 0.0 || body_force.y != 0.0) {
            Eigen::VectorXd fv = op.V * op.wdet;
            for (int a = 0; a < m.nbl; ++a) {
                sys.f_bnd[e](2 * a) = body_force.x * fv(m.bnd_tensor[a]);
                sys.f_bnd[e](2 * a + 1) = body_force.y * fv(m.bnd_tensor[a]);
            }
            for (int a = 0; a < m.ni2; ++a) {
                sys.f_int[e](2 * a) = body_force.x * fv(m.int_tensor[a]);
                sys.f_int[e](2 * a + 1) = body_force.y * fv(m.int_tensor[a]);
            }
        }
    }
    return sys;
}

Eigen::SparseMatrix<double> BlockSystem::gather_matrix() const
{
    const ModeTables& m = layout->modes;
    const int ne = mesh->element_count();
    Eigen::SparseMatrix<double> g(2 * layout->n_bnd_scalar, ne * 2 * m.nbl);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(ne * 2 * m.nbl);
    for (int e = 0; e < ne; ++e)
        for (int lb = 0; lb < m.nbl; ++lb)
            for (int comp = 0; comp < 2; ++comp) {
                int sid = layout->elem_bnd_scalar[e][lb];
                trips.emplace_back(2 * sid + comp, e * 2 * m.nbl + 2 * lb + comp, 1.0);
            }
    g.setFromTriplets(trips.begin(), trips.end());
    return g;
}

GlobalSystem gather_globalize(const BlockSystem& sys)
{
    const DofLayout& lay = *sys.layout;
    const ModeTables& m = lay.modes;
    const int ne = sys.mesh->element_count();

    GlobalSystem out;
    out.rhs.setZero(lay.n_delta);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(ne) *
                  (4 * m.nbl * m.nbl + 8 * m.nbl * m.ni2 + 4 * m.ni2 * m.ni2 +
                   4 * m.np2 * (m.nbl + m.ni2)));

    std::vector<int> gb(2 * m.nbl);
    std::vector<double> db(2 * m.nbl);
    std::vector<int> gi(2 * m.ni2), gp(m.np2);

    for (int e = 0; e < ne; ++e) {
        for (int lb = 0; lb < m.nbl; ++lb) {
            int sid = lay.elem_bnd_scalar[e][lb];
            for (int comp = 0; comp < 2; ++comp) {
                gb[2 * lb + comp] = lay.vel_global(sid, comp);
                db[2 * lb + comp] = lay.vel_value(sid, comp);
            }
        }
        for (int li = 0; li < m.ni2; ++li)
            for (int comp = 0; comp < 2; ++comp)
                gi[2 * li + comp] = lay.interior_global(e, li, comp);
        for (int k = 0; k < m.np2; ++k) gp[k] = lay.pressure_global(e, k);

        auto add = [&](int r, int c, double v) {
            if (v == 0.0) return;
            trips.emplace_back(r, c, v);
        };
        // velocity rows (boundary)
        for (int r = 0; r < 2 * m.nbl; ++r) {
            int gr = gb[r];
            if (gr < 0) continue;
            for (int c = 0; c < 2 * m.nbl; ++c) {
                double v = sys.A[e](r, c);
                if (gb[c] >= 0) add(gr, gb[c], v);
                else out.rhs(gr) -= v * db[c];
            }
            for (int c = 0; c < 2 * m.ni2; ++c) add(gr, gi[c], sys.B[e](r, c));
            for (int k = 0; k < m.np2; ++k) add(gr, gp[k], -sys.Dbnd[e](k, r));
            out.rhs(gr) += sys.f_bnd[e](r);
        }
        // pressure rows
        for (int k = 0; k < m.np2; ++k) {
            for (int c = 0; c < 2 * m.nbl; ++c) {
                double v = -sys.Dbnd[e](k, c);
                if (gb[c] >= 0) add(gp[k], gb[c], v);
                else out.rhs(gp[k]) -= v * db[c];
            }
            for (int c = 0; c < 2 * m.ni2; ++c) add(gp[k], gi[c], -sys.Dint[e](k, c));
        }
        // velocity rows (interior)
        for (int r = 0; r < 2 * m.ni2; ++r) {
            int gr = gi[r];
            for (int c = 0; c < 2 * m.nbl; ++c) {
                double v = sys.Bt[e](r, c);
                if (gb[c] >= 0) add(gr, gb[c], v);
                else out.rhs(gr) -= v * db[c];
            }
            for (int c = 0; c < 2 * m.ni2; ++c) add(gr, gi[c], sys.C[e](r, c));
            for (int k = 0; k < m.np2; ++k) add(gr, gp[k], -sys.Dint[e](k, r));
            out.rhs(gr) += sys.f_int[e](r);
        }
    }

    out.A.resize(lay.n_delta, lay.n_delta);
    out.A.setFromTriplets(trips.begin(), trips.end());
    return out;
}

EntryEvaluator::EntryEvaluator(const Mesh& mesh, const OpsProvider& ops,
                               const DofLayout& layout, double nu,
                               const LocalVelocityFn* advection, Vec2 body_force)
    : mesh_(mesh), ops_(ops), layout_(layout), nu_(nu), advection_(advection),
      force_(body_force)
{
}

void EntryEvaluator::supports(int g, std::vector<std::pair<int, LocalDof>>& out) const
{
    out.clear();
    const ModeTables& m = layout_.modes;
    if (g < layout_.n_bnd_free) {
        int sid = layout_.free_scalar[g], comp = layout_.free_comp[g];
        for (auto [e, lb] : layout_.bnd_support[sid])
            out.push_back({e, {LocalDof::VelBnd, m.bnd_tensor[lb], comp, 0}});
    } else if (g < layout_.interior_offset) {
        int idx = g - layout_.pressure_offset;
        out.push_back({idx / m.np2, {LocalDof::Pressure, 0, 0, idx % m.np2}});
    } else {
        int idx = g - layout_.interior_offset;
        int e = idx / (2 * m.ni2), r = idx % (2 * m.ni2);
        out.push_back({e, {LocalDof::VelInt, m.int_tensor[r / 2], r % 2, 0}});
    }
}

const std::pair<Eigen::VectorXd, Eigen::VectorXd>* EntryEvaluator::advection_at(int e)
{
    if (!advection_) return nullptr;
    auto it = adv_cache_.find(e);
    if (it == adv_cache_.end()) {
        Eigen::VectorXd ux, uy;
        (*advection_)(e, ux, uy);
        const ElementOps& op = ops_.element(e);
        it = adv_cache_.emplace(e, std::make_pair(Eigen::VectorXd(op.V.transpose() * ux),
                                                  Eigen::VectorXd(op.V.transpose() * uy)))
                 .first;
    }
    return &it->second;
}

double EntryEvaluator::pair_value(int e, const LocalDof& row, const LocalDof& col)
{
    const ElementOps& op = ops_.element(e);
    bool row_vel = row.kind != LocalDof::Pressure;
    bool col_vel = col.kind != LocalDof::Pressure;
    if (row_vel && col_vel) {
        if (row.comp != col.comp) return 0.0;
        double v = nu_ * op.Klap(row.tensor, col.tensor);
        if (const auto* adv = advection_at(e)) {
            Eigen::ArrayXd conv = adv->first.array() * op.Gx.row(col.tensor).transpose().array() +
                                  adv->second.array() * op.Gy.row(col.tensor).transpose().array();
            v += (op.V.row(row.tensor).transpose().array() * op.wdet.array() * conv).sum();
        }
        return v;
    }
    if (row_vel && !col_vel)
        return -(row.comp == 0 ? op.Dx : op.Dy)(col.pk, row.tensor);
    if (!row_vel && col_vel)
        return -(col.comp == 0 ? op.Dx : op.Dy)(row.pk, col.tensor);
    return 0.0;
}

double EntryEvaluator::matrix_entry(int i, int j)
{
    std::vector<std::pair<int, LocalDof>> si, sj;
    supports(i, si);
    supports(j, sj);
    double v = 0.0;
    for (const auto& [ei, ri] : si)
        for (const auto& [ej, cj] : sj)
            if (ei == ej) v += pair_value(ei, ri, cj);
    return v;
}

double EntryEvaluator::rhs_entry(int i)
{
    std::vector<std::pair<int, LocalDof>> si;
    supports(i, si);
    const ModeTables& m = layout_.modes;
    double v = 0.0;
    for (const auto& [e, row] : si) {
        if (row.kind != LocalDof::Pressure && (force_.x != 0.0 || force_.y != 0.0)) {
            const ElementOps& op = ops_.element(e);
            double fc = row.comp == 0 ? force_.x : force_.y;
            v += fc * op.V.row(row.tensor).dot(op.wdet);
        }
        for (const auto& dd : layout_.elem_dirichlet[e]) {
            LocalDof col{LocalDof::VelBnd, m.bnd_tensor[dd.lb], dd.comp, 0};
            v -= pair_value(e, row, col) * dd.value;
        }
    }
    return v;
}

PointValues evaluate_solution(const Mesh& mesh, const DofLayout& layout,
                              const Eigen::VectorXd& x, Vec2 pt)
{
    const int p = mesh.order;
    const ModeTables& m = layout.modes;
    Basis1D basis(p);
    LocalVelocityFn local = local_velocity_from_state(layout, x);

    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
        for (const auto& c : el.corner) {
            xlo = std::min(xlo, c.x);
            xhi = std::max(xhi, c.x);
            ylo = std::min(ylo, c.y);
            yhi = std::max(yhi, c.y);
        }
        const double margin = kCurvatureMax + 1e-9;
        if (pt.x < xlo - margin || pt.x > xhi + margin || pt.y < ylo - 1e-9 ||
            pt.y > yhi + 1e-9)
            continue;
        double xi, eta;
        if (!element_locate(el, pt, xi, eta)) continue;

        Eigen::VectorXd vx(p + 1), vy(p + 1);
        for (int mm = 0; mm <= p; ++mm) {
            double v, d;
            basis.eval(mm, xi, v, d);
            vx(mm) = v;
            basis.eval(mm, eta, v, d);
            vy(mm) = v;
        }
        Eigen::VectorXd ux, uy;
        local(e, ux, uy);
        PointValues out;
        for (int i = 0; i <= p; ++i)
            for (int j = 0; j <= p; ++j) {
                double b = vx(i) * vy(j);
                out.ux += ux(i * (p + 1) + j) * b;
                out.uy += uy(i * (p + 1) + j) * b;
            }
        for (int i = 0; i <= p - 2; ++i)
            for (int j = 0; j <= p - 2; ++j) {
                double lv1, lv2, d;
                legendre(i, xi, lv1, d);
                legendre(j, eta, lv2, d);
                out.p += x(layout.pressure_global(e, i * (p - 1) + j)) * lv1 * lv2;
            }
        return out;
    }
    throw std::runtime_error("evaluate_solution: point outside the fluid domain");
}

Eigen::SparseMatrix<double> velocity_mass(const Mesh& mesh, const OpsProvider& ops,
                                          const DofLayout& layout)
{
    const ModeTables& m = layout.modes;
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<int> g(2 * m.n2);
    std::vector<int> tensor_to_local(m.n2);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const ElementOps& op = ops.element(e);
        for (int lb = 0; lb < m.nbl; ++lb) {
            int sid = layout.elem_bnd_scalar[e][lb];
            for (int comp = 0; comp < 2; ++comp)
                g[2 * m.bnd_tensor[lb] + comp] = layout.vel_global(sid, comp);
        }
        for (int li = 0; li < m.ni2; ++li)
            for (int comp = 0; comp < 2; ++comp)
                g[2 * m.int_tensor[li] + comp] = layout.interior_global(e, li, comp);
        for (int a = 0; a < m.n2; ++a)
            for (int b = 0; b < m.n2; ++b) {
                double v = op.MassS(a, b);
                for (int comp = 0; comp < 2; ++comp) {
                    int ga = g[2 * a + comp], gb2 = g[2 * b + comp];
                    if (ga >= 0 && gb2 >= 0) trips.emplace_back(ga, gb2, v);
                }
            }
    }
    Eigen::SparseMatrix<double> mass(layout.n_delta, layout.n_delta);
    mass.setFromTriplets(trips.begin(), trips.end());
    return mass;
}

Eigen::VectorXd interpolate_state(const Mesh& mesh, const DofLayout& layout,
                                  const std::function<double(Vec2)>& fx,
                                  const std::function<double(Vec2)>& fy,
                                  const std::function<double(Vec2)>& fp)
{
    const int p = mesh.order;
    const ModeTables& m = layout.modes;
    Basis1D vel(p);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.n_delta);

    QuadratureRule vn = gll_rule(p + 1);
    Eigen::MatrixXd vv = vel.values(vn.nodes); // (p+1) x (p+1)
    Eigen::MatrixXd vand(m.n2, m.n2);
    QuadratureRule pn = gll_rule(std::max(2, p - 1));
    Eigen::MatrixXd pv(p - 1, pn.count);
    for (int mm = 0; mm <= p - 2; ++mm)
        for (int k = 0; k < pn.count; ++k) {
            double v, d;
            legendre(mm, pn.nodes[k], v, d);
            pv(mm, k) = v;
        }
    Eigen::MatrixXd pvand(m.np2, m.np2);

    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        Eigen::VectorXd bx(m.n2), by(m.n2);
        for (int a = 0; a < p + 1; ++a)
            for (int b = 0; b < p + 1; ++b) {
                int pt = a * (p + 1) + b;
                Vec2 xx;
                std::array<double, 4> j;
                double det;
                element_mapping(el, vn.nodes[a], vn.nodes[b], xx, j, det);
                bx(pt) = fx(xx);
                by(pt) = fy(xx);
                for (int i = 0; i <= p; ++i)
                    for (int jj = 0; jj <= p; ++jj)
                        vand(pt, i * (p + 1) + jj) = vv(i, a) * vv(jj, b);
            }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(vand);
        Eigen::VectorXd cx = lu.solve(bx), cy = lu.solve(by);
        for (int lb = 0; lb < m.nbl; ++lb) {
            int sid = layout.elem_bnd_scalar[e][lb];
            int t = m.bnd_tensor[lb];
            int gx = layout.vel_global(sid, 0), gy = layout.vel_global(sid, 1);
            if (gx >= 0) x(gx) = cx(t);
            if (gy >= 0) x(gy) = cy(t);
        }
        for (int li = 0; li < m.ni2; ++li) {
            int t = m.int_tensor[li];
            x(layout.interior_global(e, li, 0)) = cx(t);
            x(layout.interior_global(e, li, 1)) = cy(t);
        }

        Eigen::VectorXd bp(m.np2);
        int nn = p - 1;
        for (int a = 0; a < nn; ++a)
            for (int b = 0; b < nn; ++b) {
                int pt = a * nn + b;
                Vec2 xx;
                std::array<double, 4> j;
                double det;
                element_mapping(el, pn.nodes[a], pn.nodes[b], xx, j, det);
                bp(pt) = fp(xx);
                for (int i = 0; i < nn; ++i)
                    for (int jj = 0; jj < nn; ++jj)
                        pvand(pt, i * nn + jj) = pv(i, a) * pv(jj, b);
            }
        Eigen::VectorXd cp = pvand.partialPivLu().solve(bp);
        for (int k = 0; k < m.np2; ++k) x(layout.pressure_global(e, k)) = cp(k);
    }
    return x;
}

void dump_matrix_market(const Eigen::SparseMatrix<double>& a, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    out.precision(17);
    for (int k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

} // namespace semrom
