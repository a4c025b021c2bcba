#include "semrom/mdeim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "semrom/pod.hpp"

namespace semrom {

const char* role_name(Role role)
{
    switch (role) {
    case Role::A: return "A";
    case Role::B: return "B";
    case Role::Bt: return "Bt";
    case Role::C: return "C";
    case Role::Dbnd: return "Dbnd";
    case Role::Dint: return "Dint";
    case Role::Rhs: return "Rhs";
    }
    return "?";
}

namespace {

// Walks every structurally-possible entry of one role in a fixed order
// (element, local row, local col). Pattern construction and per-snapshot
// value extraction use the same walk so slot ids line up.
template <class F>
void walk_role(const Mesh& mesh, const DofLayout& lay, Role role, F&& emit)
{
    const ModeTables& m = lay.modes;
    std::vector<int> gb(2 * m.nbl), gi(2 * m.ni2), gp(m.np2);
    for (int e = 0; e < mesh.element_count(); ++e) {
        for (int lb = 0; lb < m.nbl; ++lb) {
            int sid = lay.elem_bnd_scalar[e][lb];
            for (int comp = 0; comp < 2; ++comp)
                gb[2 * lb + comp] = lay.vel_global(sid, comp);
        }
        for (int li = 0; li < m.ni2; ++li)
            for (int comp = 0; comp < 2; ++comp)
                gi[2 * li + comp] = lay.interior_global(e, li, comp);
        for (int k = 0; k < m.np2; ++k) gp[k] = lay.pressure_global(e, k);

        switch (role) {
        case Role::A:
            for (int r = 0; r < 2 * m.nbl; ++r) {
                if (gb[r] < 0) continue;
                for (int c = r % 2; c < 2 * m.nbl; c += 2)
                    if (gb[c] >= 0) emit(e, r, c, gb[r], gb[c]);
            }
            break;
        case Role::B:
            for (int r = 0; r < 2 * m.nbl; ++r) {
                if (gb[r] < 0) continue;
                for (int c = r % 2; c < 2 * m.ni2; c += 2)
                    emit(e, r, c, gb[r], gi[c]);
            }
            break;
        case Role::Bt:
            for (int r = 0; r < 2 * m.ni2; ++r)
                for (int c = r % 2; c < 2 * m.nbl; c += 2)
                    if (gb[c] >= 0) emit(e, r, c, gi[r], gb[c]);
            break;
        case Role::C:
            for (int r = 0; r < 2 * m.ni2; ++r)
                for (int c = r % 2; c < 2 * m.ni2; c += 2)
                    emit(e, r, c, gi[r], gi[c]);
            break;
        case Role::Dbnd:
            for (int k = 0; k < m.np2; ++k)
                for (int c = 0; c < 2 * m.nbl; ++c)
                    if (gb[c] >= 0) emit(e, k, c, gp[k], gb[c]);
            break;
        case Role::Dint:
            for (int k = 0; k < m.np2; ++k)
                for (int c = 0; c < 2 * m.ni2; ++c) emit(e, k, c, gp[k], gi[c]);
            break;
        case Role::Rhs:
            break;
        }
    }
}

} // namespace

RolePatternSet build_role_patterns(const Mesh& mesh, const DofLayout& layout)
{
    RolePatternSet out;
    out.roles.resize(kRoleCount);
    out.slots.resize(kMatrixRoleCount);
    for (int ri = 0; ri < kMatrixRoleCount; ++ri) {
        Role role = static_cast<Role>(ri);
        RolePattern& pat = out.roles[ri];
        pat.role = role;
        pat.mirrored = role == Role::Dbnd || role == Role::Dint;

        std::vector<std::pair<int, int>> raw;
        walk_role(mesh, layout, role,
                  [&](int, int, int, int gr, int gc) { raw.emplace_back(gr, gc); });
        pat.entries = raw;
        std::sort(pat.entries.begin(), pat.entries.end());
        pat.entries.erase(std::unique(pat.entries.begin(), pat.entries.end()),
                          pat.entries.end());

        std::vector<int>& slots = out.slots[ri];
        slots.reserve(raw.size());
        for (const auto& rc : raw) {
            auto it = std::lower_bound(pat.entries.begin(), pat.entries.end(), rc);
            slots.push_back(static_cast<int>(it - pat.entries.begin()));
        }
    }
    RolePattern& rhs = out.roles[static_cast<int>(Role::Rhs)];
    rhs.role = Role::Rhs;
    for (int i = 0; i < layout.n_delta; ++i) rhs.entries.emplace_back(i, -1);
    return out;
}

void role_values(const BlockSystem& sys, const RolePatternSet& pat, Role role,
                 Eigen::VectorXd& out)
{
    int ri = static_cast<int>(role);
    if (ri >= kMatrixRoleCount) throw std::invalid_argument("role_values: matrix roles only");
    out.setZero(static_cast<int>(pat.roles[ri].entries.size()));
    const std::vector<int>& slots = pat.slots[ri];
    double sign = pat.roles[ri].mirrored ? -1.0 : 1.0;
    size_t n = 0;
    auto accum = [&](int e, int r, int c, int, int) {
        double v = 0.0;
        switch (role) {
        case Role::A: v = sys.A[e](r, c); break;
        case Role::B: v = sys.B[e](r, c); break;
        case Role::Bt: v = sys.Bt[e](r, c); break;
        case Role::C: v = sys.C[e](r, c); break;
        case Role::Dbnd: v = sys.Dbnd[e](r, c); break;
        case Role::Dint: v = sys.Dint[e](r, c); break;
        default: break;
        }
        out(slots[n++]) += sign * v;
    };
    walk_role(*sys.mesh, *sys.layout, role, accum);
}

void rhs_role_values(const DofLayout& layout, const Eigen::VectorXd& rhs,
                     const RolePatternSet& pat, Eigen::VectorXd& out)
{
    const RolePattern& p = pat.roles[static_cast<int>(Role::Rhs)];
    out.resize(static_cast<int>(p.entries.size()));
    for (size_t i = 0; i < p.entries.size(); ++i) out(i) = rhs(p.entries[i].first);
    (void)layout;
}

Eigen::SparseMatrix<double> role_matrix(const RolePattern& pattern,
                                        const Eigen::VectorXd& values, int n)
{
    if (values.size() != static_cast<Eigen::Index>(pattern.entries.size()))
        throw std::invalid_argument("role_matrix: value/pattern length mismatch");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(pattern.entries.size() * (pattern.mirrored ? 2 : 1));
    for (size_t k = 0; k < pattern.entries.size(); ++k) {
        auto [r, c] = pattern.entries[k];
        trips.emplace_back(r, c, values(k));
        if (pattern.mirrored) trips.emplace_back(c, r, values(k));
    }
    Eigen::SparseMatrix<double> out(n, n);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

AffineExpansion mdeim_build(const MatrixSnapshotSet& set, double energy_fraction)
{
    if (set.vectors.empty()) throw std::invalid_argument("mdeim_build: no snapshots");
    const Eigen::Index plen = set.vectors.front().size();
    Eigen::MatrixXd snaps(plen, static_cast<Eigen::Index>(set.vectors.size()));
    for (size_t j = 0; j < set.vectors.size(); ++j) {
        if (set.vectors[j].size() != plen)
            throw std::invalid_argument("mdeim_build: inconsistent snapshot length");
        snaps.col(j) = set.vectors[j];
    }

    ReducedBasis basis = pod(snaps, energy_fraction);

    AffineExpansion exp;
    exp.role = set.pattern.role;
    exp.mirrored = set.pattern.mirrored;
    exp.pattern_entries = set.pattern.entries;
    exp.q = basis.n;
    exp.basis = basis.u;
    double total = basis.singular_values.squaredNorm();
    exp.energy_captured =
        basis.singular_values.head(basis.n).squaredNorm() / total;

    // greedy interpolation points: argmax of the residual against the
    // span of the already-selected columns; ties take the lowest index
    auto argmax_abs = [](const Eigen::VectorXd& v) {
        int best = 0;
        double bv = std::abs(v(0));
        for (int i = 1; i < v.size(); ++i)
            if (std::abs(v(i)) > bv) {
                bv = std::abs(v(i));
                best = i;
            }
        return best;
    };

    exp.interp_pos.push_back(argmax_abs(exp.basis.col(0)));
    for (int k = 1; k < exp.q; ++k) {
        Eigen::MatrixXd sub(k, k);
        Eigen::VectorXd rhs(k);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) sub(i, j) = exp.basis(exp.interp_pos[i], j);
            rhs(i) = exp.basis(exp.interp_pos[i], k);
        }
        Eigen::VectorXd c = sub.partialPivLu().solve(rhs);
        Eigen::VectorXd r = exp.basis.col(k) - exp.basis.leftCols(k) * c;
        exp.interp_pos.push_back(argmax_abs(r));
    }

    exp.interp_matrix.resize(exp.q, exp.q);
    for (int i = 0; i < exp.q; ++i) {
        exp.interp_entries.push_back(exp.pattern_entries[exp.interp_pos[i]]);
        for (int j = 0; j < exp.q; ++j)
            exp.interp_matrix(i, j) = exp.basis(exp.interp_pos[i], j);
    }
    exp.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(exp.interp_matrix);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(exp.interp_matrix);
    double smin = svd.singularValues()(exp.q - 1);
    exp.condition = smin > 0.0 ? svd.singularValues()(0) / smin
                               : std::numeric_limits<double>::infinity();
    return exp;
}

Eigen::VectorXd mdeim_coefficients(const AffineExpansion& exp,
                                   const std::function<double(int, int)>& entry_eval)
{
    Eigen::VectorXd b(exp.q);
    for (int i = 0; i < exp.q; ++i)
        b(i) = entry_eval(exp.interp_entries[i].first, exp.interp_entries[i].second);
    return exp.lu.solve(b);
}

Eigen::VectorXd mdeim_reconstruct(const AffineExpansion& exp, const Eigen::VectorXd& tau)
{
    return exp.basis * tau;
}

Eigen::MatrixXd assemble_reduced(const Eigen::VectorXd& tau,
                                 const std::vector<Eigen::MatrixXd>& projected)
{
    if (tau.size() != static_cast<Eigen::Index>(projected.size()))
        throw std::invalid_argument("assemble_reduced: coefficient count mismatch");
    if (projected.empty()) throw std::invalid_argument("assemble_reduced: empty expansion");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(projected[0].rows(), projected[0].cols());
    for (size_t i = 0; i < projected.size(); ++i) out += tau(i) * projected[i];
    return out;
}

} // namespace semrom
