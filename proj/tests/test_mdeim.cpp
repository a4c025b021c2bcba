#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "semrom/mdeim.hpp"

using namespace semrom;

namespace {

struct Small {
    Mesh mesh;
    DofLayout layout;
    MeshOps ops;
    Small(double c, int p = 4)
        : mesh(generate_mesh(ChannelSpec{}, c, Refinement{1, 1, 2, 1, 1, 1.3}, p)),
          layout(build_dof_layout(mesh)),
          ops(mesh, layout)
    {
    }
};

// entry lookup into a pattern-valued vector
std::function<double(int, int)> pattern_eval(const AffineExpansion& exp,
                                             const Eigen::VectorXd& values)
{
    auto index = std::make_shared<std::map<std::pair<int, int>, int>>();
    for (size_t k = 0; k < exp.pattern_entries.size(); ++k)
        (*index)[exp.pattern_entries[k]] = static_cast<int>(k);
    return [index, values](int r, int c) { return values((*index).at({r, c})); };
}

MatrixSnapshotSet synthetic_set(int plen, int nsnap, unsigned seed)
{
    MatrixSnapshotSet set;
    set.pattern.role = Role::A;
    for (int i = 0; i < plen; ++i) set.pattern.entries.emplace_back(i, i % 17);
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    // snapshots from a rank-4 family plus decaying noise
    Eigen::MatrixXd modes(plen, 4);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < plen; ++i) modes(i, j) = dist(rng);
    for (int s = 0; s < nsnap; ++s) {
        Eigen::VectorXd coef(4);
        for (int j = 0; j < 4; ++j) coef(j) = dist(rng) * std::pow(0.3, j);
        set.vectors.push_back(modes * coef);
    }
    return set;
}

} // namespace

TEST_CASE("role names cover the seven roles")
{
    CHECK(std::string(role_name(Role::A)) == "A");
    CHECK(std::string(role_name(Role::Dint)) == "Dint");
    CHECK(std::string(role_name(Role::Rhs)) == "Rhs");
}

TEST_CASE("role patterns are sorted, unique, in-bounds, geometry-independent")
{
    Small s1(0.1), s2(0.3);
    RolePatternSet p1 = build_role_patterns(s1.mesh, s1.layout);
    RolePatternSet p2 = build_role_patterns(s2.mesh, s2.layout);
    REQUIRE(p1.roles.size() == kRoleCount);
    for (int ri = 0; ri < kMatrixRoleCount; ++ri) {
        const auto& e = p1.roles[ri].entries;
        REQUIRE(!e.empty());
        for (size_t k = 0; k + 1 < e.size(); ++k) CHECK(e[k] < e[k + 1]);
        for (const auto& [r, c] : e) {
            CHECK(r >= 0);
            CHECK(r < s1.layout.n_delta);
            CHECK(c >= 0);
            CHECK(c < s1.layout.n_delta);
        }
        // same topology at different curvature: identical pattern
        CHECK(p1.roles[ri].entries == p2.roles[ri].entries);
    }
    CHECK(p1.roles[static_cast<int>(Role::Rhs)].entries.size() ==
          static_cast<size_t>(s1.layout.n_delta));
}

TEST_CASE("summed role matrices reproduce the gathered system")
{
    Small s(0.25);
    RolePatternSet pat = build_role_patterns(s.mesh, s.layout);
    BlockSystem sys = assemble_blocks(s.mesh, s.ops, s.layout, 0.17, nullptr, {0.0, -0.05});
    GlobalSystem g = gather_globalize(sys);

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(s.layout.n_delta, s.layout.n_delta);
    Eigen::VectorXd vals;
    for (int ri = 0; ri < kMatrixRoleCount; ++ri) {
        role_values(sys, pat, static_cast<Role>(ri), vals);
        sum += Eigen::MatrixXd(role_matrix(pat.roles[ri], vals, s.layout.n_delta));
    }
    Eigen::MatrixXd dense(g.A);
    double scale = dense.cwiseAbs().maxCoeff();
    CHECK((sum - dense).cwiseAbs().maxCoeff() <= 1e-12 * scale);

    Eigen::VectorXd rv;
    rhs_role_values(s.layout, g.rhs, pat, rv);
    CHECK((rv - g.rhs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single snapshot: Q=1 and exact rank-one reconstruction")
{
    MatrixSnapshotSet set = synthetic_set(300, 1, 5);
    AffineExpansion exp = mdeim_build(set);
    CHECK(exp.q == 1);
    Eigen::VectorXd tau = mdeim_coefficients(exp, pattern_eval(exp, set.vectors[0]));
    Eigen::VectorXd rec = mdeim_reconstruct(exp, tau);
    CHECK((rec - set.vectors[0]).cwiseAbs().maxCoeff() <=
          1e-12 * set.vectors[0].cwiseAbs().maxCoeff());
    // scalar case: tau1 = entry(e1) / V1(e1)
    double e1 = set.vectors[0](exp.interp_pos[0]);
    CHECK(tau(0) == doctest::Approx(e1 / exp.basis(exp.interp_pos[0], 0)).epsilon(1e-12));
}

TEST_CASE("affine viscosity family: Q=2 and exactness at untrained nu")
{
    // K + nu*L built from two genuinely assembled Stokes matrices
    Small s(0.2);
    RolePatternSet pat = build_role_patterns(s.mesh, s.layout);
    // fixed advection makes the A block genuinely two-term: the convection
    // part is nu-independent, the viscous part scales with nu
    BlockSystem stokes = assemble_blocks(s.mesh, s.ops, s.layout, 0.2, nullptr, {});
    GlobalSystem gs = gather_globalize(stokes);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> slu(gs.A);
    REQUIRE(slu.info() == Eigen::Success);
    Eigen::VectorXd xs = slu.solve(gs.rhs);
    LocalVelocityFn adv = local_velocity_from_state(s.layout, xs);
    auto a_values = [&](double nu) {
        BlockSystem sys = assemble_blocks(s.mesh, s.ops, s.layout, nu, &adv, {});
        Eigen::VectorXd v;
        role_values(sys, pat, Role::A, v);
        return v;
    };
    Eigen::VectorXd a1 = a_values(0.1), a2 = a_values(0.2);
    Eigen::VectorXd l = (a2 - a1) / 0.1;
    Eigen::VectorXd k = a1 - 0.1 * l;

    MatrixSnapshotSet set;
    set.pattern = pat.roles[static_cast<int>(Role::A)];
    for (double nu : {0.1, 0.125, 0.15, 0.175, 0.2})
        set.vectors.push_back(k + nu * l);
    AffineExpansion exp = mdeim_build(set);
    CHECK(exp.q == 2);
    CHECK(exp.condition < 1e8);

    Eigen::VectorXd target = a_values(0.17);
    Eigen::VectorXd tau = mdeim_coefficients(exp, pattern_eval(exp, target));
    Eigen::VectorXd rec = mdeim_reconstruct(exp, tau);
    double scale = target.cwiseAbs().maxCoeff();
    CHECK((rec - target).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    // direct check that the assembled A(0.17) matches K + 0.17 L
    CHECK((target - (k + 0.17 * l)).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("greedy point selection matches a brute-force oracle")
{
    MatrixSnapshotSet set = synthetic_set(1500, 6, 9);
    AffineExpansion exp = mdeim_build(set, 1.0);
    REQUIRE(exp.q >= 3);

    // independent greedy implementation over the returned basis
    std::vector<int> oracle;
    auto argmax = [](const Eigen::VectorXd& v) {
        int best = 0;
        for (int i = 1; i < v.size(); ++i)
            if (std::abs(v(i)) > std::abs(v(best))) best = i;
        return best;
    };
    oracle.push_back(argmax(exp.basis.col(0)));
    for (int kk = 1; kk < exp.q; ++kk) {
        Eigen::MatrixXd sub(kk, kk);
        Eigen::VectorXd rhs(kk);
        for (int i = 0; i < kk; ++i) {
            for (int j = 0; j < kk; ++j) sub(i, j) = exp.basis(oracle[i], j);
            rhs(i) = exp.basis(oracle[i], kk);
        }
        Eigen::VectorXd c = sub.fullPivLu().solve(rhs);
        Eigen::VectorXd r = exp.basis.col(kk) - exp.basis.leftCols(kk) * c;
        // exhaustive argmax with lowest-index tie break
        int best = 0;
        for (int i = 1; i < r.size(); ++i)
            if (std::abs(r(i)) > std::abs(r(best))) best = i;
        oracle.push_back(best);
    }
    CHECK(exp.interp_pos == oracle);
    // chosen entries are pairwise distinct
    for (int i = 0; i < exp.q; ++i)
        for (int j = i + 1; j < exp.q; ++j)
            CHECK(exp.interp_pos[i] != exp.interp_pos[j]);
}

TEST_CASE("interpolation property at the selected entries")
{
    MatrixSnapshotSet set = synthetic_set(400, 5, 13);
    AffineExpansion exp = mdeim_build(set, 1.0);
    for (const Eigen::VectorXd& v : set.vectors) {
        Eigen::VectorXd tau = mdeim_coefficients(exp, pattern_eval(exp, v));
        Eigen::VectorXd rec = mdeim_reconstruct(exp, tau);
        double scale = v.cwiseAbs().maxCoeff();
        for (int i = 0; i < exp.q; ++i)
            CHECK(std::abs(rec(exp.interp_pos[i]) - v(exp.interp_pos[i])) <=
                  1e-12 * scale);
        // snapshots lie in span(V) at full retention: whole vector matches
        CHECK((rec - v).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
}

TEST_CASE("scaling the snapshots scales the reconstructions")
{
    MatrixSnapshotSet set = synthetic_set(350, 5, 21);
    MatrixSnapshotSet scaled = set;
    for (auto& v : scaled.vectors) v *= 7.25;
    AffineExpansion e1 = mdeim_build(set);
    AffineExpansion e2 = mdeim_build(scaled);
    CHECK(e1.q == e2.q);
    Eigen::VectorXd probe = set.vectors[2];
    Eigen::VectorXd r1 = mdeim_reconstruct(e1, mdeim_coefficients(e1, pattern_eval(e1, probe)));
    Eigen::VectorXd probe2 = 7.25 * probe;
    Eigen::VectorXd r2 = mdeim_reconstruct(e2, mdeim_coefficients(e2, pattern_eval(e2, probe2)));
    CHECK((7.25 * r1 - r2).cwiseAbs().maxCoeff() <= 1e-9 * r2.cwiseAbs().maxCoeff());
}

TEST_CASE("identical inputs select identical entries")
{
    MatrixSnapshotSet set = synthetic_set(800, 6, 31);
    AffineExpansion e1 = mdeim_build(set);
    AffineExpansion e2 = mdeim_build(set);
    CHECK(e1.q == e2.q);
    CHECK(e1.interp_pos == e2.interp_pos);
    CHECK(e1.interp_entries == e2.interp_entries);
    CHECK((e1.basis - e2.basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reduced assembly is linear in the coefficients")
{
    std::mt19937 rng(41);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Eigen::MatrixXd> projected;
    for (int qi = 0; qi < 3; ++qi) {
        Eigen::MatrixXd m(4, 4);
        for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = dist(rng);
        projected.push_back(m);
    }
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1(1) = 1.0;
    CHECK((assemble_reduced(e1, projected) - projected[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(assemble_reduced(Eigen::VectorXd::Zero(3), projected).cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd tau(3);
    tau << 0.5, -1.25, 2.0;
    Eigen::MatrixXd expect =
        0.5 * projected[0] - 1.25 * projected[1] + 2.0 * projected[2];
    CHECK((assemble_reduced(tau, projected) - expect).cwiseAbs().maxCoeff() <= 1e-14);
    Eigen::VectorXd bad(2);
    bad << 1.0, 2.0;
    CHECK_THROWS(assemble_reduced(bad, projected));
}

TEST_CASE("degenerate inputs are rejected")
{
    MatrixSnapshotSet empty;
    empty.pattern.role = Role::A;
    CHECK_THROWS(mdeim_build(empty));
}
