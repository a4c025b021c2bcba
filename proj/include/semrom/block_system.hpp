#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "semrom/basis.hpp"
#include "semrom/geometry.hpp"
#include "semrom/quadrature.hpp"

namespace semrom {

// Local scalar-mode bookkeeping for one polynomial order. Boundary modes
// come first: 4 vertex modes, then 4 edges x (p-1) edge modes; interior
// modes are the (p-1)^2 tensor bubbles.
struct ModeTables {
    int p = 0;
    int n2 = 0;   // (p+1)^2 scalar velocity modes per element
    int nbl = 0;  // 4 + 4(p-1) boundary scalar modes
    int ni2 = 0;  // (p-1)^2 interior scalar modes
    int np2 = 0;  // (p-1)^2 pressure modes (order p-2)
    std::vector<int> bnd_tensor; // lb -> i*(p+1)+j
    std::vector<int> int_tensor; // li -> i*(p+1)+j
};

ModeTables build_mode_tables(int p);

struct DirichletDof {
    int lb = 0;   // local boundary scalar mode
    int comp = 0; // velocity component
    double value = 0.0;
};

// Global indexing after Dirichlet removal. Layout of the gathered vector:
// [free boundary velocity | pressure | interior velocity], N_delta total.
struct DofLayout {
    int p = 0;
    ModeTables modes;
    int n_nodes = 0, n_edges = 0;
    int n_bnd_scalar = 0; // nodes + edges*(p-1)

    std::vector<int> vel_index;    // 2*n_bnd_scalar: free global index or -1
    std::vector<double> dirichlet; // value where vel_index == -1

    int n_bnd_free = 0, n_pressure = 0, n_interior = 0, n_delta = 0;
    int pressure_offset = 0, interior_offset = 0;

    std::vector<std::vector<int>> elem_bnd_scalar;           // [e][lb] -> scalar id
    std::vector<std::vector<std::pair<int, int>>> bnd_support; // [scalar] -> (e, lb)
    std::vector<std::vector<DirichletDof>> elem_dirichlet;   // [e]
    std::vector<int> free_scalar, free_comp;                 // free bnd dof -> (scalar, comp)

    int vel_global(int scalar_id, int comp) const { return vel_index[2 * scalar_id + comp]; }
    double vel_value(int scalar_id, int comp) const { return dirichlet[2 * scalar_id + comp]; }
    int pressure_global(int e, int k) const { return pressure_offset + e * modes.np2 + k; }
    int interior_global(int e, int li, int comp) const
    {
        return interior_offset + e * 2 * modes.ni2 + 2 * li + comp;
    }
};

DofLayout build_dof_layout(const Mesh& mesh);

// Shared 1D tabulations at the quadrature nodes for one order.
struct OpsTables {
    int p = 0, q = 0;
    QuadratureRule rule;
    Eigen::MatrixXd vel_v, vel_d; // (p+1) x q
    Eigen::MatrixXd pr_v;         // (p-1) x q
};

OpsTables build_ops_tables(int p);

// Geometry-dependent per-element integration data, independent of nu and
// of the advecting field.
struct ElementOps {
    Eigen::MatrixXd V, Gx, Gy; // n2 x nq: scalar basis values / physical gradients
    Eigen::MatrixXd Pv;        // np2 x nq: pressure basis values
    Eigen::VectorXd wdet;      // nq quadrature weights * |J|
    Eigen::MatrixXd Klap;      // n2 x n2: grad-grad (unit viscosity)
    Eigen::MatrixXd MassS;     // n2 x n2: scalar mass
    Eigen::MatrixXd Dx, Dy;    // np2 x n2: pressure-divergence couplings
};

ElementOps build_element_ops(const Mesh& mesh, int e, const OpsTables& tables,
                             const ModeTables& modes);

// Access to per-element operators; the online phase uses a lazy provider
// so only the elements supporting interpolation entries are ever built.
class OpsProvider {
public:
    virtual ~OpsProvider() = default;
    virtual const ElementOps& element(int e) const = 0;
    virtual const OpsTables& tables() const = 0;
};

class MeshOps : public OpsProvider {
public:
    MeshOps(const Mesh& mesh, const DofLayout& layout);
    const ElementOps& element(int e) const override { return elem_[e]; }
    const OpsTables& tables() const override { return tables_; }

private:
    OpsTables tables_;
    std::vector<ElementOps> elem_;
};

class LazyOps : public OpsProvider {
public:
    LazyOps(const Mesh& mesh, const ModeTables& modes);
    const ElementOps& element(int e) const override;
    const OpsTables& tables() const override { return tables_; }
    int built_count() const { return static_cast<int>(cache_.size()); }

private:
    const Mesh& mesh_;
    const ModeTables& modes_;
    OpsTables tables_;
    mutable std::map<int, ElementOps> cache_;
};

// Element-local modal velocity coefficients (tensor-index order, both
// components, Dirichlet data included).
using LocalVelocityFn =
    std::function<void(int elem, Eigen::VectorXd& ux, Eigen::VectorXd& uy)>;

// Builds a LocalVelocityFn from a gathered free-dof vector.
LocalVelocityFn local_velocity_from_state(const DofLayout& layout,
                                          const Eigen::VectorXd& x);

// Element block matrices of the linearized system, local degrees of
// freedom. Velocity vector dofs are interleaved: l = 2*scalar + comp.
struct BlockSystem {
    const Mesh* mesh = nullptr;
    const DofLayout* layout = nullptr;
    double nu = 0.0;
    std::vector<Eigen::MatrixXd> A;    // 2nbl x 2nbl
    std::vector<Eigen::MatrixXd> B;    // 2nbl x 2ni2
    std::vector<Eigen::MatrixXd> Bt;   // 2ni2 x 2nbl (the B-tilde-transpose block)
    std::vector<Eigen::MatrixXd> C;    // 2ni2 x 2ni2
    std::vector<Eigen::MatrixXd> Dbnd; // np2 x 2nbl
    std::vector<Eigen::MatrixXd> Dint; // np2 x 2ni2
    std::vector<Eigen::VectorXd> f_bnd, f_int;

    // 0/1 gather map of the local boundary velocity dofs (free columns
    // map to their global dof; Dirichlet columns are dropped).
    Eigen::SparseMatrix<double> gather_matrix() const;
};

BlockSystem assemble_blocks(const Mesh& mesh, const OpsProvider& ops,
                            const DofLayout& layout, double nu,
                            const LocalVelocityFn* advection, Vec2 body_force);

struct GlobalSystem {
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd rhs;
};

GlobalSystem gather_globalize(const BlockSystem& sys);

// Single-entry evaluation of the gathered system; touches only the
// elements supporting the two dofs. Advection values at quadrature points
// are cached per element across calls.
class EntryEvaluator {
public:
    EntryEvaluator(const Mesh& mesh, const OpsProvider& ops, const DofLayout& layout,
                   double nu, const LocalVelocityFn* advection, Vec2 body_force = {});

    double matrix_entry(int i, int j);
    // Gathered right-hand side entry: body forcing plus the Dirichlet lift.
    double rhs_entry(int i);
    int touched_elements() const { return static_cast<int>(adv_cache_.size()); }

private:
    struct LocalDof {
        enum Kind { VelBnd, VelInt, Pressure } kind;
        int tensor = 0, comp = 0, pk = 0;
    };
    void supports(int g, std::vector<std::pair<int, LocalDof>>& out) const;
    const std::pair<Eigen::VectorXd, Eigen::VectorXd>* advection_at(int e);
    double pair_value(int e, const LocalDof& row, const LocalDof& col);

    const Mesh& mesh_;
    const OpsProvider& ops_;
    const DofLayout& layout_;
    double nu_;
    const LocalVelocityFn* advection_;
    Vec2 force_;
    std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> adv_cache_; // qp values
};

struct PointValues {
    double ux = 0.0, uy = 0.0, p = 0.0;
};

PointValues evaluate_solution(const Mesh& mesh, const DofLayout& layout,
                              const Eigen::VectorXd& x, Vec2 pt);

// Gathered velocity mass matrix on the free dofs (pressure rows zero);
// used for the iteration convergence norm.
Eigen::SparseMatrix<double> velocity_mass(const Mesh& mesh, const OpsProvider& ops,
                                          const DofLayout& layout);

// Interpolates analytic fields into the free-dof vector (element-wise
// tensor-GLL interpolation; exact for fields inside the ansatz spaces).
Eigen::VectorXd interpolate_state(const Mesh& mesh, const DofLayout& layout,
                                  const std::function<double(Vec2)>& fx,
                                  const std::function<double(Vec2)>& fy,
                                  const std::function<double(Vec2)>& fp);

void dump_matrix_market(const Eigen::SparseMatrix<double>& a, const std::string& path);

} // namespace semrom
