#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rombo/modal_basis.hpp"

namespace rombo {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One separable load contribution: shape * history(t).
struct LoadTerm {
    VectorXd shape;
    std::function<double(double)> history;
};

/// Time-dependent force vector f(t) = constant + sum_j shape_j * history_j(t).
struct Load {
    VectorXd constant;
    std::vector<LoadTerm> terms;

    Load() = default;
    explicit Load(Index n) : constant(VectorXd::Zero(n)) {}

    Index size() const { return constant.size(); }
    VectorXd operator()(double t) const;
    void add_term(VectorXd shape, std::function<double(double)> history);

    /// Load expressed in coordinates q = T z, i.e. T^T f(t).
    Load transformed(const MatrixXd& T) const;
};

/// Which physical DOF a matrix row belongs to.
struct DofLabel {
    int node = -1;
    int direction = 0;  // 0 = x, 1 = y, 2 = z
};

/// Full-order symmetric second-order model M q'' + D q' + K q = f(t).
struct SecondOrderModel {
    MatrixXd K;
    MatrixXd M;
    MatrixXd D;
    std::vector<Index> boundary_dofs;
    std::vector<Eigen::Vector3d> node_coords;
    std::vector<DofLabel> dof_labels;
    Load load;

    Index n_dofs() const { return K.rows(); }
    Index n_boundary() const { return static_cast<Index>(boundary_dofs.size()); }
    std::vector<Index> inner_dofs() const;

    /// Throws InvalidSpec on asymmetric matrices, bad boundary indices or,
    /// when `check_definiteness` is set, an indefinite K / D or a non-PD M.
    void validate(bool check_definiteness = false, double tol = 1e-10) const;
};

struct BoundaryPoint {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    int direction = 0;
};

struct MeshSpec {
    enum class Kind { bar1d, hex8 };

    Kind kind = Kind::bar1d;
    int nx = 1;
    int ny = 1;
    int nz = 1;
    double lx = 1.0;  // m; the bar length for bar1d
    double ly = 1.0;
    double lz = 1.0;
    double rho = 1.0;   // kg/m^3
    double E = 1.0;     // Pa
    double nu = 0.0;
    /// Face to clamp: "" (none), "x0", "x1", "y0", "y1", "z0", "z1".
    std::string clamp;
    /// Boundary DOFs picked as the node nearest to each point.
    std::vector<BoundaryPoint> boundary;
};

/// Linear two-node bar, unit cross section; node 0 (x = 0) is the boundary.
SecondOrderModel assemble_bar1d(const MeshSpec& spec);

/// Trilinear hexahedra on a structured grid, 2x2x2 Gauss, consistent mass.
SecondOrderModel assemble_hex8(const MeshSpec& spec);

SecondOrderModel assemble(const MeshSpec& spec);

/// Element matrices of one brick with edge lengths (hx, hy, hz).
std::pair<Eigen::Matrix<double, 24, 24>, Eigen::Matrix<double, 24, 24>>
hex8_element_matrices(double hx, double hy, double hz, double rho, double E, double nu);

/// Removes the given DOFs (homogeneous Dirichlet). Boundary DOFs may not be removed.
SecondOrderModel constrain_dofs(const SecondOrderModel& model, std::vector<Index> dofs);

/// DOFs of all nodes on a face of the bounding box ("x0", "y1", ...).
std::vector<Index> face_dofs(const SecondOrderModel& model, const std::string& face,
                             double tol = 1e-9);

/// DOF of the node nearest to `point` in the given direction.
Index nearest_dof(const SecondOrderModel& model, const Eigen::Vector3d& point, int direction);

/// Symmetric permutation placing boundary DOFs first, in their listed order.
SecondOrderModel reorder_boundary_first(const SecondOrderModel& model);

/// D = sum_k 2 zeta_k omega_k (M phi_k)(M phi_k)^T over the listed modes.
/// Rigid modes (omega ~ 0) contribute nothing.
MatrixXd modal_damping(const MatrixXd& M, const ModalBasis& basis,
                       const std::vector<std::pair<Index, double>>& ratios);

/// Same ratio for the first `count` modes.
std::vector<std::pair<Index, double>> uniform_ratios(Index count, double zeta);

/// Consistent gravity load -a_g * M * 1_axis.
VectorXd gravity_load(const SecondOrderModel& model, double a_g, int axis = 0);

/// K^{-1} f; throws SingularMatrix when K is not invertible.
VectorXd static_solve(const MatrixXd& K, const VectorXd& f);

}  // namespace rombo
