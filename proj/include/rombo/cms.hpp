#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rombo/modal_basis.hpp"
#include "rombo/model.hpp"

namespace rombo {

enum class InterfaceCondition { free, fixed };

enum class ReductionMethod { macneal, rubin, craig_bampton, massless_cb };

std::string_view to_string(ReductionMethod method);
ReductionMethod reduction_method_from_string(std::string_view name);

/// Lowest `n_mod` modes of (K - w^2 M) phi = 0, mass-normalized, ascending.
ModalBasis solve_modes(const MatrixXd& K, const MatrixXd& M, Index n_mod);

/// Free-interface modes of the whole model or fixed-interface modes of the
/// inner partition (boundary rows/columns removed; shapes live on inner DOFs).
ModalBasis solve_modes(const SecondOrderModel& model, Index n_mod, InterfaceCondition condition);

/// Residual flexibility columns at the boundary, split into the boundary and
/// inner rows (ordering of model.boundary_dofs / model.inner_dofs()).
struct ResidualFlexibility {
    MatrixXd Fbb;
    MatrixXd Fib;
};

ResidualFlexibility residual_flexibility(const SecondOrderModel& model, const ModalBasis& free_modes);

/// Boundary columns of K^{-1}, rows in parent DOF order.
MatrixXd boundary_flexibility(const MatrixXd& K, const std::vector<Index>& boundary);

struct ReductionOptions {
    Index n_mod = 20;
    /// Artificial boundary stiffness for free-interface methods. Unset: applied
    /// automatically (1e-3 * max diag K) only when K is singular. Zero: never.
    std::optional<double> shift;
    /// Modal damping ratio assigned to every retained normal mode.
    double zeta = 0.0;
};

/// Reduced model in coordinates [q_b; eta]; q ~ R [q_b; eta].
struct ReducedModel {
    ReductionMethod method = ReductionMethod::massless_cb;
    MatrixXd R;
    MatrixXd M;
    MatrixXd K;
    MatrixXd D;
    Index n_boundary = 0;
    bool massless = false;
    VectorXd omegas_inner;
    Load load;
    double shift = 0.0;

    Index size() const { return K.rows(); }
    Index n_inner() const { return size() - n_boundary; }

    auto Kbb() const { return K.topLeftCorner(n_boundary, n_boundary); }
    auto Kbi() const { return K.topRightCorner(n_boundary, n_inner()); }
    auto Kib() const { return K.bottomLeftCorner(n_inner(), n_boundary); }
    auto Kii() const { return K.bottomRightCorner(n_inner(), n_inner()); }
    auto Mbb() const { return M.topLeftCorner(n_boundary, n_boundary); }
    auto Mbi() const { return M.topRightCorner(n_boundary, n_inner()); }
    auto Mii() const { return M.bottomRightCorner(n_inner(), n_inner()); }
    auto Dii() const { return D.bottomRightCorner(n_inner(), n_inner()); }

    /// Least-squares reduced coordinates of a full-order vector.
    VectorXd project(const VectorXd& q_full) const;
};

ReducedModel reduce_macneal(const SecondOrderModel& model, const ReductionOptions& options);
ReducedModel reduce_rubin(const SecondOrderModel& model, const ReductionOptions& options);
ReducedModel reduce_craig_bampton(const SecondOrderModel& model, const ReductionOptions& options);

/// First step of the massless Craig-Bampton construction: constraint modes
/// shifted by fixed-interface modes so that the inertial coupling vanishes.
/// Still mass-carrying and spectrally identical to standard Craig-Bampton.
ReducedModel reduce_cb_inertia_decoupled(const SecondOrderModel& model, const ReductionOptions& options);

/// Decoupled Craig-Bampton with the boundary mass block removed.
ReducedModel reduce_massless_cb(const SecondOrderModel& model, const ReductionOptions& options);

ReducedModel reduce(const SecondOrderModel& model, ReductionMethod method, const ReductionOptions& options);

/// Adds kappa to the boundary diagonal of K.
SecondOrderModel shift_for_rigid_modes(const SecondOrderModel& model, double kappa);

/// Default artificial stiffness: 1e-3 * max diag(K).
double default_shift(const MatrixXd& K);

/// Regular transform q = T z whose first C coordinates are the gaps W^T q.
struct GapTransform {
    SecondOrderModel model;
    MatrixXd T;
};

/// `W` is n_dofs x C, one column per gap coordinate (normal and tangential
/// rows stacked per contact). The transformed model has boundary_dofs 0..C-1.
GapTransform to_gap_coordinates(const SecondOrderModel& model, const MatrixXd& W);

}  // namespace rombo
