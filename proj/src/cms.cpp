#include "rombo/cms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rombo/error.hpp"

namespace rombo {

std::string_view to_string(ReductionMethod method) {
    switch (method) {
        case ReductionMethod::macneal: return "macneal";
        case ReductionMethod::rubin: return "rubin";
        case ReductionMethod::craig_bampton: return "craig-bampton";
        case ReductionMethod::massless_cb: return "massless-cb";
    }
    return "unknown";
}

ReductionMethod reduction_method_from_string(std::string_view name) {
    if (name == "macneal") return ReductionMethod::macneal;
    if (name == "rubin") return ReductionMethod::rubin;
    if (name == "craig-bampton" || name == "cb") return ReductionMethod::craig_bampton;
    if (name == "massless-cb") return ReductionMethod::massless_cb;
    throw InvalidSpec("unknown reduction method '" + std::string(name) + "'");
}

namespace {

MatrixXd symmetrized(const MatrixXd& A) { return 0.5 * (A + A.transpose()); }

/// LDLT that refuses (numerically) singular matrices.
Eigen::LDLT<MatrixXd> checked_ldlt(const MatrixXd& A, const char* what, double rel_tol = 1e-11) {
    Eigen::LDLT<MatrixXd> ldlt(A);
    const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= rel_tol * scale) {
        throw SingularMatrix(std::string(what) + " is singular");
    }
    return ldlt;
}

bool is_singular(const MatrixXd& K) {
    Eigen::LDLT<MatrixXd> ldlt(K);
    const double scale = std::max(1e-300, K.cwiseAbs().maxCoeff());
    return ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-11 * scale;
}

/// Scatters a block-partitioned basis back to parent DOF order.
MatrixXd assemble_basis(const std::vector<Index>& boundary, const std::vector<Index>& inner,
                        const MatrixXd& inner_rows, Index n_red) {
    const Index B = static_cast<Index>(boundary.size());
    MatrixXd R = MatrixXd::Zero(static_cast<Index>(boundary.size() + inner.size()), n_red);
    for (Index j = 0; j < B; ++j) R(boundary[static_cast<size_t>(j)], j) = 1.0;
    for (Index r = 0; r < static_cast<Index>(inner.size()); ++r)
        R.row(inner[static_cast<size_t>(r)]) = inner_rows.row(r);
    return R;
}

MatrixXd physical_damping(const SecondOrderModel& model) {
    return model.D.size() ? model.D : MatrixXd::Zero(model.n_dofs(), model.n_dofs());
}

void check_boundary(const SecondOrderModel& model) {
    model.validate();
    if (model.n_boundary() == 0) throw InvalidSpec("reduction needs at least one boundary dof");
}

struct FreeInterfaceParts {
    MatrixXd R;
    MatrixXd Ktil;
    ModalBasis modes;
    double kappa = 0.0;
    MatrixXd K_shifted;
};

FreeInterfaceParts free_interface_parts(const SecondOrderModel& model, const ReductionOptions& options) {
    check_boundary(model);
    const auto& bnd = model.boundary_dofs;
    const auto inner = model.inner_dofs();
    const Index B = model.n_boundary();
    const Index m = options.n_mod;
    if (m < 0 || m > static_cast<Index>(inner.size()))
        throw InvalidSpec("n_mod exceeds the number of inner dofs");

    FreeInterfaceParts parts;
    if (options.shift.has_value()) {
        parts.kappa = *options.shift;
        if (parts.kappa < 0) throw InvalidSpec("shift must be >= 0");
    } else if (is_singular(model.K)) {
        parts.kappa = default_shift(model.K);
    }
    parts.K_shifted = model.K;
    for (Index b : bnd) parts.K_shifted(b, b) += parts.kappa;

    const auto ldlt = checked_ldlt(parts.K_shifted, "stiffness matrix (residual flexibility)");
    parts.modes = solve_modes(parts.K_shifted, model.M, m);
    for (Index k = 0; k < m; ++k)
        if (!(parts.modes.omegas(k) > 0))
            throw SingularMatrix("free-interface mode with zero frequency; configure a shift");

    MatrixXd E = MatrixXd::Zero(model.n_dofs(), B);
    for (Index j = 0; j < B; ++j) E(bnd[static_cast<size_t>(j)], j) = 1.0;
    const MatrixXd F = ldlt.solve(E);
    const VectorXd inv_w2 = parts.modes.omegas.array().square().inverse();
    const MatrixXd& Phi = parts.modes.Phi;
    const MatrixXd Phi_b = Phi(bnd, Eigen::all);
    const MatrixXd Phi_i = Phi(inner, Eigen::all);
    const MatrixXd Fres = F - Phi * inv_w2.asDiagonal() * Phi_b.transpose();
    const MatrixXd Fbb = symmetrized(Fres(bnd, Eigen::all));
    const MatrixXd Fib = Fres(inner, Eigen::all);

    Eigen::LDLT<MatrixXd> fbb(Fbb);
    const double fscale = std::max(1e-300, Fbb.cwiseAbs().maxCoeff());
    if (fbb.info() != Eigen::Success || fbb.vectorD().minCoeff() <= 1e-12 * fscale) {
        std::ostringstream os;
        os << "residual flexibility F'_bb is numerically singular (n_mod=" << m << ", B=" << B << ")";
        throw IllConditioned(os.str());
    }
    const MatrixXd Fbb_inv = symmetrized(fbb.solve(MatrixXd::Identity(B, B)));
    const MatrixXd A = Fib * Fbb_inv;  // F'_ib F'_bb^{-1}

    MatrixXd inner_rows(static_cast<Index>(inner.size()), B + m);
    inner_rows.leftCols(B) = A;
    inner_rows.rightCols(m) = Phi_i - A * Phi_b;
    parts.R = assemble_basis(bnd, inner, inner_rows, B + m);

    MatrixXd K = MatrixXd::Zero(B + m, B + m);
    K.topLeftCorner(B, B) = Fbb_inv;
    K.topRightCorner(B, m) = -Fbb_inv * Phi_b;
    K.bottomLeftCorner(m, B) = K.topRightCorner(B, m).transpose();
    K.bottomRightCorner(m, m) = Phi_b.transpose() * Fbb_inv * Phi_b;
    K.bottomRightCorner(m, m).diagonal() += parts.modes.omegas.array().square().matrix();
    parts.Ktil = symmetrized(K);
    return parts;
}

struct FixedInterfaceParts {
    MatrixXd Psi;
    ModalBasis modes;
};

FixedInterfaceParts fixed_interface_parts(const SecondOrderModel& model, const ReductionOptions& options) {
    check_boundary(model);
    const auto& bnd = model.boundary_dofs;
    const auto inner = model.inner_dofs();
    if (options.n_mod < 0 || options.n_mod > static_cast<Index>(inner.size()))
        throw InvalidSpec("n_mod exceeds the number of inner dofs");
    const MatrixXd Kii = model.K(inner, inner);
    const MatrixXd Kib = model.K(inner, bnd);
    const auto ldlt = checked_ldlt(Kii, "inner stiffness K_ii");
    FixedInterfaceParts parts;
    parts.Psi = -ldlt.solve(Kib);
    parts.modes = solve_modes(Kii, MatrixXd(model.M(inner, inner)), options.n_mod);
    return parts;
}

ReducedModel galerkin(const SecondOrderModel& model, MatrixXd R, Index B) {
    ReducedModel red;
    red.n_boundary = B;
    red.K = symmetrized(R.transpose() * model.K * R);
    red.M = symmetrized(R.transpose() * model.M * R);
    red.D = symmetrized(R.transpose() * physical_damping(model) * R);
    red.load = model.load.transformed(R);
    red.R = std::move(R);
    return red;
}

/// Boundary-massless mass and damping: blkdiag(0, I) and blkdiag(0, D_ii).
void make_massless(ReducedModel& red, const SecondOrderModel& model, double zeta) {
    const Index B = red.n_boundary, m = red.n_inner();
    red.M = MatrixXd::Zero(B + m, B + m);
    red.M.bottomRightCorner(m, m).setIdentity();
    const MatrixXd Dphys = red.R.transpose() * physical_damping(model) * red.R;
    red.D = MatrixXd::Zero(B + m, B + m);
    red.D.bottomRightCorner(m, m) = symmetrized(Dphys.bottomRightCorner(m, m));
    red.D.bottomRightCorner(m, m).diagonal() += (2.0 * zeta * red.omegas_inner.array()).matrix();
    red.massless = true;
}

}  // namespace

ModalBasis solve_modes(const MatrixXd& K, const MatrixXd& M, Index n_mod) {
    const Index n = K.rows();
    if (n_mod < 0 || n_mod > n) throw InvalidSpec("n_mod exceeds available dofs");
    ModalBasis basis;
    if (n_mod == 0) {
        basis.Phi = MatrixXd::Zero(n, 0);
        basis.omegas = VectorXd::Zero(0);
        return basis;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(K, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw NonConvergence("generalized eigensolver failed", NAN, 0);

    basis.Phi = es.eigenvectors().leftCols(n_mod);
    const VectorXd lambda = es.eigenvalues().head(n_mod);
    basis.omegas = lambda.cwiseMax(0.0).cwiseSqrt();

    const double knorm = K.cwiseAbs().rowwise().sum().maxCoeff();
    for (Index k = 0; k < n_mod; ++k) {
        auto phi = basis.Phi.col(k);
        // Sign convention: largest-magnitude entry positive.
        Index imax;
        phi.cwiseAbs().maxCoeff(&imax);
        if (phi(imax) < 0) phi = -phi;
        const VectorXd Kphi = K * phi;
        const double res = (Kphi - lambda(k) * (M * phi)).norm();
        if (res > 1e-10 * (Kphi.norm() + knorm * phi.norm())) {
            std::ostringstream os;
            os << "eigenpair " << k << " residual " << res << " exceeds tolerance";
            throw NonConvergence(os.str(), res, 0);
        }
    }
    return basis;
}

ModalBasis solve_modes(const SecondOrderModel& model, Index n_mod, InterfaceCondition condition) {
    if (condition == InterfaceCondition::free) return solve_modes(model.K, model.M, n_mod);
    const auto inner = model.inner_dofs();
    return solve_modes(MatrixXd(model.K(inner, inner)), MatrixXd(model.M(inner, inner)), n_mod);
}

MatrixXd boundary_flexibility(const MatrixXd& K, const std::vector<Index>& boundary) {
    const auto ldlt = checked_ldlt(K, "stiffness matrix");
    MatrixXd E = MatrixXd::Zero(K.rows(), static_cast<Index>(boundary.size()));
    for (Index j = 0; j < E.cols(); ++j) E(boundary[static_cast<size_t>(j)], j) = 1.0;
    return ldlt.solve(E);
}

ResidualFlexibility residual_flexibility(const SecondOrderModel& model, const ModalBasis& free_modes) {
    const auto& bnd = model.boundary_dofs;
    const auto inner = model.inner_dofs();
    const MatrixXd F = boundary_flexibility(model.K, bnd);
    for (Index k = 0; k < free_modes.size(); ++k)
        if (!(free_modes.omegas(k) > 0)) throw SingularMatrix("residual flexibility needs nonzero frequencies");
    const VectorXd inv_w2 = free_modes.omegas.array().square().inverse();
    const MatrixXd Phi_b = free_modes.Phi(bnd, Eigen::all);
    const MatrixXd Fres = F - free_modes.Phi * inv_w2.asDiagonal() * Phi_b.transpose();
    return {Fres(bnd, Eigen::all), Fres(inner, Eigen::all)};
}

ReducedModel reduce_macneal(const SecondOrderModel& model, const ReductionOptions& options) {
    auto parts = free_interface_parts(model, options);
    ReducedModel red;
    red.method = ReductionMethod::macneal;
    red.n_boundary = model.n_boundary();
    red.K = parts.Ktil;
    red.K.topLeftCorner(red.n_boundary, red.n_boundary).diagonal().array() -= parts.kappa;
    red.shift = parts.kappa;
    red.omegas_inner = parts.modes.omegas;
    red.load = model.load.transformed(parts.R);
    red.R = std::move(parts.R);
    make_massless(red, model, options.zeta);
    return red;
}

ReducedModel reduce_rubin(const SecondOrderModel& model, const ReductionOptions& options) {
    auto parts = free_interface_parts(model, options);
    ReducedModel red;
    red.method = ReductionMethod::rubin;
    red.n_boundary = model.n_boundary();
    red.K = parts.Ktil;
    red.K.topLeftCorner(red.n_boundary, red.n_boundary).diagonal().array() -= parts.kappa;
    red.shift = parts.kappa;
    red.omegas_inner = parts.modes.omegas;
    red.M = symmetrized(parts.R.transpose() * model.M * parts.R);
    MatrixXd Dfull = physical_damping(model);
    if (options.zeta > 0)
        Dfull += modal_damping(model.M, parts.modes, uniform_ratios(parts.modes.size(), options.zeta));
    red.D = symmetrized(parts.R.transpose() * Dfull * parts.R);
    red.load = model.load.transformed(parts.R);
    red.R = std::move(parts.R);
    red.massless = false;
    return red;
}

ReducedModel reduce_craig_bampton(const SecondOrderModel& model, const ReductionOptions& options) {
    const auto parts = fixed_interface_parts(model, options);
    const Index B = model.n_boundary(), m = parts.modes.size();
    MatrixXd inner_rows(parts.Psi.rows(), B + m);
    inner_rows << parts.Psi, parts.modes.Phi;
    ReducedModel red = galerkin(model, assemble_basis(model.boundary_dofs, model.inner_dofs(), inner_rows, B + m), B);
    red.method = ReductionMethod::craig_bampton;
    red.omegas_inner = parts.modes.omegas;
    red.D.bottomRightCorner(m, m).diagonal() += (2.0 * options.zeta * parts.modes.omegas.array()).matrix();
    return red;
}

ReducedModel reduce_cb_inertia_decoupled(const SecondOrderModel& model, const ReductionOptions& options) {
    const auto parts = fixed_interface_parts(model, options);
    const auto& bnd = model.boundary_dofs;
    const auto inner = model.inner_dofs();
    const Index B = model.n_boundary(), m = parts.modes.size();
    const MatrixXd& Theta = parts.modes.Phi;
    const MatrixXd alpha =
        Theta.transpose() * (MatrixXd(model.M(inner, bnd)) + MatrixXd(model.M(inner, inner)) * parts.Psi);
    MatrixXd inner_rows(parts.Psi.rows(), B + m);
    inner_rows << parts.Psi - Theta * alpha, Theta;
    ReducedModel red = galerkin(model, assemble_basis(bnd, inner, inner_rows, B + m), B);
    red.method = ReductionMethod::massless_cb;
    red.omegas_inner = parts.modes.omegas;
    red.D.bottomRightCorner(m, m).diagonal() += (2.0 * options.zeta * parts.modes.omegas.array()).matrix();
    return red;
}

ReducedModel reduce_massless_cb(const SecondOrderModel& model, const ReductionOptions& options) {
    ReducedModel red = reduce_cb_inertia_decoupled(model, options);
    make_massless(red, model, options.zeta);
    return red;
}

ReducedModel reduce(const SecondOrderModel& model, ReductionMethod method, const ReductionOptions& options) {
    switch (method) {
        case ReductionMethod::macneal: return reduce_macneal(model, options);
        case ReductionMethod::rubin: return reduce_rubin(model, options);
        case ReductionMethod::craig_bampton: return reduce_craig_bampton(model, options);
        case ReductionMethod::massless_cb: return reduce_massless_cb(model, options);
    }
    throw InvalidSpec("unknown reduction method");
}

VectorXd ReducedModel::project(const VectorXd& q_full) const {
    if (q_full.size() != R.rows()) throw InvalidSpec("project: vector size does not match the parent model");
    return R.colPivHouseholderQr().solve(q_full);
}

SecondOrderModel shift_for_rigid_modes(const SecondOrderModel& model, double kappa) {
    if (kappa < 0) throw InvalidSpec("shift must be >= 0");
    SecondOrderModel out = model;
    for (Index b : out.boundary_dofs) out.K(b, b) += kappa;
    return out;
}

double default_shift(const MatrixXd& K) { return 1e-3 * K.diagonal().cwiseAbs().maxCoeff(); }

GapTransform to_gap_coordinates(const SecondOrderModel& model, const MatrixXd& W) {
    const Index n = model.n_dofs(), C = W.cols();
    if (W.rows() != n) throw InvalidKinematics("W must have one row per model dof");
    if (C == 0) throw InvalidKinematics("W has no columns");

    Eigen::FullPivLU<MatrixXd> lu(W.transpose());
    if (lu.rank() < C) throw InvalidKinematics("contact direction matrix W is rank deficient");

    // Pivot DOFs get replaced by gap coordinates; the rest stay physical.
    std::vector<char> pivot(static_cast<size_t>(n), 0);
    std::vector<Index> pivots;
    for (Index j = 0; j < C; ++j) {
        const Index p = lu.permutationQ().indices()(j);
        pivot[static_cast<size_t>(p)] = 1;
        pivots.push_back(p);
    }
    std::sort(pivots.begin(), pivots.end());
    std::vector<Index> others;
    for (Index i = 0; i < n; ++i)
        if (!pivot[static_cast<size_t>(i)]) others.push_back(i);

    MatrixXd S = MatrixXd::Zero(n, n);
    S.topRows(C) = W.transpose();
    for (Index r = 0; r < static_cast<Index>(others.size()); ++r) S(C + r, others[static_cast<size_t>(r)]) = 1.0;
    Eigen::PartialPivLU<MatrixXd> slu(S);
    const double det = slu.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-14 * std::pow(std::max(1.0, W.cwiseAbs().maxCoeff()), C))
        throw InvalidKinematics("gap transform is not regular");
    const MatrixXd T = slu.inverse();

    GapTransform out;
    out.T = T;
    auto& tm = out.model;
    tm.K = symmetrized(T.transpose() * model.K * T);
    tm.M = symmetrized(T.transpose() * model.M * T);
    tm.D = symmetrized(T.transpose() * physical_damping(model) * T);
    tm.load = model.load.transformed(T);
    tm.node_coords = model.node_coords;
    if (!model.dof_labels.empty()) {
        for (Index j = 0; j < C; ++j) {
            Index dominant;
            W.col(j).cwiseAbs().maxCoeff(&dominant);
            tm.dof_labels.push_back(model.dof_labels[static_cast<size_t>(dominant)]);
        }
        for (Index i : others) tm.dof_labels.push_back(model.dof_labels[static_cast<size_t>(i)]);
    }
    for (Index j = 0; j < C; ++j) tm.boundary_dofs.push_back(j);
    return out;
}

}  // namespace rombo
