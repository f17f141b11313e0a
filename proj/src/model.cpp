#include "rombo/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rombo/error.hpp"

namespace rombo {

VectorXd Load::operator()(double t) const {
    Index n = constant.size();
    if (n == 0 && !terms.empty()) n = terms.front().shape.size();
    VectorXd f = constant.size() == n ? constant : VectorXd::Zero(n);
    for (const auto& term : terms) f += term.shape * term.history(t);
    return f;
}

void Load::add_term(VectorXd shape, std::function<double(double)> history) {
    if (constant.size() == 0) constant = VectorXd::Zero(shape.size());
    if (shape.size() != constant.size()) throw InvalidSpec("load term size mismatch");
    terms.push_back({std::move(shape), std::move(history)});
}

Load Load::transformed(const MatrixXd& T) const {
    Load out;
    out.constant = constant.size() ? VectorXd(T.transpose() * constant) : VectorXd::Zero(T.cols());
    for (const auto& term : terms) out.terms.push_back({T.transpose() * term.shape, term.history});
    return out;
}

std::vector<Index> SecondOrderModel::inner_dofs() const {
    std::vector<char> is_boundary(static_cast<size_t>(n_dofs()), 0);
    for (Index b : boundary_dofs) is_boundary[static_cast<size_t>(b)] = 1;
    std::vector<Index> inner;
    inner.reserve(static_cast<size_t>(n_dofs()) - boundary_dofs.size());
    for (Index i = 0; i < n_dofs(); ++i)
        if (!is_boundary[static_cast<size_t>(i)]) inner.push_back(i);
    return inner;
}

namespace {

double asymmetry(const MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
}

double min_eigenvalue(const MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace

void SecondOrderModel::validate(bool check_definiteness, double tol) const {
    const Index n = n_dofs();
    if (K.cols() != n || M.rows() != n || M.cols() != n)
        throw InvalidSpec("K and M must be square and of equal size");
    if (D.size() != 0 && (D.rows() != n || D.cols() != n))
        throw InvalidSpec("D must be empty or match K");
    if (asymmetry(K) > tol) throw InvalidSpec("K is not symmetric");
    if (asymmetry(M) > tol) throw InvalidSpec("M is not symmetric");
    if (D.size() && asymmetry(D) > tol) throw InvalidSpec("D is not symmetric");

    std::vector<Index> sorted = boundary_dofs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidSpec("boundary_dofs contains duplicates");
    for (Index b : sorted)
        if (b < 0 || b >= n) throw InvalidSpec("boundary dof index out of range");

    if (!check_definiteness) return;
    const double kscale = std::max(1.0, K.cwiseAbs().maxCoeff());
    if (min_eigenvalue(K) < -tol * kscale) throw InvalidSpec("K is not positive semi-definite");
    const double lm = min_eigenvalue(M);
    if (lm <= 0.0) {
        std::ostringstream os;
        os << "M is not positive definite (smallest eigenvalue " << lm << ")";
        throw InvalidSpec(os.str());
    }
    if (D.size()) {
        const double dscale = std::max(1.0, D.cwiseAbs().maxCoeff());
        if (min_eigenvalue(D) < -tol * dscale) throw InvalidSpec("D is not positive semi-definite");
    }
}

SecondOrderModel assemble_bar1d(const MeshSpec& spec) {
    if (spec.kind != MeshSpec::Kind::bar1d) throw InvalidSpec("assemble_bar1d needs kind bar1d");
    if (spec.nx < 1 || !(spec.lx > 0) || !(spec.rho > 0) || !(spec.E > 0))
        throw InvalidSpec("bar1d needs positive element count, length, rho and E");

    const Index n = spec.nx + 1;
    const double h = spec.lx / spec.nx;
    const double k = spec.E / h;  // A = 1
    const double m = spec.rho * h / 6.0;

    SecondOrderModel model;
    model.K = MatrixXd::Zero(n, n);
    model.M = MatrixXd::Zero(n, n);
    model.D = MatrixXd::Zero(n, n);
    for (Index e = 0; e < spec.nx; ++e) {
        const Index a = e, b = e + 1;
        model.K(a, a) += k;
        model.K(b, b) += k;
        model.K(a, b) -= k;
        model.K(b, a) -= k;
        model.M(a, a) += 2 * m;
        model.M(b, b) += 2 * m;
        model.M(a, b) += m;
        model.M(b, a) += m;
    }
    model.node_coords.resize(static_cast<size_t>(n));
    model.dof_labels.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
        model.node_coords[static_cast<size_t>(i)] = Eigen::Vector3d(i * h, 0, 0);
        model.dof_labels[static_cast<size_t>(i)] = {static_cast<int>(i), 0};
    }
    model.boundary_dofs = {0};
    model.load = Load(n);

    if (!spec.clamp.empty()) {
        if (spec.clamp == "x1")
            model = constrain_dofs(model, {n - 1});
        else
            throw InvalidSpec("bar1d can only clamp face x1 (x0 carries the contact)");
    }
    return model;
}

std::pair<Eigen::Matrix<double, 24, 24>, Eigen::Matrix<double, 24, 24>>
hex8_element_matrices(double hx, double hy, double hz, double rho, double E, double nu) {
    using Mat24 = Eigen::Matrix<double, 24, 24>;
    static constexpr std::array<std::array<int, 3>, 8> corner = {{
        {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
        {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
    }};

    const double lam = E * nu / ((1 + nu) * (1 - 2 * nu));
    const double mu = E / (2 * (1 + nu));
    Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) C(i, j) = lam;
        C(i, i) += 2 * mu;
        C(i + 3, i + 3) = mu;
    }

    const double g = 1.0 / std::sqrt(3.0);
    const double detJ = hx * hy * hz / 8.0;
    const std::array<double, 3> inv_jac = {2.0 / hx, 2.0 / hy, 2.0 / hz};

    Mat24 Ke = Mat24::Zero();
    Mat24 Me = Mat24::Zero();
    for (int gp = 0; gp < 8; ++gp) {
        const std::array<double, 3> xi = {corner[gp][0] * g, corner[gp][1] * g, corner[gp][2] * g};
        Eigen::Matrix<double, 8, 1> N;
        Eigen::Matrix<double, 3, 8> dN;
        for (int a = 0; a < 8; ++a) {
            std::array<double, 3> f;
            for (int d = 0; d < 3; ++d) f[d] = 1.0 + corner[a][d] * xi[d];
            N(a) = f[0] * f[1] * f[2] / 8.0;
            dN(0, a) = corner[a][0] * f[1] * f[2] / 8.0 * inv_jac[0];
            dN(1, a) = f[0] * corner[a][1] * f[2] / 8.0 * inv_jac[1];
            dN(2, a) = f[0] * f[1] * corner[a][2] / 8.0 * inv_jac[2];
        }
        Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
        for (int a = 0; a < 8; ++a) {
            const int c = 3 * a;
            B(0, c) = dN(0, a);
            B(1, c + 1) = dN(1, a);
            B(2, c + 2) = dN(2, a);
            B(3, c) = dN(1, a);
            B(3, c + 1) = dN(0, a);
            B(4, c + 1) = dN(2, a);
            B(4, c + 2) = dN(1, a);
            B(5, c) = dN(2, a);
            B(5, c + 2) = dN(0, a);
        }
        Ke.noalias() += B.transpose() * C * B * detJ;
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                for (int d = 0; d < 3; ++d) Me(3 * a + d, 3 * b + d) += rho * N(a) * N(b) * detJ;
    }
    Mat24 Ks = 0.5 * (Ke + Ke.transpose());
    Mat24 Ms = 0.5 * (Me + Me.transpose());
    return {Ks, Ms};
}

SecondOrderModel assemble_hex8(const MeshSpec& spec) {
    if (spec.kind != MeshSpec::Kind::hex8) throw InvalidSpec("assemble_hex8 needs kind hex8");
    if (spec.nx < 1 || spec.ny < 1 || spec.nz < 1)
        throw InvalidSpec("hex8 element counts must be >= 1");
    if (!(spec.lx > 0) || !(spec.ly > 0) || !(spec.lz > 0))
        throw InvalidSpec("hex8 dimensions must be positive (degenerate box)");
    if (!(spec.rho > 0) || !(spec.E > 0) || spec.nu < 0 || spec.nu >= 0.5)
        throw InvalidSpec("hex8 needs rho > 0, E > 0, 0 <= nu < 0.5");

    const int px = spec.nx + 1, py = spec.ny + 1, pz = spec.nz + 1;
    const Index n_nodes = static_cast<Index>(px) * py * pz;
    const Index n = 3 * n_nodes;
    const double hx = spec.lx / spec.nx, hy = spec.ly / spec.ny, hz = spec.lz / spec.nz;
    auto node_id = [&](int i, int j, int k) { return static_cast<Index>(i + px * (j + py * k)); };

    const auto [Ke, Me] = hex8_element_matrices(hx, hy, hz, spec.rho, spec.E, spec.nu);

    SecondOrderModel model;
    model.K = MatrixXd::Zero(n, n);
    model.M = MatrixXd::Zero(n, n);
    model.D = MatrixXd::Zero(n, n);
    static constexpr std::array<std::array<int, 3>, 8> offset = {{
        {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
        {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
    }};
    for (int k = 0; k < spec.nz; ++k)
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                std::array<Index, 24> dofs;
                for (int a = 0; a < 8; ++a) {
                    const Index node = node_id(i + offset[a][0], j + offset[a][1], k + offset[a][2]);
                    for (int d = 0; d < 3; ++d) dofs[3 * a + d] = 3 * node + d;
                }
                for (int r = 0; r < 24; ++r)
                    for (int c = 0; c < 24; ++c) {
                        model.K(dofs[r], dofs[c]) += Ke(r, c);
                        model.M(dofs[r], dofs[c]) += Me(r, c);
                    }
            }

    model.node_coords.resize(static_cast<size_t>(n_nodes));
    model.dof_labels.resize(static_cast<size_t>(n));
    for (int k = 0; k < pz; ++k)
        for (int j = 0; j < py; ++j)
            for (int i = 0; i < px; ++i) {
                const Index node = node_id(i, j, k);
                model.node_coords[static_cast<size_t>(node)] = Eigen::Vector3d(i * hx, j * hy, k * hz);
                for (int d = 0; d < 3; ++d)
                    model.dof_labels[static_cast<size_t>(3 * node + d)] = {static_cast<int>(node), d};
            }
    model.load = Load(n);

    if (!spec.clamp.empty()) model = constrain_dofs(model, face_dofs(model, spec.clamp));
    for (const auto& bp : spec.boundary) {
        const Index dof = nearest_dof(model, bp.point, bp.direction);
        if (std::find(model.boundary_dofs.begin(), model.boundary_dofs.end(), dof) !=
            model.boundary_dofs.end())
            throw InvalidSpec("two boundary points map to the same DOF");
        model.boundary_dofs.push_back(dof);
    }
    return reorder_boundary_first(model);
}

SecondOrderModel assemble(const MeshSpec& spec) {
    return spec.kind == MeshSpec::Kind::bar1d ? assemble_bar1d(spec) : assemble_hex8(spec);
}

SecondOrderModel constrain_dofs(const SecondOrderModel& model, std::vector<Index> dofs) {
    const Index n = model.n_dofs();
    std::vector<char> removed(static_cast<size_t>(n), 0);
    for (Index d : dofs) {
        if (d < 0 || d >= n) throw InvalidSpec("constrained dof out of range");
        removed[static_cast<size_t>(d)] = 1;
    }
    std::vector<Index> keep, new_index(static_cast<size_t>(n), -1);
    for (Index i = 0; i < n; ++i)
        if (!removed[static_cast<size_t>(i)]) {
            new_index[static_cast<size_t>(i)] = static_cast<Index>(keep.size());
            keep.push_back(i);
        }

    SecondOrderModel out;
    out.K = model.K(keep, keep);
    out.M = model.M(keep, keep);
    out.D = model.D.size() ? MatrixXd(model.D(keep, keep)) : MatrixXd::Zero(out.K.rows(), out.K.cols());
    out.node_coords = model.node_coords;
    for (Index i : keep)
        if (!model.dof_labels.empty()) out.dof_labels.push_back(model.dof_labels[static_cast<size_t>(i)]);
    for (Index b : model.boundary_dofs) {
        if (removed[static_cast<size_t>(b)]) throw InvalidSpec("cannot constrain a boundary dof");
        out.boundary_dofs.push_back(new_index[static_cast<size_t>(b)]);
    }
    out.load.constant = model.load.constant.size() ? VectorXd(model.load.constant(keep))
                                                   : VectorXd::Zero(out.K.rows());
    for (const auto& term : model.load.terms) out.load.terms.push_back({term.shape(keep), term.history});
    return out;
}

std::vector<Index> face_dofs(const SecondOrderModel& model, const std::string& face, double tol) {
    if (face.size() != 2 || (face[0] < 'x' || face[0] > 'z') || (face[1] != '0' && face[1] != '1'))
        throw InvalidSpec("face must be one of x0 x1 y0 y1 z0 z1, got '" + face + "'");
    if (model.node_coords.empty() || model.dof_labels.empty())
        throw InvalidSpec("face selection needs node coordinates and dof labels");
    const int axis = face[0] - 'x';
    const bool upper = face[1] == '1';
    double lo = model.node_coords.front()(axis), hi = lo;
    for (const auto& p : model.node_coords) {
        lo = std::min(lo, p(axis));
        hi = std::max(hi, p(axis));
    }
    const double target = upper ? hi : lo;
    const double eps = tol * std::max(1.0, hi - lo);
    std::vector<Index> out;
    for (Index i = 0; i < model.n_dofs(); ++i) {
        const auto& label = model.dof_labels[static_cast<size_t>(i)];
        if (std::abs(model.node_coords[static_cast<size_t>(label.node)](axis) - target) <= eps)
            out.push_back(i);
    }
    return out;
}

Index nearest_dof(const SecondOrderModel& model, const Eigen::Vector3d& point, int direction) {
    Index best = -1;
    double best_dist = 0.0;
    for (Index i = 0; i < model.n_dofs(); ++i) {
        const auto& label = model.dof_labels[static_cast<size_t>(i)];
        if (label.direction != direction) continue;
        const double d = (model.node_coords[static_cast<size_t>(label.node)] - point).squaredNorm();
        if (best < 0 || d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    if (best < 0) throw InvalidSpec("no dof found for boundary point");
    return best;
}

SecondOrderModel reorder_boundary_first(const SecondOrderModel& model) {
    std::vector<Index> order = model.boundary_dofs;
    const auto inner = model.inner_dofs();
    order.insert(order.end(), inner.begin(), inner.end());

    SecondOrderModel out;
    out.K = model.K(order, order);
    out.M = model.M(order, order);
    out.D = model.D.size() ? MatrixXd(model.D(order, order)) : MatrixXd::Zero(out.K.rows(), out.K.cols());
    out.node_coords = model.node_coords;
    if (!model.dof_labels.empty())
        for (Index i : order) out.dof_labels.push_back(model.dof_labels[static_cast<size_t>(i)]);
    out.boundary_dofs.resize(model.boundary_dofs.size());
    std::iota(out.boundary_dofs.begin(), out.boundary_dofs.end(), Index{0});
    out.load.constant = model.load.constant.size() ? VectorXd(model.load.constant(order))
                                                   : VectorXd::Zero(out.K.rows());
    for (const auto& term : model.load.terms) out.load.terms.push_back({term.shape(order), term.history});
    return out;
}

MatrixXd modal_damping(const MatrixXd& M, const ModalBasis& basis,
                       const std::vector<std::pair<Index, double>>& ratios) {
    MatrixXd D = MatrixXd::Zero(M.rows(), M.cols());
    if (basis.size() == 0) return D;
    const double rigid_tol = 1e-6 * std::max(1.0, basis.omegas.cwiseAbs().maxCoeff());
    for (const auto& [k, zeta] : ratios) {
        if (zeta < 0) throw InvalidSpec("modal damping ratio must be >= 0");
        if (k < 0 || k >= basis.size()) throw InvalidSpec("modal damping: mode index out of range");
        const double w = basis.omegas(k);
        if (w <= rigid_tol || zeta == 0.0) continue;
        const VectorXd mphi = M * basis.Phi.col(k);
        D.noalias() += 2.0 * zeta * w * mphi * mphi.transpose();
    }
    return 0.5 * (D + D.transpose());
}

std::vector<std::pair<Index, double>> uniform_ratios(Index count, double zeta) {
    std::vector<std::pair<Index, double>> out;
    for (Index k = 0; k < count; ++k) out.emplace_back(k, zeta);
    return out;
}

VectorXd gravity_load(const SecondOrderModel& model, double a_g, int axis) {
    if (a_g < 0) throw InvalidSpec("gravity acceleration must be >= 0");
    VectorXd ones = VectorXd::Zero(model.n_dofs());
    for (Index i = 0; i < model.n_dofs(); ++i)
        if (model.dof_labels.empty() || model.dof_labels[static_cast<size_t>(i)].direction == axis)
            ones(i) = 1.0;
    if (a_g == 0.0) return VectorXd::Zero(model.n_dofs());
    return -a_g * (model.M * ones);
}

VectorXd static_solve(const MatrixXd& K, const VectorXd& f) {
    Eigen::LDLT<MatrixXd> ldlt(K);
    const double scale = std::max(1e-300, K.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-11 * scale)
        throw SingularMatrix("static solve: stiffness matrix is singular");
    return ldlt.solve(f);
}

}  // namespace rombo
