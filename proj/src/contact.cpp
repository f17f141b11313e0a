#include "rombo/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rombo/error.hpp"

namespace rombo {

VectorXd ContactConfig::g0(double t) const {
    if (!gap_offset) return VectorXd::Zero(size());
    VectorXd g = gap_offset(t);
    if (g.size() != size()) throw InvalidSpec("gap offset has size " + std::to_string(g.size()) +
                                              ", expected " + std::to_string(size()));
    return g;
}

VectorXd ContactConfig::g0_dot(double t) const {
    if (!gap_rate) return VectorXd::Zero(size());
    VectorXd g = gap_rate(t);
    if (g.size() != size()) throw InvalidSpec("gap rate has size " + std::to_string(g.size()) +
                                              ", expected " + std::to_string(size()));
    return g;
}

bool ContactConfig::frictional() const {
    if (dim != 3) return false;
    return std::any_of(contacts.begin(), contacts.end(), [](const ContactPoint& c) { return c.mu > 0.0; });
}

void ContactConfig::validate() const {
    if (dim != 1 && dim != 3) throw InvalidSpec("contact dimension must be 1 or 3");
    for (std::size_t j = 0; j < contacts.size(); ++j) {
        const ContactPoint& c = contacts[j];
        const std::string tag = "contact " + std::to_string(j) + ": ";
        if (!(c.mu >= 0.0)) throw InvalidSpec(tag + "negative friction coefficient");
        if (!(c.preload >= 0.0)) throw InvalidSpec(tag + "negative preload");
        if (c.mode == ContactMode::open && c.preload != 0.0)
            throw InvalidSpec(tag + "open contact with nonzero preload");
        if (!(c.restitution_n >= 0.0 && c.restitution_n <= 1.0) ||
            !(c.restitution_t >= 0.0 && c.restitution_t <= 1.0))
            throw InvalidSpec(tag + "restitution outside [0, 1]");
    }
}

ContactConfig ContactConfig::frictionless(Index n_contacts, double gap) {
    ContactConfig cfg;
    cfg.dim = 1;
    cfg.contacts.assign(static_cast<std::size_t>(n_contacts), ContactPoint{});
    if (gap != 0.0) cfg.gap_offset = [n_contacts, gap](double) { return VectorXd::Constant(n_contacts, gap); };
    return cfg;
}

ConeSet cones_for(const ContactConfig& cfg, const ActiveSet& active, double preload_scale) {
    ConeSet cones;
    cones.dim = cfg.dim;
    const Index n = static_cast<Index>(active.size());
    cones.mu.resize(n);
    cones.preload.resize(n);
    for (Index a = 0; a < n; ++a) {
        const ContactPoint& c = cfg.contacts.at(static_cast<std::size_t>(active[a]));
        cones.mu[a] = cfg.dim == 3 ? c.mu : 0.0;
        cones.preload[a] = c.preload * preload_scale;
    }
    return cones;
}

double proj_halfline(double xi) { return xi > 0.0 ? xi : 0.0; }

Eigen::Vector2d proj_disk(const Eigen::Vector2d& xi, double radius) {
    if (!(radius >= 0.0)) throw InvalidSpec("disk radius must be >= 0");
    if (radius == 0.0) return Eigen::Vector2d::Zero();
    const double r = xi.norm();
    // A few ulps of slack keep the projection exactly idempotent.
    if (r <= radius * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) return xi;
    return xi * (radius / r);
}

VectorXd proj_admissible(const VectorXd& x, const ConeSet& cones) {
    if (x.size() != cones.size()) throw InvalidSpec("projection: vector size does not match the contacts");
    VectorXd p(x.size());
    for (Index j = 0; j < cones.n_contacts(); ++j) {
        const Index r = cones.dim * j;
        const double pre = cones.preload[j];
        const double total = proj_halfline(x[r] + pre);
        p[r] = total - pre;
        if (cones.dim == 3) p.segment<2>(r + 1) = proj_disk(x.segment<2>(r + 1), cones.mu[j] * total);
    }
    return p;
}

VectorXd proj_admissible(const VectorXd& x, const ContactConfig& cfg, const ActiveSet& active) {
    return proj_admissible(x, cones_for(cfg, active));
}

VectorXd inclusion_steps(const MatrixXd& G, const ConeSet& cones, const InclusionOptions& options) {
    const Index n = G.rows();
    if (options.eps) {
        if (!(*options.eps > 0.0)) throw InvalidSpec("inclusion step must be positive");
        return VectorXd::Constant(n, *options.eps);
    }
    // Same step within a tangential pair keeps the disk condition exact at the fixed point.
    VectorXd d = G.diagonal();
    if (cones.dim == 3) {
        for (Index j = 0; j < cones.n_contacts(); ++j) {
            const Index r = 3 * j;
            d[r + 1] = d[r + 2] = std::max(d[r + 1], d[r + 2]);
        }
    }
    if ((d.array() <= 0.0).any()) throw SingularMatrix("Delassus matrix has a non-positive diagonal");
    const VectorXd s = d.cwiseSqrt().cwiseInverse();
    const MatrixXd scaled = s.asDiagonal() * (0.5 * (G + G.transpose())) * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    const double alpha = lmin > 1e-12 * lmax ? 2.0 / (lmin + lmax) : 1.0 / lmax;
    return (options.eps_factor * alpha) * d.cwiseInverse();
}

InclusionResult solve_inclusion(const MatrixXd& G, const VectorXd& c, const ConeSet& cones,
                                const InclusionOptions& options, const VectorXd* warm_start,
                                const VectorXd* steps) {
    const Index n = c.size();
    if (G.rows() != n || G.cols() != n || cones.size() != n)
        throw InvalidSpec("inclusion: inconsistent sizes");
    InclusionResult res;
    if (n == 0) {
        res.x = VectorXd();
        return res;
    }
    const VectorXd eps = steps ? *steps : inclusion_steps(G, cones, options);
    VectorXd x = (warm_start && warm_start->size() == n) ? proj_admissible(*warm_start, cones)
                                                         : VectorXd(VectorXd::Zero(n));
    double diff = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        const VectorXd y = G * x + c;
        VectorXd next = proj_admissible(x - eps.cwiseProduct(y), cones);
        diff = (next - x).lpNorm<Eigen::Infinity>();
        const double scale = next.lpNorm<Eigen::Infinity>();
        x.swap(next);
        if (!std::isfinite(diff)) throw NonConvergence("inclusion iteration produced non-finite values", diff, it);
        if (diff == 0.0 || diff <= options.tol * scale) {
            res.x = x;
            res.iterations = it;
            res.residual = diff == 0.0 ? 0.0 : diff / scale;
            return res;
        }
    }
    const double scale = std::max(x.lpNorm<Eigen::Infinity>(), 1e-300);
    throw NonConvergence("inclusion iteration did not converge", diff / scale, options.max_iter);
}

namespace {

MatrixXd select(const MatrixXd& A, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    MatrixXd S(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) S(i, j) = A(rows[i], cols[j]);
    return S;
}

VectorXd select(const VectorXd& v, const std::vector<Index>& rows) {
    VectorXd s(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) s[i] = v[rows[i]];
    return s;
}

int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
}

}  // namespace

MasslessBoundary::MasslessBoundary(const ReducedModel& model, const ContactConfig& cfg)
    : model_(model), cfg_(cfg) {
    cfg_.validate();
    if (!model.massless) throw ModelError("massless boundary solve needs a massless reduced model");
    if (cfg_.size() != model.n_boundary)
        throw InvalidSpec("contact configuration covers " + std::to_string(cfg_.size()) + " coordinates, model has " +
                          std::to_string(model.n_boundary) + " boundary coordinates");
    const MatrixXd Kbb = model.Kbb();
    Eigen::LDLT<MatrixXd> ldlt(Kbb);
    const double dmax = Kbb.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * dmax)
        throw ModelError("boundary stiffness block is singular; apply a rigid-mode shift");
    flexibility_ = ldlt.solve(MatrixXd::Identity(Kbb.rows(), Kbb.cols()));
    flexibility_ = 0.5 * (flexibility_ + flexibility_.transpose()).eval();

    const int C = static_cast<int>(cfg_.n_contacts());
    const int d = cfg_.dim;
    std::vector<int> parent(C);
    std::iota(parent.begin(), parent.end(), 0);
    for (int j = 0; j < C; ++j)
        for (int k = j + 1; k < C; ++k)
            if (Kbb.block(d * j, d * k, d, d).cwiseAbs().maxCoeff() != 0.0)
                parent[find_root(parent, k)] = find_root(parent, j);
    group_.resize(C);
    for (int j = 0; j < C; ++j) group_[j] = find_root(parent, j);
}

std::vector<Index> MasslessBoundary::rows_of(const std::vector<Index>& contacts) const {
    std::vector<Index> rows;
    rows.reserve(contacts.size() * cfg_.dim);
    for (Index j : contacts)
        for (int r = 0; r < cfg_.dim; ++r) rows.push_back(cfg_.dim * j + r);
    return rows;
}

const MasslessBoundary::FreeBlock& MasslessBoundary::free_block(const std::vector<Index>& stuck) const {
    auto it = cache_.find(stuck);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 64) cache_.clear();
    FreeBlock blk;
    std::vector<Index> free_contacts;
    for (Index j = 0; j < cfg_.n_contacts(); ++j)
        if (!std::binary_search(stuck.begin(), stuck.end(), j)) free_contacts.push_back(j);
    blk.rows = rows_of(free_contacts);
    if (stuck.empty()) {
        blk.inverse = flexibility_;
    } else if (!blk.rows.empty()) {
        const MatrixXd KFF = select(MatrixXd(model_.Kbb()), blk.rows, blk.rows);
        blk.inverse = KFF.ldlt().solve(MatrixXd::Identity(KFF.rows(), KFF.cols()));
    }
    return cache_.emplace(stuck, std::move(blk)).first->second;
}

VectorXd MasslessBoundary::predicted_gaps(const VectorXd& q_i, const VectorXd& f_b, double t) const {
    return flexibility_ * (f_b - model_.Kbi() * q_i) + cfg_.g0(t);
}

VectorXd MasslessBoundary::predicted_forces(const VectorXd& q_b_prev, const VectorXd& q_i,
                                            const VectorXd& f_b) const {
    return model_.Kbb() * q_b_prev + model_.Kbi() * q_i - f_b;
}

ActiveSet MasslessBoundary::predict_open(const VectorXd& q_i, const VectorXd& f_b, double t) const {
    const VectorXd g = predicted_gaps(q_i, f_b, t);
    ActiveSet active;
    for (Index j = 0; j < cfg_.n_contacts(); ++j)
        if (g[cfg_.dim * j] <= 0.0) active.push_back(j);
    return active;
}

ActiveSet MasslessBoundary::predict_preloaded(const VectorXd& q_b_prev, const VectorXd& q_i,
                                              const VectorXd& f_b) const {
    const VectorXd lam = predicted_forces(q_b_prev, q_i, f_b);
    ActiveSet active;
    for (Index j = 0; j < cfg_.n_contacts(); ++j) {
        const ContactPoint& c = cfg_.contacts[static_cast<std::size_t>(j)];
        const Index r = cfg_.dim * j;
        const double total = lam[r] + c.preload;
        bool act = total <= 0.0;
        if (!act && cfg_.dim == 3) act = lam.segment<2>(r + 1).norm() >= c.mu * total;
        if (act) active.push_back(j);
    }
    return active;
}

BoundaryPartition MasslessBoundary::partition(const VectorXd& q_b_prev, const VectorXd& q_i, const VectorXd& f_b,
                                              double t) const {
    const Index C = cfg_.n_contacts();
    std::vector<char> active(C, 0);
    const VectorXd g = predicted_gaps(q_i, f_b, t);
    const ActiveSet pre = predict_preloaded(q_b_prev, q_i, f_b);
    for (Index j = 0; j < C; ++j) {
        if (cfg_.contacts[static_cast<std::size_t>(j)].mode == ContactMode::open)
            active[j] = g[cfg_.dim * j] <= 0.0;
        else
            active[j] = std::binary_search(pre.begin(), pre.end(), j);
    }
    std::vector<char> group_active(C, 0);
    for (Index j = 0; j < C; ++j)
        if (active[j]) group_active[group_[j]] = 1;
    BoundaryPartition part;
    for (Index j = 0; j < C; ++j) {
        const bool preloaded = cfg_.contacts[static_cast<std::size_t>(j)].mode == ContactMode::preloaded;
        if (active[j] || (preloaded && group_active[group_[j]]))
            part.active.push_back(j);
        else if (preloaded)
            part.stuck.push_back(j);
    }
    return part;
}

DelassusSystem MasslessBoundary::delassus(const BoundaryPartition& part, ContactLevel level,
                                          const VectorXd& q_b_prev, const VectorXd& q_i, const VectorXd& f_b,
                                          double t, double dt) const {
    const FreeBlock& blk = free_block(part.stuck);
    const VectorXd r = f_b - model_.Kbi() * q_i;
    const std::vector<Index> srows = rows_of(part.stuck);
    VectorXd rhs = select(r, blk.rows);
    if (!srows.empty()) rhs -= select(MatrixXd(model_.Kbb()), blk.rows, srows) * select(q_b_prev, srows);

    // Positions of the active rows inside the free block.
    const std::vector<Index> arows = rows_of(part.active);
    std::vector<Index> apos;
    apos.reserve(arows.size());
    for (Index row : arows) {
        auto it = std::lower_bound(blk.rows.begin(), blk.rows.end(), row);
        if (it == blk.rows.end() || *it != row) throw InvalidSpec("active contact listed as stuck");
        apos.push_back(static_cast<Index>(it - blk.rows.begin()));
    }
    const VectorXd z = blk.inverse * rhs;

    DelassusSystem sys;
    sys.active = part.active;
    sys.G = select(blk.inverse, apos, apos);
    sys.c = select(z, apos);
    if (level == ContactLevel::displacement) {
        sys.c += select(cfg_.g0(t), arows);
    } else {
        // Normal rows stay on the gap itself; tangential rows measure the slip increment.
        const VectorXd g0 = cfg_.g0(t), g0_dot = cfg_.g0_dot(t);
        for (std::size_t a = 0; a < arows.size(); ++a) {
            const Index row = arows[a];
            sys.c[static_cast<Index>(a)] += row % cfg_.dim == 0 ? g0[row] : dt * g0_dot[row] - q_b_prev[row];
        }
    }
    return sys;
}

std::pair<VectorXd, VectorXd> MasslessBoundary::recover(const BoundaryPartition& part, const VectorXd& lambda_active,
                                                        const VectorXd& q_b_prev, const VectorXd& q_i,
                                                        const VectorXd& f_b) const {
    const FreeBlock& blk = free_block(part.stuck);
    const MatrixXd Kbb = model_.Kbb();
    const VectorXd r = f_b - model_.Kbi() * q_i;
    const std::vector<Index> srows = rows_of(part.stuck);
    const std::vector<Index> arows = rows_of(part.active);

    VectorXd lambda = VectorXd::Zero(model_.n_boundary);
    for (std::size_t a = 0; a < arows.size(); ++a) lambda[arows[a]] = lambda_active[static_cast<Index>(a)];

    VectorXd q_b = VectorXd::Zero(model_.n_boundary);
    for (Index row : srows) q_b[row] = q_b_prev[row];
    if (!blk.rows.empty()) {
        VectorXd rhs = select(r, blk.rows) + select(lambda, blk.rows);
        if (!srows.empty()) rhs -= select(Kbb, blk.rows, srows) * select(q_b_prev, srows);
        const VectorXd qF = blk.inverse * rhs;
        for (std::size_t i = 0; i < blk.rows.size(); ++i) q_b[blk.rows[i]] = qF[static_cast<Index>(i)];
    }
    if (!srows.empty()) {
        const VectorXd Kq = Kbb * q_b;
        for (Index row : srows) lambda[row] = Kq[row] - r[row];
    }
    return {q_b, lambda};
}

namespace {

VectorXd boundary_load(const ReducedModel& model, double t) { return model.load(t).head(model.n_boundary); }

}  // namespace

ActiveSet predict_active_set_open(const ReducedModel& model, const ContactConfig& cfg, const VectorXd& q_i,
                                  double t) {
    return MasslessBoundary(model, cfg).predict_open(q_i, boundary_load(model, t), t);
}

ActiveSet predict_active_set_preloaded(const ReducedModel& model, const ContactConfig& cfg,
                                       const VectorXd& q_b_prev, const VectorXd& q_i, double t) {
    return MasslessBoundary(model, cfg).predict_preloaded(q_b_prev, q_i, boundary_load(model, t));
}

DelassusSystem build_massless_frictionless_system(const ReducedModel& model, const ContactConfig& cfg,
                                                  const VectorXd& q_i, double t, const ActiveSet& active) {
    MasslessBoundary mb(model, cfg);
    return mb.delassus({active, {}}, ContactLevel::displacement, VectorXd::Zero(model.n_boundary), q_i,
                       boundary_load(model, t), t, 0.0);
}

DelassusSystem build_massless_frictional_system(const ReducedModel& model, const ContactConfig& cfg,
                                                const VectorXd& q_b_prev, const VectorXd& q_i, double t,
                                                double dt, const ActiveSet& active) {
    MasslessBoundary mb(model, cfg);
    return mb.delassus({active, {}}, ContactLevel::velocity, q_b_prev, q_i, boundary_load(model, t), t, dt);
}

}  // namespace rombo
