#include "rombo/stepping.hpp"

#include <cmath>
#include <string>

#include "rombo/error.hpp"

namespace rombo {

std::string_view to_string(Integrator integrator) {
    switch (integrator) {
        case Integrator::leapfrog_frictionless: return "leapfrog-frictionless";
        case Integrator::leapfrog_frictional: return "leapfrog-frictional";
        case Integrator::moreau: return "moreau";
    }
    return "unknown";
}

Integrator integrator_from_string(std::string_view name) {
    if (name == "leapfrog-frictionless") return Integrator::leapfrog_frictionless;
    if (name == "leapfrog-frictional") return Integrator::leapfrog_frictional;
    if (name == "moreau") return Integrator::moreau;
    throw InvalidSpec("unknown integrator '" + std::string(name) + "'");
}

namespace {

std::vector<Index> contact_rows(const ActiveSet& contacts, int dim) {
    std::vector<Index> rows;
    for (Index j : contacts)
        for (int r = 0; r < dim; ++r) rows.push_back(dim * j + r);
    return rows;
}

VectorXd gather(const VectorXd& v, const std::vector<Index>& rows) {
    VectorXd s(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) s[static_cast<Index>(i)] = v[rows[i]];
    return s;
}

VectorXd solve_with_retries(const MatrixXd& G, const VectorXd& c, const ConeSet& cones,
                            const StepOptions& options, const VectorXd& warm, int& iterations) {
    InclusionOptions opts = options.inclusion;
    for (int attempt = 0;; ++attempt) {
        try {
            InclusionResult res = solve_inclusion(G, c, cones, opts, &warm);
            iterations = res.iterations;
            return res.x;
        } catch (const NonConvergence&) {
            if (attempt >= options.retries) throw;
            if (opts.eps)
                opts.eps = *opts.eps * 0.5;
            else
                opts.eps_factor *= 0.5;
            opts.max_iter *= 2;
        }
    }
}

void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidSpec("dt must be positive");
}

}  // namespace

LeapfrogIntegrator::LeapfrogIntegrator(const ReducedModel& model, const ContactConfig& cfg, double dt,
                                       bool frictional, StepOptions options)
    : model_(model), boundary_(model, cfg), dt_(dt), frictional_(frictional), options_(options) {
    check_dt(dt);
    const MatrixXd Mii = model.Mii();
    const MatrixXd Dii = model.Dii();
    lhs_.compute(Mii + 0.5 * dt * Dii);
    if (lhs_.info() != Eigen::Success || lhs_.vectorD().minCoeff() <= 0.0)
        throw ModelError("inner mass block is not positive definite");
    rhs_ = Mii - 0.5 * dt * Dii;
}

StaggeredState LeapfrogIntegrator::initial_state(const VectorXd& q0, const VectorXd& u0, double t0,
                                                 int n_warm) const {
    const Index B = model_.n_boundary;
    const Index n = model_.size();
    if (q0.size() != n || u0.size() != n) throw InvalidSpec("initial conditions do not match the reduced model");
    StaggeredState s;
    s.t = t0;
    s.q_i = q0.tail(n - B);
    s.u_i = u0.tail(n - B);
    s.q_b = q0.head(B);
    s.lambda = VectorXd::Zero(B);
    if (n_warm <= 0) return s;

    // First coarse interval on a fine grid; its mean velocity is u^{1/2}.
    LeapfrogIntegrator fine(model_, boundary_.config(), dt_ / n_warm, frictional_, options_);
    StaggeredState f = s;
    VectorXd q_b0;
    for (int j = 0; j < n_warm; ++j) {
        StepRecord rec = fine.step(f);
        if (j == 0) q_b0 = rec.q.head(B);
    }
    s.k = 1;
    s.t = t0 + dt_;
    s.u_i = (f.q_i - s.q_i) / dt_;
    s.q_i = f.q_i;
    s.q_b = q_b0;
    s.lambda = f.lambda;
    return s;
}

std::pair<VectorXd, VectorXd> LeapfrogIntegrator::solve_boundary(const StaggeredState& s, const VectorXd& f_b,
                                                                 int& iterations, Index& n_active) const {
    const ContactConfig& cfg = boundary_.config();
    const ContactLevel level = frictional_ ? ContactLevel::velocity : ContactLevel::displacement;
    BoundaryPartition part = boundary_.partition(s.q_b, s.q_i, f_b, s.t);
    const VectorXd g0 = cfg.g0(s.t);
    iterations = 0;
    for (Index pass = 0;; ++pass) {
        const DelassusSystem sys = boundary_.delassus(part, level, s.q_b, s.q_i, f_b, s.t, dt_);
        const ConeSet cones = cones_for(cfg, part.active);
        const VectorXd warm = gather(s.lambda, contact_rows(part.active, cfg.dim));
        int its = 0;
        const VectorXd lam = solve_with_retries(sys.G, sys.c, cones, options_, warm, its);
        iterations += its;
        auto [q_b, lambda] = boundary_.recover(part, lam, s.q_b, s.q_i, f_b);

        // Open contacts left out by the predictor must not penetrate.
        const double tol = 1e-10 * std::max({q_b.lpNorm<Eigen::Infinity>(), g0.lpNorm<Eigen::Infinity>(), 1e-12});
        bool changed = false;
        for (Index j = 0; j < cfg.n_contacts(); ++j) {
            if (cfg.contacts[static_cast<std::size_t>(j)].mode != ContactMode::open) continue;
            if (std::binary_search(part.active.begin(), part.active.end(), j)) continue;
            if (q_b[cfg.dim * j] + g0[cfg.dim * j] < -tol) {
                part.active.insert(std::upper_bound(part.active.begin(), part.active.end(), j), j);
                changed = true;
            }
        }
        if (!changed || pass > cfg.n_contacts()) {
            n_active = static_cast<Index>(part.active.size());
            return {q_b, lambda};
        }
    }
}

StepRecord LeapfrogIntegrator::step(StaggeredState& s) const {
    const Index B = model_.n_boundary;
    const Index m = model_.n_inner();
    const VectorXd f = model_.load(s.t);
    const VectorXd f_b = f.head(B);
    const VectorXd f_i = f.tail(m);

    StepRecord rec;
    rec.k = s.k;
    rec.t = s.t;
    auto [q_b, lambda] = solve_boundary(s, f_b, rec.iterations, rec.n_active);

    const VectorXd force = f_i - model_.Kib() * q_b - model_.Kii() * s.q_i;
    const VectorXd u_plus = lhs_.solve(rhs_ * s.u_i + dt_ * force);

    const VectorXd u_b = s.k > 0 ? VectorXd((q_b - s.q_b) / dt_) : VectorXd(VectorXd::Zero(B));
    rec.q.resize(B + m);
    rec.q << q_b, s.q_i;
    rec.u_minus.resize(B + m);
    rec.u_minus << u_b, s.u_i;
    rec.u_plus.resize(B + m);
    rec.u_plus << u_b, u_plus;
    rec.lambda = lambda;

    s.q_i += dt_ * u_plus;
    s.u_i = u_plus;
    s.q_b = q_b;
    s.lambda = lambda;
    s.k += 1;
    s.t += dt_;
    return rec;
}

MoreauIntegrator::MoreauIntegrator(const ReducedModel& model, const ContactConfig& cfg, double dt,
                                   StepOptions options)
    : model_(model), cfg_(cfg), dt_(dt), options_(options) {
    check_dt(dt);
    cfg_.validate();
    if (model.massless) throw ModelError("Moreau time stepping needs a mass-carrying reduced model");
    if (cfg_.size() != model.n_boundary)
        throw InvalidSpec("contact configuration covers " + std::to_string(cfg_.size()) +
                          " coordinates, model has " + std::to_string(model.n_boundary) + " boundary coordinates");
    lhs_.compute(model.M + 0.5 * dt * model.D);
    if (lhs_.info() != Eigen::Success || lhs_.vectorD().minCoeff() <= 0.0)
        throw ModelError("reduced mass matrix is not positive definite");
    rhs_ = model.M - 0.5 * dt * model.D;
    const MatrixXd W = MatrixXd::Identity(model.size(), model.n_boundary);
    AinvW_ = lhs_.solve(W);
    delassus_ = AinvW_.topRows(model.n_boundary);
    delassus_ = 0.5 * (delassus_ + delassus_.transpose()).eval();
}

MoreauState MoreauIntegrator::initial_state(const VectorXd& q0, const VectorXd& u0, double t0) const {
    if (q0.size() != model_.size() || u0.size() != model_.size())
        throw InvalidSpec("initial conditions do not match the reduced model");
    MoreauState s;
    s.t = t0;
    s.q = q0;
    s.u = u0;
    s.percussion = VectorXd::Zero(model_.n_boundary);
    return s;
}

StepRecord MoreauIntegrator::step(MoreauState& s) const {
    const Index B = model_.n_boundary;
    const int d = cfg_.dim;
    const VectorXd g = s.q.head(B) + cfg_.g0(s.t);
    const VectorXd g0_dot = cfg_.g0_dot(s.t);

    ActiveSet active;
    for (Index j = 0; j < cfg_.n_contacts(); ++j)
        if (g[d * j] <= 0.0) active.push_back(j);
    const std::vector<Index> rows = contact_rows(active, d);

    const VectorXd f = model_.load(s.t);
    const VectorXd v = lhs_.solve(dt_ * (f - model_.K * s.q) + rhs_ * s.u);

    StepRecord rec;
    rec.k = s.k;
    rec.t = s.t;
    rec.n_active = static_cast<Index>(active.size());
    VectorXd u_plus = v;
    VectorXd percussion = VectorXd::Zero(B);
    if (!active.empty()) {
        const Index na = static_cast<Index>(rows.size());
        MatrixXd G(na, na);
        VectorXd c(na);
        for (Index a = 0; a < na; ++a) {
            const Index r = rows[a];
            const ContactPoint& cp = cfg_.contacts[static_cast<std::size_t>(r / d)];
            const double eps = (r % d == 0) ? cp.restitution_n : cp.restitution_t;
            c[a] = g0_dot[r] + eps * (s.u[r] + g0_dot[r]) + v[r];
            for (Index b = 0; b < na; ++b) G(a, b) = delassus_(r, rows[b]);
        }
        const ConeSet cones = cones_for(cfg_, active, dt_);
        const VectorXd P = solve_with_retries(G, c, cones, options_, gather(s.percussion, rows), rec.iterations);
        for (Index a = 0; a < na; ++a) {
            percussion[rows[a]] = P[a];
            u_plus += AinvW_.col(rows[a]) * P[a];
        }
    }
    rec.q = s.q;
    rec.u_minus = s.u;
    rec.u_plus = u_plus;
    rec.lambda = percussion / dt_;

    s.q += dt_ * u_plus;
    s.u = u_plus;
    s.percussion = percussion;
    s.k += 1;
    s.t += dt_;
    return rec;
}

namespace {

double rigid_kinetic(const ReducedModel& model, const EnergyModel& energy, const VectorXd& u_a, const VectorXd& u_b) {
    if (energy.rigid_basis.cols() == 0) return 0.0;
    const MatrixXd& Rb = energy.rigid_basis;
    const MatrixXd MR = model.M * Rb;
    const MatrixXd Mr = Rb.transpose() * MR;
    Eigen::LDLT<MatrixXd> ldlt(Mr);
    const VectorXd a = ldlt.solve(MR.transpose() * u_a);
    const VectorXd b = ldlt.solve(MR.transpose() * u_b);
    return 0.5 * a.dot(Mr * b);
}

double potential(const EnergyModel& energy, const VectorXd& q) {
    double p = energy.potential_offset;
    if (energy.conservative_force.size() == q.size()) p -= energy.conservative_force.dot(q);
    return p;
}

}  // namespace

EnergyBreakdown energy_breakdown(const ReducedModel& model, const EnergyModel& energy, const VectorXd& q,
                                 const VectorXd& u_minus, const VectorXd& u_plus) {
    EnergyBreakdown e;
    e.kinetic = 0.5 * u_minus.dot(model.M * u_plus);
    e.strain = 0.5 * q.dot(model.K * q);
    const double pot = potential(energy, q);
    e.total = e.kinetic + e.strain + pot;
    e.rigid = rigid_kinetic(model, energy, u_minus, u_plus) + pot;
    e.elastic = e.total - e.rigid;
    return e;
}

EnergyBreakdown energy_breakdown_half_step(const ReducedModel& model, const EnergyModel& energy, const VectorXd& q,
                                           const VectorXd& q_next, const VectorXd& u_plus) {
    EnergyBreakdown e;
    e.kinetic = 0.5 * u_plus.dot(model.M * u_plus);
    e.strain = 0.5 * q.dot(model.K * q_next);
    const double pot = 0.5 * (potential(energy, q) + potential(energy, q_next));
    e.total = e.kinetic + e.strain + pot;
    e.rigid = rigid_kinetic(model, energy, u_plus, u_plus) + pot;
    e.elastic = e.total - e.rigid;
    return e;
}

namespace {

Sample make_sample(const ReducedModel& model, const SimulationOptions& options, const StepRecord& rec) {
    Sample smp;
    smp.t = rec.t;
    const Index np = static_cast<Index>(options.probes.size());
    smp.probe_q.resize(np);
    smp.probe_u.resize(np);
    const VectorXd u_mid = 0.5 * (rec.u_minus + rec.u_plus);
    for (Index p = 0; p < np; ++p) {
        const VectorXd& w = options.probes[static_cast<std::size_t>(p)].weights;
        smp.probe_q[p] = w.dot(rec.q);
        smp.probe_u[p] = w.dot(u_mid);
    }
    smp.q_b = rec.q.head(model.n_boundary);
    smp.lambda = rec.lambda;
    if (options.keep_coordinates) smp.q = rec.q;
    if (options.energy) {
        if (options.integrator == Integrator::moreau)
            smp.energy = energy_breakdown_half_step(model, *options.energy, rec.q, rec.q + options.dt * rec.u_plus,
                                                    rec.u_plus);
        else
            smp.energy = energy_breakdown(model, *options.energy, rec.q, rec.u_minus, rec.u_plus);
    }
    smp.n_active = rec.n_active;
    smp.iterations = rec.iterations;
    return smp;
}

StepRecord initial_record(const ReducedModel& model, double t0, const VectorXd& q0, const VectorXd& u0) {
    StepRecord rec;
    rec.t = t0;
    rec.q = q0;
    rec.u_minus = u0;
    rec.u_plus = u0;
    rec.lambda = VectorXd::Zero(model.n_boundary);
    return rec;
}

}  // namespace

TimeSeries simulate(const ReducedModel& model, const ContactConfig& cfg, const VectorXd& q0, const VectorXd& u0,
                    const SimulationOptions& options) {
    check_dt(options.dt);
    if (!(options.t_end >= options.t_start)) throw InvalidSpec("t_end must not precede t_start");
    if (options.stride < 1) throw InvalidSpec("stride must be at least 1");
    for (const Probe& p : options.probes)
        if (p.weights.size() != model.size()) throw InvalidSpec("probe '" + p.name + "' has the wrong size");

    TimeSeries ts;
    for (const Probe& p : options.probes) ts.probe_names.push_back(p.name);
    const long n_steps = std::lround((options.t_end - options.t_start) / options.dt);
    ts.steps = n_steps;

    const double horizon = std::max(options.t_end - options.t_start, options.dt);
    const double scale = std::max({u0.lpNorm<Eigen::Infinity>(), q0.lpNorm<Eigen::Infinity>() / horizon, 1.0});
    const double limit = options.divergence_factor * scale;

    auto record = [&](const StepRecord& rec) {
        if (!rec.u_plus.allFinite() || !rec.q.allFinite() || rec.u_plus.lpNorm<Eigen::Infinity>() > limit)
            throw Divergence("solution diverged", rec.k, rec.t);
        ts.max_iterations = std::max(ts.max_iterations, rec.iterations);
        if (rec.k % options.stride == 0) ts.samples.push_back(make_sample(model, options, rec));
    };

    if (n_steps == 0) {
        ts.samples.push_back(make_sample(model, options, initial_record(model, options.t_start, q0, u0)));
        return ts;
    }

    if (options.integrator == Integrator::moreau) {
        MoreauIntegrator integ(model, cfg, options.dt, options.step);
        MoreauState s = integ.initial_state(q0, u0, options.t_start);
        while (s.k <= n_steps) record(integ.step(s));
    } else {
        const bool frictional = options.integrator == Integrator::leapfrog_frictional;
        LeapfrogIntegrator integ(model, cfg, options.dt, frictional, options.step);
        StaggeredState s = integ.initial_state(q0, u0, options.t_start, options.n_warm);
        if (s.k > 0) record(initial_record(model, options.t_start, q0, u0));
        while (s.k <= n_steps) record(integ.step(s));
    }
    return ts;
}

}  // namespace rombo
