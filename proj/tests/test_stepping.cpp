#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rombo/bench.hpp"
#include "rombo/error.hpp"
#include "rombo/stepping.hpp"
#include "support.hpp"

using namespace rombo;
using Catch::Approx;

namespace {

ReducedModel massless_model(const MatrixXd& K, Index B) {
    ReducedModel r;
    r.n_boundary = B;
    r.massless = true;
    r.K = K;
    r.M = MatrixXd::Zero(K.rows(), K.rows());
    r.M.bottomRightCorner(K.rows() - B, K.rows() - B).setIdentity();
    r.D = MatrixXd::Zero(K.rows(), K.rows());
    r.R = MatrixXd::Identity(K.rows(), K.rows());
    r.load = Load(K.rows());
    return r;
}

// Point mass above rigid ground; the only coordinate is the height.
ReducedModel ball(double m, double g) {
    ReducedModel r;
    r.n_boundary = 1;
    r.massless = false;
    r.K = MatrixXd::Zero(1, 1);
    r.M = MatrixXd::Constant(1, 1, m);
    r.D = MatrixXd::Zero(1, 1);
    r.R = MatrixXd::Identity(1, 1);
    r.load = Load(1);
    r.load.constant(0) = -m * g;
    return r;
}

EnergyModel ball_energy(const ReducedModel& r) {
    EnergyModel e;
    e.rigid_basis = MatrixXd::Identity(1, 1);
    e.conservative_force = r.load.constant;
    return e;
}

BarDropParams small_bar() {
    BarDropParams p;
    p.n_elems = 200;
    p.t_end = 1.2;
    return p;
}

}  // namespace

TEST_CASE("free flight follows the exact parabola") {
    MatrixXd K(2, 2);
    K << 50, -50, -50, 50;
    ReducedModel r = massless_model(K, 1);
    const double a = 9.81, dt = 1e-3, v0 = 2.0, h = 100.0;
    r.load.constant << 0.0, -a;
    LeapfrogIntegrator integ(r, ContactConfig::frictionless(1, 1e6), dt, false);
    // The stored velocity precedes the first update by half a step; taking it at
    // t = -dt/2 integrates the constant acceleration exactly.
    StaggeredState s = integ.initial_state(Eigen::Vector2d(h, h), Eigen::Vector2d(0.0, v0 + 0.5 * a * dt), 0.0);
    for (int k = 0; k < 2000; ++k) {
        StepRecord rec = integ.step(s);
        const double t = rec.t;
        const double exact = h + v0 * t - 0.5 * a * t * t;
        CHECK(rec.q(1) == Approx(exact).epsilon(1e-12));
        CHECK(rec.q(0) == Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("open contacts give the linear leapfrog trajectory") {
    testing::Gen gen(8);
    ReducedModel r = massless_model(gen.spd(5, 20.0), 2);
    r.load.constant = gen.vector(5);
    const double dt = 1e-2;
    LeapfrogIntegrator integ(r, ContactConfig::frictionless(2, 1e6), dt, false);
    const VectorXd q0 = gen.vector(5), u0 = gen.vector(5);
    StaggeredState s = integ.initial_state(q0, u0, 0.0);

    const MatrixXd Kbb = r.Kbb(), Kbi = r.Kbi(), Kib = r.Kib(), Kii = r.Kii();
    VectorXd q_i = q0.tail(3), u_i = u0.tail(3);
    const VectorXd f_b = r.load.constant.head(2), f_i = r.load.constant.tail(3);
    for (int k = 0; k < 500; ++k) {
        StepRecord rec = integ.step(s);
        const VectorXd q_b = Kbb.ldlt().solve(f_b - Kbi * q_i);
        u_i += dt * (f_i - Kib * q_b - Kii * q_i);
        q_i += dt * u_i;
        CHECK(rec.lambda.norm() == 0.0);
        CHECK((rec.q.head(2) - q_b).norm() <= 1e-12 * (1 + q_b.norm()));
    }
    CHECK((s.q_i - q_i).norm() <= 1e-10 * (1 + q_i.norm()));
}

TEST_CASE("closed contact under static load stays at rest") {
    MatrixXd K(2, 2);
    K << 2, -1, -1, 2;
    ReducedModel r = massless_model(K, 1);
    r.load.constant << -5.0, 0.0;
    for (bool frictional : {false, true}) {
        LeapfrogIntegrator integ(r, ContactConfig::frictionless(1), 1e-2, frictional);
        StaggeredState s = integ.initial_state(VectorXd::Zero(2), VectorXd::Zero(2), 0.0);
        for (int k = 0; k < 100; ++k) {
            StepRecord rec = integ.step(s);
            CHECK(std::abs(rec.q(0)) <= 1e-12);
            CHECK(rec.lambda(0) == Approx(5.0).epsilon(1e-10));
            CHECK(std::abs(rec.u_plus(1)) <= 1e-12);
        }
    }
}

TEST_CASE("frictional leapfrog with zero friction matches the frictionless one") {
    Scenario sc = scenario_bouncing_bar(small_bar());
    SimulationOptions a = sc.simulation_options();
    a.keep_coordinates = true;
    SimulationOptions b = a;
    b.integrator = Integrator::leapfrog_frictional;
    TimeSeries ta = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, a);
    TimeSeries tb = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, b);
    REQUIRE(ta.samples.size() == tb.samples.size());
    double err = 0.0, scale = 0.0;
    bool touched = false;
    for (std::size_t i = 0; i < ta.samples.size(); ++i) {
        err = std::max(err, (ta.samples[i].q - tb.samples[i].q).lpNorm<Eigen::Infinity>());
        scale = std::max(scale, ta.samples[i].q.lpNorm<Eigen::Infinity>());
        touched = touched || ta.samples[i].n_active > 0;
    }
    CHECK(touched);
    CHECK(err <= 1e-8 * scale);
}

TEST_CASE("stuck preloaded contact does not move") {
    testing::Gen gen(31);
    ReducedModel r = massless_model(gen.spd(5, 5.0), 3);
    r.load.constant << -0.2, 0.3, -0.1, 0.0, 0.0;
    ContactConfig cfg;
    cfg.dim = 3;
    ContactPoint p;
    p.mu = 0.5;
    p.preload = 10.0;
    p.mode = ContactMode::preloaded;
    cfg.contacts = {p};
    LeapfrogIntegrator integ(r, cfg, 1e-2, true);
    StaggeredState s = integ.initial_state(VectorXd::Zero(5), VectorXd::Zero(5), 0.0);
    for (int k = 0; k < 200; ++k) {
        StepRecord rec = integ.step(s);
        CHECK(rec.u_minus.head(3).norm() == 0.0);
        CHECK(rec.n_active == 0);
    }
}

TEST_CASE("sliding contact obeys Coulomb's law") {
    testing::Gen gen(41);
    ReducedModel r = massless_model(gen.spd(5, 5.0), 3);
    const double F = 4.0, mu = 0.3, v = 0.7, dt = 1e-2;
    r.load.constant << -F, 0.0, 0.0, 0.0, 0.0;
    ContactConfig cfg;
    cfg.dim = 3;
    ContactPoint p;
    p.mu = mu;
    cfg.contacts = {p};
    cfg.gap_offset = [v](double t) { return Eigen::Vector3d(0.0, v * t, 0.5 * v * t); };
    cfg.gap_rate = [v](double) { return Eigen::Vector3d(0.0, v, 0.5 * v); };
    LeapfrogIntegrator integ(r, cfg, dt, true);
    StaggeredState s = integ.initial_state(VectorXd::Zero(5), VectorXd::Zero(5), 0.0);
    VectorXd q_prev = VectorXd::Zero(3);
    int checked = 0;
    for (int k = 0; k < 300; ++k) {
        StepRecord rec = integ.step(s);
        const VectorXd q_b = rec.q.head(3);
        const Eigen::Vector2d slip = (q_b - q_prev).tail(2) + dt * cfg.g0_dot(rec.t).tail(2);
        q_prev = q_b;
        if (k == 0 || slip.norm() < 1e-9) continue;
        const double ln = rec.lambda(0);
        const Eigen::Vector2d lt = rec.lambda.tail(2);
        CHECK(ln > 0.0);
        CHECK(lt.norm() == Approx(mu * ln).epsilon(1e-6));
        const double angle = std::acos(std::clamp(-lt.dot(slip) / (lt.norm() * slip.norm()), -1.0, 1.0));
        CHECK(angle <= 1e-6);
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("leapfrog is time-reversible without contact") {
    testing::Gen gen(2);
    ReducedModel r = massless_model(gen.spd(5, 50.0), 2);
    const double dt = 5e-3;
    LeapfrogIntegrator integ(r, ContactConfig::frictionless(2, 1e6), dt, false);
    const VectorXd q0 = gen.vector(5), u0 = gen.vector(5);
    StaggeredState s = integ.initial_state(q0, u0, 0.0);
    const int n = 400;
    StepRecord first, last;
    for (int k = 0; k < n; ++k) {
        last = integ.step(s);
        if (k == 0) first = last;
    }
    // Start from q^{n-1} with the reversed velocity u^{n-1/2}.
    VectorXd qr = last.q, ur = -last.u_plus;
    StaggeredState b = integ.initial_state(qr, ur, 0.0);
    for (int k = 0; k < n - 1; ++k) integ.step(b);
    CHECK((b.q_i - q0.tail(3)).norm() <= 1e-9 * q0.norm());
    CHECK((b.u_i + first.u_plus.tail(3)).norm() <= 1e-9 * first.u_plus.norm());
}

TEST_CASE("leapfrog converges at second order with open contacts") {
    testing::Gen gen(9);
    ReducedModel r = massless_model(gen.spd(5, 20.0), 2);
    const VectorXd q0 = VectorXd::Zero(5), u0 = gen.vector(5);
    std::vector<VectorXd> finals;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        LeapfrogIntegrator integ(r, ContactConfig::frictionless(2, 1e6), dt, false);
        StaggeredState s = integ.initial_state(q0, u0, 0.0);
        const int n = static_cast<int>(std::lround(2.0 / dt));
        for (int k = 0; k < n; ++k) integ.step(s);
        finals.push_back(s.q_i);
    }
    const double order = std::log2((finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm());
    CHECK(order >= 1.9);
}

TEST_CASE("every step balances the boundary equation") {
    Scenario sc = scenario_bouncing_bar(small_bar());
    SimulationOptions o = sc.simulation_options();
    o.keep_coordinates = true;
    TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o);
    const ReducedModel& r = sc.reduced;
    const Index B = r.n_boundary;
    for (const Sample& smp : ts.samples) {
        const VectorXd f = r.load(smp.t);
        const VectorXd res = MatrixXd(r.Kbb()) * smp.q.head(B) + MatrixXd(r.Kbi()) * smp.q.tail(r.n_inner()) -
                             smp.lambda - f.head(B);
        CHECK(res.norm() <= 1e-9 * f.norm());
        CHECK(smp.lambda.minCoeff() >= 0.0);
        CHECK(smp.q_b.minCoeff() >= -1e-12);
    }
}

TEST_CASE("linear leapfrog conserves energy") {
    BarDropParams p = small_bar();
    p.a_g = 0.0;
    p.q0 = 10.0;
    Scenario sc = scenario_bouncing_bar(p);
    testing::Gen gen(1);
    VectorXd u0 = VectorXd::Zero(sc.reduced.size());
    u0.tail(sc.reduced.n_inner()) = gen.vector(sc.reduced.n_inner(), 0.01);
    SimulationOptions o = sc.simulation_options();
    o.t_end = 1e4 * o.dt;
    TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, u0, o);
    REQUIRE(ts.samples.size() == 10001);
    const double e0 = ts.samples.front().energy.total;
    double drift = 0.0;
    for (const Sample& s : ts.samples) drift = std::max(drift, std::abs(s.energy.total - e0) / e0);
    CHECK(drift < 1e-6);
}

TEST_CASE("simulate edge cases") {
    Scenario sc = scenario_bouncing_bar(small_bar());
    SimulationOptions o = sc.simulation_options();
    o.t_end = o.t_start;
    TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o);
    REQUIRE(ts.samples.size() == 1);
    CHECK(ts.samples[0].t == 0.0);
    CHECK(ts.samples[0].probe_q(0) == Approx(0.5));
    o.t_end = -1.0;
    CHECK_THROWS_AS(simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o), InvalidSpec);
    o = sc.simulation_options();
    o.dt = 0.0;
    CHECK_THROWS_AS(simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o), InvalidSpec);
    CHECK(integrator_from_string(to_string(Integrator::leapfrog_frictional)) == Integrator::leapfrog_frictional);
}

TEST_CASE("rest initial conditions need no warm start") {
    MatrixXd K(2, 2);
    K << 2, -1, -1, 2;
    ReducedModel r = massless_model(K, 1);
    r.load.constant << -5.0, 0.0;
    LeapfrogIntegrator integ(r, ContactConfig::frictionless(1), 1e-2, false);
    StaggeredState cold = integ.initial_state(VectorXd::Zero(2), VectorXd::Zero(2), 0.0);
    StaggeredState warm = integ.initial_state(VectorXd::Zero(2), VectorXd::Zero(2), 0.0, 16);
    integ.step(cold);
    CHECK(warm.k == 1);
    CHECK((warm.q_i - cold.q_i).norm() <= 1e-14);
    CHECK((warm.u_i - cold.u_i).norm() <= 1e-14);
}

TEST_CASE("warm start changes the first bounce only slightly") {
    BarDropParams p = small_bar();
    p.t_end = 2.0;
    Scenario sc = scenario_bouncing_bar(p);
    double apex[2];
    for (int w = 0; w < 2; ++w) {
        SimulationOptions o = sc.simulation_options();
        o.n_warm = w == 0 ? 0 : 16;
        TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o);
        const auto t = sample_times(ts);
        std::vector<double> qb;
        for (const Sample& s : ts.samples) qb.push_back(s.q_b(0));
        const auto apexes = flight_apexes(t, qb, 1e-3);
        REQUIRE(!apexes.empty());
        apex[w] = apexes.front();
    }
    const double v = std::sqrt(2 * p.a_g * p.q0);
    CHECK(std::abs(apex[0] - apex[1]) < p.dt * v);
}

TEST_CASE("Moreau rejects massless models") {
    Scenario sc = scenario_bouncing_bar(small_bar());
    CHECK_THROWS_AS(MoreauIntegrator(sc.reduced, sc.contacts, 1e-3), ModelError);
}

TEST_CASE("Moreau bouncing ball") {
    const double m = 2.0, g = 10.0, h = 1.0, dt = 1e-4;
    ReducedModel r = ball(m, g);
    const double v_impact = std::sqrt(2 * g * h);

    SECTION("elastic impact returns to the drop height") {
        ContactConfig cfg = ContactConfig::frictionless(1);
        cfg.contacts[0].restitution_n = 1.0;
        MoreauIntegrator integ(r, cfg, dt);
        MoreauState s = integ.initial_state(VectorXd::Constant(1, h), VectorXd::Zero(1), 0.0);
        bool impacted = false;
        double apex = 0.0;
        for (int k = 0; k < 12000; ++k) {
            StepRecord rec = integ.step(s);
            if (rec.n_active > 0) impacted = true;
            if (impacted) apex = std::max(apex, s.q(0));
        }
        REQUIRE(impacted);
        CHECK(std::abs(apex - h) <= 5 * v_impact * dt);
    }

    SECTION("plastic impact stops the ball and never adds energy") {
        ContactConfig cfg = ContactConfig::frictionless(1);
        MoreauIntegrator integ(r, cfg, dt);
        MoreauState s = integ.initial_state(VectorXd::Constant(1, h), VectorXd::Zero(1), 0.0);
        const EnergyModel em = ball_energy(r);
        double e_prev = 1e300;
        bool impacted = false;
        for (int k = 0; k < 6000; ++k) {
            StepRecord rec = integ.step(s);
            const double e = energy_breakdown_half_step(r, em, rec.q, s.q, rec.u_plus).total;
            CHECK(e <= e_prev + 1e-12 * m * g * h);
            e_prev = e;
            if (rec.n_active > 0) {
                impacted = true;
                CHECK(std::abs(rec.u_plus(0)) <= 1e-12);
            }
        }
        CHECK(impacted);
    }
}

TEST_CASE("Moreau conserves energy in free vibration") {
    BarDropParams p = small_bar();
    p.massless = false;
    p.a_g = 0.0;
    p.q0 = 10.0;
    p.dt = 1e-3;
    Scenario sc = scenario_bouncing_bar(p);
    testing::Gen gen(6);
    VectorXd u0 = VectorXd::Zero(sc.reduced.size());
    u0.tail(sc.reduced.n_inner()) = gen.vector(sc.reduced.n_inner(), 0.01);
    SimulationOptions o = sc.simulation_options();
    o.t_end = 5.0;
    TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, u0, o);
    const double e0 = ts.samples.front().energy.total;
    double drift = 0.0;
    for (const Sample& s : ts.samples) drift = std::max(drift, std::abs(s.energy.total - e0) / e0);
    CHECK(drift < 1e-6);
}

TEST_CASE("instability is reported as divergence") {
    BarDropParams p = small_bar();
    p.n_elems = 1000;
    p.massless = false;
    p.dt = 1e-2;
    p.t_end = 3.0;
    Scenario sc = scenario_bouncing_bar(p);
    CHECK_THROWS_AS(sc.run(), Divergence);
}
