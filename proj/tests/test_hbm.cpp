#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "rombo/bench.hpp"
#include "rombo/error.hpp"
#include "rombo/hbm.hpp"
#include "support.hpp"

using namespace rombo;
using Catch::Approx;

namespace {

constexpr double omega_n = 100.0;  // sqrt(k / m) of the default sdof-wall

Scenario sdof(double gap, double force = 1.0) {
    SdofWallParams p;
    p.gap = gap;
    p.force = force;
    return scenario_sdof_wall(p, omega_n, 10.0, 100);
}

HbmOptions small_options(int H = 5, int N = 64) {
    HbmOptions o;
    o.H = H;
    o.N_aft = N;
    return o;
}

// Direct complex solve of (K - W^2 M + i W D) q = F/2 e_mass.
Eigen::VectorXcd frf(const ReducedModel& r, double W, double force) {
    Eigen::MatrixXcd Z = (r.K - W * W * r.M).cast<std::complex<double>>();
    Z += std::complex<double>(0.0, W) * r.D.cast<std::complex<double>>();
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(2);
    f[1] = force / 2.0;
    return Z.partialPivLu().solve(f);
}

}  // namespace

TEST_CASE("synthesis and analysis are inverse on band-limited signals") {
    Scenario sc = sdof(1.0);
    testing::Gen gen(5);
    for (int H : {0, 1, 7, 20}) {
        HarmonicBalance hb(sc.reduced, sc.contacts, 37.0, small_options(H, 4 * H + 4));
        for (int trial = 0; trial < 10; ++trial) {
            const VectorXd c = gen.vector(2 * H + 1);
            CHECK((hb.analyze(hb.synthesize(c)) - c).norm() <= 1e-12 * (1.0 + c.norm()));
        }
    }
}

TEST_CASE("synthesized samples agree with the Fourier series") {
    Scenario sc = sdof(1.0);
    testing::Gen gen(6);
    const int H = 4, N = 32;
    HarmonicBalance hb(sc.reduced, sc.contacts, 3.0, small_options(H, N));
    FourierSolution s;
    s.Omega = 3.0;
    s.H = H;
    s.coeffs.resize(H + 1);
    for (int h = 0; h <= H; ++h) {
        s.coeffs[h] = Eigen::VectorXcd(2);
        for (int i = 0; i < 2; ++i) s.coeffs[h][i] = {gen.normal(), h == 0 ? 0.0 : gen.normal()};
    }
    const VectorXd x = hb.pack(s.coeffs);
    VectorXd c(2 * H + 1);
    for (int j = 0; j < 2 * H + 1; ++j) c[j] = x[j * 2 + 1];
    const VectorXd samples = hb.synthesize(c);
    const MatrixXd direct = s.samples(N);
    CHECK((samples - direct.col(1)).norm() <= 1e-12 * samples.norm());
    CHECK(s.amplitude(Eigen::Vector2d(0, 1), 2) == Approx(2.0 * std::abs(s.coeffs[2][1])));
}

TEST_CASE("aliasing guard and bad options") {
    Scenario sc = sdof(1.0);
    CHECK_THROWS_AS(HarmonicBalance(sc.reduced, sc.contacts, 1.0, small_options(10, 20)), InvalidSpec);
    CHECK_NOTHROW(HarmonicBalance(sc.reduced, sc.contacts, 1.0, small_options(10, 21)));
    CHECK_THROWS_AS(HarmonicBalance(sc.reduced, sc.contacts, 0.0, small_options()), InvalidSpec);
    HbmOptions o = small_options();
    o.eps_dl = 0.0;
    CHECK_THROWS_AS(HarmonicBalance(sc.reduced, sc.contacts, 1.0, o), InvalidSpec);
}

TEST_CASE("linear response reproduces the frequency response function") {
    Scenario sc = sdof(1.0);
    for (double W : {30.0, 95.0, 100.0, 140.0}) {
        sc.Omega = W;
        sc.set_excitation([W](double t) { return std::cos(W * t); });
        const FourierSolution sol = solve_fixed_frequency(sc.reduced, sc.contacts, W, small_options());
        CHECK(sol.iterations <= 1);
        const Eigen::VectorXcd q = frf(sc.reduced, W, 1.0);
        CHECK((sol.coeffs[1] - q).norm() <= 1e-9 * q.norm());
        for (int h = 0; h <= 5; ++h)
            if (h != 1) CHECK(sol.coeffs[h].norm() <= 1e-12 * q.norm());
        for (const auto& l : sol.lambda) CHECK(l.norm() == 0.0);
        for (const auto& r : hbm_residual(sol, sc.reduced, sc.contacts)) CHECK(r.norm() <= 1e-9);
    }
}

TEST_CASE("static harmonic is the static solution") {
    Scenario sc = sdof(1.0);
    sc.reduced.load = Load(2);
    sc.reduced.load.constant = Eigen::Vector2d(0.0, 3.0);
    const FourierSolution sol = solve_fixed_frequency(sc.reduced, sc.contacts, 50.0, small_options());
    const VectorXd q = sc.reduced.K.ldlt().solve(sc.reduced.load.constant);
    CHECK((sol.coeffs[0].real() - q).norm() <= 1e-12 * q.norm());
    CHECK(sol.coeffs[0].imag().norm() == 0.0);
    for (int h = 1; h <= 5; ++h) CHECK(sol.coeffs[h].norm() == 0.0);
}

TEST_CASE("alternating frequency-time contact forces on hand cases") {
    Scenario sc = sdof(1e-3);
    FourierSolution s;
    s.Omega = 10.0;
    s.H = 3;
    s.N_aft = 16;
    s.eps_dl = 1e5;
    s.coeffs.assign(4, Eigen::VectorXcd::Zero(2));
    sc.reduced.load = Load(2);
    // Open gap, no load: no force at any harmonic.
    for (const auto& l : aft_contact_forces(s, sc.reduced, sc.contacts)) CHECK(l.norm() == 0.0);
    // Closed gap pushed by a constant force F.
    ContactConfig closed = ContactConfig::frictionless(1, 0.0);
    sc.reduced.load.constant = Eigen::Vector2d(-2.5, 0.0);
    const auto l = aft_contact_forces(s, sc.reduced, closed);
    CHECK(l[0][0].real() == Approx(2.5).epsilon(1e-14));
    for (int h = 1; h <= 3; ++h) CHECK(std::abs(l[h][0]) <= 1e-14);
}

TEST_CASE("preloaded closed contact keeps exact complementarity at every sample") {
    Scenario sc = sdof(0.0);
    sc.reduced.load = Load(2);
    sc.reduced.load.constant = Eigen::Vector2d(0.0, -5.0);
    sc.reduced.load.add_term(Eigen::Vector2d(0.0, 1.0), [](double t) { return std::cos(80.0 * t); });
    const HbmOptions o = small_options(6, 64);
    const FourierSolution sol = solve_fixed_frequency(sc.reduced, sc.contacts, 80.0, o);
    CHECK(sol.residual <= o.tol);
    for (int h = 0; h <= o.H; ++h) CHECK(std::abs(sol.coeffs[h][0]) <= 1e-10);
    CHECK(std::abs(sol.coeffs[0][1].imag()) == 0.0);
    // Contact force samples stay strictly compressive; the link carries 5 +- |q| k_contact.
    FourierSolution lam = sol;
    lam.coeffs = sol.lambda;
    const MatrixXd ls = lam.samples(o.N_aft);
    CHECK(ls.col(0).minCoeff() > 0.0);
    const MatrixXd qs = sol.samples(o.N_aft);
    CHECK(qs.col(0).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((ls.col(0).array() * qs.col(0).array()).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("analytic Jacobian matches finite differences") {
    Scenario sc = sdof(1e-3);
    testing::Gen gen(8);
    HbmOptions a = small_options(4, 64), fd = a;
    fd.jacobian = JacobianKind::finite_difference;
    HarmonicBalance ha(sc.reduced, sc.contacts, 97.0, a), hf(sc.reduced, sc.contacts, 97.0, fd);
    int compared = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const VectorXd x = gen.vector(ha.size(), 2e-3);
        const MatrixXd Ja = ha.jacobian(x), Jf = hf.jacobian(x);
        // Away from switching instants the projection is smooth; skip rare kink crossings.
        const double err = (Ja - Jf).norm() / Ja.norm();
        if (err < 1e-3) {
            CHECK(err <= 1e-5);
            ++compared;
        }
    }
    CHECK(compared >= 5);
}

TEST_CASE("converged contact solution satisfies the inequality at the samples") {
    Scenario sc = sdof(1e-3);
    const HbmOptions o = small_options(20, 1024);
    const FourierSolution sol = solve_fixed_frequency(sc.reduced, sc.contacts, omega_n, o);
    CHECK(sol.residual <= o.tol);
    CHECK(std::abs(sol.coeffs[0][0].imag()) == 0.0);
    HarmonicBalance hb(sc.reduced, sc.contacts, omega_n, o);
    const VectorXd x = hb.pack(sol.coeffs);
    const MatrixXd L = hb.contact_forces(x);
    // The truncated force series may ring around zero, but its mean pushes.
    CHECK(L(0, 0) > 0.0);
    // Contact limits the motion compared to the free resonance.
    const double a_lin = 2.0 * std::abs(frf(sc.reduced, omega_n, 1.0)[1]);
    CHECK(sol.amplitude(Eigen::Vector2d(0, 1), 1) < 0.8 * a_lin);
    // Penetration stays small compared to the gap.
    const MatrixXd q = sol.samples(o.N_aft);
    CHECK(q.col(0).minCoeff() + 1e-3 >= -0.05 * 1e-3);
}

TEST_CASE("doubling the AFT samples leaves the solution unchanged") {
    Scenario sc = sdof(1e-3);
    HbmOptions o = small_options(10, 1024);
    const FourierSolution a = solve_fixed_frequency(sc.reduced, sc.contacts, omega_n, o);
    o.N_aft = 2048;
    const FourierSolution b = solve_fixed_frequency(sc.reduced, sc.contacts, omega_n, o);
    double diff = 0.0, scale = 0.0;
    for (int h = 0; h <= o.H; ++h) {
        diff = std::max(diff, (a.coeffs[h] - b.coeffs[h]).norm());
        scale = std::max(scale, b.coeffs[h].norm());
    }
    CHECK(diff <= 1e-2 * scale);
}

TEST_CASE("linear sweep follows the frequency response function") {
    Scenario sc = sdof(1.0);
    SweepOptions so;
    so.Omega_start = 80.0;
    so.Omega_end = 120.0;
    so.step = 5.0;
    so.hbm = small_options(3, 32);
    so.harmonic_load = Eigen::Vector2d(0.0, 1.0);
    const SweepResult res = sweep(sc.reduced, sc.contacts, so);
    CHECK(res.gaps.empty());
    REQUIRE(res.solutions.size() == 9);
    for (const FourierSolution& s : res.solutions) {
        const double expected = 2.0 * std::abs(frf(sc.reduced, s.Omega, 1.0)[1]);
        CHECK(s.amplitude(Eigen::Vector2d(0, 1), 1) == Approx(expected).epsilon(1e-9));
    }
    so.step = -5.0;
    CHECK_THROWS_AS(sweep(sc.reduced, sc.contacts, so), InvalidSpec);
}

TEST_CASE("up and down sweeps reveal the hardening hysteresis") {
    Scenario sc = sdof(1e-3);
    SweepOptions up;
    up.Omega_start = 96.0;
    up.Omega_end = 112.0;
    up.step = 1.0;
    up.hbm = small_options(12, 512);
    up.harmonic_load = Eigen::Vector2d(0.0, 1.0);
    SweepOptions down = up;
    down.Omega_start = up.Omega_end;
    down.Omega_end = up.Omega_start;
    down.step = -1.0;
    const SweepResult ru = sweep(sc.reduced, sc.contacts, up), rd = sweep(sc.reduced, sc.contacts, down);
    const Eigen::Vector2d w(0, 1);
    auto amp_at = [&](const SweepResult& r, double W) {
        for (const auto& s : r.solutions)
            if (std::abs(s.Omega - W) < 1e-9) return s.amplitude(w, 1);
        return -1.0;
    };
    double largest = 0.0;
    for (double W = 100.0; W <= 112.0; W += 1.0) {
        const double au = amp_at(ru, W), ad = amp_at(rd, W);
        if (au > 0 && ad > 0) largest = std::max(largest, std::abs(au - ad) / std::max(au, ad));
    }
    CHECK(largest > 0.1);
}
