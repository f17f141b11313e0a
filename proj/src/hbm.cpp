#include "rombo/hbm.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "rombo/error.hpp"

namespace rombo {

VectorXd FourierSolution::at(double t) const {
    VectorXd q = coeffs.at(0).real();
    for (int h = 1; h <= H; ++h) q += 2.0 * (coeffs[h] * std::polar(1.0, h * Omega * t)).real();
    return q;
}

MatrixXd FourierSolution::samples(int n) const {
    const double T = 2.0 * std::numbers::pi / Omega;
    MatrixXd S(n, coeffs.at(0).size());
    for (int k = 0; k < n; ++k) S.row(k) = at(k * T / n).transpose();
    return S;
}

double FourierSolution::amplitude(const VectorXd& weights, int h) const {
    const std::complex<double> c = weights.cast<std::complex<double>>().dot(coeffs.at(h));
    return h == 0 ? std::abs(c) : 2.0 * std::abs(c);
}

HarmonicBalance::HarmonicBalance(const ReducedModel& model, const ContactConfig& cfg, double Omega,
                                 const HbmOptions& options)
    : model_(model), cfg_(cfg), Omega_(Omega), options_(options), n_(model.size()), H_(options.H),
      N_(options.N_aft) {
    cfg_.validate();
    if (cfg_.dim != 1) throw InvalidSpec("harmonic balance supports frictionless normal contact only");
    if (cfg_.size() != model.n_boundary)
        throw InvalidSpec("contact configuration does not match the model boundary");
    if (!(Omega > 0.0)) throw InvalidSpec("Omega must be positive");
    if (H_ < 0) throw InvalidSpec("H must be non-negative");
    if (N_ < 2 * H_ + 1) throw InvalidSpec("aliasing: N_aft must be at least 2H+1");
    if (!(options.eps_dl > 0.0)) throw InvalidSpec("eps_dl must be positive");

    cos_.resize(N_, H_);
    sin_.resize(N_, H_);
    for (int k = 0; k < N_; ++k)
        for (int h = 1; h <= H_; ++h) {
            // Reduce the phase index first to keep the tables accurate for large N.
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(h) * k) % N_) / N_;
            cos_(k, h - 1) = std::cos(phase);
            sin_(k, h - 1) = std::sin(phase);
        }

    const double T = 2.0 * std::numbers::pi / Omega;
    const int nc = 2 * H_ + 1;
    f_ = VectorXd::Zero(size());
    if (model.load.terms.empty()) {
        f_.head(n_) = model.load.constant;
    } else {
        MatrixXd F(N_, n_);
        for (int k = 0; k < N_; ++k) F.row(k) = model.load(k * T / N_).transpose();
        for (Index m = 0; m < n_; ++m) {
            const VectorXd c = analyze(F.col(m));
            for (int j = 0; j < nc; ++j) f_[j * n_ + m] = c[j];
        }
    }
    const Index C = cfg_.n_contacts();
    g0_ = MatrixXd::Zero(nc, C);
    if (cfg_.gap_offset) {
        MatrixXd G(N_, C);
        for (int k = 0; k < N_; ++k) G.row(k) = cfg_.g0(k * T / N_).transpose();
        for (Index j = 0; j < C; ++j) g0_.col(j) = analyze(G.col(j));
    }
}

VectorXd HarmonicBalance::synthesize(const VectorXd& c) const {
    VectorXd s = VectorXd::Constant(N_, c[0]);
    if (H_ > 0) {
        VectorXd re(H_), im(H_);
        for (int h = 1; h <= H_; ++h) {
            re[h - 1] = c[2 * h - 1];
            im[h - 1] = c[2 * h];
        }
        s += 2.0 * (cos_ * re - sin_ * im);
    }
    return s;
}

VectorXd HarmonicBalance::analyze(const VectorXd& samples) const {
    VectorXd c(2 * H_ + 1);
    c[0] = samples.mean();
    if (H_ > 0) {
        const VectorXd re = cos_.transpose() * samples / N_;
        const VectorXd im = -sin_.transpose() * samples / N_;
        for (int h = 1; h <= H_; ++h) {
            c[2 * h - 1] = re[h - 1];
            c[2 * h] = im[h - 1];
        }
    }
    return c;
}

VectorXd HarmonicBalance::pack(const std::vector<VectorXcd>& coeffs) const {
    if (static_cast<int>(coeffs.size()) != H_ + 1) throw InvalidSpec("coefficient count does not match H");
    VectorXd x(size());
    x.head(n_) = coeffs[0].real();
    for (int h = 1; h <= H_; ++h) {
        x.segment((2 * h - 1) * n_, n_) = coeffs[h].real();
        x.segment(2 * h * n_, n_) = coeffs[h].imag();
    }
    return x;
}

std::vector<VectorXcd> HarmonicBalance::unpack(const VectorXd& x) const {
    std::vector<VectorXcd> c(H_ + 1);
    c[0] = x.head(n_).cast<std::complex<double>>();
    for (int h = 1; h <= H_; ++h) {
        c[h].resize(n_);
        c[h].real() = x.segment((2 * h - 1) * n_, n_);
        c[h].imag() = x.segment(2 * h * n_, n_);
    }
    return c;
}

VectorXd HarmonicBalance::apply_linear(const VectorXd& x) const {
    VectorXd y(size());
    y.head(n_) = model_.K * x.head(n_);
    for (int h = 1; h <= H_; ++h) {
        const double w = h * Omega_;
        const auto re = x.segment((2 * h - 1) * n_, n_);
        const auto im = x.segment(2 * h * n_, n_);
        const VectorXd Kre = model_.K * re - w * w * (model_.M * re);
        const VectorXd Kim = model_.K * im - w * w * (model_.M * im);
        y.segment((2 * h - 1) * n_, n_) = Kre - w * (model_.D * im);
        y.segment(2 * h * n_, n_) = Kim + w * (model_.D * re);
    }
    return y;
}

MatrixXd HarmonicBalance::linear_operator() const {
    MatrixXd L = MatrixXd::Zero(size(), size());
    L.topLeftCorner(n_, n_) = model_.K;
    for (int h = 1; h <= H_; ++h) {
        const double w = h * Omega_;
        const MatrixXd Kd = model_.K - w * w * model_.M;
        const Index r = (2 * h - 1) * n_;
        const Index i = 2 * h * n_;
        L.block(r, r, n_, n_) = Kd;
        L.block(r, i, n_, n_) = -w * model_.D;
        L.block(i, r, n_, n_) = w * model_.D;
        L.block(i, i, n_, n_) = Kd;
    }
    return L;
}

MatrixXd HarmonicBalance::projection_arguments(const VectorXd& x) const {
    const VectorXd r = apply_linear(x) - f_;
    const int nc = 2 * H_ + 1;
    const Index C = cfg_.n_contacts();
    MatrixXd Y(nc, C);
    for (int c = 0; c < nc; ++c)
        for (Index j = 0; j < C; ++j) Y(c, j) = r[c * n_ + j] - options_.eps_dl * (x[c * n_ + j] + g0_(c, j));
    return Y;
}

MatrixXd HarmonicBalance::contact_forces(const VectorXd& x) const {
    const MatrixXd Y = projection_arguments(x);
    MatrixXd L(Y.rows(), Y.cols());
    for (Index j = 0; j < Y.cols(); ++j) L.col(j) = analyze(synthesize(Y.col(j)).cwiseMax(0.0));
    return L;
}

VectorXd HarmonicBalance::residual(const VectorXd& x) const {
    VectorXd R = apply_linear(x) - f_;
    const MatrixXd L = contact_forces(x);
    for (Index c = 0; c < L.rows(); ++c)
        for (Index j = 0; j < L.cols(); ++j) R[c * n_ + j] -= L(c, j);
    return R;
}

MatrixXd HarmonicBalance::jacobian(const VectorXd& x) const {
    if (options_.jacobian == JacobianKind::finite_difference) {
        const VectorXd R0 = residual(x);
        const double scale = std::max(x.lpNorm<Eigen::Infinity>(), 1e-12);
        MatrixXd J(size(), size());
        VectorXd xp = x;
        for (Index m = 0; m < size(); ++m) {
            const double d = 1e-7 * std::max(std::abs(x[m]), 1e-3 * scale);
            xp[m] = x[m] + d;
            J.col(m) = (residual(xp) - R0) / d;
            xp[m] = x[m];
        }
        return J;
    }
    const MatrixXd Lop = linear_operator();
    MatrixXd J = Lop;
    const MatrixXd Y = projection_arguments(x);
    const int nc = 2 * H_ + 1;
    // Synthesis S (N x nc) and analysis A (nc x N) matrices of one signal.
    MatrixXd S(N_, nc), A(nc, N_);
    S.col(0).setOnes();
    A.row(0).setConstant(1.0 / N_);
    for (int h = 1; h <= H_; ++h) {
        S.col(2 * h - 1) = 2.0 * cos_.col(h - 1);
        S.col(2 * h) = -2.0 * sin_.col(h - 1);
        A.row(2 * h - 1) = cos_.col(h - 1).transpose() / N_;
        A.row(2 * h) = -sin_.col(h - 1).transpose() / N_;
    }
    for (Index j = 0; j < Y.cols(); ++j) {
        const VectorXd active = (S * Y.col(j)).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        if (active.sum() == 0.0) continue;
        const MatrixXd Aj = A * active.asDiagonal() * S;
        MatrixXd Lj(nc, size());
        for (int c = 0; c < nc; ++c) {
            Lj.row(c) = Lop.row(c * n_ + j);
            Lj(c, c * n_ + j) -= options_.eps_dl;
        }
        const MatrixXd dL = Aj * Lj;
        for (int c = 0; c < nc; ++c) J.row(c * n_ + j) -= dL.row(c);
    }
    return J;
}

VectorXd HarmonicBalance::linear_solution() const {
    VectorXd x(size());
    x.head(n_) = model_.K.ldlt().solve(f_.head(n_));
    if (!x.head(n_).allFinite()) throw SingularMatrix("static stiffness is singular");
    for (int h = 1; h <= H_; ++h) {
        const double w = h * Omega_;
        Eigen::MatrixXcd Z = (model_.K - w * w * model_.M).cast<std::complex<double>>();
        Z += std::complex<double>(0.0, w) * model_.D.cast<std::complex<double>>();
        VectorXcd f(n_);
        f.real() = f_.segment((2 * h - 1) * n_, n_);
        f.imag() = f_.segment(2 * h * n_, n_);
        const VectorXcd q = Z.partialPivLu().solve(f);
        x.segment((2 * h - 1) * n_, n_) = q.real();
        x.segment(2 * h * n_, n_) = q.imag();
    }
    return x;
}

FourierSolution HarmonicBalance::solution(const VectorXd& x, int iterations, double residual) const {
    FourierSolution sol;
    sol.Omega = Omega_;
    sol.H = H_;
    sol.N_aft = N_;
    sol.eps_dl = options_.eps_dl;
    sol.coeffs = unpack(x);
    const MatrixXd L = contact_forces(x);
    sol.lambda.resize(H_ + 1);
    const Index C = L.cols();
    sol.lambda[0] = L.row(0).transpose().cast<std::complex<double>>();
    for (int h = 1; h <= H_; ++h) {
        sol.lambda[h].resize(C);
        sol.lambda[h].real() = L.row(2 * h - 1).transpose();
        sol.lambda[h].imag() = L.row(2 * h).transpose();
    }
    sol.iterations = iterations;
    sol.residual = residual;
    return sol;
}

FourierSolution HarmonicBalance::solve(const VectorXd& guess) const {
    if (guess.size() != size()) throw InvalidSpec("initial guess has the wrong size");
    const double fnorm = f_.norm() > 0.0 ? f_.norm() : 1.0;
    VectorXd x = guess;
    VectorXd R = residual(x);
    double rn = R.norm();
    for (int it = 0; it <= options_.max_iter; ++it) {
        if (!std::isfinite(rn)) break;
        if (rn <= options_.tol * fnorm) return solution(x, it, rn / fnorm);
        if (it == options_.max_iter) break;
        const VectorXd dx = jacobian(x).partialPivLu().solve(R);
        double alpha = 1.0;
        VectorXd xt, Rt;
        double rt = 0.0;
        for (int ls = 0; ls < 12; ++ls) {
            xt = x - alpha * dx;
            Rt = residual(xt);
            rt = Rt.norm();
            if (rt < rn) break;
            alpha *= 0.5;
        }
        x = xt;
        R = Rt;
        rn = rt;
    }
    throw NonConvergence("harmonic balance Newton iteration did not converge", rn / fnorm, options_.max_iter);
}

namespace {

HbmOptions options_of(const FourierSolution& sol) {
    HbmOptions o;
    o.H = sol.H;
    o.N_aft = sol.N_aft;
    o.eps_dl = sol.eps_dl;
    return o;
}

}  // namespace

std::vector<VectorXcd> hbm_residual(const FourierSolution& sol, const ReducedModel& model, const ContactConfig& cfg) {
    HarmonicBalance hb(model, cfg, sol.Omega, options_of(sol));
    return hb.unpack(hb.residual(hb.pack(sol.coeffs)));
}

std::vector<VectorXcd> aft_contact_forces(const FourierSolution& sol, const ReducedModel& model,
                                          const ContactConfig& cfg) {
    HarmonicBalance hb(model, cfg, sol.Omega, options_of(sol));
    return hb.solution(hb.pack(sol.coeffs), 0, 0.0).lambda;
}

FourierSolution solve_fixed_frequency(const ReducedModel& model, const ContactConfig& cfg, double Omega,
                                      const HbmOptions& options, const FourierSolution* guess) {
    HarmonicBalance hb(model, cfg, Omega, options);
    VectorXd x0;
    if (guess && guess->H == options.H && !guess->coeffs.empty() && guess->coeffs[0].size() == model.size())
        x0 = hb.pack(guess->coeffs);
    else
        x0 = hb.linear_solution();
    try {
        return hb.solve(x0);
    } catch (const NonConvergence&) {
        // The solution does not depend on eps_dl; approach it from a softer projection.
        const double eps0 = 1e-3 * model.Kbb().diagonal().cwiseAbs().maxCoeff();
        if (!(eps0 < options.eps_dl)) throw;
        VectorXd x = x0;
        int total = 0;
        for (double eps = eps0;; eps = std::min(10.0 * eps, options.eps_dl)) {
            HbmOptions o = options;
            o.eps_dl = eps;
            HarmonicBalance stage(model, cfg, Omega, o);
            const FourierSolution sol = stage.solve(x);
            total += sol.iterations;
            x = stage.pack(sol.coeffs);
            if (eps >= options.eps_dl) {
                FourierSolution out = sol;
                out.iterations = total;
                return out;
            }
        }
    }
}

SweepResult sweep(const ReducedModel& model, const ContactConfig& cfg, const SweepOptions& options) {
    if (options.step == 0.0) throw InvalidSpec("sweep step must be nonzero");
    if (!(options.min_step > 0.0)) throw InvalidSpec("sweep min_step must be positive");
    const double dir = options.step > 0.0 ? 1.0 : -1.0;
    const double end = options.Omega_end;
    if ((end - options.Omega_start) * dir < 0.0) throw InvalidSpec("sweep step points away from the end");
    const double nominal = std::abs(options.step);
    const double tiny = 1e-12 * std::max(1.0, std::abs(end));
    auto clamp = [&](double w) { return (w - end) * dir > -tiny ? end : w; };
    if (options.harmonic_load.size() && options.harmonic_load.size() != model.size())
        throw InvalidSpec("sweep harmonic load does not match the model size");
    ReducedModel excited;
    if (options.harmonic_load.size()) excited = model;
    auto attempt = [&](double w, const FourierSolution* guess) -> std::optional<FourierSolution> {
        const ReducedModel* m = &model;
        if (options.harmonic_load.size()) {
            excited.load.terms.clear();
            excited.load.add_term(options.harmonic_load, [w](double t) { return std::cos(w * t); });
            m = &excited;
        }
        try {
            return solve_fixed_frequency(*m, cfg, w, options.hbm, guess);
        } catch (const NonConvergence&) {
            return std::nullopt;
        }
    };

    SweepResult out;
    double last = options.Omega_start;
    std::optional<FourierSolution> prev = attempt(last, nullptr);
    if (prev) out.solutions.push_back(*prev);
    while (std::abs(last - end) > tiny) {
        const double target = clamp(last + dir * nominal);
        if (prev) {
            // Continuation with bisection of the step towards the target.
            double h = nominal;
            while (std::abs(last - target) > tiny && h >= options.min_step) {
                const double w = (target - (last + dir * h)) * dir < tiny ? target : last + dir * h;
                std::optional<FourierSolution> sol = attempt(w, &*prev);
                if (sol) {
                    out.solutions.push_back(*sol);
                    prev = std::move(sol);
                    last = w;
                } else {
                    h *= 0.5;
                }
            }
            if (std::abs(last - target) <= tiny) continue;
        }
        // Branch lost: record the gap and restart from the linear seed.
        out.gaps.emplace_back(last, target);
        prev = attempt(target, nullptr);
        if (prev) out.solutions.push_back(*prev);
        last = target;
    }
    return out;
}

}  // namespace rombo
