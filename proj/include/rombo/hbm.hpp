#pragma once

#include <complex>
#include <string>
#include <vector>

#include "rombo/cms.hpp"
#include "rombo/contact.hpp"

namespace rombo {

using Eigen::VectorXcd;

/// Periodic solution q(t) = sum_{h=-H..H} q_hat(h) exp(i h Omega t); only
/// h = 0..H is stored, negative harmonics are the complex conjugates.
struct FourierSolution {
    double Omega = 0.0;
    int H = 0;
    int N_aft = 0;
    double eps_dl = 0.0;
    std::vector<VectorXcd> coeffs;  // q_hat(h), h = 0..H
    std::vector<VectorXcd> lambda;  // lambda_hat(h), h = 0..H
    int iterations = 0;
    double residual = 0.0;  // relative residual norm

    VectorXd at(double t) const;
    /// Samples over one period at t_k = k T / n.
    MatrixXd samples(int n) const;
    /// Magnitude of the time-domain harmonic: |q_hat(0)| for h = 0, 2 |q_hat(h)| otherwise.
    double amplitude(const VectorXd& weights, int h) const;
};

enum class JacobianKind { analytic, finite_difference };

struct HbmOptions {
    int H = 20;
    int N_aft = 4096;
    double eps_dl = 1e5;
    double tol = 1e-8;
    int max_iter = 60;
    JacobianKind jacobian = JacobianKind::analytic;
};

/// Real stacked coordinates: block c = 0 holds Re q_hat(0), block 2h-1 holds
/// Re q_hat(h), block 2h holds Im q_hat(h); each block has model.size() entries.
class HarmonicBalance {
public:
    HarmonicBalance(const ReducedModel& model, const ContactConfig& cfg, double Omega, const HbmOptions& options);

    Index size() const { return n_ * (2 * H_ + 1); }
    const VectorXd& load() const { return f_; }

    VectorXd pack(const std::vector<VectorXcd>& coeffs) const;
    std::vector<VectorXcd> unpack(const VectorXd& x) const;

    /// Contact-force coefficients in the real layout (boundary rows only, per contact).
    MatrixXd contact_forces(const VectorXd& x) const;
    VectorXd residual(const VectorXd& x) const;
    MatrixXd jacobian(const VectorXd& x) const;

    /// Solution without contact forces.
    VectorXd linear_solution() const;

    FourierSolution solve(const VectorXd& guess) const;
    FourierSolution solution(const VectorXd& x, int iterations, double residual) const;

    /// Time samples of one real-layout signal (2H+1 coefficients) and back.
    VectorXd synthesize(const VectorXd& c) const;
    VectorXd analyze(const VectorXd& samples) const;

private:
    VectorXd apply_linear(const VectorXd& x) const;
    MatrixXd linear_operator() const;
    /// Effective projection arguments r_b - eps g per contact, coefficients (2H+1) x C.
    MatrixXd projection_arguments(const VectorXd& x) const;

    const ReducedModel& model_;
    ContactConfig cfg_;
    double Omega_;
    HbmOptions options_;
    Index n_;
    int H_;
    int N_;
    MatrixXd cos_;  // N x H, cos(2 pi h k / N)
    MatrixXd sin_;
    VectorXd f_;   // stacked load coefficients
    MatrixXd g0_;  // (2H+1) x C gap offset coefficients
};

/// Residual per harmonic h = 0..H (rows of the model).
std::vector<VectorXcd> hbm_residual(const FourierSolution& sol, const ReducedModel& model, const ContactConfig& cfg);

/// Contact-force coefficients per harmonic h = 0..H.
std::vector<VectorXcd> aft_contact_forces(const FourierSolution& sol, const ReducedModel& model,
                                          const ContactConfig& cfg);

FourierSolution solve_fixed_frequency(const ReducedModel& model, const ContactConfig& cfg, double Omega,
                                      const HbmOptions& options, const FourierSolution* guess = nullptr);

struct SweepOptions {
    double Omega_start = 0.0;
    double Omega_end = 0.0;
    double step = 1.0;       // signed nominal step
    double min_step = 1e-3;  // magnitude floor for bisection
    HbmOptions hbm;
    /// Reduced force shape; when set, the model's time-dependent load is
    /// replaced by harmonic_load * cos(Omega t) at every frequency.
    VectorXd harmonic_load;
};

struct SweepResult {
    std::vector<FourierSolution> solutions;
    std::vector<std::pair<double, double>> gaps;  // frequency intervals without a solution
};

SweepResult sweep(const ReducedModel& model, const ContactConfig& cfg, const SweepOptions& options);

}  // namespace rombo
