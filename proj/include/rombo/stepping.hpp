#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rombo/cms.hpp"
#include "rombo/contact.hpp"

namespace rombo {

enum class Integrator { leapfrog_frictionless, leapfrog_frictional, moreau };

std::string_view to_string(Integrator integrator);
Integrator integrator_from_string(std::string_view name);

/// Leapfrog state at the start of step k: q_i^k, u_i^{k-1/2} and q_b^{k-1}.
struct StaggeredState {
    long k = 0;
    double t = 0.0;
    VectorXd q_i;
    VectorXd u_i;     // u_i^{k-1/2}
    VectorXd q_b;     // q_b^{k-1}
    VectorXd lambda;  // last contact forces, warm start
};

/// Moreau state at the start of step k: q^k and u^{k-1/2} in reduced coordinates.
struct MoreauState {
    long k = 0;
    double t = 0.0;
    VectorXd q;
    VectorXd u;
    VectorXd percussion;  // last impulses, warm start
};

/// Everything known at t^k after one step.
struct StepRecord {
    long k = 0;
    double t = 0.0;
    VectorXd q;        // q^k, reduced coordinates [q_b; q_i]
    VectorXd u_minus;  // u^{k-1/2}
    VectorXd u_plus;   // u^{k+1/2}
    VectorXd lambda;   // contact forces (leapfrog) or percussions / dt (Moreau), boundary size
    Index n_active = 0;
    int iterations = 0;
};

struct StepOptions {
    InclusionOptions inclusion;
    /// Retries of a non-converged inclusion with the step factor halved.
    int retries = 3;
};

/// Staggered leapfrog for massless-boundary models with W_b = I.
class LeapfrogIntegrator {
public:
    LeapfrogIntegrator(const ReducedModel& model, const ContactConfig& cfg, double dt, bool frictional,
                       StepOptions options = {});

    StaggeredState initial_state(const VectorXd& q0, const VectorXd& u0, double t0, int n_warm = 0) const;
    StepRecord step(StaggeredState& state) const;

    double dt() const { return dt_; }
    const MasslessBoundary& boundary() const { return boundary_; }

private:
    std::pair<VectorXd, VectorXd> solve_boundary(const StaggeredState& s, const VectorXd& f_b, int& iterations,
                                                 Index& n_active) const;

    const ReducedModel& model_;
    MasslessBoundary boundary_;
    double dt_;
    bool frictional_;
    StepOptions options_;
    Eigen::LDLT<MatrixXd> lhs_;  // M_ii + dt/2 D_ii
    MatrixXd rhs_;               // M_ii - dt/2 D_ii
};

/// Symmetric Moreau time stepping on a mass-carrying reduced model; the
/// first n_boundary coordinates are the gap coordinates.
class MoreauIntegrator {
public:
    MoreauIntegrator(const ReducedModel& model, const ContactConfig& cfg, double dt, StepOptions options = {});

    MoreauState initial_state(const VectorXd& q0, const VectorXd& u0, double t0) const;
    StepRecord step(MoreauState& state) const;

    double dt() const { return dt_; }

private:
    const ReducedModel& model_;
    ContactConfig cfg_;
    double dt_;
    StepOptions options_;
    Eigen::LDLT<MatrixXd> lhs_;  // M + dt/2 D
    MatrixXd rhs_;               // M - dt/2 D
    MatrixXd AinvW_;             // (M + dt/2 D)^{-1} W
    MatrixXd delassus_;          // W^T (M + dt/2 D)^{-1} W
};

/// Linear kinetic energy split into a rigid part (projection of the velocity
/// onto a rigid basis) and the rest. Conservative loads enter through the
/// potential offset - f_c^T q.
struct EnergyModel {
    MatrixXd rigid_basis;  // reduced coordinates, may have zero columns
    VectorXd conservative_force;
    double potential_offset = 0.0;
};

struct EnergyBreakdown {
    double total = 0.0;
    double rigid = 0.0;
    double elastic = 0.0;
    double kinetic = 0.0;
    double strain = 0.0;
};

/// Energy at t^k from the staggered velocities; invariant of the leapfrog
/// scheme for undamped linear motion.
EnergyBreakdown energy_breakdown(const ReducedModel& model, const EnergyModel& energy, const VectorXd& q,
                                 const VectorXd& u_minus, const VectorXd& u_plus);

/// Energy at t^{k+1/2}; conserved in free flight and across impacts with
/// unit restitution, non-increasing across impacts otherwise.
EnergyBreakdown energy_breakdown_half_step(const ReducedModel& model, const EnergyModel& energy, const VectorXd& q,
                                           const VectorXd& q_next, const VectorXd& u_plus);

/// Output point: value = weights . q (reduced coordinates).
struct Probe {
    std::string name;
    VectorXd weights;
};

struct SimulationOptions {
    Integrator integrator = Integrator::leapfrog_frictionless;
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 1e-3;
    int stride = 1;
    int n_warm = 0;
    StepOptions step;
    std::vector<Probe> probes;
    std::optional<EnergyModel> energy;
    /// Divergence when |u| exceeds this factor times the initial velocity scale (at least 1).
    double divergence_factor = 1e8;
    bool keep_coordinates = false;
};

struct Sample {
    double t = 0.0;
    VectorXd probe_q;
    VectorXd probe_u;  // mean of the neighbouring half-step velocities
    VectorXd q_b;
    VectorXd lambda;
    VectorXd q;  // only with keep_coordinates
    EnergyBreakdown energy;
    Index n_active = 0;
    int iterations = 0;
};

struct TimeSeries {
    std::vector<std::string> probe_names;
    std::vector<Sample> samples;
    long steps = 0;
    int max_iterations = 0;
};

/// Throws Divergence when the solution blows up and NonConvergence when the
/// inclusion solver fails after its retries.
TimeSeries simulate(const ReducedModel& model, const ContactConfig& cfg, const VectorXd& q0, const VectorXd& u0,
                    const SimulationOptions& options);

}  // namespace rombo
