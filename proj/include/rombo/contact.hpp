#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "rombo/cms.hpp"

namespace rombo {

enum class ContactMode { open, preloaded };

struct ContactPoint {
    double mu = 0.0;
    double preload = 0.0;  // normal preload (N); zero for initially open contacts
    ContactMode mode = ContactMode::open;
    double restitution_n = 0.0;  // Moreau only
    double restitution_t = 0.0;  // Moreau only
};

/// Gap offset g0(t) or its rate; returns the stacked contact vector.
using GapFunction = std::function<VectorXd(double)>;

/// Contacts acting on the first dim*C reduced (gap) coordinates, each stacked
/// as (n) or (n, t1, t2). The gap is g = q_b + g0(t).
struct ContactConfig {
    int dim = 1;
    std::vector<ContactPoint> contacts;
    GapFunction gap_offset;  // empty: zero
    GapFunction gap_rate;    // empty: zero

    Index n_contacts() const { return static_cast<Index>(contacts.size()); }
    Index size() const { return dim * n_contacts(); }
    VectorXd g0(double t) const;
    VectorXd g0_dot(double t) const;
    bool frictional() const;

    /// Throws InvalidSpec on negative mu / preload, or preload on open contacts.
    void validate() const;

    /// C frictionless open contacts with a constant gap offset.
    static ContactConfig frictionless(Index n_contacts, double gap = 0.0);
};

/// Ascending contact indices.
using ActiveSet = std::vector<Index>;

/// Per-contact admissible set data for a subset of contacts.
struct ConeSet {
    int dim = 1;
    VectorXd mu;
    VectorXd preload;

    Index n_contacts() const { return mu.size(); }
    Index size() const { return dim * n_contacts(); }
};

ConeSet cones_for(const ContactConfig& cfg, const ActiveSet& active, double preload_scale = 1.0);

double proj_halfline(double xi);
Eigen::Vector2d proj_disk(const Eigen::Vector2d& xi, double radius);

/// Projection onto C_j = {n + preload >= 0} x Disk(mu (n + preload)).
/// The disk radius uses the already projected normal component.
VectorXd proj_admissible(const VectorXd& x, const ConeSet& cones);
VectorXd proj_admissible(const VectorXd& x, const ContactConfig& cfg, const ActiveSet& active);

struct InclusionOptions {
    /// Explicit step; unset: diagonal scaling with a spectrally tuned factor.
    std::optional<double> eps;
    double eps_factor = 1.0;
    double tol = 1e-10;
    int max_iter = 5000;
};

struct InclusionResult {
    VectorXd x;
    int iterations = 0;
    double residual = 0.0;
};

/// Per-component step sizes of the projected Jacobi iteration.
VectorXd inclusion_steps(const MatrixXd& G, const ConeSet& cones, const InclusionOptions& options);

/// Solves -(G x + c) in N_C(x) by the fixed point x = proj_C[x - eps (G x + c)]
/// with simultaneous (Jacobi) updates. Throws NonConvergence.
InclusionResult solve_inclusion(const MatrixXd& G, const VectorXd& c, const ConeSet& cones,
                                const InclusionOptions& options, const VectorXd* warm_start = nullptr,
                                const VectorXd* steps = nullptr);

struct DelassusSystem {
    MatrixXd G;
    VectorXd c;
    ActiveSet active;
};

enum class ContactLevel { displacement, velocity };

/// Split of the contacts for one boundary solve.
struct BoundaryPartition {
    ActiveSet active;          // solved through the inclusion
    std::vector<Index> stuck;  // preloaded, inactive: displacement held at q_b^{k-1}
};

/// Static boundary problem of a massless model with W_b = I:
/// K_bb q_b + K_bi q_i - lambda = f_b.
class MasslessBoundary {
public:
    MasslessBoundary(const ReducedModel& model, const ContactConfig& cfg);

    const MatrixXd& flexibility() const { return flexibility_; }
    const ContactConfig& config() const { return cfg_; }

    /// Gaps for lambda = 0.
    VectorXd predicted_gaps(const VectorXd& q_i, const VectorXd& f_b, double t) const;
    /// Contact forces for q_b = q_b_prev.
    VectorXd predicted_forces(const VectorXd& q_b_prev, const VectorXd& q_i, const VectorXd& f_b) const;

    ActiveSet predict_open(const VectorXd& q_i, const VectorXd& f_b, double t) const;
    ActiveSet predict_preloaded(const VectorXd& q_b_prev, const VectorXd& q_i, const VectorXd& f_b) const;

    /// Combined predictor: open contacts by gap, preloaded by force; inside a
    /// coupled group with any active contact all preloaded contacts are solved.
    BoundaryPartition partition(const VectorXd& q_b_prev, const VectorXd& q_i, const VectorXd& f_b,
                                double t) const;

    /// Delassus system in the active contact forces. Displacement level:
    /// G lambda + c = gap. Velocity level: normal rows still give the gap,
    /// tangential rows give dt * slip velocity.
    DelassusSystem delassus(const BoundaryPartition& part, ContactLevel level, const VectorXd& q_b_prev,
                            const VectorXd& q_i, const VectorXd& f_b, double t, double dt) const;

    /// Boundary displacements and the full contact force vector for given active forces.
    std::pair<VectorXd, VectorXd> recover(const BoundaryPartition& part, const VectorXd& lambda_active,
                                          const VectorXd& q_b_prev, const VectorXd& q_i,
                                          const VectorXd& f_b) const;

    /// Contact groups coupled through nonzero off-diagonal blocks of K_bb.
    const std::vector<int>& groups() const { return group_; }

private:
    struct FreeBlock {
        std::vector<Index> rows;  // boundary rows with free displacement
        MatrixXd inverse;         // K_FF^{-1}
    };
    const FreeBlock& free_block(const std::vector<Index>& stuck) const;
    std::vector<Index> rows_of(const std::vector<Index>& contacts) const;

    const ReducedModel& model_;
    ContactConfig cfg_;
    MatrixXd flexibility_;
    std::vector<int> group_;
    mutable std::map<std::vector<Index>, FreeBlock> cache_;
};

/// Convenience wrappers around MasslessBoundary (no partition, no stuck contacts).
ActiveSet predict_active_set_open(const ReducedModel& model, const ContactConfig& cfg, const VectorXd& q_i,
                                  double t);
ActiveSet predict_active_set_preloaded(const ReducedModel& model, const ContactConfig& cfg,
                                       const VectorXd& q_b_prev, const VectorXd& q_i, double t);
DelassusSystem build_massless_frictionless_system(const ReducedModel& model, const ContactConfig& cfg,
                                                  const VectorXd& q_i, double t, const ActiveSet& active);
DelassusSystem build_massless_frictional_system(const ReducedModel& model, const ContactConfig& cfg,
                                                const VectorXd& q_b_prev, const VectorXd& q_i, double t,
                                                double dt, const ActiveSet& active);

}  // namespace rombo
