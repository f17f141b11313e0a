#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rombo/cms.hpp"
#include "rombo/contact.hpp"
#include "rombo/hbm.hpp"
#include "rombo/stepping.hpp"

namespace rombo {

/// A ready-to-run problem: reduced model, contacts, initial state and outputs.
struct Scenario {
    std::string name;
    SecondOrderModel full;  // gap coordinates, boundary first
    MatrixXd to_physical;   // full-order physical q = to_physical * full coordinates
    ReducedModel reduced;
    ContactConfig contacts;
    Integrator integrator = Integrator::leapfrog_frictionless;
    double dt = 1e-3;
    double t_start = 0.0;
    double t_end = 0.0;
    VectorXd q0;  // reduced coordinates
    VectorXd u0;
    std::vector<Probe> probes;
    std::optional<EnergyModel> energy;
    double Omega = 0.0;  // excitation or rotation frequency (rad/s)
    VectorXd excitation;  // full-order force shape of the harmonic load, if any

    SimulationOptions simulation_options() const;
    TimeSeries run(int stride = 1) const;

    /// Reduced weights of a full-order physical DOF.
    VectorXd physical_weights(Index dof, double sign = 1.0) const;
    /// Replaces the harmonic load by excitation * history(t).
    void set_excitation(std::function<double(double)> history);
};

struct BarDropParams {
    int n_elems = 1000;
    double length = 10.0;
    double rho = 1.0;
    double E = 900.0;
    double q0 = 0.5;  // initial height of the lower end
    double a_g = 10.0;
    int n_mod = 20;
    double dt = 1e-4;
    double t_end = 20.0;
    bool massless = true;  // massless CB + leapfrog, else standard CB + Moreau
    double restitution = 0.0;
};

Scenario scenario_bouncing_bar(const BarDropParams& p);

struct PlateParams {
    // Thickness along y (contact normal), width along x, length along z; clamped at z = 0.
    int nx = 4;
    int ny = 2;
    int nz = 20;
    double lx = 0.040;
    double ly = 0.008;
    double lz = 0.150;
    double rho = 8220.0;
    double E = 184e9;
    double nu = 0.33;
    double gap = 1e-4;
    double force = 1.0;
    double zeta = 0.01;
    int n_mod = 20;
    ReductionMethod method = ReductionMethod::macneal;
    int steps_per_period = 500;
};

/// Contacts on three free-end nodes of the edge y = 0; harmonic force in y at
/// the opposite free-end corner; probe q_R = -u_y of the middle contact node.
Scenario scenario_plate_analog(const PlateParams& p);

/// Plate with a constant-frequency excitation force * cos(Omega t).
Scenario plate_at_frequency(const PlateParams& p, double Omega, double periods);

/// Plate under a linear frequency sweep from Omega_start to Omega_end at a
/// rate of 1.5% per 100 pseudo-periods; sc.Omega is the final frequency.
Scenario plate_sweep(const PlateParams& p, double Omega_start, double Omega_end);

struct SdofWallParams {
    double m = 1.0;
    double k = 1e4;
    double k_contact = 1e6;  // stiffness between the mass and its massless contact point
    double zeta = 0.02;
    double force = 1.0;
    double gap = 1e-3;
};

/// Mass on a spring, a stiff massless link to a contact point and a rigid wall
/// at distance gap; harmonic force on the mass; probe = mass displacement.
Scenario scenario_sdof_wall(const SdofWallParams& p, double Omega, double periods, int steps_per_period);

struct RubParams {
    int nx = 4;  // chord (axial)
    int ny = 2;  // thickness (circumferential)
    int nz = 12;  // span (radial), clamped at z = 0
    double lx = 0.040;
    double ly = 0.004;
    double lz = 0.100;
    double rho = 9000.0;
    double E = 210e9;
    double nu = 0.3;
    double mu = 0.15;
    double zeta = 0.05;
    int n_mod = 10;
    double gap_mean = 0.356e-3;
    double gap_amplitude = 0.37e-3;
    double casing_radius = 0.317;
    bool massless = true;  // MacNeal + frictional leapfrog, else Rubin + Moreau
    double restitution = 0.99;
    int levels_per_revolution = 1000;
    double revolutions = 5.0;
};

/// Blade analog rubbing on an oval casing at the four tip corners; rotation
/// Omega_rot = omega_1 / 2; probe q_R = u_z at the tip centre line.
Scenario scenario_rub_analog(const RubParams& p);

/// Relative RMS deviation; the finer series is interpolated onto the coarser grid.
double rms_error(const std::vector<double>& t, const std::vector<double>& q, const std::vector<double>& t_ref,
                 const std::vector<double>& q_ref);

std::vector<double> sample_times(const TimeSeries& ts);
std::vector<double> probe_values(const TimeSeries& ts, Index probe = 0);
/// Sum of the normal contact forces per sample.
std::vector<double> normal_force(const TimeSeries& ts, int dim);

/// Number of intervals where the signal exceeds `threshold`; intervals separated
/// by less than `merge_gap` (in time) are counted once.
int count_bursts(const std::vector<double>& t, const std::vector<double>& signal, double threshold, double merge_gap);

/// Local maxima of the lower-end height during flight phases above `min_height`.
std::vector<double> flight_apexes(const std::vector<double>& t, const std::vector<double>& q_b, double min_height);

/// Mean and first-harmonic amplitude over an integer number of periods at the end.
struct HarmonicContent {
    double mean = 0.0;
    double first = 0.0;
};
HarmonicContent harmonic_content(const std::vector<double>& t, const std::vector<double>& q, double Omega,
                                 int periods);

/// Smallest level in the ascending grid for which `stable` returns true.
/// Returns -1 when none does.
int smallest_stable_level(const std::vector<int>& grid, const std::function<bool(int)>& stable);

/// Bisection for the smallest stable level in (lo, hi], assuming stability is
/// monotone in the level and `stable(hi)` holds. Returns -1 if hi is unstable.
int smallest_stable_level_bisect(int lo, int hi, const std::function<bool(int)>& stable);

}  // namespace rombo
