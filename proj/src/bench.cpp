#include "rombo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rombo/error.hpp"

namespace rombo {

SimulationOptions Scenario::simulation_options() const {
    SimulationOptions o;
    o.integrator = integrator;
    o.t_start = t_start;
    o.t_end = t_end;
    o.dt = dt;
    o.probes = probes;
    o.energy = energy;
    return o;
}

TimeSeries Scenario::run(int stride) const {
    SimulationOptions o = simulation_options();
    o.stride = stride;
    return simulate(reduced, contacts, q0, u0, o);
}

VectorXd Scenario::physical_weights(Index dof, double sign) const {
    if (to_physical.size() == 0) return sign * reduced.R.row(dof).transpose();
    return sign * (to_physical.row(dof) * reduced.R).transpose();
}

void Scenario::set_excitation(std::function<double(double)> history) {
    if (excitation.size() != full.n_dofs()) throw InvalidSpec("scenario has no excitation shape");
    full.load.terms.clear();
    full.load.add_term(excitation, std::move(history));
    reduced.load = full.load.transformed(reduced.R);
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

ReductionOptions reduction_options(int n_mod, double zeta) {
    ReductionOptions o;
    o.n_mod = n_mod;
    o.zeta = zeta;
    return o;
}

}  // namespace

Scenario scenario_bouncing_bar(const BarDropParams& p) {
    MeshSpec ms;
    ms.kind = MeshSpec::Kind::bar1d;
    ms.nx = p.n_elems;
    ms.lx = p.length;
    ms.rho = p.rho;
    ms.E = p.E;
    Scenario sc;
    sc.name = "bouncing-bar";
    sc.full = assemble(ms);
    sc.full.load = Load(sc.full.n_dofs());
    sc.full.load.constant = gravity_load(sc.full, p.a_g);
    const ReductionMethod method = p.massless ? ReductionMethod::massless_cb : ReductionMethod::craig_bampton;
    sc.reduced = reduce(sc.full, method, reduction_options(p.n_mod, 0.0));
    sc.contacts = ContactConfig::frictionless(1);
    sc.contacts.contacts[0].restitution_n = p.restitution;
    sc.integrator = p.massless ? Integrator::leapfrog_frictionless : Integrator::moreau;
    sc.dt = p.dt;
    sc.t_end = p.t_end;

    const Index n = sc.full.n_dofs();
    const VectorXd ones = VectorXd::Ones(n);
    const VectorXd rigid = sc.reduced.project(ones);
    sc.q0 = p.q0 * rigid;
    sc.u0 = VectorXd::Zero(sc.reduced.size());
    sc.probes.push_back({"q_bottom", sc.physical_weights(0)});
    sc.probes.push_back({"q_top", sc.physical_weights(n - 1)});

    EnergyModel em;
    em.rigid_basis = rigid;
    em.conservative_force = sc.reduced.load.constant;
    VectorXd x(n);
    for (Index i = 0; i < n; ++i) x[i] = sc.full.node_coords[static_cast<std::size_t>(i)][0];
    em.potential_offset = p.a_g * ones.dot(sc.full.M * x);
    sc.energy = em;
    return sc;
}

Scenario scenario_plate_analog(const PlateParams& p) {
    MeshSpec ms;
    ms.kind = MeshSpec::Kind::hex8;
    ms.nx = p.nx;
    ms.ny = p.ny;
    ms.nz = p.nz;
    ms.lx = p.lx;
    ms.ly = p.ly;
    ms.lz = p.lz;
    ms.rho = p.rho;
    ms.E = p.E;
    ms.nu = p.nu;
    ms.clamp = "z0";
    const double hx = p.lx / p.nx;
    for (int c = 0; c < 3; ++c) ms.boundary.push_back({Eigen::Vector3d(c * hx, 0.0, p.lz), 1});

    Scenario sc;
    sc.name = "plate";
    sc.full = assemble(ms);
    const Index force_dof = nearest_dof(sc.full, Eigen::Vector3d(p.lx, p.ly, p.lz), 1);
    sc.excitation = VectorXd::Zero(sc.full.n_dofs());
    sc.excitation[force_dof] = p.force;
    sc.reduced = reduce(sc.full, p.method, reduction_options(p.n_mod, p.zeta));
    sc.contacts = ContactConfig::frictionless(3, p.gap);
    sc.integrator = sc.reduced.massless ? Integrator::leapfrog_frictionless : Integrator::moreau;
    sc.Omega = solve_modes(sc.full, 1, InterfaceCondition::free).omegas[0];
    sc.dt = two_pi / (sc.Omega * p.steps_per_period);
    sc.q0 = VectorXd::Zero(sc.reduced.size());
    sc.u0 = sc.q0;
    sc.probes.push_back({"q_R", sc.physical_weights(1, -1.0)});
    return sc;
}

Scenario plate_at_frequency(const PlateParams& p, double Omega, double periods) {
    Scenario sc = scenario_plate_analog(p);
    sc.Omega = Omega;
    sc.set_excitation([Omega](double t) { return std::cos(Omega * t); });
    sc.dt = two_pi / (Omega * p.steps_per_period);
    sc.t_end = periods * two_pi / Omega;
    return sc;
}

Scenario plate_sweep(const PlateParams& p, double Omega_start, double Omega_end) {
    if (!(Omega_start > 0) || !(Omega_end > 0)) throw InvalidSpec("plate sweep needs positive frequencies");
    Scenario sc = scenario_plate_analog(p);
    // Omega(t) = Omega_start + rate t with rate = 0.015 Omega_start per 100 periods.
    const double rate = std::copysign(0.015 * Omega_start * Omega_start / (100.0 * two_pi), Omega_end - Omega_start);
    const double duration = rate == 0.0 ? 0.0 : (Omega_end - Omega_start) / rate;
    sc.set_excitation([=](double t) { return std::cos(Omega_start * t + 0.5 * rate * t * t); });
    sc.Omega = Omega_end;
    sc.dt = two_pi / (std::max(Omega_start, Omega_end) * p.steps_per_period);
    sc.t_end = duration;
    return sc;
}

Scenario scenario_sdof_wall(const SdofWallParams& p, double Omega, double periods, int steps_per_period) {
    if (!(p.m > 0) || !(p.k > 0) || !(p.k_contact > 0) || p.zeta < 0)
        throw InvalidSpec("sdof-wall needs positive m, k, k_contact and zeta >= 0");
    Scenario sc;
    sc.name = "sdof-wall";
    SecondOrderModel& f = sc.full;
    f.K.resize(2, 2);
    f.K << p.k_contact, -p.k_contact, -p.k_contact, p.k_contact + p.k;
    f.M = MatrixXd::Zero(2, 2);
    f.M(1, 1) = p.m;
    f.D = MatrixXd::Zero(2, 2);
    f.D(1, 1) = 2.0 * p.zeta * std::sqrt(p.k * p.m);
    f.boundary_dofs = {0};
    f.node_coords = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    f.dof_labels = {{0, 0}, {1, 0}};
    f.load = Load(2);
    sc.excitation = Eigen::Vector2d(0.0, p.force);

    ReducedModel& r = sc.reduced;
    r.method = ReductionMethod::massless_cb;
    r.R = MatrixXd::Identity(2, 2);
    r.K = f.K;
    r.M = f.M;
    r.D = f.D;
    r.n_boundary = 1;
    r.massless = true;
    r.omegas_inner = VectorXd::Constant(1, std::sqrt(p.k / p.m));
    r.load = f.load;

    sc.contacts = ContactConfig::frictionless(1, p.gap);
    sc.integrator = Integrator::leapfrog_frictionless;
    sc.Omega = Omega;
    sc.set_excitation([Omega](double t) { return std::cos(Omega * t); });
    sc.dt = two_pi / (Omega * steps_per_period);
    sc.t_end = periods * two_pi / Omega;
    sc.q0 = VectorXd::Zero(2);
    sc.u0 = sc.q0;
    sc.probes.push_back({"q", Eigen::Vector2d(0.0, 1.0)});
    return sc;
}

Scenario scenario_rub_analog(const RubParams& p) {
    MeshSpec ms;
    ms.kind = MeshSpec::Kind::hex8;
    ms.nx = p.nx;
    ms.ny = p.ny;
    ms.nz = p.nz;
    ms.lx = p.lx;
    ms.ly = p.ly;
    ms.lz = p.lz;
    ms.rho = p.rho;
    ms.E = p.E;
    ms.nu = p.nu;
    ms.clamp = "z0";
    const SecondOrderModel blade = assemble(ms);

    // Tip corners; gap coordinates (normal = -u_z, t1 = u_y, t2 = u_x).
    const std::vector<Eigen::Vector3d> corners = {
        {0.0, 0.0, p.lz}, {p.lx, 0.0, p.lz}, {0.0, p.ly, p.lz}, {p.lx, p.ly, p.lz}};
    const Index C = static_cast<Index>(corners.size());
    MatrixXd W = MatrixXd::Zero(blade.n_dofs(), 3 * C);
    for (Index c = 0; c < C; ++c) {
        W(nearest_dof(blade, corners[c], 2), 3 * c) = -1.0;
        W(nearest_dof(blade, corners[c], 1), 3 * c + 1) = 1.0;
        W(nearest_dof(blade, corners[c], 0), 3 * c + 2) = 1.0;
    }
    GapTransform gt = to_gap_coordinates(blade, W);

    Scenario sc;
    sc.name = "rub";
    sc.full = std::move(gt.model);
    sc.to_physical = std::move(gt.T);
    const ReductionMethod method = p.massless ? ReductionMethod::macneal : ReductionMethod::rubin;
    sc.reduced = reduce(sc.full, method, reduction_options(p.n_mod, p.zeta));
    sc.integrator = p.massless ? Integrator::leapfrog_frictional : Integrator::moreau;

    const double w1 = solve_modes(blade, 1, InterfaceCondition::free).omegas[0];
    const double Om = 0.5 * w1;
    sc.Omega = Om;
    const double V = Om * p.casing_radius;
    const double g_mean = p.gap_mean;
    const double g_amp = p.gap_amplitude;

    sc.contacts.dim = 3;
    ContactPoint cp;
    cp.mu = p.mu;
    cp.restitution_n = p.restitution;
    sc.contacts.contacts.assign(static_cast<std::size_t>(C), cp);
    sc.contacts.gap_offset = [=](double t) {
        VectorXd g = VectorXd::Zero(3 * C);
        for (Index c = 0; c < C; ++c) {
            g[3 * c] = g_mean + g_amp * std::cos(2.0 * Om * t);
            g[3 * c + 1] = -V * t;
        }
        return g;
    };
    sc.contacts.gap_rate = [=](double t) {
        VectorXd g = VectorXd::Zero(3 * C);
        for (Index c = 0; c < C; ++c) {
            g[3 * c] = -2.0 * Om * g_amp * std::sin(2.0 * Om * t);
            g[3 * c + 1] = -V;
        }
        return g;
    };

    const double revolution = two_pi / Om;
    sc.dt = revolution / p.levels_per_revolution;
    sc.t_end = p.revolutions * revolution;
    sc.q0 = VectorXd::Zero(sc.reduced.size());
    sc.u0 = sc.q0;
    const Index probe_dof = nearest_dof(blade, Eigen::Vector3d(0.5 * p.lx, 0.5 * p.ly, p.lz), 2);
    sc.probes.push_back({"q_R", sc.physical_weights(probe_dof)});
    return sc;
}

double rms_error(const std::vector<double>& t, const std::vector<double>& q, const std::vector<double>& t_ref,
                 const std::vector<double>& q_ref) {
    if (t.size() != q.size() || t_ref.size() != q_ref.size() || t.size() < 2 || t_ref.size() < 2)
        throw InvalidSpec("rms_error: series need matching time grids with at least two samples");
    // Interpolate the denser series onto the coarser grid.
    auto interp = [](const std::vector<double>& ts, const std::vector<double>& vs, double x) {
        if (x <= ts.front()) return vs.front();
        if (x >= ts.back()) return vs.back();
        const auto it = std::upper_bound(ts.begin(), ts.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - ts.begin());
        const double w = (x - ts[i - 1]) / (ts[i] - ts[i - 1]);
        return (1.0 - w) * vs[i - 1] + w * vs[i];
    };
    const bool coarse_is_q = t.size() <= t_ref.size();
    const std::vector<double>& grid = coarse_is_q ? t : t_ref;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double a = coarse_is_q ? q[k] : interp(t, q, grid[k]);
        const double b = coarse_is_q ? interp(t_ref, q_ref, grid[k]) : q_ref[k];
        num += (a - b) * (a - b);
        den += b * b;
    }
    if (den == 0.0) throw InvalidSpec("rms_error: undefined reference (all zero)");
    return std::sqrt(num / den);
}

std::vector<double> sample_times(const TimeSeries& ts) {
    std::vector<double> t;
    t.reserve(ts.samples.size());
    for (const Sample& s : ts.samples) t.push_back(s.t);
    return t;
}

std::vector<double> probe_values(const TimeSeries& ts, Index probe) {
    std::vector<double> v;
    v.reserve(ts.samples.size());
    for (const Sample& s : ts.samples) v.push_back(s.probe_q[probe]);
    return v;
}

std::vector<double> normal_force(const TimeSeries& ts, int dim) {
    std::vector<double> v;
    v.reserve(ts.samples.size());
    for (const Sample& s : ts.samples) {
        double sum = 0.0;
        for (Index r = 0; r < s.lambda.size(); r += dim) sum += s.lambda[r];
        v.push_back(sum);
    }
    return v;
}

int count_bursts(const std::vector<double>& t, const std::vector<double>& signal, double threshold,
                 double merge_gap) {
    int count = 0;
    bool inside = false;
    double last_end = -1e300;
    for (std::size_t k = 0; k < signal.size(); ++k) {
        const bool above = signal[k] > threshold;
        if (above && !inside) {
            if (t[k] - last_end > merge_gap) ++count;
            inside = true;
        } else if (!above && inside) {
            inside = false;
            last_end = t[k];
        }
    }
    return count;
}

std::vector<double> flight_apexes(const std::vector<double>& t, const std::vector<double>& q_b, double min_height) {
    (void)t;
    std::vector<double> apexes;
    std::size_t k = 0;
    // Skip the initial drop.
    while (k < q_b.size() && q_b[k] > min_height) ++k;
    while (k < q_b.size()) {
        while (k < q_b.size() && q_b[k] <= min_height) ++k;
        if (k == q_b.size()) break;
        double peak = q_b[k];
        while (k < q_b.size() && q_b[k] > min_height) peak = std::max(peak, q_b[k++]);
        if (k < q_b.size()) apexes.push_back(peak);
    }
    return apexes;
}

HarmonicContent harmonic_content(const std::vector<double>& t, const std::vector<double>& q, double Omega,
                                 int periods) {
    if (t.size() != q.size() || t.size() < 3) throw InvalidSpec("harmonic_content: bad series");
    const double dt = t[1] - t[0];
    const double window = periods * two_pi / Omega;
    const std::size_t n = static_cast<std::size_t>(std::lround(window / dt));
    if (n + 1 > t.size()) throw InvalidSpec("harmonic_content: series shorter than the window");
    const std::size_t first = t.size() - 1 - n;
    // Rectangle rule over whole periods: exact for the retained harmonics.
    double mean = 0.0, a = 0.0, b = 0.0;
    for (std::size_t k = first; k < first + n; ++k) {
        mean += q[k];
        a += q[k] * std::cos(Omega * t[k]);
        b += q[k] * std::sin(Omega * t[k]);
    }
    HarmonicContent hc;
    hc.mean = mean / n;
    hc.first = 2.0 * std::hypot(a, b) / n;
    return hc;
}

int smallest_stable_level(const std::vector<int>& grid, const std::function<bool(int)>& stable) {
    for (int level : grid)
        if (stable(level)) return level;
    return -1;
}

int smallest_stable_level_bisect(int lo, int hi, const std::function<bool(int)>& stable) {
    if (lo >= hi || !stable(hi)) return -1;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (stable(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace rombo
