#include "rombo/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rombo/error.hpp"

namespace rombo {

using nlohmann::json;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("ROMBO_LOG");
        const std::string s = env ? env : "warn";
        if (s == "error") return LogLevel::error;
        if (s == "info") return LogLevel::info;
        if (s == "debug") return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& msg) {
    if (level <= log_level()) std::cerr << "rombo: " << msg << "\n";
}

/// Exclusive use of an output directory for the lifetime of a run.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".rombo.lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) throw Error("output directory " + dir.string() + " is in use (remove " + path_.string() + " if stale)");
    }
    ~OutputLock() {
        ::close(fd_);
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text << "\n";
}

struct Context {
    RunConfig cfg;
    fs::path out;
};

void write_summary(const Context& ctx, json summary) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    summary["metadata"] = {{"timestamp", stamp}, {"threads", ctx.cfg.threads}, {"seed", ctx.cfg.seed}};
    write_text(ctx.out / "summary.json", summary.dump(2));
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------- scenarios

Scenario build_custom(const RunConfig& c) {
    SecondOrderModel m = c.source == "matrices" ? import_matrices(c.matrices) : assemble(c.mesh);
    VectorXd excitation = VectorXd::Zero(m.n_dofs());
    double load_omega = 0.0;
    for (const PointLoad& l : c.loads) {
        if (m.node_coords.empty()) throw InvalidSpec("config key 'loads': model has no node coordinates");
        const Index dof = nearest_dof(m, l.point, l.direction);
        m.load.constant[dof] += l.constant;
        if (l.amplitude != 0.0) {
            if (load_omega != 0.0 && l.omega != load_omega)
                throw InvalidSpec("config key 'loads': harmonic loads must share one omega_rad_s");
            load_omega = l.omega;
            excitation[dof] += l.amplitude;
        }
    }
    for (const LoadTerm& term : m.load.terms) excitation += term.shape;
    m.load.terms.clear();

    const int d = c.contact_dim;
    const Index B = m.n_boundary();
    if (B == 0 || B % d != 0)
        throw InvalidSpec("config key 'contact.dim': boundary DOF count " + std::to_string(B) +
                          " is not a positive multiple of the contact dimension");
    const Index C = B / d;
    std::vector<ContactSpec> specs = c.contacts;
    if (specs.empty()) specs.assign(static_cast<std::size_t>(C), ContactSpec{});
    if (static_cast<Index>(specs.size()) != C)
        throw InvalidSpec("config key 'contact.points': expected " + std::to_string(C) + " entries");

    MatrixXd W = MatrixXd::Zero(m.n_dofs(), B);
    VectorXd gap = VectorXd::Zero(B);
    ContactConfig contacts;
    contacts.dim = d;
    for (Index j = 0; j < C; ++j) {
        const ContactSpec& s = specs[static_cast<std::size_t>(j)];
        for (int r = 0; r < d; ++r) W(m.boundary_dofs[static_cast<std::size_t>(d * j + r)], d * j + r) = r == 0 ? s.sign : 1.0;
        gap[d * j] = s.gap;
        contacts.contacts.push_back({s.mu, s.preload, s.mode, s.restitution_n, s.restitution_t});
    }
    contacts.gap_offset = [gap](double) { return gap; };
    contacts.validate();

    GapTransform gt = to_gap_coordinates(m, W);
    Scenario sc;
    sc.name = "custom";
    sc.full = std::move(gt.model);
    sc.to_physical = gt.T;
    sc.excitation = gt.T.transpose() * excitation;
    sc.reduced = reduce(sc.full, c.method, c.reduction);
    sc.contacts = std::move(contacts);
    if (sc.excitation.squaredNorm() > 0.0) {
        const double w = load_omega;
        sc.set_excitation([w](double t) { return std::cos(w * t); });
    }
    const bool frictional = sc.contacts.frictional();
    sc.integrator = sc.reduced.massless
                        ? (frictional ? Integrator::leapfrog_frictional : Integrator::leapfrog_frictionless)
                        : Integrator::moreau;
    // Reference frequency: the load's, else the first elastic mode.
    sc.Omega = load_omega;
    if (sc.Omega == 0.0)
        for (double w : solve_modes(sc.reduced.K, sc.reduced.M, std::min<Index>(sc.reduced.size(), 7)).omegas)
            if (w > 1e-6) {
                sc.Omega = w;
                break;
            }
    sc.q0 = VectorXd::Zero(sc.reduced.size());
    sc.u0 = sc.q0;
    sc.probes.push_back({"q_R", sc.reduced.R.row(0).transpose()});
    EnergyModel em;
    em.rigid_basis = MatrixXd::Zero(sc.reduced.size(), 0);
    em.conservative_force = sc.reduced.load.constant;
    sc.energy = em;
    return sc;
}

}  // namespace

Scenario build_scenario(const RunConfig& c) {
    Scenario sc;
    if (c.scenario == "bouncing-bar") {
        sc = scenario_bouncing_bar(c.bar);
    } else if (c.scenario == "plate") {
        const double w1 = scenario_plate_analog(c.plate).Omega;
        sc = plate_at_frequency(c.plate, c.plate_ratio * w1, c.periods);
    } else if (c.scenario == "sdof-wall") {
        sc = scenario_sdof_wall(c.sdof, c.sdof_ratio * std::sqrt(c.sdof.k / c.sdof.m), c.periods, 500);
    } else if (c.scenario == "rub") {
        sc = scenario_rub_analog(c.rub);
    } else if (c.scenario == "custom") {
        sc = build_custom(c);
    } else {
        throw InvalidSpec("config key 'scenario': unknown scenario '" + c.scenario + "'");
    }
    if (c.integrator) sc.integrator = *c.integrator;
    if (c.dt) sc.dt = *c.dt;
    if (c.t_start) sc.t_start = *c.t_start;
    if (c.t_end) sc.t_end = *c.t_end;
    if (sc.name == "custom" && sc.t_end <= sc.t_start)
        throw InvalidSpec("config key 'time.t_end_s': required for custom models and must exceed t_start_s");
    return sc;
}

namespace {

SimulationOptions options_for(const Scenario& sc, const RunConfig& c) {
    SimulationOptions o = sc.simulation_options();
    o.stride = c.stride;
    o.n_warm = c.n_warm;
    o.step.inclusion = c.inclusion;
    return o;
}

/// Resolved config: scenario-derived time settings written back.
RunConfig resolved(RunConfig c, const Scenario& sc) {
    c.integrator = sc.integrator;
    c.dt = sc.dt;
    c.t_start = sc.t_start;
    c.t_end = sc.t_end;
    return c;
}

json energy_summary(const TimeSeries& ts) {
    if (ts.samples.empty()) return nullptr;
    const double e0 = ts.samples.front().energy.total;
    double drift = 0.0;
    for (const Sample& s : ts.samples) drift = std::max(drift, std::abs(s.energy.total - e0));
    return {{"E_tot_initial", e0},
            {"E_tot_final", ts.samples.back().energy.total},
            {"max_abs_drift", drift},
            {"max_rel_drift", e0 != 0.0 ? drift / std::abs(e0) : drift}};
}

json series_summary(const TimeSeries& ts) {
    json j;
    j["steps"] = ts.steps;
    j["samples"] = ts.samples.size();
    j["max_solver_iterations"] = ts.max_iterations;
    double min_qb = std::numeric_limits<double>::infinity();
    for (const Sample& s : ts.samples)
        if (s.q_b.size()) min_qb = std::min(min_qb, s.q_b.minCoeff());
    if (std::isfinite(min_qb)) j["min_q_b"] = min_qb;
    j["energy"] = energy_summary(ts);
    return j;
}

bool completes(const Scenario& sc, const SimulationOptions& base, double dt) {
    SimulationOptions o = base;
    o.dt = dt;
    o.stride = std::max(1, static_cast<int>(std::lround((o.t_end - o.t_start) / dt / 200.0)));
    try {
        const TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, o);
        for (const Sample& s : ts.samples)
            if (s.n_active > 0) return true;
        return false;  // contact never resolved: not a meaningful run
    } catch (const Divergence&) {
        return false;
    } catch (const NonConvergence&) {
        return false;
    }
}

/// Largest stable step in [lo, hi] by bisection on log(dt); lo is assumed stable.
double largest_stable_dt(const std::function<bool(double)>& stable, double lo, double hi, int iterations = 8) {
    if (stable(hi)) return hi;
    for (int i = 0; i < iterations; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (stable(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// ---------------------------------------------------------------- commands

int cmd_reduce(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario sc = build_scenario(ctx.cfg);
    write_reduced_bundle(ctx.out / "reduced", sc.reduced);
    write_text(ctx.out / "config.resolved.json", emit_config(resolved(ctx.cfg, sc)));
    json s;
    s["command"] = "reduce";
    s["method"] = std::string(to_string(sc.reduced.method));
    s["size"] = sc.reduced.size();
    s["B"] = sc.reduced.n_boundary;
    s["omegas_rad_s"] = vector_json(sc.reduced.omegas_inner);
    s["runtime_s"] = elapsed(t0);
    write_summary(ctx, s);
    log(LogLevel::info, "reduced model written to " + (ctx.out / "reduced").string());
    return 0;
}

int cmd_simulate(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario sc = build_scenario(ctx.cfg);
    write_text(ctx.out / "config.resolved.json", emit_config(resolved(ctx.cfg, sc)));
    const TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, options_for(sc, ctx.cfg));
    write_time_series_csv(ctx.out / "series.csv", ts);
    json s = series_summary(ts);
    s["command"] = "simulate";
    s["scenario"] = sc.name;
    s["integrator"] = std::string(to_string(sc.integrator));
    s["runtime_s"] = elapsed(t0);
    write_summary(ctx, s);
    return 0;
}

SweepOptions sweep_options(const Scenario& sc, const RunConfig& c) {
    if (sc.excitation.size() == 0 || sc.excitation.isZero(0.0))
        throw InvalidSpec("hbm needs a harmonically excited scenario (plate, sdof-wall or custom with amplitude_N)");
    SweepOptions so;
    so.hbm = c.hbm.options;
    so.Omega_start = c.hbm.Omega_start > 0.0 ? c.hbm.Omega_start : 0.95 * sc.Omega;
    so.Omega_end = c.hbm.Omega_end > 0.0 ? c.hbm.Omega_end : 1.05 * sc.Omega;
    const double span = so.Omega_end - so.Omega_start;
    so.step = c.hbm.Omega_step != 0.0 ? c.hbm.Omega_step : (span == 0.0 ? 1.0 : span / 20.0);
    so.min_step = c.hbm.min_step > 0.0 ? c.hbm.min_step : 1e-3 * std::abs(so.step);
    so.harmonic_load = sc.reduced.R.transpose() * sc.excitation;
    return so;
}

json sweep_summary(const SweepResult& r) {
    json gaps = json::array();
    for (const auto& [a, b] : r.gaps) gaps.push_back({a, b});
    int iters = 0;
    for (const auto& s : r.solutions) iters = std::max(iters, s.iterations);
    return {{"solutions", r.solutions.size()}, {"gaps_rad_s", gaps}, {"max_newton_iterations", iters}};
}

int cmd_hbm(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario sc = build_scenario(ctx.cfg);
    write_text(ctx.out / "config.resolved.json", emit_config(resolved(ctx.cfg, sc)));
    const SweepOptions so = sweep_options(sc, ctx.cfg);
    const SweepResult r = sweep(sc.reduced, sc.contacts, so);
    write_hbm_csv(ctx.out / "frf.csv", r.solutions, sc.probes);
    json s = sweep_summary(r);
    s["command"] = "hbm";
    s["scenario"] = sc.name;
    s["Omega_range_rad_s"] = {so.Omega_start, so.Omega_end};
    s["runtime_s"] = elapsed(t0);
    write_summary(ctx, s);
    return 0;
}

json bench_bar(const Context& ctx) {
    RunConfig c = ctx.cfg;
    c.scenario = "bouncing-bar";
    const Scenario ml = build_scenario(c);
    const TimeSeries ts = simulate(ml.reduced, ml.contacts, ml.q0, ml.u0, options_for(ml, c));
    write_time_series_csv(ctx.out / "bouncing-bar.csv", ts);
    std::vector<double> t, qb;
    for (const Sample& s : ts.samples) {
        t.push_back(s.t);
        qb.push_back(s.q_b[0]);
    }
    const std::vector<double> apexes = flight_apexes(t, qb, 0.1 * c.bar.q0);
    json j = series_summary(ts);
    j["apexes"] = apexes;

    // Stability: largest step completing a short drop, per method.
    c.bar.massless = false;
    const Scenario mc = build_scenario(c);
    json stab = json::array();
    for (const Scenario* sc : {&ml, &mc}) {
        SimulationOptions o = options_for(*sc, c);
        o.t_end = std::min(o.t_end, o.t_start + 2.0);
        const double dt = largest_stable_dt([&](double h) { return completes(*sc, o, h); }, c.bar.dt, 1e-2);
        stab.push_back({{"integrator", std::string(to_string(sc->integrator))},
                        {"largest_stable_dt_s", dt},
                        {"courant", dt * std::sqrt(c.bar.E / c.bar.rho) * c.bar.n_elems / c.bar.length}});
    }
    j["stability"] = stab;
    return j;
}

json bench_rub(const Context& ctx) {
    RunConfig c = ctx.cfg;
    c.scenario = "rub";
    c.rub.massless = true;
    const Scenario ml = build_scenario(c);
    c.rub.massless = false;
    const Scenario mc = build_scenario(c);
    const double rev = two_pi / ml.Omega;

    json runs = json::array();
    for (const Scenario* sc : {&ml, &mc}) {
        SimulationOptions o = options_for(*sc, c);
        if (sc == &mc) o.dt = std::min(o.dt, rev / 16000.0);
        const TimeSeries ts = simulate(sc->reduced, sc->contacts, sc->q0, sc->u0, o);
        const std::string name = sc == &ml ? "rub-massless" : "rub-mass-carrying";
        write_time_series_csv(ctx.out / (name + ".csv"), ts);
        const std::vector<double> t = sample_times(ts), fn = normal_force(ts, 3);
        std::vector<double> tl, fl;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t[k] >= t.back() - 2.0 * rev) {
                tl.push_back(t[k]);
                fl.push_back(fn[k]);
            }
        const double fmax = fl.empty() ? 0.0 : *std::max_element(fl.begin(), fl.end());
        const int bursts = fmax > 0.0 ? count_bursts(tl, fl, 0.01 * fmax, 0.05 * rev) : 0;
        runs.push_back({{"name", name},
                        {"levels_per_revolution", std::lround(rev / o.dt)},
                        {"bursts_per_revolution_last_two", 0.5 * bursts}});
    }

    json stab = json::array();
    for (const Scenario* sc : {&ml, &mc}) {
        const SimulationOptions o = options_for(*sc, c);
        auto stable = [&](int n) { return completes(*sc, o, rev / n); };
        const int lo = sc == &ml ? 10 : 500, hi = sc == &ml ? 2000 : 32000;
        stab.push_back({{"integrator", std::string(to_string(sc->integrator))},
                        {"smallest_stable_levels_per_revolution", smallest_stable_level_bisect(lo, hi, stable)}});
    }

    json table = json::array();
    auto probe = [&](int n) {
        SimulationOptions o = options_for(ml, c);
        o.dt = rev / n;
        o.stride = 1;
        const TimeSeries ts = simulate(ml.reduced, ml.contacts, ml.q0, ml.u0, o);
        return std::pair{sample_times(ts), probe_values(ts)};
    };
    const auto ref = probe(16000);
    for (int n : {500, 1000, 2000, 4000}) {
        const auto r = probe(n);
        table.push_back({{"levels_per_revolution", n}, {"eps_rms", rms_error(r.first, r.second, ref.first, ref.second)}});
    }
    return {{"runs", runs}, {"stability", stab}, {"eps_rms_reference_levels", 16000}, {"eps_rms", table}};
}

json bench_plate(const Context& ctx) {
    RunConfig c = ctx.cfg;
    const PlateParams& p = c.plate;
    const double w1 = scenario_plate_analog(p).Omega;
    Scenario sc = plate_sweep(p, 0.97 * w1, 1.03 * w1);
    c.stride = std::max(c.stride, 10);
    const TimeSeries ts = simulate(sc.reduced, sc.contacts, sc.q0, sc.u0, options_for(sc, c));
    write_time_series_csv(ctx.out / "plate-sweep.csv", ts);
    const std::vector<double> q = probe_values(ts);
    double qmax = 0.0, qmin = 0.0;
    for (double v : q) {
        qmax = std::max(qmax, v);
        qmin = std::min(qmin, v);
    }
    c.hbm.Omega_start = 0.97 * w1;
    c.hbm.Omega_end = 1.03 * w1;
    const SweepOptions so = sweep_options(sc, c);
    const SweepResult r = sweep(sc.reduced, sc.contacts, so);
    write_hbm_csv(ctx.out / "plate-frf.csv", r.solutions, sc.probes);
    return {{"first_frequency_rad_s", w1},
            {"time_sweep", {{"steps", ts.steps}, {"q_R_max", qmax}, {"q_R_min", qmin}}},
            {"hbm_sweep", sweep_summary(r)}};
}

json bench_sdof(const Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const double w0 = std::sqrt(c.sdof.k / c.sdof.m);
    json table = json::array();
    for (double ratio : {0.98, 0.99, 1.0}) {
        const Scenario sc = scenario_sdof_wall(c.sdof, ratio * w0, c.periods, 500);
        const TimeSeries ts = sc.run();
        const HarmonicContent tm = harmonic_content(sample_times(ts), probe_values(ts), sc.Omega, 10);
        HbmOptions ho = c.hbm.options;
        const FourierSolution hb = solve_fixed_frequency(sc.reduced, sc.contacts, sc.Omega, ho);
        const VectorXd& w = sc.probes[0].weights;
        table.push_back({{"frequency_ratio", ratio},
                         {"time_marching", {{"mean", tm.mean}, {"first", tm.first}}},
                         {"hbm", {{"mean", hb.coeffs[0].real().dot(w)}, {"first", hb.amplitude(w, 1)}}}});
        if (ratio == 1.0) write_time_series_csv(ctx.out / "sdof-wall.csv", ts);
    }
    return {{"comparison", table}};
}

int cmd_bench(const Context& ctx, const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c = ctx.cfg;
    json s;
    if (name == "bouncing-bar") {
        c.scenario = name;
        s = bench_bar(ctx);
    } else if (name == "rub") {
        c.scenario = name;
        s = bench_rub(ctx);
    } else if (name == "plate") {
        c.scenario = name;
        s = bench_plate(ctx);
    } else if (name == "sdof-wall") {
        c.scenario = name;
        s = bench_sdof(ctx);
    } else {
        throw InvalidSpec("unknown bench scenario '" + name + "' (bouncing-bar, plate, sdof-wall, rub)");
    }
    write_text(ctx.out / "config.resolved.json", emit_config(c));
    s["command"] = "bench";
    s["scenario"] = name;
    s["runtime_s"] = elapsed(t0);
    write_summary(ctx, s);
    return 0;
}

int cmd_import_check(const Context& ctx) {
    const SecondOrderModel m = import_matrices(ctx.cfg.matrices);
    Eigen::SelfAdjointEigenSolver<MatrixXd> em(m.M, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ek(m.K, Eigen::EigenvaluesOnly);
    const double kmax = std::max(1.0, ek.eigenvalues().cwiseAbs().maxCoeff());
    Index nullity = 0;
    for (Index i = 0; i < ek.eigenvalues().size(); ++i)
        if (std::abs(ek.eigenvalues()[i]) <= 1e-10 * kmax) ++nullity;
    json s;
    s["command"] = "import-check";
    s["n_dofs"] = m.n_dofs();
    s["B"] = m.n_boundary();
    s["M_min_eigenvalue"] = em.eigenvalues().minCoeff();
    s["K_min_eigenvalue"] = ek.eigenvalues().minCoeff();
    s["K_nullity"] = nullity;
    write_text(ctx.out / "config.resolved.json", emit_config(ctx.cfg));
    write_summary(ctx, s);
    std::cout << "ok: " << m.n_dofs() << " dofs, " << m.n_boundary() << " boundary, K nullity " << nullity << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Reduced-order contact dynamics: reduction, time stepping and harmonic balance"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::optional<int> threads, stride;
    std::optional<std::uint64_t> seed;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--stride", stride, "Record every k-th step")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Seed for randomized inputs");
    };
    CLI::App* reduce_cmd = app.add_subcommand("reduce", "Reduce a model and write the bundle");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Time integration, CSV output");
    CLI::App* hbm_cmd = app.add_subcommand("hbm", "Harmonic balance frequency sweep");
    CLI::App* bench_cmd = app.add_subcommand("bench", "Run a benchmark study");
    CLI::App* import_cmd = app.add_subcommand("import-check", "Validate imported matrices");
    std::string bench_name;
    bench_cmd->add_option("scenario", bench_name, "bouncing-bar, plate, sdof-wall or rub")->required();
    for (CLI::App* sub : {reduce_cmd, simulate_cmd, hbm_cmd, bench_cmd, import_cmd}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "rombo: " << e.what() << "\n" << app.help();
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Context ctx;
        if (!config_path.empty()) ctx.cfg = parse_config_file(config_path);
        if (threads) ctx.cfg.threads = *threads;
        if (stride) ctx.cfg.stride = *stride;
        if (seed) ctx.cfg.seed = *seed;
        Eigen::setNbThreads(ctx.cfg.threads);
        ctx.out = out_dir;
        OutputLock lock(ctx.out);
        log(LogLevel::info, command + ": writing to " + ctx.out.string());
        if (command == "reduce") return cmd_reduce(ctx);
        if (command == "simulate") return cmd_simulate(ctx);
        if (command == "hbm") return cmd_hbm(ctx);
        if (command == "bench") return cmd_bench(ctx, bench_name);
        return cmd_import_check(ctx);
    } catch (const std::exception& e) {
        log(LogLevel::error, command + ": " + e.what());
        return 1;
    }
}

}  // namespace rombo
