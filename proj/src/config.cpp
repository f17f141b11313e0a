#include "rombo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rombo/error.hpp"

namespace rombo {

using nlohmann::json;

namespace {

enum class Check { any, positive, nonneg, unit, at_least_one, poisson, sign };

template <class E>
struct EnumTable {
    std::vector<std::pair<E, std::string>> names;

    std::string name(E e) const {
        for (const auto& [v, n] : names)
            if (v == e) return n;
        throw InvalidSpec("unnamed enum value");
    }
    std::optional<E> find(const std::string& s) const {
        for (const auto& [v, n] : names)
            if (n == s) return v;
        return std::nullopt;
    }
    std::string choices() const {
        std::string out;
        for (const auto& [v, n] : names) out += (out.empty() ? "" : ", ") + n;
        return out;
    }
};

const EnumTable<ReductionMethod> methods{{{ReductionMethod::macneal, "macneal"},
                                         {ReductionMethod::rubin, "rubin"},
                                         {ReductionMethod::craig_bampton, "craig-bampton"},
                                         {ReductionMethod::massless_cb, "massless-cb"}}};
const EnumTable<Integrator> integrators{{{Integrator::leapfrog_frictionless, "leapfrog-frictionless"},
                                         {Integrator::leapfrog_frictional, "leapfrog-frictional"},
                                         {Integrator::moreau, "moreau"}}};
const EnumTable<ContactMode> modes{{{ContactMode::open, "open"}, {ContactMode::preloaded, "preloaded"}}};
const EnumTable<JacobianKind> jacobians{
    {{JacobianKind::analytic, "analytic"}, {JacobianKind::finite_difference, "finite-difference"}}};
const EnumTable<MeshSpec::Kind> kinds{{{MeshSpec::Kind::bar1d, "bar1d"}, {MeshSpec::Kind::hex8, "hex8"}}};

const std::set<std::string> scenarios = {"bouncing-bar", "plate", "sdof-wall", "rub", "custom"};
const std::set<std::string> sources = {"mesh", "matrices"};
const std::set<std::string> faces = {"", "x0", "x1", "y0", "y1", "z0", "z1"};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw InvalidSpec("config key '" + key + "': " + what);
}

void check_value(const std::string& key, double x, Check c) {
    switch (c) {
        case Check::any: return;
        case Check::positive:
            if (!(x > 0.0)) fail(key, "expected a number > 0");
            return;
        case Check::nonneg:
            if (!(x >= 0.0)) fail(key, "expected a number >= 0");
            return;
        case Check::unit:
            if (!(x >= 0.0 && x <= 1.0)) fail(key, "expected a number in [0, 1]");
            return;
        case Check::at_least_one:
            if (!(x >= 1.0)) fail(key, "expected an integer >= 1");
            return;
        case Check::poisson:
            if (!(x >= 0.0 && x < 0.5)) fail(key, "expected a number in [0, 0.5)");
            return;
        case Check::sign:
            if (x != 1.0 && x != -1.0) fail(key, "expected 1 or -1");
            return;
    }
}

/// Reads the visited keys from a JSON object; anything else is an error.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    template <class T>
    void operator()(const std::string& key, T& x, Check c = Check::any) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        read(join(path_, key), j_.at(key), x, c);
    }

    template <class F>
    void object(const std::string& key, F&& f) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        Reader sub(j_.at(key), join(path_, key));
        f(sub);
        sub.finish();
    }

    template <class T, class F>
    void list(const std::string& key, std::vector<T>& xs, F&& f) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& arr = j_.at(key);
        const std::string k = join(path_, key);
        if (!arr.is_array()) fail(k, "expected an array");
        xs.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            T x{};
            Reader sub(arr[i], k + "[" + std::to_string(i) + "]");
            f(sub, x);
            sub.finish();
            xs.push_back(std::move(x));
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(join(path_, it.key()), "unknown key");
    }

private:
    static void read(const std::string& k, const json& v, double& x, Check c) {
        if (!v.is_number()) fail(k, "expected a number");
        x = v.get<double>();
        check_value(k, x, c);
    }
    static void read(const std::string& k, const json& v, int& x, Check c) {
        if (!v.is_number_integer()) fail(k, "expected an integer");
        x = v.get<int>();
        check_value(k, x, c);
    }
    static void read(const std::string& k, const json& v, Index& x, Check c) {
        if (!v.is_number_integer()) fail(k, "expected an integer");
        x = v.get<Index>();
        check_value(k, static_cast<double>(x), c);
    }
    static void read(const std::string& k, const json& v, std::uint64_t& x, Check) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            fail(k, "expected a non-negative integer");
        x = v.get<std::uint64_t>();
    }
    static void read(const std::string& k, const json& v, bool& x, Check) {
        if (!v.is_boolean()) fail(k, "expected true or false");
        x = v.get<bool>();
    }
    static void read(const std::string& k, const json& v, std::string& x, Check) {
        if (!v.is_string()) fail(k, "expected a string");
        x = v.get<std::string>();
    }
    static void read(const std::string& k, const json& v, fs::path& x, Check) {
        if (!v.is_string()) fail(k, "expected a path string");
        x = v.get<std::string>();
    }
    static void read(const std::string& k, const json& v, Eigen::Vector3d& x, Check) {
        if (!v.is_array() || v.size() != 3) fail(k, "expected an array of 3 numbers");
        for (int i = 0; i < 3; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) fail(k, "expected an array of 3 numbers");
            x[i] = v[static_cast<std::size_t>(i)].get<double>();
        }
    }
    template <class T>
    static void read(const std::string& k, const json& v, std::optional<T>& x, Check c) {
        if (v.is_null()) {
            x.reset();
            return;
        }
        T y{};
        read(k, v, y, c);
        x = y;
    }
    template <class E>
    static void read_enum(const std::string& k, const json& v, E& x, const EnumTable<E>& table) {
        if (!v.is_string()) fail(k, "expected one of: " + table.choices());
        const auto e = table.find(v.get<std::string>());
        if (!e) fail(k, "expected one of: " + table.choices());
        x = *e;
    }
    static void read(const std::string& k, const json& v, ReductionMethod& x, Check) { read_enum(k, v, x, methods); }
    static void read(const std::string& k, const json& v, Integrator& x, Check) { read_enum(k, v, x, integrators); }
    static void read(const std::string& k, const json& v, ContactMode& x, Check) { read_enum(k, v, x, modes); }
    static void read(const std::string& k, const json& v, JacobianKind& x, Check) { read_enum(k, v, x, jacobians); }
    static void read(const std::string& k, const json& v, MeshSpec::Kind& x, Check) { read_enum(k, v, x, kinds); }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Writes the visited keys into a JSON object.
class Writer {
public:
    json j = json::object();

    template <class T>
    void operator()(const std::string& key, const T& x, Check = Check::any) {
        j[key] = write(x);
    }

    template <class F>
    void object(const std::string& key, F&& f) {
        Writer sub;
        f(sub);
        j[key] = sub.j;
    }

    template <class T, class F>
    void list(const std::string& key, std::vector<T>& xs, F&& f) {
        json arr = json::array();
        for (T& x : xs) {
            Writer sub;
            f(sub, x);
            arr.push_back(sub.j);
        }
        j[key] = arr;
    }

private:
    template <class T>
    static json write(const T& x) {
        return x;
    }
    static json write(const fs::path& x) { return x.string(); }
    static json write(const Eigen::Vector3d& x) { return json::array({x[0], x[1], x[2]}); }
    template <class T>
    static json write(const std::optional<T>& x) {
        return x ? write(*x) : json(nullptr);
    }
    static json write(ReductionMethod x) { return methods.name(x); }
    static json write(Integrator x) { return integrators.name(x); }
    static json write(ContactMode x) { return modes.name(x); }
    static json write(JacobianKind x) { return jacobians.name(x); }
    static json write(MeshSpec::Kind x) { return kinds.name(x); }
};

template <class V>
void visit(V& v, RunConfig& c) {
    v("scenario", c.scenario);
    v("source", c.source);
    v.object("mesh", [&](auto& m) {
        m("kind", c.mesh.kind);
        m("nx", c.mesh.nx, Check::at_least_one);
        m("ny", c.mesh.ny, Check::at_least_one);
        m("nz", c.mesh.nz, Check::at_least_one);
        m("lx_m", c.mesh.lx, Check::positive);
        m("ly_m", c.mesh.ly, Check::positive);
        m("lz_m", c.mesh.lz, Check::positive);
        m("rho_kg_m3", c.mesh.rho, Check::positive);
        m("E_Pa", c.mesh.E, Check::positive);
        m("nu", c.mesh.nu, Check::poisson);
        m("clamp", c.mesh.clamp);
        m.list("boundary", c.mesh.boundary, [](auto& b, BoundaryPoint& p) {
            b("point_m", p.point);
            b("direction", p.direction);
        });
    });
    v.list("loads", c.loads, [](auto& l, PointLoad& p) {
        l("point_m", p.point);
        l("direction", p.direction);
        l("constant_N", p.constant);
        l("amplitude_N", p.amplitude);
        l("omega_rad_s", p.omega, Check::nonneg);
    });
    v.object("matrices", [&](auto& m) {
        m("K", c.matrices.K);
        m("M", c.matrices.M);
        m("D", c.matrices.D);
        m("sidecar", c.matrices.sidecar);
    });
    v.object("reduction", [&](auto& r) {
        r("method", c.method);
        r("n_mod", c.reduction.n_mod, Check::at_least_one);
        r("shift_N_per_m", c.reduction.shift, Check::nonneg);
        r("zeta", c.reduction.zeta, Check::nonneg);
    });
    v.object("contact", [&](auto& k) {
        k("dim", c.contact_dim);
        k.list("points", c.contacts, [](auto& p, ContactSpec& s) {
            p("gap_m", s.gap);
            p("sign", s.sign, Check::sign);
            p("mu", s.mu, Check::nonneg);
            p("preload_N", s.preload);
            p("mode", s.mode);
            p("restitution_n", s.restitution_n, Check::unit);
            p("restitution_t", s.restitution_t, Check::unit);
        });
    });
    v("integrator", c.integrator);
    v.object("time", [&](auto& t) {
        t("dt_s", c.dt, Check::positive);
        t("t_start_s", c.t_start);
        t("t_end_s", c.t_end);
        t("n_warm", c.n_warm, Check::nonneg);
    });
    v.object("solver", [&](auto& s) {
        s("eps", c.inclusion.eps, Check::positive);
        s("eps_factor", c.inclusion.eps_factor, Check::positive);
        s("tol", c.inclusion.tol, Check::positive);
        s("max_iter", c.inclusion.max_iter, Check::at_least_one);
    });
    v.object("bar", [&](auto& b) {
        BarDropParams& p = c.bar;
        b("n_elems", p.n_elems, Check::at_least_one);
        b("length_m", p.length, Check::positive);
        b("rho_kg_m3", p.rho, Check::positive);
        b("E_Pa", p.E, Check::positive);
        b("q0_m", p.q0, Check::nonneg);
        b("a_g_m_s2", p.a_g, Check::nonneg);
        b("n_mod", p.n_mod, Check::at_least_one);
        b("dt_s", p.dt, Check::positive);
        b("t_end_s", p.t_end, Check::positive);
        b("massless", p.massless);
        b("restitution", p.restitution, Check::unit);
    });
    v.object("plate", [&](auto& b) {
        PlateParams& p = c.plate;
        b("nx", p.nx, Check::at_least_one);
        b("ny", p.ny, Check::at_least_one);
        b("nz", p.nz, Check::at_least_one);
        b("lx_m", p.lx, Check::positive);
        b("ly_m", p.ly, Check::positive);
        b("lz_m", p.lz, Check::positive);
        b("rho_kg_m3", p.rho, Check::positive);
        b("E_Pa", p.E, Check::positive);
        b("nu", p.nu, Check::poisson);
        b("gap_m", p.gap, Check::nonneg);
        b("force_N", p.force);
        b("zeta", p.zeta, Check::nonneg);
        b("n_mod", p.n_mod, Check::at_least_one);
        b("method", p.method);
        b("steps_per_period", p.steps_per_period, Check::at_least_one);
        b("frequency_ratio", c.plate_ratio, Check::positive);
    });
    v.object("sdof", [&](auto& b) {
        SdofWallParams& p = c.sdof;
        b("m_kg", p.m, Check::positive);
        b("k_N_per_m", p.k, Check::positive);
        b("k_contact_N_per_m", p.k_contact, Check::positive);
        b("zeta", p.zeta, Check::nonneg);
        b("force_N", p.force);
        b("gap_m", p.gap, Check::nonneg);
        b("frequency_ratio", c.sdof_ratio, Check::positive);
    });
    v("periods", c.periods, Check::positive);
    v.object("rub", [&](auto& b) {
        RubParams& p = c.rub;
        b("nx", p.nx, Check::at_least_one);
        b("ny", p.ny, Check::at_least_one);
        b("nz", p.nz, Check::at_least_one);
        b("lx_m", p.lx, Check::positive);
        b("ly_m", p.ly, Check::positive);
        b("lz_m", p.lz, Check::positive);
        b("rho_kg_m3", p.rho, Check::positive);
        b("E_Pa", p.E, Check::positive);
        b("nu", p.nu, Check::poisson);
        b("mu", p.mu, Check::nonneg);
        b("zeta", p.zeta, Check::nonneg);
        b("n_mod", p.n_mod, Check::at_least_one);
        b("gap_mean_m", p.gap_mean);
        b("gap_amplitude_m", p.gap_amplitude, Check::nonneg);
        b("casing_radius_m", p.casing_radius, Check::positive);
        b("massless", p.massless);
        b("restitution", p.restitution, Check::unit);
        b("levels_per_revolution", p.levels_per_revolution, Check::at_least_one);
        b("revolutions", p.revolutions, Check::positive);
    });
    v.object("hbm", [&](auto& h) {
        HbmOptions& o = c.hbm.options;
        h("H", o.H, Check::at_least_one);
        h("N_aft", o.N_aft, Check::at_least_one);
        h("eps_dl_N_per_m", o.eps_dl, Check::positive);
        h("tol", o.tol, Check::positive);
        h("max_iter", o.max_iter, Check::at_least_one);
        h("jacobian", o.jacobian);
        h("Omega_start_rad_s", c.hbm.Omega_start, Check::nonneg);
        h("Omega_end_rad_s", c.hbm.Omega_end, Check::nonneg);
        h("Omega_step_rad_s", c.hbm.Omega_step);
        h("min_step_rad_s", c.hbm.min_step, Check::nonneg);
    });
    v.object("output", [&](auto& o) {
        o("stride", c.stride, Check::at_least_one);
        o("threads", c.threads, Check::at_least_one);
        o("seed", c.seed);
    });
}

void validate(const RunConfig& c) {
    if (!scenarios.count(c.scenario))
        fail("scenario", "expected one of: bouncing-bar, plate, sdof-wall, rub, custom");
    if (!sources.count(c.source)) fail("source", "expected mesh or matrices");
    if (!faces.count(c.mesh.clamp)) fail("mesh.clamp", "expected \"\", x0, x1, y0, y1, z0 or z1");
    if (c.contact_dim != 1 && c.contact_dim != 3) fail("contact.dim", "expected 1 or 3");
    for (std::size_t i = 0; i < c.mesh.boundary.size(); ++i)
        if (c.mesh.boundary[i].direction < 0 || c.mesh.boundary[i].direction > 2)
            fail("mesh.boundary[" + std::to_string(i) + "].direction", "expected 0, 1 or 2");
    for (std::size_t i = 0; i < c.loads.size(); ++i)
        if (c.loads[i].direction < 0 || c.loads[i].direction > 2)
            fail("loads[" + std::to_string(i) + "].direction", "expected 0, 1 or 2");
    if (c.t_start && c.t_end && *c.t_end < *c.t_start) fail("time.t_end_s", "must not precede t_start_s");
    if (c.hbm.options.N_aft < 2 * c.hbm.options.H + 1) fail("hbm.N_aft", "must be at least 2 H + 1");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidSpec(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader r(j, "");
    visit(r, c);
    r.finish();
    validate(c);
    return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot read config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string emit_config(const RunConfig& cfg) {
    RunConfig c = cfg;
    Writer w;
    visit(w, c);
    return w.j.dump(2);
}

}  // namespace rombo
