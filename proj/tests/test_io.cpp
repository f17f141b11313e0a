#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rombo/cli.hpp"
#include "rombo/config.hpp"
#include "rombo/error.hpp"
#include "rombo/io.hpp"
#include "support.hpp"

using namespace rombo;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("rombo-io-" + std::to_string(::getpid()) + "-" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rombo");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("matrix market round trip is bitwise") {
    Scratch s("mm");
    testing::Gen gen(21);
    for (int trial = 0; trial < 5; ++trial) {
        const MatrixXd S = gen.spd(gen.integer(1, 12), 1e6) * std::pow(10.0, gen.uniform(-8, 8));
        write_matrix_market(s.dir / "S.mtx", S);
        CHECK(read_matrix_market(s.dir / "S.mtx") == S);
        const MatrixXd G = gen.matrix(gen.integer(1, 6), gen.integer(1, 6));
        write_matrix_market(s.dir / "G.mtx", G, false);
        CHECK(read_matrix_market(s.dir / "G.mtx") == G);
    }
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5e-324})
        CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("matrix market parsing of hand written files") {
    Scratch s("mm-hand");
    put(s.dir / "a.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 1.5\n");
    MatrixXd A(3, 3);
    A << 2, -1, 0, -1, 2, 0, 0, 0, 1.5;
    CHECK(read_matrix_market(s.dir / "a.mtx") == A);
    put(s.dir / "b.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    MatrixXd B(2, 2);
    B << 1, 3, 2, 4;
    CHECK(read_matrix_market(s.dir / "b.mtx") == B);
    put(s.dir / "c.mtx", "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
    CHECK_THROWS_AS(read_matrix_market(s.dir / "c.mtx"), InvalidSpec);
    put(s.dir / "d.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n");
    CHECK_THROWS_AS(read_matrix_market(s.dir / "d.mtx"), InvalidSpec);
    put(s.dir / "e.mtx", "not a matrix\n");
    CHECK_THROWS_AS(read_matrix_market(s.dir / "e.mtx"), InvalidSpec);
}

TEST_CASE("imported matrices are validated") {
    Scratch s("import");
    MatrixXd K(3, 3), M = MatrixXd::Identity(3, 3);
    K << 2, -1, 0, -1, 2, -1, 0, -1, 1;
    write_matrix_market(s.dir / "K.mtx", K);
    write_matrix_market(s.dir / "M.mtx", M);
    put(s.dir / "side.json", R"({"boundary_dofs": [0], "loads": [{"dof": 2, "constant_N": 1.5}]})");
    MatrixPaths p{s.dir / "K.mtx", s.dir / "M.mtx", std::nullopt, s.dir / "side.json"};
    const SecondOrderModel m = import_matrices(p);
    CHECK(m.K == K);
    CHECK(m.boundary_dofs == std::vector<Index>{0});
    CHECK(m.load.constant[2] == 1.5);
    // Static response of the hand system with the first DOF held.
    const VectorXd q = static_solve(m.K.bottomRightCorner(2, 2), m.load.constant.tail(2));
    CHECK(q[0] == Catch::Approx(1.5));
    CHECK(q[1] == Catch::Approx(3.0));

    MatrixXd Ka = K;
    Ka(0, 1) = -1.1;
    write_matrix_market(s.dir / "Ka.mtx", Ka, false);
    p.K = s.dir / "Ka.mtx";
    CHECK_THROWS_AS(import_matrices(p), InvalidSpec);
    p.K = s.dir / "K.mtx";
    MatrixXd Mn = M;
    Mn(1, 1) = -1.0;
    write_matrix_market(s.dir / "Mn.mtx", Mn);
    p.M = s.dir / "Mn.mtx";
    const std::string msg = message_of([&] { import_matrices(p); });
    CHECK(msg.find("positive definite") != std::string::npos);
    p.M = s.dir / "M.mtx";
    put(s.dir / "bad.json", R"({"boundary_dofs": [0], "load": []})");
    p.sidecar = s.dir / "bad.json";
    CHECK(message_of([&] { import_matrices(p); }).find("'load'") != std::string::npos);
}

TEST_CASE("model export and reduced bundle round trip") {
    Scratch s("bundle");
    MeshSpec ms;
    ms.kind = MeshSpec::Kind::bar1d;
    ms.nx = 20;
    ms.lx = 2.0;
    ms.E = 50.0;
    ms.clamp = "x1";
    SecondOrderModel m = assemble(ms);
    m.load = Load(m.n_dofs());
    m.load.constant = gravity_load(m, 9.81);
    const MatrixPaths p = export_model(s.dir / "model", m);
    const SecondOrderModel back = import_matrices(p);
    CHECK(back.K == m.K);
    CHECK(back.M == m.M);
    CHECK(back.load.constant == m.load.constant);
    CHECK(back.boundary_dofs == m.boundary_dofs);

    ReductionOptions o;
    o.n_mod = 4;
    o.zeta = 0.01;
    const ReducedModel r = reduce(m, ReductionMethod::macneal, o);
    write_reduced_bundle(s.dir / "reduced", r);
    const ReducedModel rb = read_reduced_bundle(s.dir / "reduced");
    CHECK(rb.K == r.K);
    CHECK(rb.M == r.M);
    CHECK(rb.D == r.D);
    CHECK(rb.R == r.R);
    CHECK(rb.n_boundary == r.n_boundary);
    CHECK(rb.massless == r.massless);
    CHECK(rb.method == r.method);
    CHECK(rb.omegas_inner == r.omegas_inner);
    CHECK(rb.load.constant == r.load.constant);
}

TEST_CASE("configuration emission is a fixed point") {
    testing::Gen gen(77);
    const std::vector<std::string> scen = {"bouncing-bar", "plate", "sdof-wall", "rub", "custom"};
    const std::vector<std::string> methods = {"macneal", "rubin", "craig-bampton", "massless-cb"};
    for (int trial = 0; trial < 40; ++trial) {
        json j;
        j["scenario"] = scen[gen.integer(0, 4)];
        j["bar"] = {{"n_elems", gen.integer(1, 5000)}, {"q0_m", gen.uniform(0.0, 2.0)},
                    {"restitution", gen.uniform(0.0, 1.0)}, {"massless", gen.integer(0, 1) == 1}};
        j["plate"] = {{"gap_m", gen.uniform(0.0, 1e-3)}, {"frequency_ratio", gen.uniform(0.5, 1.5)},
                      {"method", methods[gen.integer(0, 3)]}};
        j["sdof"] = {{"zeta", gen.uniform(0.0, 0.1)}, {"force_N", gen.uniform(0.1, 10.0)}};
        j["rub"] = {{"mu", gen.uniform(0.0, 0.5)}, {"revolutions", gen.uniform(1.0, 10.0)}};
        j["hbm"] = {{"H", gen.integer(1, 40)}, {"N_aft", gen.integer(100, 9000)},
                    {"eps_dl_N_per_m", std::exp(gen.uniform(0.0, 20.0))}};
        j["time"] = {{"dt_s", std::exp(gen.uniform(-12.0, -2.0))}};
        if (gen.integer(0, 1)) j["time"]["t_end_s"] = gen.uniform(0.1, 10.0);
        j["contact"] = {{"dim", gen.integer(0, 1) ? 1 : 3},
                        {"points", {{{"gap_m", gen.uniform(0.0, 1.0)}, {"mu", gen.uniform(0.0, 1.0)},
                                     {"mode", gen.integer(0, 1) ? "open" : "preloaded"}}}}};
        j["loads"] = {{{"point_m", {gen.normal(), gen.normal(), gen.normal()}}, {"direction", gen.integer(0, 2)},
                       {"amplitude_N", gen.normal()}, {"omega_rad_s", gen.uniform(0.0, 100.0)}}};
        j["output"] = {{"seed", gen.integer(0, 1 << 30)}, {"stride", gen.integer(1, 100)}};
        const std::string once = emit_config(parse_config(j.dump()));
        CHECK(emit_config(parse_config(once)) == once);
        // Values survive exactly.
        const json back = json::parse(once);
        CHECK(back["time"]["dt_s"].get<double>() == j["time"]["dt_s"].get<double>());
        CHECK(back["plate"]["gap_m"].get<double>() == j["plate"]["gap_m"].get<double>());
        CHECK(back["scenario"] == j["scenario"]);
    }
}

TEST_CASE("configuration errors name the offending key") {
    CHECK(message_of([] { parse_config(R"({"time": {"dt_s": -1}})"); }).find("time.dt_s") != std::string::npos);
    CHECK(message_of([] { parse_config(R"({"bar": {"lenght_m": 3}})"); }).find("bar.lenght_m") !=
          std::string::npos);
    CHECK(message_of([] { parse_config(R"({"scenario": "pendulum"})"); }).find("scenario") != std::string::npos);
    CHECK(message_of([] { parse_config(R"({"reduction": {"method": "guyan"}})"); }).find("reduction.method") !=
          std::string::npos);
    CHECK(message_of([] { parse_config(R"({"contact": {"points": [{"restitution_n": 2}]}})"); })
              .find("restitution_n") != std::string::npos);
    CHECK_THROWS_AS(parse_config("{not json"), InvalidSpec);
    CHECK_NOTHROW(parse_config("{}"));
}

TEST_CASE("command line usage errors") {
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({}) == 2);
    CHECK(cli({"simulate", "--threads", "0"}) == 2);
    CHECK(cli({"simulate", "--config", "/nonexistent/config.json"}) == 2);
    Scratch s("cli-bad");
    CHECK(cli({"bench", "pendulum", "--out", s.dir.string()}) == 1);
    CHECK(!fs::exists(s.dir / ".rombo.lock"));
}

TEST_CASE("command line simulation is deterministic") {
    Scratch s("cli-sim");
    put(s.dir / "run.json", R"({"scenario": "bouncing-bar",
        "bar": {"n_elems": 40, "n_mod": 5, "t_end_s": 1.2, "dt_s": 1e-3}})");
    const std::string a = (s.dir / "a").string(), b = (s.dir / "b").string();
    REQUIRE(cli({"simulate", "--config", (s.dir / "run.json").string(), "--out", a, "--stride", "10"}) == 0);
    REQUIRE(cli({"simulate", "--config", (s.dir / "run.json").string(), "--out", b, "--stride", "10"}) == 0);
    const std::string csv = slurp(fs::path(a) / "series.csv");
    CHECK(csv == slurp(fs::path(b) / "series.csv"));
    CHECK(csv.rfind("t,q_b0,q_bottom,q_top,u_q_bottom,u_q_top,lambda0,E_tot,E_rb,E_el,n_active,solver_iters\n", 0) ==
          0);
    CHECK(!fs::exists(fs::path(a) / ".rombo.lock"));
    const json summary = json::parse(slurp(fs::path(a) / "summary.json"));
    CHECK(summary["command"] == "simulate");
    // The resolved configuration reproduces the run.
    const std::string resolved = (fs::path(a) / "config.resolved.json").string();
    REQUIRE(cli({"simulate", "--config", resolved, "--out", (s.dir / "c").string()}) == 0);
    CHECK(slurp(s.dir / "c" / "series.csv") == csv);
}

TEST_CASE("a held output lock rejects a second run") {
    Scratch s("cli-lock");
    put(s.dir / ".rombo.lock", "");
    put(s.dir / "run.json", R"({"bar": {"n_elems": 10, "n_mod": 2, "t_end_s": 0.01}})");
    CHECK(cli({"simulate", "--config", (s.dir / "run.json").string(), "--out", s.dir.string()}) == 1);
    CHECK(fs::exists(s.dir / ".rombo.lock"));
}

TEST_CASE("command line reduce, hbm and import-check") {
    Scratch s("cli-other");
    put(s.dir / "sdof.json", R"({"scenario": "sdof-wall", "hbm": {"H": 5, "N_aft": 128}})");
    REQUIRE(cli({"hbm", "--config", (s.dir / "sdof.json").string(), "--out", (s.dir / "hbm").string()}) == 0);
    const std::string frf = slurp(s.dir / "hbm" / "frf.csv");
    CHECK(frf.rfind("Omega,q_h0,q_h1,q_h2,q_h3,q_h4,q_h5,iterations\n", 0) == 0);

    put(s.dir / "custom.json", R"({"scenario": "custom", "source": "mesh",
        "mesh": {"kind": "bar1d", "nx": 30, "lx_m": 3.0, "E_Pa": 100.0, "clamp": "x1",
                 "boundary": [{"point_m": [0, 0, 0], "direction": 0}]},
        "reduction": {"method": "craig-bampton", "n_mod": 3},
        "contact": {"points": [{"gap_m": 0.01}]}, "time": {"t_end_s": 1.0}})");
    REQUIRE(cli({"reduce", "--config", (s.dir / "custom.json").string(), "--out", (s.dir / "red").string()}) == 0);
    const ReducedModel r = read_reduced_bundle(s.dir / "red" / "reduced");
    CHECK(r.size() == 4);
    CHECK(r.n_boundary == 1);

    MatrixXd K(3, 3), M = MatrixXd::Identity(3, 3);
    K << 2, -1, 0, -1, 2, -1, 0, -1, 1;
    write_matrix_market(s.dir / "K.mtx", K);
    write_matrix_market(s.dir / "M.mtx", M);
    put(s.dir / "side.json", R"({"boundary_dofs": [0]})");
    json imp = {{"source", "matrices"},
                {"matrices",
                 {{"K", (s.dir / "K.mtx").string()},
                  {"M", (s.dir / "M.mtx").string()},
                  {"sidecar", (s.dir / "side.json").string()}}}};
    put(s.dir / "imp.json", imp.dump());
    REQUIRE(cli({"import-check", "--config", (s.dir / "imp.json").string(), "--out", (s.dir / "imp").string()}) ==
            0);
    const json summary = json::parse(slurp(s.dir / "imp" / "summary.json"));
    CHECK(summary["n_dofs"] == 3);
    CHECK(summary["K_nullity"] == 0);
}
