#include "rombo/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rombo/error.hpp"

namespace rombo {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot read " + path.string());
    return in;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

json read_json(const fs::path& path) {
    std::ifstream in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidSpec(path.string() + ": " + e.what());
    }
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_matrix_market(const fs::path& path, const MatrixXd& A, bool symmetric) {
    if (symmetric && A.rows() != A.cols()) throw InvalidSpec("symmetric Matrix Market output needs a square matrix");
    std::vector<std::tuple<Index, Index, double>> entries;
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = symmetric ? j : 0; i < A.rows(); ++i)
            if (A(i, j) != 0.0) entries.emplace_back(i, j, A(i, j));
    std::ofstream out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
    out << A.rows() << " " << A.cols() << " " << entries.size() << "\n";
    for (const auto& [i, j, v] : entries) out << i + 1 << " " << j + 1 << " " << format_double(v) << "\n";
    if (!out) throw Error("write failed: " + path.string());
}

MatrixXd read_matrix_market(const fs::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidSpec(path.string() + ": empty file");
    std::istringstream banner(lower(line));
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%matrixmarket" || object != "matrix")
        throw InvalidSpec(path.string() + ": missing %%MatrixMarket matrix banner");
    if (field != "real" && field != "integer" && field != "double")
        throw InvalidSpec(path.string() + ": unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        throw InvalidSpec(path.string() + ": unsupported symmetry '" + symmetry + "'");
    const bool sym = symmetry == "symmetric";

    while (std::getline(in, line))
        if (!line.empty() && line[0] != '%') break;
    std::istringstream size_line(line);
    Index rows = 0, cols = 0, nnz = 0;
    if (format == "coordinate") {
        if (!(size_line >> rows >> cols >> nnz)) throw InvalidSpec(path.string() + ": bad size line");
    } else if (format == "array") {
        if (!(size_line >> rows >> cols)) throw InvalidSpec(path.string() + ": bad size line");
    } else {
        throw InvalidSpec(path.string() + ": unsupported format '" + format + "'");
    }
    if (rows < 0 || cols < 0 || (sym && rows != cols)) throw InvalidSpec(path.string() + ": bad dimensions");

    MatrixXd A = MatrixXd::Zero(rows, cols);
    if (format == "array") {
        for (Index j = 0; j < cols; ++j)
            for (Index i = sym ? j : 0; i < rows; ++i) {
                if (!(in >> A(i, j))) throw InvalidSpec(path.string() + ": truncated array data");
                if (sym) A(j, i) = A(i, j);
            }
        return A;
    }
    for (Index k = 0; k < nnz; ++k) {
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v)) throw InvalidSpec(path.string() + ": truncated coordinate data");
        if (i < 1 || i > rows || j < 1 || j > cols) throw InvalidSpec(path.string() + ": entry index out of range");
        A(i - 1, j - 1) += v;
        if (sym && i != j) A(j - 1, i - 1) += v;
    }
    return A;
}

SecondOrderModel import_matrices(const MatrixPaths& paths) {
    SecondOrderModel model;
    model.K = read_matrix_market(paths.K);
    model.M = read_matrix_market(paths.M);
    const Index n = model.K.rows();
    model.D = paths.D ? read_matrix_market(*paths.D) : MatrixXd::Zero(n, n);
    model.load = Load(n);

    const json side = read_json(paths.sidecar);
    for (auto it = side.begin(); it != side.end(); ++it)
        if (it.key() != "boundary_dofs" && it.key() != "loads")
            throw InvalidSpec(paths.sidecar.string() + ": unknown key '" + it.key() + "'");
    try {
        model.boundary_dofs = side.at("boundary_dofs").get<std::vector<Index>>();
        for (const json& l : side.value("loads", json::array())) {
            const Index dof = l.at("dof").get<Index>();
            if (dof < 0 || dof >= n) throw InvalidSpec(paths.sidecar.string() + ": load dof out of range");
            model.load.constant[dof] += l.value("constant_N", 0.0);
            const double amp = l.value("amplitude_N", 0.0);
            if (amp != 0.0) {
                VectorXd shape = VectorXd::Zero(n);
                shape[dof] = amp;
                const double w = l.at("omega_rad_s").get<double>();
                model.load.add_term(shape, [w](double t) { return std::cos(w * t); });
            }
        }
    } catch (const json::exception& e) {
        throw InvalidSpec(paths.sidecar.string() + ": " + e.what());
    }
    model.validate(true, 1e-10);
    return model;
}

MatrixPaths export_model(const fs::path& dir, const SecondOrderModel& model) {
    fs::create_directories(dir);
    MatrixPaths p{dir / "K.mtx", dir / "M.mtx", std::nullopt, dir / "model.json"};
    write_matrix_market(p.K, model.K);
    write_matrix_market(p.M, model.M);
    if (model.D.size() && !model.D.isZero(0.0)) {
        p.D = dir / "D.mtx";
        write_matrix_market(*p.D, model.D);
    }
    json side;
    side["boundary_dofs"] = model.boundary_dofs;
    json loads = json::array();
    for (Index i = 0; i < model.load.constant.size(); ++i)
        if (model.load.constant[i] != 0.0) loads.push_back({{"dof", i}, {"constant_N", model.load.constant[i]}});
    side["loads"] = loads;
    open_out(p.sidecar) << side.dump(2) << "\n";
    return p;
}

void write_reduced_bundle(const fs::path& dir, const ReducedModel& model) {
    fs::create_directories(dir);
    write_matrix_market(dir / "K.mtx", model.K);
    write_matrix_market(dir / "M.mtx", model.M);
    write_matrix_market(dir / "D.mtx", model.D);
    write_matrix_market(dir / "R.mtx", model.R, false);
    const VectorXd f0 = model.load.constant.size() ? model.load.constant : VectorXd::Zero(model.size());
    write_matrix_market(dir / "load.mtx", MatrixXd(f0), false);
    json m;
    m["method"] = std::string(to_string(model.method));
    m["n_mod"] = model.n_inner();
    m["B"] = model.n_boundary;
    m["omegas_rad_s"] = std::vector<double>(model.omegas_inner.data(), model.omegas_inner.data() + model.omegas_inner.size());
    m["massless"] = model.massless;
    m["shift_N_per_m"] = model.shift;
    m["files"] = {{"K", "K.mtx"}, {"M", "M.mtx"}, {"D", "D.mtx"}, {"R", "R.mtx"}, {"load", "load.mtx"}};
    open_out(dir / "manifest.json") << m.dump(2) << "\n";
}

ReducedModel read_reduced_bundle(const fs::path& dir) {
    const json m = read_json(dir / "manifest.json");
    ReducedModel r;
    try {
        r.method = reduction_method_from_string(m.at("method").get<std::string>());
        r.n_boundary = m.at("B").get<Index>();
        r.massless = m.at("massless").get<bool>();
        r.shift = m.at("shift_N_per_m").get<double>();
        const auto w = m.at("omegas_rad_s").get<std::vector<double>>();
        r.omegas_inner = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
        const json& files = m.at("files");
        r.K = read_matrix_market(dir / files.at("K").get<std::string>());
        r.M = read_matrix_market(dir / files.at("M").get<std::string>());
        r.D = read_matrix_market(dir / files.at("D").get<std::string>());
        r.R = read_matrix_market(dir / files.at("R").get<std::string>());
        r.load = Load(r.K.rows());
        r.load.constant = read_matrix_market(dir / files.at("load").get<std::string>()).col(0);
    } catch (const json::exception& e) {
        throw InvalidSpec((dir / "manifest.json").string() + ": " + e.what());
    }
    if (r.M.rows() != r.K.rows() || r.n_boundary > r.K.rows()) throw InvalidSpec("inconsistent reduced bundle");
    return r;
}

void write_time_series_csv(const fs::path& path, const TimeSeries& ts) {
    std::ofstream out = open_out(path);
    const Index B = ts.samples.empty() ? 0 : ts.samples.front().q_b.size();
    const Index L = ts.samples.empty() ? 0 : ts.samples.front().lambda.size();
    out << "t";
    for (Index i = 0; i < B; ++i) out << ",q_b" << i;
    for (const auto& name : ts.probe_names) out << "," << name;
    for (const auto& name : ts.probe_names) out << ",u_" << name;
    for (Index j = 0; j < L; ++j) out << ",lambda" << j;
    out << ",E_tot,E_rb,E_el,n_active,solver_iters\n";
    for (const Sample& s : ts.samples) {
        out << format_double(s.t);
        for (Index i = 0; i < B; ++i) out << "," << format_double(s.q_b[i]);
        for (Index p = 0; p < s.probe_q.size(); ++p) out << "," << format_double(s.probe_q[p]);
        for (Index p = 0; p < s.probe_u.size(); ++p) out << "," << format_double(s.probe_u[p]);
        for (Index j = 0; j < L; ++j) out << "," << format_double(s.lambda[j]);
        out << "," << format_double(s.energy.total) << "," << format_double(s.energy.rigid) << ","
            << format_double(s.energy.elastic) << "," << s.n_active << "," << s.iterations << "\n";
    }
    if (!out) throw Error("write failed: " + path.string());
}

void write_hbm_csv(const fs::path& path, const std::vector<FourierSolution>& solutions,
                   const std::vector<Probe>& probes) {
    std::ofstream out = open_out(path);
    const int H = solutions.empty() ? 0 : solutions.front().H;
    out << "Omega";
    for (const Probe& p : probes)
        for (int h = 0; h <= H; ++h) out << "," << p.name << "_h" << h;
    out << ",iterations\n";
    for (const FourierSolution& s : solutions) {
        out << format_double(s.Omega);
        for (const Probe& p : probes)
            for (int h = 0; h <= H; ++h) out << "," << format_double(s.amplitude(p.weights, h));
        out << "," << s.iterations << "\n";
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace rombo
