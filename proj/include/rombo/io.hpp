#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rombo/cms.hpp"
#include "rombo/hbm.hpp"
#include "rombo/stepping.hpp"

namespace rombo {

namespace fs = std::filesystem;

/// Matrix Market coordinate file. Symmetric matrices store the lower triangle.
void write_matrix_market(const fs::path& path, const MatrixXd& A, bool symmetric = true);

/// Reads "coordinate real|integer general|symmetric" and "array real general".
MatrixXd read_matrix_market(const fs::path& path);

/// Files of an imported model; the sidecar JSON holds
/// {"boundary_dofs": [...], "loads": [{"dof", "constant_N", "amplitude_N", "omega_rad_s"}]}.
struct MatrixPaths {
    fs::path K;
    fs::path M;
    std::optional<fs::path> D;
    fs::path sidecar;
};

/// Imported model, validated for symmetry (1e-10) and definiteness.
SecondOrderModel import_matrices(const MatrixPaths& paths);

/// Writes K.mtx, M.mtx, D.mtx (when present) and model.json into `dir`.
/// Only the constant load survives the export.
MatrixPaths export_model(const fs::path& dir, const SecondOrderModel& model);

/// Reduced model as a Matrix Market bundle with manifest.json
/// (method, n_mod, B, omegas, massless, shift, files).
void write_reduced_bundle(const fs::path& dir, const ReducedModel& model);
ReducedModel read_reduced_bundle(const fs::path& dir);

/// Shortest round-trip text of a double.
std::string format_double(double x);

/// Time series CSV: t, q_b[i], probes, u probes, lambda[j], E_tot, E_rb, E_el, n_active, solver_iters.
void write_time_series_csv(const fs::path& path, const TimeSeries& ts);

/// Frequency response CSV: Omega, |q_hat(h)| per probe for h = 0..H, Newton iterations.
void write_hbm_csv(const fs::path& path, const std::vector<FourierSolution>& solutions,
                   const std::vector<Probe>& probes);

}  // namespace rombo
