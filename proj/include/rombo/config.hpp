#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rombo/bench.hpp"
#include "rombo/io.hpp"

namespace rombo {

/// Physical DOF picked as the node nearest to a point.
struct PointLoad {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    int direction = 0;
    double constant = 0.0;   // N
    double amplitude = 0.0;  // N, times cos(omega t)
    double omega = 0.0;      // rad/s
};

/// Contact on a boundary DOF group of a custom model: the first DOF of the
/// group is the normal, scaled by `sign`; tangential DOFs follow.
struct ContactSpec {
    double gap = 0.0;  // m
    double sign = 1.0;
    double mu = 0.0;
    double preload = 0.0;  // N
    ContactMode mode = ContactMode::open;
    double restitution_n = 0.0;
    double restitution_t = 0.0;
};

struct HbmConfig {
    HbmOptions options;
    double Omega_start = 0.0;  // rad/s; zero means "scenario default"
    double Omega_end = 0.0;
    double Omega_step = 0.0;
    double min_step = 0.0;
};

struct RunConfig {
    /// "bouncing-bar", "plate", "sdof-wall", "rub" or "custom".
    std::string scenario = "bouncing-bar";

    // Custom models: source "mesh" or "matrices".
    std::string source = "mesh";
    MeshSpec mesh;
    std::vector<PointLoad> loads;
    MatrixPaths matrices;
    ReductionMethod method = ReductionMethod::massless_cb;
    ReductionOptions reduction;
    int contact_dim = 1;
    std::vector<ContactSpec> contacts;
    std::optional<Integrator> integrator;

    // Time integration; unset values keep the scenario defaults.
    std::optional<double> dt;
    std::optional<double> t_start;
    std::optional<double> t_end;
    int n_warm = 0;
    InclusionOptions inclusion;

    BarDropParams bar;
    PlateParams plate;
    double plate_ratio = 1.0;  // excitation frequency / first free frequency
    SdofWallParams sdof;
    double sdof_ratio = 1.0;  // excitation frequency / sqrt(k / m)
    double periods = 150.0;   // plate and sdof-wall runs at fixed frequency
    RubParams rub;
    HbmConfig hbm;

    int stride = 1;
    int threads = 1;
    std::uint64_t seed = 0;
};

/// Throws InvalidSpec naming the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Fully resolved configuration (every key, defaults applied).
std::string emit_config(const RunConfig& cfg);

}  // namespace rombo
