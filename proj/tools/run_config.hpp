#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <quanteit/forward_model.hpp>
#include <quanteit/reconstruction.hpp>

namespace quanteit::cli {

// The resolved run configuration. Every command echoes this to
// <out>/config.json with defaults filled in, so any run can be reproduced
// from its output directory alone.
struct RunConfig {
    std::string task;
    std::vector<int> grid = {64, 64};
    int electrodes = 16;
    std::string phantom = "two-lung"; // preset name, or "custom" with ellipses
    std::vector<Ellipse> ellipses;
    double background = 0.24;
    std::optional<double> snr_db;
    std::string method = "quanteit";
    int iterations = 1000;
    double lr = 0.05;
    std::array<double, 3> lambda = {0.03, 0.002, 0.01};
    double mu = 20.0;
    std::uint64_t seed = 0;
    std::string output_dir;
    bool signed_output = false;
    int n_circuits = 2;
    int n_qubits = 2;

    // Merges keys present in a JSON config file over the defaults.
    void load_file(const std::filesystem::path& path);

    GeometrySpec geometry() const;
    PhantomSpec phantom_spec() const;
    ReconstructionConfig reconstruction() const;
    RegWeights weights() const { return {lambda[0], lambda[1], lambda[2]}; }

    std::string to_json() const;
    void write(const std::filesystem::path& out_dir) const;
};

// Reads <dir>/config.json if present (used to recover the snr label of
// simulated data).
std::optional<RunConfig> try_load_dir_config(const std::filesystem::path& dir);

void apply_lambda_preset(RunConfig& config, const std::string& preset);

} // namespace quanteit::cli
