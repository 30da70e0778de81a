#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfde {

struct ConfigError : std::runtime_error {
    ConfigError(int line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_),
          line(line_) {}
    int line;
};

/// key = value lines with dotted sections and '#' comments. Unknown keys are
/// rejected with their line number; times are checked against the grid.
struct RunConfig {
    // model
    std::string model_kind = "delayed_bs";  // delayed_bs | brownian | lifted
    std::string model_a0 = "const:0";
    std::string model_a1 = "const:0.2";
    double model_x = 100.0;
    double model_rate = 0.0;
    double model_floor = 0.0;
    double model_check_lo = 0.0;
    double model_check_hi = 0.0;
    int model_dim = 1;
    double model_y_tilde = 0.0;
    // grid
    double grid_r = 1.0;
    double grid_T = 1.0;
    double grid_dt = 0.01;
    // mc
    std::uint64_t mc_n_paths = 100000;
    std::uint64_t mc_seed = 42;
    int mc_threads = 0;  // 0 = all cores
    // output
    std::string output_format = "csv";
    std::string output_path;
    // covariance
    std::vector<double> covariance_times;
    // density
    std::vector<double> density_times;
    double density_lo = -1.0;
    double density_hi = 1.0;
    int density_count = 3;
    // greeks
    double greeks_t = 1.0;
    std::vector<std::string> greeks_payoffs;
    std::vector<std::string> greeks_methods;
    bool greeks_asian = false;
    bool greeks_research = false;
    double greeks_fd_h = 0.0;
    // validate
    std::uint64_t validate_n_paths = 0;  // 0 = pinned per-criterion counts

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);

/// The effective config in parseable form; parse(emit(cfg)) == cfg.
std::string emit_config(const RunConfig& cfg);

} // namespace sfde
