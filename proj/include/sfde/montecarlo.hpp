#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sfde {

/// Monte Carlo result: the universal output unit.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_paths = 0;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0;
};

struct EnsembleError : std::runtime_error {
    EnsembleError(std::uint64_t idx, const std::string& what_)
        : std::runtime_error("path " + std::to_string(idx) + ": " + what_),
          path_index(idx) {}
    std::uint64_t path_index;
};

/// Evaluates job(path_index) for indices [0, n_paths). Reduction is chunked
/// (1024 paths per chunk, accumulated in index order) and combined by a fixed
/// pairwise tree, so the Estimate is bit-identical for any thread count.
Estimate run_ensemble(const std::function<double(std::uint64_t)>& job,
                      std::uint64_t n_paths, std::uint64_t seed, int threads);

/// Same contract for jobs with several outputs per path; returns one Estimate
/// per output, all computed from the same paths.
std::vector<Estimate> run_ensemble_multi(
    const std::function<void(std::uint64_t, std::span<double>)>& job, int n_outputs,
    std::uint64_t n_paths, std::uint64_t seed, int threads);

struct ScanRow {
    double dt = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct ScanResult {
    std::vector<ScanRow> rows;          // ordered as given, last = finest
    std::optional<double> slope;        // empty when degenerate
};

/// Least-squares slope of log|mean(dt) - mean(finest)| against log dt over the
/// non-finest levels. Levels must be ordered coarse to fine.
ScanResult convergence_scan(std::span<const double> dts,
                            std::span<const Estimate> estimates);

int default_threads();

/// Chunked parallel map for side-effect jobs that write to disjoint per-path
/// slots; the result is thread-count invariant by construction.
void parallel_paths(std::uint64_t n_paths, int threads,
                    const std::function<void(std::uint64_t)>& fn);

} // namespace sfde
