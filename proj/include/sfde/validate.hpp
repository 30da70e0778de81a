#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sfde {

struct CriterionResult {
    std::string id;
    bool pass = false;
    double observed = 0.0;
    double allowed = 0.0;
    std::string detail;
};

struct ValidateOptions {
    std::uint64_t n_paths_override = 0;  // 0 keeps the pinned per-check counts
    std::uint64_t seed = 20240809;
    int threads = 0;  // 0 = all cores
};

/// Runs the full validation suite; one result per check, determinism last.
/// Every Monte Carlo quantity is computed twice (1 thread vs 8) and the pair
/// must be bit-identical for the determinism check to pass.
std::vector<CriterionResult> run_acceptance(const ValidateOptions& options);

/// True iff every criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

} // namespace sfde
