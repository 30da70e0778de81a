#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "sfde/model.hpp"
#include "sfde/path.hpp"

namespace sfde {

/// Non-finite state kills the whole path; clamping would silently corrupt
/// the weight estimators downstream.
struct PathAbort : std::runtime_error {
    PathAbort(int step_, double state_, const std::string& what_)
        : std::runtime_error(what_), step(step_), state(state_) {}
    int step;
    double state;
};

struct PathMeta {
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

/// Left-point Euler-Maruyama for any model variant. eta holds the history
/// values on [-r, 0] (n_hist+1 nodes, node-major, model dimension).
PathRecord euler_solve(const ModelSpec& model, std::span<const double> eta,
                       const TimeGrid& grid, std::span<const double> incs,
                       PathMeta meta = {});

/// Piecewise-frozen exponential scheme for the delayed BS model: coefficients
/// held at their left-node values within each step, the resulting linear SDE
/// solved exactly. Output is strictly positive.
PathRecord exact_exponential_solve(const DelayedBsModel& model, const TimeGrid& grid,
                                   std::span<const double> incs, PathMeta meta = {});

/// Constant history for the scalar delayed models.
std::vector<double> constant_history(const TimeGrid& grid, double x);

/// Convenience: simulate one path of a model from its stream.
PathRecord simulate_path(const ModelSpec& model, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t path_index,
                         bool exponential = true);

struct AveragedFunctional {
    ScalarFn f = ScalarFn::identity();
    double t = 0.0;
};

/// Y(t) = (1/t) * trapezoid of f(X(s)) over [0, t]; scalar paths only.
double average_functional(const PathRecord& path, const AveragedFunctional& af);

/// M(t) = exp(sum Sigma dW - 1/2 sum Sigma^2 dt) with left-point
/// Sigma(s) = -(A0(X(s-r)) - R) / A1(X(s-r)).
double girsanov_weight(const DelayedBsModel& model, const PathRecord& path, double t);

} // namespace sfde
