#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sfde/greeks.hpp"
#include "sfde/model.hpp"
#include "sfde/montecarlo.hpp"

namespace sfde {

enum class BsKind { Price, Delta };

/// Black-Scholes call price / delta, the constant-volatility reference.
double bs_closed_form(double x, double strike, double sigma, double rate, double t,
                      BsKind kind);

/// Central finite difference in x with common random numbers: both shifted
/// paths are driven by the identical increment stream. h = 0 picks the
/// default 0.01 x (0.5 absolute for digital payoffs).
Estimate fd_delta(const ModelSpec& model, const Payoff& payoff, const TimeGrid& grid,
                  double t, double h, std::uint64_t n_paths, std::uint64_t seed,
                  int threads, bool asian = false);

/// Product of Gaussian transition kernels at strictly increasing times;
/// point is flat n x d, coordinates independent.
double gaussian_joint_density(std::span<const double> times,
                              std::span<const double> point, int d = 1);

struct DensityQuery {
    std::vector<double> times;
    std::vector<std::vector<double>> points;  // each of size times.size() * d
    double bandwidth = 0.0;                   // 0 => Silverman per coordinate
};

/// Gaussian-product kernel density estimate at the query points.
/// samples: flat N x dim. dim <= 3, N >= 100.
std::vector<double> kde_estimate(std::span<const double> samples, int dim,
                                 const DensityQuery& query);

} // namespace sfde
