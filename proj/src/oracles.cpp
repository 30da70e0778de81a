#include "sfde/oracles.hpp"

#include <cmath>
#include <stdexcept>

#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

namespace sfde {

double bs_closed_form(double x, double strike, double sigma, double rate, double t,
                      BsKind kind) {
    if (!(x > 0) || !(strike > 0) || !(sigma > 0) || !(t > 0))
        throw std::invalid_argument("bs_closed_form: x, K, sigma, t must be positive");
    const double sq = sigma * std::sqrt(t);
    const double d1 = (std::log(x / strike) + (rate + 0.5 * sigma * sigma) * t) / sq;
    const double d2 = d1 - sq;
    if (kind == BsKind::Delta) return norm_cdf(d1);
    return x * norm_cdf(d1) - strike * std::exp(-rate * t) * norm_cdf(d2);
}

Estimate fd_delta(const ModelSpec& model, const Payoff& payoff, const TimeGrid& grid,
                  double t, double h, std::uint64_t n_paths, std::uint64_t seed,
                  int threads, bool asian) {
    const int t_node = grid.node_of(t);

    double x0;
    if (const auto* bs = std::get_if<DelayedBsModel>(&model)) x0 = bs->x;
    else if (const auto* lf = std::get_if<Lifted2dModel>(&model)) x0 = lf->x;
    else throw ModelError("fd_delta: needs a delayed BS or lifted model");
    if (h == 0.0) h = payoff.name == "digital" ? 0.5 : 0.01 * x0;
    if (!(h > 0) || h >= x0) throw ModelError("fd_delta: need 0 < h < x");

    auto terminal = [grid, t_node, t, asian](const PathRecord& p) {
        return asian ? p.value(t_node, 1) / t : p.value(t_node);
    };

    auto job = [model, grid, seed, h, payoff, terminal, asian](std::uint64_t idx) {
        RngStream stream(seed, idx);
        auto incs = sample_increments(stream, grid, 1);
        PathMeta meta{seed, idx};
        double up, dn;
        if (const auto* bs = std::get_if<DelayedBsModel>(&model)) {
            DelayedBsModel mu = *bs, md = *bs;
            mu.x += h;
            md.x -= h;
            up = terminal(exact_exponential_solve(mu, grid, incs, meta));
            dn = terminal(exact_exponential_solve(md, grid, incs, meta));
        } else {
            const auto& lf = std::get<Lifted2dModel>(model);
            Lifted2dModel mu = lf, md = lf;
            mu.x += h;
            md.x -= h;
            ModelSpec su = mu, sd = md;
            auto eta = [&](const Lifted2dModel& m) {
                std::vector<double> e(2 * (grid.n_hist() + 1));
                for (int i = 0; i <= grid.n_hist(); ++i) {
                    e[2 * i] = m.x_tilde();
                    e[2 * i + 1] = m.y_tilde;
                }
                return e;
            };
            up = terminal(euler_solve(su, eta(mu), grid, incs, meta));
            dn = terminal(euler_solve(sd, eta(md), grid, incs, meta));
        }
        (void)asian;
        return (payoff(up) - payoff(dn)) / (2.0 * h);
    };
    return run_ensemble(job, n_paths, seed, threads);
}

double gaussian_joint_density(std::span<const double> times,
                              std::span<const double> point, int d) {
    const size_t n = times.size();
    if (n == 0 || point.size() != n * static_cast<size_t>(d))
        throw std::invalid_argument("gaussian_joint_density: size mismatch");
    auto kernel = [](double dt, double from, double to) {
        return std::exp(-(to - from) * (to - from) / (2.0 * dt)) /
               std::sqrt(2.0 * M_PI * dt);
    };
    double density = 1.0;
    for (int c = 0; c < d; ++c) {
        double prev_t = 0.0, prev_y = 0.0;
        for (size_t k = 0; k < n; ++k) {
            const double dt = times[k] - prev_t;
            if (!(dt > 0))
                throw std::invalid_argument("gaussian_joint_density: times must increase");
            density *= kernel(dt, prev_y, point[k * d + c]);
            prev_t = times[k];
            prev_y = point[k * d + c];
        }
    }
    return density;
}

std::vector<double> kde_estimate(std::span<const double> samples, int dim,
                                 const DensityQuery& query) {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("kde_estimate: dimension must be in [1, 3]");
    const size_t n = samples.size() / dim;
    if (n < 100) throw std::invalid_argument("kde_estimate: need at least 100 samples");

    std::vector<double> bw(dim);
    if (query.bandwidth > 0) {
        for (auto& b : bw) b = query.bandwidth;
    } else {
        // Silverman per coordinate
        const double expo = 1.0 / (dim + 4.0);
        const double factor = std::pow(4.0 / ((dim + 2.0) * static_cast<double>(n)), expo);
        for (int c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (size_t i = 0; i < n; ++i) mean += samples[i * dim + c];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double dv = samples[i * dim + c] - mean;
                var += dv * dv;
            }
            var /= static_cast<double>(n - 1);
            bw[c] = std::sqrt(var) * factor;
            if (!(bw[c] > 0)) bw[c] = 1e-8;
        }
    }

    std::vector<double> out;
    out.reserve(query.points.size());
    const double norm = std::pow(2.0 * M_PI, -0.5 * dim);
    for (const auto& q : query.points) {
        if (q.size() != static_cast<size_t>(dim))
            throw std::invalid_argument("kde_estimate: query point dimension mismatch");
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double z = (q[c] - samples[i * dim + c]) / bw[c];
                e += z * z;
            }
            acc += std::exp(-0.5 * e);
        }
        double scale = norm / static_cast<double>(n);
        for (int c = 0; c < dim; ++c) scale /= bw[c];
        out.push_back(acc * scale);
    }
    return out;
}

} // namespace sfde
