#include "sfde/solver.hpp"

#include <cmath>

#include "sfde/rng.hpp"

namespace sfde {

namespace {

void check_finite(double v, int step, const char* what) {
    if (!std::isfinite(v))
        throw PathAbort(step, v, std::string(what) + " non-finite at step " +
                                     std::to_string(step));
}

} // namespace

std::vector<double> constant_history(const TimeGrid& grid, double x) {
    return std::vector<double>(grid.n_hist() + 1, x);
}

PathRecord euler_solve(const ModelSpec& model, std::span<const double> eta,
                       const TimeGrid& grid, std::span<const double> incs,
                       PathMeta meta) {
    const int d = dim_of(model);
    const int m = wdim_of(model);
    if (static_cast<int>(eta.size()) != (grid.n_hist() + 1) * d)
        throw ModelError("euler_solve: history length mismatch");
    if (static_cast<int>(incs.size()) != grid.n_fwd() * m)
        throw ModelError("euler_solve: increment count mismatch");

    PathRecord path;
    path.grid = grid;
    path.dim = d;
    path.wdim = m;
    path.scheme = PathRecord::Scheme::Euler;
    path.seed = meta.seed;
    path.path_index = meta.path_index;
    path.values.assign(static_cast<size_t>(grid.n_nodes()) * d, 0.0);
    path.increments.assign(incs.begin(), incs.end());

    for (int i = 0; i <= grid.n_hist(); ++i)
        for (int k = 0; k < d; ++k) path.values[i * d + k] = eta[i * d + k];

    std::vector<double> a(d), acc(d);
    for (int step = 0; step < grid.n_fwd(); ++step) {
        const int node = grid.n_hist() + step;
        const double t = grid.time_at(node);
        const SegView seg = path.segment(node);
        for (int k = 0; k < d; ++k) acc[k] = path.value(node, k);
        evaluate_coefficient(model, 0, t, seg, a);
        for (int k = 0; k < d; ++k) acc[k] += a[k] * grid.dt();
        for (int i = 1; i <= m; ++i) {
            evaluate_coefficient(model, i, t, seg, a);
            const double dw = incs[step * m + (i - 1)];
            for (int k = 0; k < d; ++k) acc[k] += a[k] * dw;
        }
        for (int k = 0; k < d; ++k) {
            check_finite(acc[k], step, "state");
            path.values[(node + 1) * d + k] = acc[k];
        }
    }
    return path;
}

PathRecord exact_exponential_solve(const DelayedBsModel& model, const TimeGrid& grid,
                                   std::span<const double> incs, PathMeta meta) {
    if (static_cast<int>(incs.size()) != grid.n_fwd())
        throw ModelError("exact_exponential_solve: increment count mismatch");

    PathRecord path;
    path.grid = grid;
    path.dim = 1;
    path.wdim = 1;
    path.scheme = PathRecord::Scheme::Exponential;
    path.seed = meta.seed;
    path.path_index = meta.path_index;
    path.values.assign(grid.n_nodes(), model.x);
    path.increments.assign(incs.begin(), incs.end());

    for (int step = 0; step < grid.n_fwd(); ++step) {
        const int node = grid.n_hist() + step;
        const double lag = path.values[grid.delayed_node(node)];
        const double a1 = model.a1(lag);
        const double g = (model.a0(lag) - 0.5 * a1 * a1) * grid.dt() + a1 * incs[step];
        const double next = path.values[node] * std::exp(g);
        check_finite(next, step, "state");
        path.values[node + 1] = next;
    }
    return path;
}

PathRecord simulate_path(const ModelSpec& model, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t path_index,
                         bool exponential) {
    RngStream stream(seed, path_index);
    const int m = wdim_of(model);
    auto incs = sample_increments(stream, grid, m);
    PathMeta meta{seed, path_index};
    if (exponential) {
        if (const auto* bs = std::get_if<DelayedBsModel>(&model))
            return exact_exponential_solve(*bs, grid, incs, meta);
    }
    if (const auto* bs = std::get_if<DelayedBsModel>(&model))
        return euler_solve(model, constant_history(grid, bs->x), grid, incs, meta);
    if (const auto* lf = std::get_if<Lifted2dModel>(&model)) {
        std::vector<double> eta(2 * (grid.n_hist() + 1));
        for (int i = 0; i <= grid.n_hist(); ++i) {
            eta[2 * i] = lf->x_tilde();
            eta[2 * i + 1] = lf->y_tilde;
        }
        return euler_solve(model, eta, grid, incs, meta);
    }
    const auto& g = std::get<GeneralSfdeModel>(model);
    std::vector<double> eta(static_cast<size_t>(grid.n_hist() + 1) * g.d, 0.0);
    return euler_solve(model, eta, grid, incs, meta);
}

double average_functional(const PathRecord& path, const AveragedFunctional& af) {
    if (path.dim != 1)
        throw ModelError("average_functional: scalar paths only");
    if (!(af.t > 0))
        throw ModelError("average_functional: t must be positive");
    const int t_node = path.grid.node_of(af.t);
    const int zero = path.grid.n_hist();
    if (t_node <= zero)
        throw ModelError("average_functional: t must be a forward node");
    double sum = 0.5 * (af.f(path.value(zero)) + af.f(path.value(t_node)));
    for (int n = zero + 1; n < t_node; ++n) sum += af.f(path.value(n));
    return sum * path.grid.dt() / af.t;
}

double girsanov_weight(const DelayedBsModel& model, const PathRecord& path, double t) {
    const int t_node = path.grid.node_of(t);
    const int zero = path.grid.n_hist();
    const double floor2 = model.ellipticity_floor;
    double expo = 0.0;
    for (int node = zero; node < t_node; ++node) {
        const double lag = path.value(path.grid.delayed_node(node));
        const double a1 = model.a1(lag);
        if (floor2 > 0 && a1 * a1 < floor2 * (1.0 - 1e-12))
            throw PathAbort(node - zero, a1,
                            "girsanov_weight: a1 below the ellipticity floor");
        if (a1 == 0.0)
            throw PathAbort(node - zero, a1, "girsanov_weight: a1 vanishes");
        const double sigma = -(model.a0(lag) - model.rate) / a1;
        expo += sigma * path.inc(node - zero) - 0.5 * sigma * sigma * path.grid.dt();
    }
    return std::exp(expo);
}

} // namespace sfde
