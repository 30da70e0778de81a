#include "sfde/validate.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <thread>

#include "sfde/bundle.hpp"
#include "sfde/greeks.hpp"
#include "sfde/montecarlo.hpp"
#include "sfde/oracles.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"
#include "sfde/tangent.hpp"

namespace sfde {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

bool bits_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

DelayedBsModel tanh_model() {
    DelayedBsModel m;
    m.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    m.x = 100.0;
    m.ellipticity_floor = 0.15 * 0.15;
    return m;
}

DelayedBsModel const_model(double sigma = 0.2) {
    DelayedBsModel m;
    m.a1 = ScalarFn::constant(sigma);
    m.x = 100.0;
    m.ellipticity_floor = sigma * sigma;
    return m;
}

Lifted2dModel lifted_tanh() {
    Lifted2dModel m;
    m.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    m.x = 100.0;
    return m;
}

Lifted2dModel lifted_const(double sigma = 0.2) {
    Lifted2dModel m;
    m.a1 = ScalarFn::constant(sigma);
    m.x = 100.0;
    return m;
}

// Runs the same ensemble single-threaded and with 8 threads; any bit
// difference is recorded for the determinism criterion.
struct DualRunner {
    std::vector<std::string> mismatches;

    Estimate run(const std::string& tag, const std::function<double(std::uint64_t)>& job,
                 std::uint64_t n_paths, std::uint64_t seed) {
        Estimate a = run_ensemble(job, n_paths, seed, 1);
        Estimate b = run_ensemble(job, n_paths, seed, 8);
        note(tag, bits_equal(a.mean, b.mean) && bits_equal(a.std_error, b.std_error));
        return b;
    }

    std::vector<Estimate> run_multi(const std::string& tag,
                                    const std::function<void(std::uint64_t, std::span<double>)>& job,
                                    int n_outputs, std::uint64_t n_paths,
                                    std::uint64_t seed) {
        auto a = run_ensemble_multi(job, n_outputs, n_paths, seed, 1);
        auto b = run_ensemble_multi(job, n_outputs, n_paths, seed, 8);
        bool ok = true;
        for (int k = 0; k < n_outputs; ++k)
            ok = ok && bits_equal(a[k].mean, b[k].mean) &&
                 bits_equal(a[k].std_error, b[k].std_error);
        note(tag, ok);
        return b;
    }

    void note(const std::string& tag, bool ok) {
        if (!ok) mismatches.push_back(tag);
    }
};

// ---- criterion 1: BM joint density vs the Gaussian kernel product ----
CriterionResult criterion_joint_density(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 1000000;
    const TimeGrid grid = build_grid(0.5, 1.0, 0.05);
    const ModelSpec bm = make_brownian_model(1);
    const int node_half = grid.node_of(0.5);
    const int node_one = grid.node_of(1.0);

    auto collect = [&](int threads) {
        std::vector<double> samples(2 * n);
        parallel_paths(n, threads, [&](std::uint64_t i) {
            PathRecord p = simulate_path(bm, grid, opt.seed, i);
            samples[2 * i] = p.value(node_half);
            samples[2 * i + 1] = p.value(node_one);
        });
        return samples;
    };
    auto s1 = collect(1);
    auto s8 = collect(8);
    dual.note("criterion1-samples", s1 == s8);

    DensityQuery query;
    query.times = {0.5, 1.0};
    for (double a : {-1.0, 0.0, 1.0})
        for (double b : {-1.0, 0.0, 1.0}) query.points.push_back({a, b});
    auto kde = kde_estimate(s8, 2, query);

    double max_err = 0.0;
    for (size_t i = 0; i < query.points.size(); ++i) {
        double oracle = gaussian_joint_density(query.times, query.points[i]);
        max_err = std::max(max_err, std::fabs(kde[i] - oracle));
    }
    CriterionResult r;
    r.id = "1 joint-density-kde";
    r.observed = max_err;
    r.allowed = 0.02;
    r.pass = max_err < r.allowed;
    r.detail = "max |kde - gaussian| over 9 points at " + std::to_string(n) + " paths";
    return r;
}

// ---- criterion 2: classical delta with the closed Brownian weight ----
CriterionResult criterion_classical_delta(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 100000;
    const TimeGrid grid = build_grid(1.0, 1.0, 0.05);
    const DelayedBsModel model = const_model(0.2);
    const Payoff payoff = Payoff::call(100.0);
    const double t = 1.0;

    auto job = [&, model, payoff](std::uint64_t idx) {
        RngStream stream(opt.seed, idx);
        auto incs = sample_increments(stream, grid, 1);
        PathRecord path = exact_exponential_solve(model, grid, incs, {opt.seed, idx});
        return payoff(path.value(grid.node_of(t))) *
               european_weight_smalltime(model, path, t);
    };
    Estimate est = dual.run("criterion2", job, n, opt.seed);
    const double target = bs_closed_form(100, 100, 0.2, 0.0, 1.0, BsKind::Delta);

    CriterionResult r;
    r.id = "2 classical-delta";
    r.observed = std::fabs(est.mean - target);
    r.allowed = 4.0 * est.std_error;
    r.pass = r.observed <= r.allowed && est.std_error < 0.01;
    r.detail = "estimate " + num(est.mean) + " vs " + num(target) + ", stderr " +
               num(est.std_error) + " (< 0.01 required)";
    return r;
}

// ---- criterion 3: delayed-model delta, Malliavin vs finite difference ----
CriterionResult criterion_delayed_delta(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 100000;
    const TimeGrid grid = build_grid(1.0, 1.0, 0.01);
    const DelayedBsModel model = tanh_model();
    const double t = 0.5;
    const std::vector<Payoff> payoffs = {Payoff::call(100), Payoff::digital(100),
                                         Payoff::identity()};
    CriterionResult r;
    r.id = "3 delayed-delta-vs-fd";
    r.pass = true;
    double worst = 0.0, worst_allowed = 1.0;
    for (const auto& payoff : payoffs) {
        auto mall = [&, model, payoff](std::uint64_t idx) {
            RngStream stream(opt.seed, idx);
            auto incs = sample_increments(stream, grid, 1);
            PathRecord path = exact_exponential_solve(model, grid, incs, {opt.seed, idx});
            return payoff(path.value(grid.node_of(t))) *
                   european_weight_smalltime(model, path, t);
        };
        Estimate em = dual.run("criterion3-" + payoff.name, mall, n, opt.seed);
        Estimate ef = fd_delta(model, payoff, grid, t, 0.0, n, opt.seed + 1, opt.threads);
        Estimate ef1 = fd_delta(model, payoff, grid, t, 0.0, n, opt.seed + 1, 1);
        dual.note("criterion3-fd-" + payoff.name,
                  bits_equal(ef.mean, ef1.mean) && bits_equal(ef.std_error, ef1.std_error));
        const double diff = std::fabs(em.mean - ef.mean);
        const double allowed =
            4.0 * std::sqrt(em.std_error * em.std_error + ef.std_error * ef.std_error);
        if (diff / allowed > worst / worst_allowed) {
            worst = diff;
            worst_allowed = allowed;
        }
        r.pass = r.pass && diff <= allowed;
        r.detail += payoff.name + ": |" + num(em.mean) + " - " + num(ef.mean) + "| " +
                    (diff <= allowed ? "<=" : ">") + " " + num(allowed) + "; ";
    }
    r.observed = worst;
    r.allowed = worst_allowed;
    return r;
}

// ---- criterion 4: small-time closed form vs the general Skorokhod route ----
CriterionResult criterion_smalltime_agreement(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? std::min<std::uint64_t>(opt.n_paths_override, 2000)
                                                 : 500;
    const DelayedBsModel model = tanh_model();
    const double r_delay = 1.0, t = 0.5;
    std::vector<double> dts, meandiff, scale;
    for (int k = 4; k <= 7; ++k) dts.push_back(r_delay / (1 << k));

    for (double dt : dts) {
        const TimeGrid grid = build_grid(r_delay, 1.0, dt);
        auto job = [&, model](std::uint64_t idx, std::span<double> out) {
            RngStream stream(opt.seed, idx);
            auto incs = sample_increments(stream, grid, 1);
            PathRecord path = exact_exponential_solve(model, grid, incs, {opt.seed, idx});
            DelayedBsBundle bundle = make_delayed_bundle(model, path);
            const double g_general = european_weight_general(bundle, t);
            const double g_small = european_weight_smalltime(model, path, t);
            out[0] = std::fabs(g_general - g_small);
            out[1] = std::fabs(g_small);
        };
        auto est = dual.run_multi("criterion4-dt" + num(dt), job, 2, n, opt.seed);
        meandiff.push_back(est[0].mean);
        scale.push_back(est[1].mean);
    }

    CriterionResult r;
    r.id = "4 smalltime-delta-closed-form";
    double floor = 0.0;
    bool exact = true;
    for (size_t i = 0; i < dts.size(); ++i) {
        floor = 1e-12 * (1.0 + scale[i]);
        exact = exact && meandiff[i] <= floor;
        r.detail += "dt=" + num(dts[i]) + ": " + num(meandiff[i]) + "; ";
    }
    if (exact) {
        r.pass = true;
        r.observed = *std::max_element(meandiff.begin(), meandiff.end());
        r.allowed = floor;
        r.detail += "agreement at machine precision (slope criterion satisfied in the limit)";
        return r;
    }
    // measurable differences: require the convergence slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < dts.size(); ++i) {
        double x = std::log(dts[i]), y = std::log(meandiff[i] + 1e-300);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = static_cast<double>(dts.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    r.observed = slope;
    r.allowed = 0.8;
    r.pass = slope >= 0.8;
    r.detail += "slope " + num(slope);
    return r;
}

// ---- criterion 5: Asian small-time weight vs FD + constant-coefficient form ----
CriterionResult criterion_asian(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 100000;
    const TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 256.0);
    const double t = 0.5;
    const Lifted2dModel model = lifted_tanh();
    CriterionResult r;
    r.id = "5 asian-smalltime";
    r.pass = true;

    const std::vector<Payoff> payoffs = {Payoff::identity(), Payoff::call(100.0)};
    double worst = 0.0, worst_allowed = 1.0;
    for (const auto& payoff : payoffs) {
        auto mall = [&, model, payoff](std::uint64_t idx) {
            ModelSpec spec = model;
            PathRecord path = simulate_path(spec, grid, opt.seed, idx);
            LiftedBundle bundle = make_lifted_bundle(model, path);
            const double y_avg = path.value(grid.node_of(t), 1) / t;
            return payoff(y_avg) * asian_weight_smalltime(bundle, t);
        };
        Estimate em = dual.run("criterion5-" + payoff.name, mall, n, opt.seed);
        ModelSpec spec = model;
        Estimate ef = fd_delta(spec, payoff, grid, t, 0.0, n, opt.seed + 1, opt.threads, true);
        const double diff = std::fabs(em.mean - ef.mean);
        const double allowed =
            4.0 * std::sqrt(em.std_error * em.std_error + ef.std_error * ef.std_error);
        if (diff / allowed > worst / worst_allowed) {
            worst = diff;
            worst_allowed = allowed;
        }
        r.pass = r.pass && diff <= allowed;
        r.detail += payoff.name + ": |" + num(em.mean) + " - " + num(ef.mean) + "| " +
                    (diff <= allowed ? "<=" : ">") + " " + num(allowed) + "; ";
    }

    // constant-coefficient reduction, path-wise
    const Lifted2dModel cmodel = lifted_const(0.2);
    double max_rel = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        ModelSpec spec = cmodel;
        PathRecord path = simulate_path(spec, grid, opt.seed + 2, i);
        LiftedBundle bundle = make_lifted_bundle(cmodel, path);
        const double five = asian_weight_smalltime(bundle, t);
        const double three = asian_weight_reduced_constant(bundle, t);
        max_rel = std::max(max_rel, std::fabs(five - three) / (1.0 + std::fabs(three)));
    }
    const bool reduced_ok = max_rel <= 1e-10;
    r.pass = r.pass && reduced_ok;
    r.detail += "const-A1 reduction max rel diff " + num(max_rel);
    r.observed = worst;
    r.allowed = worst_allowed;
    return r;
}

// ---- criterion 6: duality of the discrete derivative and Skorokhod sum ----
CriterionResult criterion_duality(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 10000;
    const double t = 0.5;
    CriterionResult r;
    r.id = "6 skorokhod-duality";
    r.pass = true;

    const TimeGrid grid = build_grid(1.0, 1.0, 0.01);
    const DelayedBsModel model = tanh_model();
    const TimeGrid lgrid = build_grid(1.0, 1.0, 1.0 / 128.0);
    const Lifted2dModel lmodel = lifted_tanh();

    struct Pair {
        std::string name;
        int kind;  // 0..3 delayed, 4..5 lifted
    };
    const std::vector<Pair> pairs = {{"X(t),u=1", 0},          {"X(t),u=X/x", 1},
                                     {"dxX(t),u=a1", 2},       {"Lambda(t),u=U/(a1 X)", 3},
                                     {"Ytilde(t),u=1", 4},     {"detVcheck(t),u=Ytilde", 5}};

    double e_delta_mean = 0, e_delta_allowed = 0;
    for (const auto& pair : pairs) {
        const bool lifted = pair.kind >= 4;
        const TimeGrid& g = lifted ? lgrid : grid;
        const int t_step = g.fwd_index(g.node_of(t));
        auto job = [&, pair](std::uint64_t idx, std::span<double> out) {
            if (!lifted) {
                RngStream stream(opt.seed, idx);
                auto incs = sample_increments(stream, g, 1);
                PathRecord path = exact_exponential_solve(model, g, incs, {opt.seed, idx});
                DelayedBsBundle bundle = make_delayed_bundle(model, path);
                std::vector<double> u(t_step);
                DelayedFunctional f = DelayedFunctional::Terminal;
                double fval = 0.0;
                for (int k = 0; k < t_step; ++k) {
                    const int node = g.n_hist() + k;
                    const double lag = path.value(g.delayed_node(node));
                    switch (pair.kind) {
                        case 0: u[k] = 1.0; break;
                        case 1: u[k] = path.value(node) / model.x; break;
                        case 2: u[k] = model.a1(lag); break;
                        case 3:
                            u[k] = bundle.u[node] / (model.a1(lag) * path.value(node));
                            break;
                    }
                }
                switch (pair.kind) {
                    case 0:
                    case 1:
                        f = DelayedFunctional::Terminal;
                        fval = path.value(g.node_of(t));
                        break;
                    case 2:
                        f = DelayedFunctional::DxTerminal;
                        fval = bundle.dx_x[g.node_of(t)];
                        break;
                    case 3:
                        f = DelayedFunctional::Lambda;
                        fval = bundle.lambda[g.node_of(t)];
                        break;
                }
                auto dk = dk_functional(bundle, f, t, 0, t_step);
                double lhs = 0.0, ito = 0.0;
                for (int k = 0; k < t_step; ++k) {
                    lhs += dk[k] * u[k] * g.dt();
                    ito += u[k] * path.inc(k);
                }
                out[0] = lhs;
                out[1] = fval * ito;
                out[2] = ito;  // delta(u) for the adapted-mean check
                return;
            }
            ModelSpec spec = lmodel;
            PathRecord path = simulate_path(spec, g, opt.seed, idx);
            LiftedBundle bundle = make_lifted_bundle(lmodel, path);
            std::vector<double> u(t_step);
            for (int k = 0; k < t_step; ++k) {
                const int node = g.n_hist() + k;
                u[k] = pair.kind == 4 ? 1.0 : path.value(node, 1) - lmodel.y_tilde;
            }
            LiftedFunctional f =
                pair.kind == 4 ? LiftedFunctional::Ytilde : LiftedFunctional::DetVcheck;
            double fval;
            if (pair.kind == 4) {
                fval = path.value(g.node_of(t), 1) - lmodel.y_tilde;
            } else {
                fval = lifted_small_time(bundle, t).det_vcheck;
            }
            auto dk = dk_lifted(bundle, f, t, 0, t_step);
            double lhs = 0.0, ito = 0.0;
            for (int k = 0; k < t_step; ++k) {
                lhs += dk[k] * u[k] * g.dt();
                ito += u[k] * path.inc(k);
            }
            out[0] = lhs;
            out[1] = fval * ito;
            out[2] = ito;
        };
        auto est = dual.run_multi("criterion6-" + pair.name, job, 3, n, opt.seed);
        const double diff = std::fabs(est[0].mean - est[1].mean);
        const double allowed = 4.0 * std::sqrt(est[0].std_error * est[0].std_error +
                                               est[1].std_error * est[1].std_error);
        r.pass = r.pass && diff <= allowed;
        r.detail += pair.name + ": " + num(diff) + (diff <= allowed ? " <= " : " > ") +
                    num(allowed) + "; ";
        if (pair.kind == 1) {
            e_delta_mean = std::fabs(est[2].mean);
            e_delta_allowed = 4.0 * est[2].std_error;
        }
        if (r.observed < diff) {
            r.observed = diff;
            r.allowed = allowed;
        }
    }
    const bool mean_zero = e_delta_mean <= e_delta_allowed;
    r.pass = r.pass && mean_zero;
    r.detail += "E[delta(u)] " + num(e_delta_mean) + " <= " + num(e_delta_allowed);
    return r;
}

// ---- criterion 7: covariance structure ----
CriterionResult criterion_covariance(const ValidateOptions& opt, DualRunner& dual) {
    CriterionResult r;
    r.id = "7 covariance-structure";
    r.pass = true;

    // BM exactness at node resolution
    {
        const TimeGrid grid = build_grid(0.5, 1.0, 0.05);
        const ModelSpec bm1 = make_brownian_model(1);
        PathRecord p = simulate_path(bm1, grid, opt.seed, 7);
        CovMatrix v = covariance_single(bm1, p, 0.5);
        double err = std::fabs(v.at(0, 0) - 0.5);
        const double times[2] = {0.5, 1.0};
        CovMatrix vj = covariance_joint(bm1, p, times);
        err = std::max(err, std::fabs(vj.at(0, 0) - 0.5));
        err = std::max(err, std::fabs(vj.at(0, 1) - 0.5));
        err = std::max(err, std::fabs(vj.at(1, 0) - 0.5));
        err = std::max(err, std::fabs(vj.at(1, 1) - 1.0));

        const ModelSpec bm2 = make_brownian_model(2);
        PathRecord p2 = simulate_path(bm2, grid, opt.seed, 8);
        CovMatrix v2 = covariance_single(bm2, p2, 0.5);
        err = std::max(err, std::fabs(v2.at(0, 0) - 0.5));
        err = std::max(err, std::fabs(v2.at(1, 1) - 0.5));
        err = std::max(err, std::fabs(v2.at(0, 1)));
        r.pass = r.pass && err <= 1e-12;
        r.detail += "BM exactness err " + num(err) + "; ";
        r.observed = err;
        r.allowed = 1e-12;
    }

    // delayed model: strictly positive joint covariance on every sampled path
    {
        const std::uint64_t n_paths =
            opt.n_paths_override ? std::min<std::uint64_t>(opt.n_paths_override, 1000) : 1000;
        const TimeGrid grid = build_grid(1.0, 1.0, 0.02);
        const DelayedBsModel model = tanh_model();
        const ModelSpec spec = model;
        const std::vector<double> times = {0.25, 0.5, 0.75};
        auto job = [&, spec](std::uint64_t idx) {
            ModelSpec m = spec;
            PathRecord path = simulate_path(m, grid, opt.seed + 3, idx, false);
            CovMatrix v = covariance_joint(m, path, times);
            return min_eigenvalue(v) > 0.0 ? 1.0 : 0.0;
        };
        Estimate est = dual.run("criterion7-mineig", job, n_paths, opt.seed + 3);
        r.pass = r.pass && est.mean == 1.0;
        r.detail += "positive min-eig fraction " + num(est.mean) + " over " +
                    std::to_string(n_paths) + " paths";
    }
    return r;
}

// ---- criterion 8: averaged-functional covariance ----
CriterionResult criterion_averaged(const ValidateOptions& opt, DualRunner& dual) {
    CriterionResult r;
    r.id = "8 averaged-covariance";

    const TimeGrid grid = build_grid(1.0, 1.0, 1e-3);
    const ModelSpec bm = make_brownian_model(1);
    PathRecord p = simulate_path(bm, grid, opt.seed, 11);
    const double v = covariance_average(bm, p, ScalarFn::identity(), 1.0);
    const double rel = std::fabs(v - 1.0 / 3.0) / (1.0 / 3.0);
    r.observed = rel;
    r.allowed = 0.01;
    r.pass = rel <= 0.01;
    r.detail = "Vtilde(1) = " + num(v) + " vs 1/3, rel err " + num(rel) + "; ";

    // positivity on delayed-model paths
    const TimeGrid g2 = build_grid(1.0, 1.0, 0.01);
    const DelayedBsModel dm = tanh_model();
    const ModelSpec spec = dm;
    auto job = [&, spec](std::uint64_t idx) {
        ModelSpec m = spec;
        PathRecord path = simulate_path(m, g2, opt.seed + 4, idx, false);
        return covariance_average(m, path, ScalarFn::tanh_fn(0.0, 1.0, 50.0), 0.5) >= 0.0
                   ? 1.0
                   : 0.0;
    };
    Estimate est = dual.run("criterion8-positivity", job, 100, opt.seed + 4);
    r.pass = r.pass && est.mean == 1.0;
    r.detail += "nonnegative on " + num(100 * est.mean) + "% of paths";
    return r;
}

// ---- criterion 9: weight mean-zero ----
CriterionResult criterion_mean_zero(const ValidateOptions& opt, DualRunner& dual) {
    const std::uint64_t n = opt.n_paths_override ? opt.n_paths_override : 100000;
    const double t = 0.5;
    CriterionResult r;
    r.id = "9 weight-mean-zero";
    r.pass = true;

    const TimeGrid grid = build_grid(1.0, 1.0, 0.01);
    for (const auto& [name, model] : {std::pair<std::string, DelayedBsModel>{"const", const_model()},
                                      {"tanh", tanh_model()}}) {
        const DelayedBsModel m = model;
        auto job = [&, m](std::uint64_t idx) {
            RngStream stream(opt.seed, idx);
            auto incs = sample_increments(stream, grid, 1);
            PathRecord path = exact_exponential_solve(m, grid, incs, {opt.seed, idx});
            return european_weight_smalltime(m, path, t);
        };
        Estimate est = dual.run("criterion9-E-" + name, job, n, opt.seed);
        const bool ok = std::fabs(est.mean) <= 4.0 * est.std_error;
        r.pass = r.pass && ok;
        r.detail += "E[Gamma_E]/" + name + ": " + num(est.mean) + " (4se " +
                    num(4 * est.std_error) + "); ";
        if (std::fabs(est.mean) > r.observed) {
            r.observed = std::fabs(est.mean);
            r.allowed = 4.0 * est.std_error;
        }
    }

    const TimeGrid lgrid = build_grid(1.0, 1.0, 1.0 / 256.0);
    for (const auto& [name, model] : {std::pair<std::string, Lifted2dModel>{"const", lifted_const()},
                                      {"tanh", lifted_tanh()}}) {
        const Lifted2dModel m = model;
        auto job = [&, m](std::uint64_t idx) {
            ModelSpec spec = m;
            PathRecord path = simulate_path(spec, lgrid, opt.seed, idx);
            LiftedBundle bundle = make_lifted_bundle(m, path);
            return asian_weight_smalltime(bundle, t);
        };
        Estimate est = dual.run("criterion9-A-" + name, job, n, opt.seed);
        const bool ok = std::fabs(est.mean) <= 4.0 * est.std_error;
        r.pass = r.pass && ok;
        r.detail += "E[Gamma_A]/" + name + ": " + num(est.mean) + " (4se " +
                    num(4 * est.std_error) + "); ";
        if (std::fabs(est.mean) > r.observed) {
            r.observed = std::fabs(est.mean);
            r.allowed = 4.0 * est.std_error;
        }
    }
    return r;
}

} // namespace

std::vector<CriterionResult> run_acceptance(const ValidateOptions& options) {
    ValidateOptions opt = options;
    if (opt.threads <= 0) opt.threads = default_threads();
    DualRunner dual;

    std::vector<CriterionResult> results;
    results.push_back(criterion_joint_density(opt, dual));
    results.push_back(criterion_classical_delta(opt, dual));
    results.push_back(criterion_delayed_delta(opt, dual));
    results.push_back(criterion_smalltime_agreement(opt, dual));
    results.push_back(criterion_asian(opt, dual));
    results.push_back(criterion_duality(opt, dual));
    results.push_back(criterion_covariance(opt, dual));
    results.push_back(criterion_averaged(opt, dual));
    results.push_back(criterion_mean_zero(opt, dual));

    CriterionResult det;
    det.id = "10 thread-determinism";
    det.pass = dual.mismatches.empty();
    det.observed = static_cast<double>(dual.mismatches.size());
    det.allowed = 0.0;
    det.detail = det.pass ? "all ensembles bit-identical at 1 vs 8 threads" : "";
    for (const auto& m : dual.mismatches) det.detail += m + "; ";
    results.push_back(det);
    return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

} // namespace sfde
