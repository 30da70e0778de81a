#include "sfde/greeks.hpp"

#include <cmath>

#include "sfde/oracles.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

namespace sfde {

Payoff Payoff::call(double strike) {
    Payoff p;
    p.terms.push_back({1.0, ScalarFn::affine_clip(-strike, 1.0,
                                                  -std::numeric_limits<double>::infinity(),
                                                  std::numeric_limits<double>::infinity()),
                       strike, std::numeric_limits<double>::infinity()});
    p.name = "call";
    return p;
}

Payoff Payoff::put(double strike) {
    Payoff p;
    p.terms.push_back({1.0, ScalarFn::affine_clip(strike, -1.0,
                                                  -std::numeric_limits<double>::infinity(),
                                                  std::numeric_limits<double>::infinity()),
                       -std::numeric_limits<double>::infinity(), strike});
    p.name = "put";
    return p;
}

Payoff Payoff::digital(double strike) {
    Payoff p;
    p.terms.push_back({1.0, ScalarFn::constant(1.0), strike,
                       std::numeric_limits<double>::infinity()});
    p.name = "digital";
    return p;
}

Payoff Payoff::identity() {
    Payoff p;
    p.terms.push_back({1.0, ScalarFn::identity(),
                       -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()});
    p.name = "identity";
    return p;
}

Payoff Payoff::constant(double c) {
    Payoff p;
    p.terms.push_back({1.0, ScalarFn::constant(c),
                       -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()});
    p.name = "constant";
    return p;
}

Payoff Payoff::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = colon == std::string::npos ? text : text.substr(0, colon);
    double arg = 0.0;
    if (colon != std::string::npos) arg = std::stod(text.substr(colon + 1));
    if (head == "call") return call(arg);
    if (head == "put") return put(arg);
    if (head == "digital") return digital(arg);
    if (head == "identity") return identity();
    if (head == "constant") return constant(arg);
    throw ModelError("unknown payoff '" + text + "'");
}

double european_weight_smalltime(const DelayedBsModel& model, const PathRecord& path,
                                 double t) {
    if (t > path.grid.r() + 1e-12)
        throw ModelError("european_weight_smalltime: requires t <= r");
    const int t_node = path.grid.node_of(t);
    const double w = path.brownian(t_node);
    const double a = model.a1(model.x);
    const double ap = model.a1.deriv(model.x);
    return (w / (model.x * a) + (ap / a) * (w * w - t) - ap * t * w) / t;
}

double european_weight_general(const DelayedBsBundle& bundle, double t) {
    const PathRecord& path = *bundle.path;
    const DelayedBsModel& model = *bundle.model;
    const TimeGrid& grid = path.grid;
    const int t_node = grid.node_of(t);
    const int t_step = grid.fwd_index(t_node);
    const int win_lo = t_step > grid.n_hist() ? t_step - grid.n_hist() : 0;
    const double window = std::min(t, grid.r());
    const double floor2 = model.ellipticity_floor;

    std::vector<double> u(t_step - win_lo);
    for (int k = win_lo; k < t_step; ++k) {
        const int node = grid.n_hist() + k;
        const double a = model.a1(path.value(grid.delayed_node(node)));
        if (floor2 > 0 && a * a < floor2 * (1.0 - 1e-12))
            throw PathAbort(k, a, "european_weight_general: a1 below ellipticity floor");
        u[k - win_lo] = bundle.u[node] / (a * path.value(node));
    }
    const auto dk_lambda =
        dk_functional(bundle, DelayedFunctional::Lambda, t, win_lo, t_step);
    const double delta =
        skorokhod_integral(path, win_lo, t_step, u, bundle.lambda[t_node], dk_lambda);
    return delta / window;
}

namespace {

struct AsianTerms {
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
};

AsianTerms asian_terms(const LiftedBundle& bundle, double t, bool with_corrections) {
    const PathRecord& path = *bundle.path;
    const Lifted2dModel& model = *bundle.model;
    const TimeGrid& grid = path.grid;
    const LiftedSmallTime st = lifted_small_time(bundle, t);
    if (st.degenerate)
        throw PathAbort(grid.fwd_index(grid.node_of(t)), st.delta,
                        "asian weight: degenerate covariance (near-constant average)");

    const int zero = grid.n_hist();
    const int t_node = grid.node_of(t);
    const int n = grid.fwd_index(t_node);
    const double dt = grid.dt();
    const double a = st.a1, ap = st.a1p;
    const double i1 = st.i1, i2 = st.i2, delta = st.delta;

    std::vector<double> yh(n), s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (int j = 0; j < n; ++j) yh[j] = path.value(zero + j, 1) - model.y_tilde;
    for (int j = n - 1; j >= 0; --j) {
        s1[j] = s1[j + 1] + yh[j] * dt;
        s2[j] = s2[j + 1] + yh[j] * yh[j] * dt;
    }
    const double yh_t = path.value(t_node, 1) - model.y_tilde;
    const double px = bundle.dx_xt[t_node];
    const double py = bundle.dx_yt[t_node];

    double iw0 = 0.0, iw1 = 0.0;
    for (int j = 0; j < n; ++j) {
        iw0 += path.inc(j);
        iw1 += yh[j] * path.inc(j);
    }

    // w = frakUhat(t) * dx-vector, M = Theta * w
    const double w0 = px;
    const double w1 = py - yh_t * px;
    const double a2 = a * a;
    const double m0 = a2 * (i2 * w0 + i1 * w1);
    const double m1 = a2 * (i1 * w0 + t * w1);

    AsianTerms out;
    out.t1 = (iw0 * m0 - iw1 * m1) / (a * a2 * delta);

    double row_a = 0.0, row_b = 0.0;  // int (1, -yh) * 2 G(u) du
    double t3 = 0.0, t4 = 0.0, t5 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double tail = t - j * dt;  // t - u on the cell
        const double g =
            t * s2[j] - i1 * s1[j] - yh[j] * t * s1[j] + yh[j] * i1 * tail;
        row_a += 2.0 * g * dt;
        row_b += yh[j] * 2.0 * g * dt;

        const double k11 = 2.0 * (s2[j] - yh[j] * s1[j]);
        const double k12 = s1[j] - yh[j] * tail;
        t3 += ((k11 - yh[j] * k12) * w0 + k12 * w1) * dt;

        if (with_corrections) {
            t4 += (i1 - yh[j] * t) * (yh_t - yh[j]) * px * dt;
            const double v50 = ap;
            const double v51 = ap * (yh_t - yh[j]) +
                               a * (bundle.dx_yt[t_node] - bundle.dx_yt[zero + j]);
            const double c0 = v50;
            const double c1 = v51 - yh_t * v50;
            t5 += ((i2 * c0 + i1 * c1) - yh[j] * (i1 * c0 + t * c1)) * dt;
        }
    }
    out.t2 = (row_a * m0 - row_b * m1) / (a2 * delta * delta);
    out.t3 = -t3 / delta;
    out.t4 = t4 / delta;
    out.t5 = -t5 / (a * delta);
    return out;
}

} // namespace

double asian_weight_smalltime(const LiftedBundle& bundle, double t) {
    const AsianTerms terms = asian_terms(bundle, t, true);
    return (terms.t1 + terms.t2 + terms.t3 + terms.t4 + terms.t5) / bundle.model->x;
}

double asian_weight_reduced_constant(const LiftedBundle& bundle, double t) {
    if (!bundle.model->a1.is_constant())
        throw ModelError("reduced Asian weight requires constant A1");
    const AsianTerms terms = asian_terms(bundle, t, false);
    return (terms.t1 + terms.t2 + terms.t3) / bundle.model->x;
}

double asian_weight_general_research(const Lifted2dModel& model, const PathRecord& path,
                                     double t) {
    ModelSpec spec = model;
    const TimeGrid& grid = path.grid;
    const int t_node = grid.node_of(t);
    const int n = grid.fwd_index(t_node);
    const LiftedBundle bundle = make_lifted_bundle(model, path);

    auto integrand = [&](const PathRecord& p, const LiftedBundle& b) {
        CovMatrix v = covariance_single(spec, p, t);
        const double det = v.at(0, 0) * v.at(1, 1) - v.at(0, 1) * v.at(1, 0);
        const double inv00 = v.at(1, 1) / det, inv01 = -v.at(0, 1) / det;
        const double inv11 = v.at(0, 0) / det;
        const double q0 = inv00 * b.dx_xt[t_node] + inv01 * b.dx_yt[t_node];
        const double q1 = inv01 * b.dx_xt[t_node] + inv11 * b.dx_yt[t_node];
        std::vector<double> g(n);
        for (int k = 0; k < n; ++k) {
            const TangentColumn col = tangent_z(spec, p, grid.time_at(grid.n_hist() + k));
            const int lag = grid.delayed_node(grid.n_hist() + k);
            const double a1 = model.a1_tilde(p.value(lag, 0));
            const double phi0 = col.at(t_node, 0, 0) * a1;
            const double phi1 = col.at(t_node, 1, 0) * a1;
            g[k] = phi0 * q0 + phi1 * q1;
        }
        return g;
    };

    const auto g0 = integrand(path, bundle);
    double ito = 0.0;
    for (int k = 0; k < n; ++k) ito += g0[k] * path.inc(k);

    // correction term by central differencing each increment
    const double eps = 1e-5 * std::sqrt(grid.dt());
    double corr = 0.0;
    for (int k = 0; k < n; ++k) {
        PathRecord bumped = path;
        bumped.increments[k] += eps;
        PathRecord up = euler_solve(spec, std::vector<double>(path.values.begin(),
                                        path.values.begin() + 2 * (grid.n_hist() + 1)),
                                    grid, bumped.increments);
        bumped.increments[k] -= 2 * eps;
        PathRecord dn = euler_solve(spec, std::vector<double>(path.values.begin(),
                                        path.values.begin() + 2 * (grid.n_hist() + 1)),
                                    grid, bumped.increments);
        const auto gu = integrand(up, make_lifted_bundle(model, up));
        const auto gd = integrand(dn, make_lifted_bundle(model, dn));
        corr += (gu[k] - gd[k]) / (2 * eps) * grid.dt();
    }
    return (ito - corr) / model.x;
}

GreekMethod parse_method(const std::string& name) {
    if (name == "malliavin_smalltime" || name == "malliavin-smalltime")
        return GreekMethod::MalliavinSmalltime;
    if (name == "malliavin_general" || name == "malliavin-general")
        return GreekMethod::MalliavinGeneral;
    if (name == "finite_difference" || name == "finite-difference")
        return GreekMethod::FiniteDifference;
    if (name == "closed_form" || name == "closed-form") return GreekMethod::ClosedForm;
    throw ModelError("unknown greeks method '" + name + "'");
}

std::string method_name(GreekMethod m) {
    switch (m) {
        case GreekMethod::MalliavinSmalltime: return "malliavin_smalltime";
        case GreekMethod::MalliavinGeneral: return "malliavin_general";
        case GreekMethod::FiniteDifference: return "finite_difference";
        case GreekMethod::ClosedForm: return "closed_form";
    }
    return "";
}

Estimate delta_estimator(const GreekRequest& req, const TimeGrid& grid,
                         std::uint64_t n_paths, std::uint64_t seed, int threads) {
    const double t = req.t;
    if (!grid.is_node(t)) throw GridError("delta_estimator: t must be a grid node");

    if (req.method == GreekMethod::ClosedForm) {
        const auto* bs = std::get_if<DelayedBsModel>(&req.model);
        if (!bs || !bs->a1.is_constant() || req.asian || req.payoff.name != "call")
            throw ModelError("closed_form requires the constant-A1 European call");
        Estimate e;
        e.mean = bs_closed_form(bs->x, req.payoff.terms[0].lo, bs->a1(0.0), bs->rate, t,
                                BsKind::Delta);
        e.std_error = 0.0;
        e.n_paths = 0;
        e.seed = seed;
        return e;
    }

    if (req.method == GreekMethod::FiniteDifference)
        return fd_delta(req.model, req.payoff, grid, t, req.fd_step, n_paths, seed,
                        threads, req.asian);

    if (req.asian) {
        const auto* lf = std::get_if<Lifted2dModel>(&req.model);
        if (!lf) throw ModelError("asian Greeks require the lifted model");
        if (req.method == GreekMethod::MalliavinGeneral && !req.research)
            throw ModelError("general-t asian weight is experimental; set research=true");
        if (req.method == GreekMethod::MalliavinSmalltime && t > grid.r() + 1e-12)
            throw ModelError("malliavin_smalltime requires t <= r");
        const Lifted2dModel model = *lf;
        const bool smalltime = req.method == GreekMethod::MalliavinSmalltime;
        const Payoff payoff = req.payoff;
        auto job = [model, grid, seed, t, payoff, smalltime](std::uint64_t idx) {
            ModelSpec spec = model;
            PathRecord path = simulate_path(spec, grid, seed, idx);
            const double y_avg = path.value(grid.node_of(t), 1) / t;
            double gamma;
            if (smalltime) {
                LiftedBundle bundle = make_lifted_bundle(model, path);
                gamma = asian_weight_smalltime(bundle, t);
            } else {
                gamma = asian_weight_general_research(model, path, t);
            }
            return payoff(y_avg) * gamma;
        };
        return run_ensemble(job, n_paths, seed, threads);
    }

    const auto* bs = std::get_if<DelayedBsModel>(&req.model);
    if (!bs) throw ModelError("european Greeks require the delayed BS model");
    if (req.method == GreekMethod::MalliavinSmalltime && t > grid.r() + 1e-12)
        throw ModelError("malliavin_smalltime requires t <= r");
    const DelayedBsModel model = *bs;
    const bool smalltime = req.method == GreekMethod::MalliavinSmalltime;
    const Payoff payoff = req.payoff;
    auto job = [model, grid, seed, t, payoff, smalltime](std::uint64_t idx) {
        RngStream stream(seed, idx);
        auto incs = sample_increments(stream, grid, 1);
        PathRecord path = exact_exponential_solve(model, grid, incs, {seed, idx});
        double gamma;
        if (smalltime) {
            gamma = european_weight_smalltime(model, path, t);
        } else {
            DelayedBsBundle bundle = make_delayed_bundle(model, path);
            gamma = european_weight_general(bundle, t);
        }
        return payoff(path.value(grid.node_of(t))) * gamma;
    };
    return run_ensemble(job, n_paths, seed, threads);
}

} // namespace sfde
