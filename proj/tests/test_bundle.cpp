#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sfde/bundle.hpp"
#include "sfde/montecarlo.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

using namespace sfde;

namespace {

DelayedBsModel tanh_model() {
    DelayedBsModel m;
    m.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    m.x = 100.0;
    return m;
}

PathRecord expo_path(const DelayedBsModel& m, const TimeGrid& grid, std::uint64_t seed,
                     std::uint64_t idx) {
    RngStream s(seed, idx);
    auto incs = sample_increments(s, grid, 1);
    return exact_exponential_solve(m, grid, incs, {seed, idx});
}

Lifted2dModel lifted_tanh() {
    Lifted2dModel m;
    m.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    m.x = 100.0;
    return m;
}

} // namespace

TEST_CASE("U is the price ratio and Uhat its exact reciprocal") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 2.0, 0.02);
    PathRecord p = expo_path(m, grid, 101, 0);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    for (int node = 0; node < grid.n_nodes(); ++node) {
        CHECK(b.u[node] == doctest::Approx(p.value(node) / m.x).epsilon(1e-13));
        CHECK(b.u[node] * b.uhat[node] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("constant volatility collapses Lambda to one") {
    DelayedBsModel m;
    m.a1 = ScalarFn::constant(0.2);
    m.x = 100.0;
    TimeGrid grid = build_grid(1.0, 2.0, 0.05);
    PathRecord p = expo_path(m, grid, 5, 3);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    for (int node = 0; node < grid.n_nodes(); ++node) {
        CHECK(b.lambda[node] == 1.0);
        CHECK(b.dx_x[node] == doctest::Approx(b.u[node]).epsilon(1e-13));
    }
}

TEST_CASE("small-time Lambda closed form holds at the nodes") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 0.01);
    PathRecord p = expo_path(m, grid, 7, 1);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    const double a = m.a1(m.x), ap = m.a1.deriv(m.x);
    for (double t : {0.25, 0.5, 1.0}) {
        const int node = grid.node_of(t);
        const double w = p.brownian(node);
        const double expected = 1.0 + m.x * ap * w - m.x * ap * a * t;
        CHECK(b.lambda[node] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("dxX factorizes as U Lambda exactly up to the delay") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 2.0, 1.0 / 128.0);
    PathRecord p = expo_path(m, grid, 11, 4);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    for (double t : {0.5, 1.0}) {
        const int node = grid.node_of(t);
        CHECK(b.dx_x[node] ==
              doctest::Approx(b.u[node] * b.lambda[node]).epsilon(1e-12));
    }
    // past the delay the product rule picks up O(dt) discretization error
    const int node2 = grid.node_of(2.0);
    CHECK(b.dx_x[node2] ==
          doctest::Approx(b.u[node2] * b.lambda[node2]).epsilon(0.02));
}

TEST_CASE("window tangent equals the derivative catalog on the Skorokhod window") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 2.0, 0.05);
    PathRecord p = expo_path(m, grid, 13, 2);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    for (double t : {0.5, 1.0, 1.5}) {
        const int t_node = grid.node_of(t);
        const int t_step = grid.fwd_index(t_node);
        const int k_lo = std::max(0, t_step - grid.n_hist());
        auto dk = dk_functional(b, DelayedFunctional::Terminal, t, k_lo, t_step);
        for (int k = k_lo; k < t_step; ++k) {
            const int node = grid.n_hist() + k;
            const double a = m.a1(p.value(grid.delayed_node(node)));
            const double phi = z_window(b, t_node, node) * a * p.value(node);
            CHECK(dk[k - k_lo] == doctest::Approx(phi).epsilon(1e-10));
        }
    }
}

TEST_CASE("derivative catalog matches numerical increment bumps") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(0.5, 1.0, 0.05);  // t = 1.0 > r exercises the delay terms
    const double t = 1.0;
    RngStream s(17, 6);
    auto incs = sample_increments(s, grid, 1);
    PathRecord p = exact_exponential_solve(m, grid, incs);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    const int t_node = grid.node_of(t);
    const int t_step = grid.fwd_index(t_node);

    auto value_of = [&](DelayedFunctional f, const PathRecord& path) {
        DelayedBsBundle bb = make_delayed_bundle(m, path);
        switch (f) {
            case DelayedFunctional::Terminal: return path.value(t_node);
            case DelayedFunctional::DxTerminal: return bb.dx_x[t_node];
            case DelayedFunctional::Lambda: return bb.lambda[t_node];
        }
        return 0.0;
    };

    const double eps = 1e-6;
    for (DelayedFunctional f : {DelayedFunctional::Terminal, DelayedFunctional::DxTerminal,
                                DelayedFunctional::Lambda}) {
        auto dk = dk_functional(b, f, t);
        for (int k : {0, 3, 7, 12, 18}) {
            auto bumped = incs;
            bumped[k] += eps;
            PathRecord up = exact_exponential_solve(m, grid, bumped);
            bumped[k] -= 2 * eps;
            PathRecord dn = exact_exponential_solve(m, grid, bumped);
            const double fd = (value_of(f, up) - value_of(f, dn)) / (2 * eps);
            CHECK(dk[k] == doctest::Approx(fd).epsilon(1e-6));
        }
        CHECK(static_cast<int>(dk.size()) == t_step);
    }
}

TEST_CASE("small-time Lambda derivative is constant in the increment index") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 0.02);
    PathRecord p = expo_path(m, grid, 19, 9);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    auto dk = dk_functional(b, DelayedFunctional::Lambda, 0.5);
    const double expected = m.x * m.a1.deriv(m.x);
    for (double v : dk) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the Uhat SDE discretization drifts off the reciprocal at O(dt)") {
    DelayedBsModel m;
    m.a1 = ScalarFn::constant(0.1);
    m.x = 100.0;
    TimeGrid grid = build_grid(0.5, 0.5, 1e-3);
    ModelSpec spec = m;
    std::vector<double> zeros(grid.n_fwd(), 0.0);
    PathRecord p = euler_solve(spec, constant_history(grid, m.x), grid, zeros);
    DelayedBsBundle b = make_delayed_bundle(m, p);
    auto uhat = uhat_sde_path(m, p);

    const int node = grid.node_of(0.5);
    CHECK(b.u[node] == 1.0);  // all-zero increments
    const double closed = std::pow(1.0 + 0.01 * grid.dt(), 0.5 / grid.dt());
    CHECK(uhat[node] == doctest::Approx(closed).epsilon(1e-12));
    CHECK(std::fabs(b.u[node] * uhat[node] - 1.0) <= 1e-2);
}

TEST_CASE("bundle requires the zero-drift form") {
    DelayedBsModel m = tanh_model();
    m.a0 = ScalarFn::constant(0.05);
    TimeGrid grid = build_grid(1.0, 1.0, 0.25);
    PathRecord p = expo_path(m, grid, 1, 1);
    CHECK_THROWS_AS(make_delayed_bundle(m, p), ModelError);
}

TEST_CASE("lifted small-time matrices and their general recursions coincide") {
    Lifted2dModel m = lifted_tanh();
    ModelSpec spec = m;
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 64.0);
    PathRecord p = simulate_path(spec, grid, 23, 5);
    LiftedBundle b = make_lifted_bundle(m, p);
    const double t = 0.5;
    LiftedSmallTime st = lifted_small_time(b, t);
    const int t_node = grid.node_of(t);

    // frak U * frak Uhat = I exactly
    Mat2 prod = st.frak_u * st.frak_uhat;
    CHECK(prod.a00 == 1.0);
    CHECK(prod.a01 == 0.0);
    CHECK(prod.a10 == 0.0);
    CHECK(prod.a11 == 1.0);

    // ODE-propagated frak U matches the closed form
    Mat2 u_ode = frak_u_ode(p, t_node);
    CHECK(u_ode.a10 == doctest::Approx(st.frak_u.a10).epsilon(1e-12));
    CHECK(u_ode.a00 == 1.0);
    CHECK(u_ode.a11 == 1.0);

    // Uhat V Uhat^T from the tangent covariance equals the closed matrix
    Mat2 vc = vcheck_general(m, p, t);
    CHECK(vc.a00 == doctest::Approx(st.vcheck.a00).epsilon(1e-11));
    CHECK(vc.a01 == doctest::Approx(st.vcheck.a01).epsilon(1e-11));
    CHECK(vc.a10 == doctest::Approx(st.vcheck.a10).epsilon(1e-11));
    CHECK(vc.a11 == doctest::Approx(st.vcheck.a11).epsilon(1e-11));

    // delta(t) is the Cauchy-Schwarz gap of an increasing average: positive
    CHECK(st.delta > 0.0);
    CHECK(!st.degenerate);
    CHECK(st.det_vcheck ==
          doctest::Approx(st.vcheck.a00 * st.vcheck.a11 - st.vcheck.a01 * st.vcheck.a10)
              .epsilon(1e-12));
}

TEST_CASE("lifted tangent column reproduces the closed 2x2 propagator") {
    Lifted2dModel m = lifted_tanh();
    ModelSpec spec = m;
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 32.0);
    PathRecord p = simulate_path(spec, grid, 29, 8);
    const double u = 0.25, t = 0.75;
    TangentColumn col = tangent_z(spec, p, u);
    const int t_node = grid.node_of(t);
    const double dy = p.value(t_node, 1) - p.value(grid.node_of(u), 1);
    CHECK(col.at(t_node, 0, 0) == 1.0);
    CHECK(col.at(t_node, 0, 1) == 0.0);
    CHECK(col.at(t_node, 1, 0) == doctest::Approx(dy).epsilon(1e-12));
    CHECK(col.at(t_node, 1, 1) == 1.0);
}

TEST_CASE("lifted derivative catalog: paper form in the limit, exact bumps now") {
    Lifted2dModel m = lifted_tanh();
    ModelSpec spec = m;
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 64.0);
    const double t = 0.5;
    RngStream s(31, 3);
    auto incs = sample_increments(s, grid, 1);
    std::vector<double> eta(2 * (grid.n_hist() + 1));
    for (int i = 0; i <= grid.n_hist(); ++i) {
        eta[2 * i] = m.x_tilde();
        eta[2 * i + 1] = m.y_tilde;
    }
    PathRecord p = euler_solve(spec, eta, grid, incs);
    LiftedBundle b = make_lifted_bundle(m, p);
    const int t_node = grid.node_of(t);
    const int t_step = grid.fwd_index(t_node);
    const double a = m.a1_tilde(m.x_tilde());

    auto dky = dk_lifted(b, LiftedFunctional::Ytilde, t);
    double max_gap = 0.0;
    for (int k = 0; k < t_step; ++k) {
        const double paper =
            a * (p.value(t_node, 1) - p.value(grid.n_hist() + k, 1));
        max_gap = std::max(max_gap, std::fabs(dky[k] - paper));
    }
    // the discrete derivative sits one node ahead of the continuous kernel
    CHECK(max_gap <= 2.0 * a * m.x * std::exp(0.5) * grid.dt());

    auto value_of = [&](LiftedFunctional f, const PathRecord& path) {
        LiftedBundle bb = make_lifted_bundle(m, path);
        LiftedSmallTime st = lifted_small_time(bb, t);
        switch (f) {
            case LiftedFunctional::Ytilde: return path.value(t_node, 1) - m.y_tilde;
            case LiftedFunctional::DxYtilde: return bb.dx_yt[t_node];
            case LiftedFunctional::Theta11: return st.theta.a00;
            case LiftedFunctional::Theta12: return st.theta.a01;
            case LiftedFunctional::DetVcheck: return st.det_vcheck;
            case LiftedFunctional::Uhat21: return st.frak_uhat.a10;
        }
        return 0.0;
    };
    const double eps = 1e-6;
    for (LiftedFunctional f :
         {LiftedFunctional::Ytilde, LiftedFunctional::DxYtilde, LiftedFunctional::Theta11,
          LiftedFunctional::Theta12, LiftedFunctional::DetVcheck, LiftedFunctional::Uhat21}) {
        auto dk = dk_lifted(b, f, t);
        for (int k : {0, 5, 13, 25}) {
            auto bumped = incs;
            bumped[k] += eps;
            PathRecord up = euler_solve(spec, eta, grid, bumped);
            bumped[k] -= 2 * eps;
            PathRecord dn = euler_solve(spec, eta, grid, bumped);
            const double fd = (value_of(f, up) - value_of(f, dn)) / (2 * eps);
            CHECK(dk[k] == doctest::Approx(fd).epsilon(2e-5));
        }
    }
}

TEST_CASE("skorokhod integral of an adapted deterministic integrand is the Ito sum") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 0.05);
    PathRecord p = expo_path(m, grid, 37, 0);
    const int steps = grid.fwd_index(grid.node_of(0.5));
    std::vector<double> u(steps), zero(steps, 0.0);
    for (int k = 0; k < steps; ++k) u[k] = 0.5 + 0.1 * k;
    double ito = 0.0;
    for (int k = 0; k < steps; ++k) ito += u[k] * p.inc(k);
    CHECK(skorokhod_integral(p, 0, steps, u, 1.0, zero) ==
          doctest::Approx(ito).epsilon(1e-14));

    std::vector<double> small(steps - 1, 0.0);
    CHECK_THROWS_AS(skorokhod_integral(p, 0, steps, small, 1.0, zero), ModelError);
}

TEST_CASE("duality of the derivative catalog with the Ito sum") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 0.02);
    const double t = 0.5;
    const int t_step = grid.fwd_index(grid.node_of(t));
    auto job = [&, m](std::uint64_t idx, std::span<double> out) {
        PathRecord p = expo_path(m, grid, 7070, idx);
        DelayedBsBundle b = make_delayed_bundle(m, p);
        auto dk = dk_functional(b, DelayedFunctional::Terminal, t);
        double lhs = 0.0, ito = 0.0;
        for (int k = 0; k < t_step; ++k) {
            const double u = p.value(grid.n_hist() + k) / m.x;
            lhs += dk[k] * u * grid.dt();
            ito += u * p.inc(k);
        }
        out[0] = lhs;
        out[1] = p.value(grid.node_of(t)) * ito;
    };
    auto est = run_ensemble_multi(job, 2, 4000, 7070, default_threads());
    const double diff = std::fabs(est[0].mean - est[1].mean);
    const double allowed = 4.0 * std::sqrt(est[0].std_error * est[0].std_error +
                                           est[1].std_error * est[1].std_error);
    CHECK(diff <= allowed);
}
