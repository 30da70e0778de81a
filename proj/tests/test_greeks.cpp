#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sfde/greeks.hpp"
#include "sfde/oracles.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

using namespace sfde;

namespace {

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
    return m;
}

PathRecord expo_path(const DelayedBsModel& m, const TimeGrid& grid, std::uint64_t seed,
                     std::uint64_t idx) {
    RngStream s(seed, idx);
    auto incs = sample_increments(s, grid, 1);
    return exact_exponential_solve(m, grid, incs, {seed, idx});
}

} // namespace

TEST_CASE("payoff catalog evaluation") {
    Payoff call = Payoff::call(100.0);
    CHECK(call(120.0) == 20.0);
    CHECK(call(100.0) == 0.0);
    CHECK(call(80.0) == 0.0);

    Payoff put = Payoff::put(100.0);
    CHECK(put(80.0) == 20.0);
    CHECK(put(120.0) == 0.0);

    Payoff dig = Payoff::digital(100.0);
    CHECK(dig(99.999) == 0.0);
    CHECK(dig(100.0) == 1.0);  // left-closed interval
    CHECK(dig(150.0) == 1.0);

    CHECK(Payoff::identity()(42.0) == 42.0);
    CHECK(Payoff::constant(3.0)(-5.0) == 3.0);
    CHECK(Payoff::parse("call:100").name == "call");
    CHECK_THROWS_AS(Payoff::parse("barrier:1"), ModelError);
}

TEST_CASE("small-time European weight: constant volatility reduces to W/(x sigma t)") {
    DelayedBsModel m = const_model(0.2);
    TimeGrid grid = build_grid(1.0, 1.0, 0.05);
    for (int i = 0; i < 20; ++i) {
        PathRecord p = expo_path(m, grid, 42, i);
        const double t = 0.75;
        const double w = p.brownian(grid.node_of(t));
        CHECK(european_weight_smalltime(m, p, t) ==
              doctest::Approx(w / (100.0 * 0.2 * t)).epsilon(1e-13));
    }
    // zero Brownian path gives zero weight
    std::vector<double> zeros(grid.n_fwd(), 0.0);
    PathRecord pz = exact_exponential_solve(m, grid, zeros);
    CHECK(european_weight_smalltime(m, pz, 0.5) == 0.0);
    CHECK_THROWS_AS(european_weight_smalltime(m, pz, 1.5), ModelError);
}

TEST_CASE("small-time weight scales as 1/x for constant volatility") {
    TimeGrid grid = build_grid(1.0, 1.0, 0.05);
    DelayedBsModel m1 = const_model(0.2);
    DelayedBsModel m2 = const_model(0.2);
    m2.x = 250.0;
    RngStream s(9, 0);
    auto incs = sample_increments(s, grid, 1);
    PathRecord p1 = exact_exponential_solve(m1, grid, incs);
    PathRecord p2 = exact_exponential_solve(m2, grid, incs);
    const double g1 = european_weight_smalltime(m1, p1, 0.5);
    const double g2 = european_weight_smalltime(m2, p2, 0.5);
    CHECK(g2 * 2.5 == doctest::Approx(g1).epsilon(1e-13));
}

TEST_CASE("general weight reproduces the small-time closed form exactly for t <= r") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 64.0);
    for (int i = 0; i < 50; ++i) {
        PathRecord p = expo_path(m, grid, 77, i);
        DelayedBsBundle b = make_delayed_bundle(m, p);
        const double general = european_weight_general(b, 0.5);
        const double closed = european_weight_smalltime(m, p, 0.5);
        CHECK(general == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("general weight for constant volatility is the window Brownian increment") {
    DelayedBsModel m = const_model(0.25);
    TimeGrid grid = build_grid(1.0, 2.0, 0.025);
    for (int i = 0; i < 20; ++i) {
        PathRecord p = expo_path(m, grid, 13, i);
        DelayedBsBundle b = make_delayed_bundle(m, p);
        const double t = 1.5;
        const double w_inc = p.brownian(grid.node_of(t)) - p.brownian(grid.node_of(0.5));
        CHECK(european_weight_general(b, t) ==
              doctest::Approx(w_inc / (100.0 * 0.25 * 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("weight has mean zero") {
    DelayedBsModel m = tanh_model();
    TimeGrid grid = build_grid(1.0, 1.0, 0.02);
    auto job = [&, m](std::uint64_t idx) {
        PathRecord p = expo_path(m, grid, 303, idx);
        return european_weight_smalltime(m, p, 0.5);
    };
    Estimate est = run_ensemble(job, 20000, 303, default_threads());
    CHECK(std::fabs(est.mean) <= 4.0 * est.std_error);
}

TEST_CASE("identity payoff at general t recovers the martingale delta") {
    DelayedBsModel m = const_model(0.2);
    TimeGrid grid = build_grid(1.0, 2.0, 0.05);
    GreekRequest req;
    req.model = m;
    req.payoff = Payoff::identity();
    req.t = 1.5;
    req.method = GreekMethod::MalliavinGeneral;
    Estimate est = delta_estimator(req, grid, 20000, 99, default_threads());
    CHECK(std::fabs(est.mean - 1.0) <= 4.0 * est.std_error);
}

TEST_CASE("delta estimator matches the closed form for the constant call") {
    TimeGrid grid = build_grid(1.0, 1.0, 0.05);
    GreekRequest req;
    req.model = const_model(0.2);
    req.payoff = Payoff::call(100.0);
    req.t = 1.0;
    req.method = GreekMethod::MalliavinSmalltime;
    Estimate est = delta_estimator(req, grid, 40000, 2025, default_threads());
    const double target = bs_closed_form(100, 100, 0.2, 0.0, 1.0, BsKind::Delta);
    CHECK(std::fabs(est.mean - target) <= 4.0 * est.std_error);

    req.method = GreekMethod::ClosedForm;
    Estimate cf = delta_estimator(req, grid, 10, 2025, 1);
    CHECK(cf.mean == doctest::Approx(target).epsilon(1e-15));
    CHECK(cf.std_error == 0.0);
}

TEST_CASE("digital payoff: Malliavin weight against finite differences") {
    TimeGrid grid = build_grid(1.0, 1.0, 0.02);
    GreekRequest req;
    req.model = const_model(0.2);
    req.payoff = Payoff::digital(100.0);
    req.t = 0.5;
    req.method = GreekMethod::MalliavinSmalltime;
    Estimate em = delta_estimator(req, grid, 40000, 500, default_threads());
    req.method = GreekMethod::FiniteDifference;
    Estimate ef = delta_estimator(req, grid, 40000, 501, default_threads());
    const double allowed = 4.0 * std::sqrt(em.std_error * em.std_error +
                                           ef.std_error * ef.std_error);
    CHECK(std::fabs(em.mean - ef.mean) <= allowed);
}

TEST_CASE("delayed tanh model: Malliavin against finite differences") {
    TimeGrid grid = build_grid(1.0, 1.0, 0.02);
    GreekRequest req;
    req.model = tanh_model();
    req.payoff = Payoff::call(100.0);
    req.t = 0.5;
    req.method = GreekMethod::MalliavinSmalltime;
    Estimate em = delta_estimator(req, grid, 40000, 600, default_threads());
    req.method = GreekMethod::FiniteDifference;
    Estimate ef = delta_estimator(req, grid, 40000, 601, default_threads());
    const double allowed = 4.0 * std::sqrt(em.std_error * em.std_error +
                                           ef.std_error * ef.std_error);
    CHECK(std::fabs(em.mean - ef.mean) <= allowed);
}

TEST_CASE("request validation") {
    TimeGrid grid = build_grid(1.0, 2.0, 0.05);
    GreekRequest req;
    req.model = tanh_model();
    req.payoff = Payoff::call(100.0);
    req.t = 1.5;
    req.method = GreekMethod::MalliavinSmalltime;  // t > r
    CHECK_THROWS_AS(delta_estimator(req, grid, 100, 1, 1), ModelError);

    req.t = 1.0;
    req.method = GreekMethod::ClosedForm;  // nonconstant a1
    CHECK_THROWS_AS(delta_estimator(req, grid, 100, 1, 1), ModelError);

    GreekRequest asian;
    asian.model = tanh_model();  // wrong model variant for asian
    asian.asian = true;
    asian.t = 0.5;
    CHECK_THROWS_AS(delta_estimator(asian, grid, 100, 1, 1), ModelError);
}

namespace {

Lifted2dModel lifted_model(bool constant) {
    Lifted2dModel m;
    m.a1 = constant ? ScalarFn::constant(0.2) : ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    m.x = 100.0;
    return m;
}

} // namespace

TEST_CASE("asian weight: five-term and constant-coefficient forms agree path-wise") {
    Lifted2dModel m = lifted_model(true);
    ModelSpec spec = m;
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 128.0);
    for (int i = 0; i < 50; ++i) {
        PathRecord p = simulate_path(spec, grid, 808, i);
        LiftedBundle b = make_lifted_bundle(m, p);
        const double five = asian_weight_smalltime(b, 0.5);
        const double three = asian_weight_reduced_constant(b, 0.5);
        CHECK(five == doctest::Approx(three).epsilon(1e-10));
    }
    Lifted2dModel mt = lifted_model(false);
    ModelSpec spect = mt;
    PathRecord p = simulate_path(spect, grid, 808, 0);
    LiftedBundle b = make_lifted_bundle(mt, p);
    CHECK_THROWS_AS(asian_weight_reduced_constant(b, 0.5), ModelError);
}

TEST_CASE("asian weight mean zero") {
    Lifted2dModel m = lifted_model(false);
    ModelSpec spec = m;
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 128.0);
    auto job = [&, m](std::uint64_t idx) {
        ModelSpec s = m;
        PathRecord p = simulate_path(s, grid, 909, idx);
        LiftedBundle b = make_lifted_bundle(m, p);
        return asian_weight_smalltime(b, 0.5);
    };
    Estimate est = run_ensemble(job, 20000, 909, default_threads());
    CHECK(std::fabs(est.mean) <= 4.0 * est.std_error);
}

TEST_CASE("asian delta against finite differences (identity payoff)") {
    Lifted2dModel m = lifted_model(false);
    TimeGrid grid = build_grid(1.0, 1.0, 1.0 / 128.0);
    GreekRequest req;
    req.model = m;
    req.payoff = Payoff::identity();
    req.t = 0.5;
    req.asian = true;
    req.method = GreekMethod::MalliavinSmalltime;
    Estimate em = delta_estimator(req, grid, 20000, 707, default_threads());
    req.method = GreekMethod::FiniteDifference;
    Estimate ef = delta_estimator(req, grid, 20000, 708, default_threads());
    const double allowed = 4.0 * std::sqrt(em.std_error * em.std_error +
                                           ef.std_error * ef.std_error);
    CHECK(std::fabs(em.mean - ef.mean) <= allowed);
}

TEST_CASE("general-t asian weight is gated behind the research flag") {
    Lifted2dModel m = lifted_model(true);
    TimeGrid grid = build_grid(0.5, 1.0, 1.0 / 16.0);
    GreekRequest req;
    req.model = m;
    req.payoff = Payoff::identity();
    req.t = 0.75;
    req.asian = true;
    req.method = GreekMethod::MalliavinGeneral;
    CHECK_THROWS_AS(delta_estimator(req, grid, 100, 1, 1), ModelError);

    req.research = true;
    Estimate est = delta_estimator(req, grid, 400, 611, default_threads());
    CHECK(std::isfinite(est.mean));
    // loose sanity against the finite-difference oracle
    req.method = GreekMethod::FiniteDifference;
    Estimate ef = delta_estimator(req, grid, 400, 611, default_threads());
    CHECK(std::fabs(est.mean - ef.mean) <=
          6.0 * std::sqrt(est.std_error * est.std_error + ef.std_error * ef.std_error) +
              0.1 * std::fabs(ef.mean));
}
