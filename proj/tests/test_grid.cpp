#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfde/grid.hpp"
#include "sfde/rng.hpp"

using namespace sfde;

TEST_CASE("build_grid with exact divisors") {
    TimeGrid g = build_grid(1.0, 2.0, 0.25);
    CHECK(g.dt() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.n_hist() == 4);
    CHECK(g.n_fwd() == 8);
    CHECK(g.n_nodes() == 13);
    CHECK(g.time_at(0) == doctest::Approx(-1.0));
    CHECK(g.time_at(4) == 0.0);
    CHECK(g.time_at(12) == doctest::Approx(2.0));
}

TEST_CASE("build_grid shrinks dt to divide both r and T") {
    TimeGrid g = build_grid(1.0, 1.0, 0.3);
    CHECK(g.dt() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.n_hist() == 4);
    CHECK(g.n_fwd() == 4);
}

TEST_CASE("build_grid r=0.7 T=1 dt_target=0.1") {
    // dt = r/ceil(r/dt_target) = 0.1; 0.7/0.1 = 7 and 1.0/0.1 = 10
    TimeGrid g = build_grid(0.7, 1.0, 0.1);
    CHECK(g.dt() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(g.n_hist() == 7);
    CHECK(g.n_fwd() == 10);
}

TEST_CASE("build_grid rejects incommensurate horizons") {
    CHECK_THROWS_AS(build_grid(1.0, 1.0 + 1e-5, 0.5), GridError);
    CHECK_THROWS_AS(build_grid(-1.0, 1.0, 0.1), GridError);
    CHECK_THROWS_AS(build_grid(1.0, 1.0, 0.0), GridError);
}

TEST_CASE("node lookup accepts nodes and rejects off-grid times") {
    TimeGrid g = build_grid(1.0, 1.0, 0.25);
    CHECK(g.node_of(-1.0) == 0);
    CHECK(g.node_of(0.0) == 4);
    CHECK(g.node_of(0.5) == 6);
    CHECK(g.is_node(0.75));
    CHECK(!g.is_node(0.37));
    CHECK_THROWS_AS(g.node_of(0.37), GridError);
    CHECK_THROWS_AS(g.node_of(1.5), GridError);
}

TEST_CASE("grid invariants over random rational inputs") {
    RngStream rng(7, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double r = (1 + static_cast<int>(rng.uniform() * 30)) / 10.0;
        const double T = (1 + static_cast<int>(rng.uniform() * 30)) / 10.0;
        const double dt_target = std::pow(10.0, -3.0 * rng.uniform());
        TimeGrid g = build_grid(r, T, dt_target);

        CHECK(g.dt() <= dt_target * (1 + 1e-12));
        const double hist_ratio = r / g.dt();
        const double fwd_ratio = T / g.dt();
        CHECK(std::fabs(hist_ratio - std::round(hist_ratio)) < 1e-6);
        CHECK(std::fabs(fwd_ratio - std::round(fwd_ratio)) < 1e-6);

        // delay alignment: every forward node can look back exactly r
        for (int node = g.n_hist() + 1; node < g.n_nodes(); ++node) {
            CHECK(g.delayed_node(node) >= 1);
            CHECK(g.is_node(g.time_at(node) - r));
            CHECK(g.node_of(g.time_at(node) - r) == g.delayed_node(node));
        }
    }
}
