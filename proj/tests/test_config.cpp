#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "sfde/config.hpp"
#include "sfde/report.hpp"
#include "sfde/rng.hpp"

using namespace sfde;

TEST_CASE("minimal config parses with defaults") {
    const std::string text =
        "# experiment\n"
        "model.kind = delayed_bs\n"
        "model.x = 100\n"
        "model.a1 = const:0.2\n"
        "grid.r = 1\n"
        "grid.T = 1\n"
        "grid.dt = 0.01\n"
        "mc.n_paths = 100000\n"
        "mc.seed = 42\n";
    RunConfig cfg = parse_config(text);
    CHECK(cfg.model_kind == "delayed_bs");
    CHECK(cfg.model_x == 100.0);
    CHECK(cfg.mc_n_paths == 100000);
    CHECK(cfg.mc_seed == 42);
    CHECK(cfg.mc_threads == 0);          // default: all cores
    CHECK(cfg.output_format == "csv");   // default format
}

TEST_CASE("unknown keys are rejected with the line number") {
    const std::string text =
        "model.kind = delayed_bs\n"
        "sigma = 0.2\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("sigma") != std::string::npos);
    }
}

TEST_CASE("times must land on grid nodes") {
    const std::string text =
        "grid.r = 1\n"
        "grid.T = 1\n"
        "grid.dt = 0.25\n"
        "greeks.t = 0.37\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 4);
        CHECK(std::string(e.what()).find("not a grid node") != std::string::npos);
    }
}

TEST_CASE("malformed values carry their line") {
    CHECK_THROWS_AS(parse_config("model.x = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("greeks.asian = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("mc.n_paths = -5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("just a line\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("output.format = yaml\n"), ConfigError);
}

TEST_CASE("emit and re-parse is the identity") {
    RunConfig cfg;
    cfg.model_kind = "delayed_bs";
    cfg.model_a1 = "tanh:0.2,0.05,100";
    cfg.model_x = 123.456;
    cfg.grid_r = 0.5;
    cfg.grid_T = 2.0;
    cfg.grid_dt = 0.0125;
    cfg.mc_n_paths = 7777;
    cfg.mc_seed = 99;
    cfg.greeks_t = 1.5;
    cfg.greeks_payoffs = {"call:100", "digital:95"};
    cfg.greeks_methods = {"malliavin_smalltime", "finite_difference"};
    cfg.covariance_times = {0.25, 0.5};
    cfg.density_times = {0.5, 1.0};
    RunConfig back = parse_config(emit_config(cfg));
    CHECK(back == cfg);
    // fixed point of emit
    CHECK(emit_config(back) == emit_config(cfg));
}

TEST_CASE("round trip holds over randomized configs") {
    RngStream rng(5150, 0);
    for (int trial = 0; trial < 50; ++trial) {
        RunConfig cfg;
        cfg.model_x = 50.0 + 100.0 * rng.uniform();
        cfg.model_rate = 0.1 * rng.uniform();
        cfg.grid_r = (1 + static_cast<int>(rng.uniform() * 4)) * 0.5;
        cfg.grid_T = cfg.grid_r * (1 + static_cast<int>(rng.uniform() * 3));
        cfg.grid_dt = cfg.grid_r / (8 << static_cast<int>(rng.uniform() * 4));
        cfg.mc_n_paths = 100 + static_cast<std::uint64_t>(rng.uniform() * 1e6);
        cfg.mc_seed = static_cast<std::uint64_t>(rng.uniform() * 1e9);
        cfg.greeks_t = cfg.grid_T;
        cfg.greeks_asian = rng.uniform() < 0.5;
        RunConfig back = parse_config(emit_config(cfg));
        CHECK(back == cfg);
    }
}

TEST_CASE("csv uses 17 significant digits and a fixed header") {
    ReportTable t;
    t.header = {"a", "b"};
    t.rows.push_back({format_double(0.1), format_double(1.0 / 3.0)});
    const std::string csv = to_csv(t);
    CHECK(csv.find("a,b\n") == 0);
    CHECK(csv.find("0.1000000000000000") != std::string::npos);
    // value round-trips exactly
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("json mirrors the csv fields") {
    ReportTable t;
    t.header = {"payoff", "mean"};
    t.rows.push_back({"call", "0.5398"});
    auto parsed = nlohmann::json::parse(to_json(t));
    REQUIRE(parsed.is_array());
    CHECK(parsed[0]["payoff"] == "call");
    CHECK(parsed[0]["mean"] == "0.5398");
}
