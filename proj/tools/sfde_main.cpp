#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sfde/bundle.hpp"
#include "sfde/config.hpp"
#include "sfde/greeks.hpp"
#include "sfde/montecarlo.hpp"
#include "sfde/oracles.hpp"
#include "sfde/report.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"
#include "sfde/tangent.hpp"
#include "sfde/validate.hpp"

namespace {

using namespace sfde;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ModelSpec build_model(const RunConfig& cfg) {
    if (cfg.model_kind == "brownian") return make_brownian_model(cfg.model_dim);
    if (cfg.model_kind == "lifted") {
        Lifted2dModel m;
        m.a1 = ScalarFn::parse(cfg.model_a1);
        m.x = cfg.model_x;
        m.y_tilde = cfg.model_y_tilde;
        m.ellipticity_floor = cfg.model_floor;
        m.check_lo = cfg.model_check_lo;
        m.check_hi = cfg.model_check_hi;
        m.validate();
        return m;
    }
    DelayedBsModel m;
    m.a0 = ScalarFn::parse(cfg.model_a0);
    m.a1 = ScalarFn::parse(cfg.model_a1);
    m.x = cfg.model_x;
    m.rate = cfg.model_rate;
    m.ellipticity_floor = cfg.model_floor;
    m.check_lo = cfg.model_check_lo;
    m.check_hi = cfg.model_check_hi;
    m.validate();
    return m;
}

int threads_of(const RunConfig& cfg) {
    return cfg.mc_threads > 0 ? cfg.mc_threads : default_threads();
}

void run_simulate(const RunConfig& cfg) {
    const TimeGrid grid = build_grid(cfg.grid_r, cfg.grid_T, cfg.grid_dt);
    const ModelSpec model = build_model(cfg);
    const int n_out = grid.n_fwd() + 1;
    const int zero = grid.n_hist();

    auto job = [&](std::uint64_t idx, std::span<double> out) {
        PathRecord p = simulate_path(model, grid, cfg.mc_seed, idx);
        for (int k = 0; k < n_out; ++k) out[k] = p.value(zero + k, 0);
    };
    auto stats = run_ensemble_multi(job, n_out, cfg.mc_n_paths, cfg.mc_seed, threads_of(cfg));

    // min/max are order-independent; a separate deterministic pass collects them
    std::vector<double> mins(n_out, std::numeric_limits<double>::infinity());
    std::vector<double> maxs(n_out, -std::numeric_limits<double>::infinity());
    {
        std::mutex m;
        parallel_paths(cfg.mc_n_paths, threads_of(cfg), [&](std::uint64_t idx) {
            PathRecord p = simulate_path(model, grid, cfg.mc_seed, idx);
            std::lock_guard<std::mutex> g(m);
            for (int k = 0; k < n_out; ++k) {
                mins[k] = std::min(mins[k], p.value(zero + k, 0));
                maxs[k] = std::max(maxs[k], p.value(zero + k, 0));
            }
        });
    }

    ReportTable table;
    table.header = {"time", "mean", "stddev", "min", "max"};
    for (int k = 0; k < n_out; ++k) {
        const double sd =
            stats[k].std_error * std::sqrt(static_cast<double>(stats[k].n_paths));
        table.rows.push_back({format_double(grid.time_at(zero + k)),
                              format_double(stats[k].mean), format_double(sd),
                              format_double(mins[k]), format_double(maxs[k])});
    }
    write_report(table, cfg.output_format, cfg.output_path);
}

void run_covariance(const RunConfig& cfg) {
    if (cfg.covariance_times.empty())
        throw ConfigError(0, "covariance.times is required for the covariance command");
    const TimeGrid grid = build_grid(cfg.grid_r, cfg.grid_T, cfg.grid_dt);
    const ModelSpec model = build_model(cfg);

    const std::uint64_t n = cfg.mc_n_paths;
    std::vector<double> mineig(n), dets(n);
    parallel_paths(n, threads_of(cfg), [&](std::uint64_t idx) {
        PathRecord p = simulate_path(model, grid, cfg.mc_seed, idx, false);
        CovMatrix v = covariance_joint(model, p, cfg.covariance_times);
        auto eig = jacobi_eigenvalues(v);
        mineig[idx] = eig.front();
        double det = 1.0;
        for (double e : eig) det *= e;
        dets[idx] = det;
    });

    double e_min = mineig[0], e_max = mineig[0], e_sum = 0;
    double d_min = dets[0], d_max = dets[0], d_sum = 0;
    std::uint64_t n_pos = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        e_min = std::min(e_min, mineig[i]);
        e_max = std::max(e_max, mineig[i]);
        e_sum += mineig[i];
        d_min = std::min(d_min, dets[i]);
        d_max = std::max(d_max, dets[i]);
        d_sum += dets[i];
        if (mineig[i] > 0) ++n_pos;
    }

    ReportTable table;
    table.header = {"times",   "min_eig_min", "min_eig_mean", "min_eig_max",
                    "det_min", "det_mean",    "det_max",      "frac_positive"};
    std::string times;
    for (size_t i = 0; i < cfg.covariance_times.size(); ++i)
        times += (i ? ";" : "") + format_double(cfg.covariance_times[i]);
    table.rows.push_back({times, format_double(e_min), format_double(e_sum / n),
                          format_double(e_max), format_double(d_min),
                          format_double(d_sum / n), format_double(d_max),
                          format_double(static_cast<double>(n_pos) / n)});
    write_report(table, cfg.output_format, cfg.output_path);
}

void run_density(const RunConfig& cfg) {
    if (cfg.density_times.empty())
        throw ConfigError(0, "density.times is required for the density command");
    if (cfg.model_kind != "brownian" || cfg.model_dim != 1)
        throw ConfigError(0, "density compares against the Brownian oracle; "
                             "set model.kind = brownian, model.dim = 1");
    const int nt = static_cast<int>(cfg.density_times.size());
    if (nt > 3) throw ConfigError(0, "density supports at most 3 times");

    const TimeGrid grid = build_grid(cfg.grid_r, cfg.grid_T, cfg.grid_dt);
    const ModelSpec model = build_model(cfg);
    std::vector<int> nodes(nt);
    for (int k = 0; k < nt; ++k) nodes[k] = grid.node_of(cfg.density_times[k]);

    const std::uint64_t n = cfg.mc_n_paths;
    std::vector<double> samples(n * nt);
    parallel_paths(n, threads_of(cfg), [&](std::uint64_t idx) {
        PathRecord p = simulate_path(model, grid, cfg.mc_seed, idx);
        for (int k = 0; k < nt; ++k) samples[idx * nt + k] = p.value(nodes[k]);
    });

    DensityQuery query;
    query.times = cfg.density_times;
    std::vector<double> axis(cfg.density_count);
    for (int i = 0; i < cfg.density_count; ++i)
        axis[i] = cfg.density_count == 1
                      ? cfg.density_lo
                      : cfg.density_lo + (cfg.density_hi - cfg.density_lo) * i /
                                             (cfg.density_count - 1);
    std::vector<std::vector<double>> points(1, std::vector<double>{});
    for (int k = 0; k < nt; ++k) {
        std::vector<std::vector<double>> next;
        for (const auto& p : points)
            for (double a : axis) {
                auto q = p;
                q.push_back(a);
                next.push_back(q);
            }
        points.swap(next);
    }
    query.points = points;
    auto kde = kde_estimate(samples, nt, query);

    ReportTable table;
    table.header = {"point", "kde", "oracle", "abs_err"};
    for (size_t i = 0; i < points.size(); ++i) {
        const double oracle = gaussian_joint_density(query.times, points[i]);
        std::string pt;
        for (size_t c = 0; c < points[i].size(); ++c)
            pt += (c ? ";" : "") + format_double(points[i][c]);
        table.rows.push_back({pt, format_double(kde[i]), format_double(oracle),
                              format_double(std::fabs(kde[i] - oracle))});
    }
    write_report(table, cfg.output_format, cfg.output_path);
}

void run_greeks(const RunConfig& cfg) {
    if (cfg.greeks_payoffs.empty())
        throw ConfigError(0, "greeks.payoffs is required for the greeks command");
    if (cfg.greeks_methods.empty())
        throw ConfigError(0, "greeks.methods is required for the greeks command");
    const TimeGrid grid = build_grid(cfg.grid_r, cfg.grid_T, cfg.grid_dt);

    ReportTable table;
    table.header = {"payoff", "method", "mean", "stderr", "n_paths", "seed",
                    "elapsed_seconds"};
    for (const auto& pname : cfg.greeks_payoffs) {
        for (const auto& mname : cfg.greeks_methods) {
            GreekRequest req;
            req.model = build_model(cfg);
            req.payoff = Payoff::parse(pname);
            req.t = cfg.greeks_t;
            req.method = parse_method(mname);
            req.asian = cfg.greeks_asian;
            req.research = cfg.greeks_research;
            req.fd_step = cfg.greeks_fd_h;
            Estimate est =
                delta_estimator(req, grid, cfg.mc_n_paths, cfg.mc_seed, threads_of(cfg));
            table.rows.push_back({pname, mname, format_double(est.mean),
                                  format_double(est.std_error),
                                  std::to_string(est.n_paths), std::to_string(est.seed),
                                  format_double(est.elapsed_seconds)});
        }
    }
    write_report(table, cfg.output_format, cfg.output_path);
}

int run_validate(const RunConfig& cfg) {
    ValidateOptions opt;
    opt.n_paths_override = cfg.validate_n_paths;
    opt.seed = cfg.mc_seed;
    opt.threads = threads_of(cfg);
    auto results = run_acceptance(opt);

    ReportTable table;
    table.header = {"criterion", "status", "observed", "allowed", "detail"};
    for (const auto& r : results) {
        std::printf("%-4s %-32s observed=%-12.6g allowed=%-12.6g\n",
                    r.pass ? "PASS" : "FAIL", r.id.c_str(), r.observed, r.allowed);
        table.rows.push_back({r.id, r.pass ? "PASS" : "FAIL", format_double(r.observed),
                              format_double(r.allowed), r.detail});
    }
    if (!cfg.output_path.empty() || cfg.output_format == "json")
        write_report(table, cfg.output_format, cfg.output_path);
    return all_passed(results) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic delay simulation and Malliavin-weight Greeks"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path, "config file");
        if (config_required) c->required();
        sub->add_option("--threads", threads, "worker threads (default: all cores)");
        sub->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--out", out_path, "output file (default: stdout)");
    };

    auto* sim = app.add_subcommand("simulate", "path ensemble statistics");
    auto* cov = app.add_subcommand("covariance", "joint Malliavin covariance probe");
    auto* den = app.add_subcommand("density", "KDE vs the Gaussian joint density");
    auto* grk = app.add_subcommand("greeks", "delta estimates per payoff and method");
    auto* val = app.add_subcommand("validate", "run the full validation suite");
    add_common(sim, true);
    add_common(cov, true);
    add_common(den, true);
    add_common(grk, true);
    add_common(val, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = sfde::parse_config(read_file(config_path));
        if (threads > 0) cfg.mc_threads = threads;
        if (seed_set) cfg.mc_seed = seed;
        if (!out_path.empty()) cfg.output_path = out_path;

        if (sim->parsed()) run_simulate(cfg);
        else if (cov->parsed()) run_covariance(cfg);
        else if (den->parsed()) run_density(cfg);
        else if (grk->parsed()) run_greeks(cfg);
        else if (val->parsed()) return run_validate(cfg);
        return 0;
    } catch (const sfde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sfde::GridError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sfde::ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sfde::PathAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const sfde::EnsembleError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
