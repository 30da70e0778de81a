#include "sfde/config.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "sfde/grid.hpp"

namespace sfde {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& v, int line, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(line, "key '" + key + "': expected a number, got '" + v + "'");
    }
}

std::uint64_t to_count(const std::string& v, int line, const std::string& key) {
    double d = to_number(v, line, key);
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
        throw ConfigError(line, "key '" + key + "': expected a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

bool to_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(line, "key '" + key + "': expected true/false");
}

std::vector<double> to_number_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(to_number(tok, line, key));
    }
    return out;
}

std::vector<std::string> to_string_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + g17(v[i]);
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    cfg.greeks_payoffs.clear();
    cfg.greeks_methods.clear();
    std::map<std::string, int> time_key_lines;  // for non-node diagnostics

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected 'key = value', got '" + trim(raw) + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError(line, "empty key or value");

        if (key == "model.kind") {
            if (val != "delayed_bs" && val != "brownian" && val != "lifted")
                throw ConfigError(line, "model.kind must be delayed_bs, brownian or lifted");
            cfg.model_kind = val;
        } else if (key == "model.a0") cfg.model_a0 = val;
        else if (key == "model.a1") cfg.model_a1 = val;
        else if (key == "model.x") cfg.model_x = to_number(val, line, key);
        else if (key == "model.rate") cfg.model_rate = to_number(val, line, key);
        else if (key == "model.floor") cfg.model_floor = to_number(val, line, key);
        else if (key == "model.check_lo") cfg.model_check_lo = to_number(val, line, key);
        else if (key == "model.check_hi") cfg.model_check_hi = to_number(val, line, key);
        else if (key == "model.dim") cfg.model_dim = static_cast<int>(to_count(val, line, key));
        else if (key == "model.y_tilde") cfg.model_y_tilde = to_number(val, line, key);
        else if (key == "grid.r") cfg.grid_r = to_number(val, line, key);
        else if (key == "grid.T") cfg.grid_T = to_number(val, line, key);
        else if (key == "grid.dt") cfg.grid_dt = to_number(val, line, key);
        else if (key == "mc.n_paths") cfg.mc_n_paths = to_count(val, line, key);
        else if (key == "mc.seed") cfg.mc_seed = to_count(val, line, key);
        else if (key == "mc.threads") cfg.mc_threads = static_cast<int>(to_count(val, line, key));
        else if (key == "output.format") {
            if (val != "csv" && val != "json")
                throw ConfigError(line, "output.format must be csv or json");
            cfg.output_format = val;
        } else if (key == "output.path") cfg.output_path = val;
        else if (key == "covariance.times") {
            cfg.covariance_times = to_number_list(val, line, key);
            time_key_lines[key] = line;
        } else if (key == "density.times") {
            cfg.density_times = to_number_list(val, line, key);
            time_key_lines[key] = line;
        } else if (key == "density.lo") cfg.density_lo = to_number(val, line, key);
        else if (key == "density.hi") cfg.density_hi = to_number(val, line, key);
        else if (key == "density.count") cfg.density_count = static_cast<int>(to_count(val, line, key));
        else if (key == "greeks.t") {
            cfg.greeks_t = to_number(val, line, key);
            time_key_lines[key] = line;
        } else if (key == "greeks.payoffs") cfg.greeks_payoffs = to_string_list(val);
        else if (key == "greeks.methods") cfg.greeks_methods = to_string_list(val);
        else if (key == "greeks.asian") cfg.greeks_asian = to_bool(val, line, key);
        else if (key == "greeks.research") cfg.greeks_research = to_bool(val, line, key);
        else if (key == "greeks.fd_h") cfg.greeks_fd_h = to_number(val, line, key);
        else if (key == "validate.n_paths") cfg.validate_n_paths = to_count(val, line, key);
        else throw ConfigError(line, "unknown key '" + key + "'");
    }

    // every referenced time must be a node of the configured grid
    TimeGrid grid;
    try {
        grid = build_grid(cfg.grid_r, cfg.grid_T, cfg.grid_dt);
    } catch (const GridError& e) {
        throw ConfigError(0, e.what());
    }
    auto check_node = [&](const std::string& key, double t) {
        if (!grid.is_node(t)) {
            int at = time_key_lines.count(key) ? time_key_lines[key] : 0;
            throw ConfigError(at, "key '" + key + "': " + g17(t) +
                                      " is not a grid node (dt = " + g17(grid.dt()) + ")");
        }
    };
    if (time_key_lines.count("greeks.t")) check_node("greeks.t", cfg.greeks_t);
    for (double t : cfg.covariance_times) check_node("covariance.times", t);
    for (double t : cfg.density_times) check_node("density.times", t);
    return cfg;
}

std::string emit_config(const RunConfig& c) {
    std::ostringstream out;
    out << "model.kind = " << c.model_kind << "\n";
    out << "model.a0 = " << c.model_a0 << "\n";
    out << "model.a1 = " << c.model_a1 << "\n";
    out << "model.x = " << g17(c.model_x) << "\n";
    out << "model.rate = " << g17(c.model_rate) << "\n";
    out << "model.floor = " << g17(c.model_floor) << "\n";
    out << "model.check_lo = " << g17(c.model_check_lo) << "\n";
    out << "model.check_hi = " << g17(c.model_check_hi) << "\n";
    out << "model.dim = " << c.model_dim << "\n";
    out << "model.y_tilde = " << g17(c.model_y_tilde) << "\n";
    out << "grid.r = " << g17(c.grid_r) << "\n";
    out << "grid.T = " << g17(c.grid_T) << "\n";
    out << "grid.dt = " << g17(c.grid_dt) << "\n";
    out << "mc.n_paths = " << c.mc_n_paths << "\n";
    out << "mc.seed = " << c.mc_seed << "\n";
    out << "mc.threads = " << c.mc_threads << "\n";
    out << "output.format = " << c.output_format << "\n";
    if (!c.output_path.empty()) out << "output.path = " << c.output_path << "\n";
    if (!c.covariance_times.empty())
        out << "covariance.times = " << join(c.covariance_times) << "\n";
    if (!c.density_times.empty())
        out << "density.times = " << join(c.density_times) << "\n";
    out << "density.lo = " << g17(c.density_lo) << "\n";
    out << "density.hi = " << g17(c.density_hi) << "\n";
    out << "density.count = " << c.density_count << "\n";
    out << "greeks.t = " << g17(c.greeks_t) << "\n";
    if (!c.greeks_payoffs.empty()) out << "greeks.payoffs = " << join(c.greeks_payoffs) << "\n";
    if (!c.greeks_methods.empty()) out << "greeks.methods = " << join(c.greeks_methods) << "\n";
    out << "greeks.asian = " << (c.greeks_asian ? "true" : "false") << "\n";
    out << "greeks.research = " << (c.greeks_research ? "true" : "false") << "\n";
    out << "greeks.fd_h = " << g17(c.greeks_fd_h) << "\n";
    out << "validate.n_paths = " << c.validate_n_paths << "\n";
    return out.str();
}

} // namespace sfde
