#pragma once

#include <stdexcept>
#include <string>

namespace sfde {

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform grid on [-r, T] with dt dividing both r and T, so every delayed
/// lookup t - r lands exactly on a node. Node i carries time (i - n_hist)*dt;
/// index arithmetic is the source of truth, times are derived.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double r, double T, double dt, int n_hist, int n_fwd)
        : r_(r), T_(T), dt_(dt), n_hist_(n_hist), n_fwd_(n_fwd) {}

    double r() const { return r_; }
    double horizon() const { return T_; }
    double dt() const { return dt_; }
    int n_hist() const { return n_hist_; }
    int n_fwd() const { return n_fwd_; }
    int n_nodes() const { return n_hist_ + n_fwd_ + 1; }

    double time_at(int node) const { return (node - n_hist_) * dt_; }

    bool is_node(double t) const {
        int k = node_round(t);
        if (k < 0 || k >= n_nodes()) return false;
        return near(time_at(k), t);
    }

    /// Node index of t; throws GridError if t is not a grid node.
    int node_of(double t) const {
        int k = node_round(t);
        if (k < 0 || k >= n_nodes() || !near(time_at(k), t))
            throw GridError("time " + std::to_string(t) + " is not a grid node");
        return k;
    }

    /// Index of the node at t - r (valid for any node >= n_hist).
    int delayed_node(int node) const { return node - n_hist_; }

    /// Forward step index of a node > 0: node n_hist + k is reached by step k-1.
    int fwd_index(int node) const { return node - n_hist_; }

private:
    int node_round(double t) const {
        return static_cast<int>(t / dt_ + (t >= 0 ? 0.5 : -0.5)) + n_hist_;
    }
    static bool near(double a, double b) {
        double s = 1.0 > (a < 0 ? -a : a) ? 1.0 : (a < 0 ? -a : a);
        return (a > b ? a - b : b - a) <= 1e-9 * s;
    }

    double r_ = 0, T_ = 0, dt_ = 0;
    int n_hist_ = 0, n_fwd_ = 0;
};

/// dt = r / ceil(r/dt_target), refined until T/dt is also integral.
/// Rejects pairs with no common step within a factor-1000 refinement.
TimeGrid build_grid(double r, double T, double dt_target);

} // namespace sfde
