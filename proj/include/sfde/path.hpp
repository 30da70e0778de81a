#pragma once

#include <cstdint>
#include <vector>

#include "sfde/grid.hpp"
#include "sfde/model.hpp"

namespace sfde {

/// One simulated trajectory: node values plus the increments that produced
/// them. Immutable after construction; safe to share across threads.
struct PathRecord {
    TimeGrid grid;
    int dim = 1;
    int wdim = 1;
    enum class Scheme { Euler, Exponential };
    Scheme scheme = Scheme::Euler;
    std::vector<double> values;      // n_nodes * dim, node-major
    std::vector<double> increments;  // n_fwd * wdim, step-major
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;

    double value(int node, int k = 0) const { return values[node * dim + k]; }
    double inc(int step, int j = 0) const { return increments[step * wdim + j]; }

    /// History window of n_hist+1 values ending at `node` (node time >= 0).
    SegView segment(int node) const {
        if (node < grid.n_hist())
            throw GridError("segment anchor must be a node with t >= 0");
        return SegView{values.data() + (node - grid.n_hist()) * dim,
                       grid.n_hist() + 1, dim, dim, 1};
    }

    /// W(t) at a node (wdim = 1): sum of increments up to that node.
    double brownian(int node) const {
        double w = 0.0;
        for (int k = 0; k < node - grid.n_hist(); ++k) w += increments[k];
        return w;
    }
};

inline SegView segment_at(const PathRecord& path, double t) {
    return path.segment(path.grid.node_of(t));
}

} // namespace sfde
