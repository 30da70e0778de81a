#pragma once

#include <cstdint>
#include <vector>

#include "sfde/grid.hpp"

namespace sfde {

/// Counter-based stream: (seed, path index, counter) -> draw, stateless apart
/// from the counter, so substreams are independent and order-free across
/// threads and bit-reproducible.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t path_index);

    double uniform();  // (0, 1)
    double normal();   // N(0, 1)

    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

double norm_cdf(double x);
double norm_pdf(double x);
double norm_inv_cdf(double p);

/// n_fwd x m i.i.d. Normal(0, dt) draws, step-major.
std::vector<double> sample_increments(RngStream& stream, const TimeGrid& grid, int m);

} // namespace sfde
