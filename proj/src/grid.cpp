#include "sfde/grid.hpp"

#include <cmath>

namespace sfde {

TimeGrid build_grid(double r, double T, double dt_target) {
    if (!(r > 0) || !(T > 0) || !(dt_target > 0))
        throw GridError("build_grid: r, T, dt_target must all be positive");

    const long n0 = static_cast<long>(std::ceil(r / dt_target - 1e-12));
    for (long n_hist = n0;; ++n_hist) {
        const double dt = r / static_cast<double>(n_hist);
        if (dt < dt_target / 1000.0)
            throw GridError("build_grid: no common step for r and T within a "
                            "factor-1000 refinement of dt_target");
        const double q = T / dt;
        const double qr = std::round(q);
        if (qr >= 1.0 && std::fabs(q - qr) <= 1e-9 * q) {
            return TimeGrid(r, T, dt, static_cast<int>(n_hist),
                            static_cast<int>(qr));
        }
    }
}

} // namespace sfde
