#pragma once

#include <span>
#include <vector>

#include "sfde/model.hpp"
#include "sfde/path.hpp"
#include "sfde/tangent.hpp"

namespace sfde {

/// First-variation processes of the delayed BS model along one path, with the
/// tangent recursions discretized the same way as the path's solver scheme.
/// uhat is the exact reciprocal of u, so U(t) Uhat(u) reproduces Z(t,u) on the
/// Greeks window to rounding. Requires A0 == 0.
struct DelayedBsBundle {
    const PathRecord* path = nullptr;
    const DelayedBsModel* model = nullptr;
    std::vector<double> u;       // per node
    std::vector<double> uhat;    // 1/u
    std::vector<double> lambda;  // per node
    std::vector<double> dx_x;    // derivative of the discrete map in x
};

DelayedBsBundle make_delayed_bundle(const DelayedBsModel& model, const PathRecord& path);

/// Z(t, u) on the window 0 v (t-r) <= u <= t, as U(t) Uhat(u).
double z_window(const DelayedBsBundle& bundle, int t_node, int u_node);

/// The Uhat SDE discretized on its own (not as a reciprocal); its product
/// with U drifts off 1 at finite dt, which is what the diagnostic tests pin.
std::vector<double> uhat_sde_path(const DelayedBsModel& model, const PathRecord& path);

enum class DelayedFunctional { Terminal, DxTerminal, Lambda };

/// Exact per-increment derivatives d F / d dW_k of the discrete functional,
/// for forward steps k in [k_lo, k_hi). Exactness makes the discrete
/// integration-by-parts duality hold without quadrature bias.
std::vector<double> dk_functional(const DelayedBsBundle& bundle, DelayedFunctional f,
                                  double t, int k_lo = 0, int k_hi = -1);

/// Lifted (X~, Y~) bundle: derivatives of the discrete map in x~.
struct LiftedBundle {
    const PathRecord* path = nullptr;
    const Lifted2dModel* model = nullptr;
    std::vector<double> dx_xt;  // d X~ / d x~ per node
    std::vector<double> dx_yt;  // d Y~ / d x~ per node
};

LiftedBundle make_lifted_bundle(const Lifted2dModel& model, const PathRecord& path);

struct Mat2 {
    double a00 = 0, a01 = 0, a10 = 0, a11 = 0;
    friend Mat2 operator*(const Mat2& l, const Mat2& r) {
        return {l.a00 * r.a00 + l.a01 * r.a10, l.a00 * r.a01 + l.a01 * r.a11,
                l.a10 * r.a00 + l.a11 * r.a10, l.a10 * r.a01 + l.a11 * r.a11};
    }
};

/// Closed small-time (t <= r) objects of the lifted system, all quadratures
/// left-Riemann over [0, t). y-integrals are of Y~ - y~ so the forms hold for
/// any starting value.
struct LiftedSmallTime {
    double t = 0;
    double a1 = 0, a1p = 0;  // A~1(x~), A~1'(x~)
    double i1 = 0, i2 = 0;   // integrals of (Y~-y~) and its square
    double delta = 0;        // t*i2 - i1^2
    double det_vcheck = 0;   // a1^4 * delta
    Mat2 frak_u, frak_uhat, vcheck, theta;
    bool degenerate = false;
};

LiftedSmallTime lifted_small_time(const LiftedBundle& bundle, double t);

/// General recursions for the same objects (identity checks): the 2x2
/// ODE-propagated frak U at a node, and Uhat(t) V(t) Uhat(t)^T from the
/// tangent-column covariance.
Mat2 frak_u_ode(const PathRecord& path, int node);
Mat2 vcheck_general(const Lifted2dModel& model, const PathRecord& path, double t);

enum class LiftedFunctional { Ytilde, DxYtilde, Theta11, Theta12, DetVcheck, Uhat21 };

/// Exact d F / d dW_k for the small-time lifted functionals (t <= r).
std::vector<double> dk_lifted(const LiftedBundle& bundle, LiftedFunctional f, double t,
                              int k_lo = 0, int k_hi = -1);

/// delta(F u) = F * sum u_k dW_k - sum u_k DkF_k dt over forward steps
/// [k_lo, k_hi); u adapted, F in the derivative catalog.
double skorokhod_integral(const PathRecord& path, int k_lo, int k_hi,
                          std::span<const double> u, double F,
                          std::span<const double> dk_f);

} // namespace sfde
