#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sfde/bundle.hpp"
#include "sfde/model.hpp"
#include "sfde/montecarlo.hpp"
#include "sfde/path.hpp"

namespace sfde {

/// Piecewise payoff: sum of alpha_k f_k(y) 1_{[lo_k, hi_k)}(y).
struct PayoffTerm {
    double alpha = 1.0;
    ScalarFn f = ScalarFn::identity();
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct Payoff {
    std::vector<PayoffTerm> terms;
    std::string name = "payoff";

    double operator()(double y) const {
        double v = 0.0;
        for (const auto& term : terms)
            if (y >= term.lo && y < term.hi) v += term.alpha * term.f(y);
        return v;
    }

    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff digital(double strike);
    static Payoff identity();
    static Payoff constant(double c);
    static Payoff parse(const std::string& text);  // "call:100", "digital:100", ...
};

/// Small-time European weight, t <= r: the closed Brownian-functional form.
double european_weight_smalltime(const DelayedBsModel& model, const PathRecord& path,
                                 double t);

/// General-t European weight via the Skorokhod expansion on the window
/// [0 v (t-r), t): (Ito sum) * Lambda(t) minus the Lambda-derivative
/// correction, divided by t ^ r.
double european_weight_general(const DelayedBsBundle& bundle, double t);

/// Small-time Asian weight, t <= r: the explicit five-term expression.
double asian_weight_smalltime(const LiftedBundle& bundle, double t);

/// Reduced three-term expression valid for constant A1; cross-checks the
/// five-term evaluation path-wise.
double asian_weight_reduced_constant(const LiftedBundle& bundle, double t);

/// Experimental general-t Asian weight: Skorokhod correction by numerical
/// per-increment differentiation. Gated behind GreekRequest::research.
double asian_weight_general_research(const Lifted2dModel& model, const PathRecord& path,
                                     double t);

enum class GreekMethod { MalliavinSmalltime, MalliavinGeneral, FiniteDifference, ClosedForm };

GreekMethod parse_method(const std::string& name);
std::string method_name(GreekMethod m);

struct GreekRequest {
    ModelSpec model;
    Payoff payoff;
    double t = 1.0;
    GreekMethod method = GreekMethod::MalliavinSmalltime;
    bool asian = false;
    bool research = false;
    double fd_step = 0.0;  // 0 => default (0.01 x; 0.5 absolute for digitals)
};

/// Delta estimate over n_paths: MC mean of payoff(terminal) * weight, or the
/// requested oracle.
Estimate delta_estimator(const GreekRequest& req, const TimeGrid& grid,
                         std::uint64_t n_paths, std::uint64_t seed, int threads);

} // namespace sfde
