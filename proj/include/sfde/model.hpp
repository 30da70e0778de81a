#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sfde {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Closed catalog of scalar coefficient functions. Each entry carries exact
/// first and second derivatives, which the tangent recursions require.
class ScalarFn {
public:
    enum class Kind { Constant, Tanh, AffineClip };

    static ScalarFn constant(double c) { return ScalarFn(Kind::Constant, {c}); }
    /// a + b * tanh(y / scale)
    static ScalarFn tanh_fn(double a, double b, double scale) {
        if (scale == 0) throw ModelError("tanh scale must be nonzero");
        return ScalarFn(Kind::Tanh, {a, b, scale});
    }
    /// clamp(a + b*y, lo, hi); derivative b strictly inside, 0 on the clamps
    static ScalarFn affine_clip(double a, double b, double lo, double hi) {
        if (!(lo <= hi)) throw ModelError("affine_clip requires lo <= hi");
        return ScalarFn(Kind::AffineClip, {a, b, lo, hi});
    }
    static ScalarFn identity() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return affine_clip(0.0, 1.0, -inf, inf);
    }
    static ScalarFn zero() { return constant(0.0); }

    /// Parse "const:c", "tanh:a,b,scale", "affine_clip:a,b,lo,hi".
    static ScalarFn parse(const std::string& text);
    std::string spec_string() const;

    double operator()(double y) const {
        switch (kind_) {
            case Kind::Constant: return p_[0];
            case Kind::Tanh: return p_[0] + p_[1] * std::tanh(y / p_[2]);
            case Kind::AffineClip: {
                double v = p_[0] + p_[1] * y;
                return v < p_[2] ? p_[2] : (v > p_[3] ? p_[3] : v);
            }
        }
        return 0;
    }

    double deriv(double y) const {
        switch (kind_) {
            case Kind::Constant: return 0;
            case Kind::Tanh: {
                double th = std::tanh(y / p_[2]);
                return p_[1] * (1.0 - th * th) / p_[2];
            }
            case Kind::AffineClip: {
                double v = p_[0] + p_[1] * y;
                return (v <= p_[2] || v >= p_[3]) ? 0.0 : p_[1];
            }
        }
        return 0;
    }

    double deriv2(double y) const {
        switch (kind_) {
            case Kind::Constant: return 0;
            case Kind::Tanh: {
                double th = std::tanh(y / p_[2]);
                return -2.0 * p_[1] * th * (1.0 - th * th) / (p_[2] * p_[2]);
            }
            case Kind::AffineClip: return 0;
        }
        return 0;
    }

    bool is_constant() const { return kind_ == Kind::Constant; }
    Kind kind() const { return kind_; }

private:
    ScalarFn(Kind k, std::vector<double> p) : kind_(k), p_(std::move(p)) {}
    Kind kind_;
    std::vector<double> p_;
};

/// Non-owning view over a history window (or a tangent-column window):
/// n values of dimension dim, value(i, k) with i = 0 at the oldest node.
struct SegView {
    const double* base = nullptr;
    int n = 0;
    int dim = 1;
    int node_stride = 1;
    int comp_stride = 1;

    double at(int i, int k = 0) const { return base[i * node_stride + k * comp_stride]; }
    /// value at offset -r (oldest node of the window)
    double front(int k = 0) const { return at(0, k); }
    /// value at offset 0 (the anchor node)
    double back(int k = 0) const { return at(n - 1, k); }
};

/// General SFDE: user-supplied coefficient functionals and their Frechet
/// derivatives. A null gradient means the derivative vanishes identically.
struct GeneralSfdeModel {
    int d = 1;
    int m = 1;
    using Coeff = std::function<void(double t, const SegView& seg, std::span<double> out)>;
    using Grad = std::function<void(double t, const SegView& seg, const SegView& dir,
                                    std::span<double> out)>;
    Coeff drift;                      // null => 0
    std::vector<Coeff> diffusion;     // size m
    Grad grad_drift;                  // null => 0
    std::vector<Grad> grad_diffusion; // empty or size m; null entries => 0
};

/// dX = A0(X(t-r)) X dt + A1(X(t-r)) X dW with constant history x > 0.
struct DelayedBsModel {
    ScalarFn a0 = ScalarFn::zero();
    ScalarFn a1 = ScalarFn::constant(0.2);
    double x = 100.0;
    double rate = 0.0;
    double ellipticity_floor = 0.0;  // required inf a1^2
    double check_lo = 0.0;           // sampling range for the floor check
    double check_hi = 0.0;           // 0,0 => [0, 4x]

    void validate() const;
};

/// (X~, Y~) with X~ = log X and Y~ the running integral of exp(X~).
struct Lifted2dModel {
    ScalarFn a1 = ScalarFn::constant(0.2);  // A1 as a function of the price
    double x = 100.0;
    double y_tilde = 0.0;
    double ellipticity_floor = 0.0;
    double check_lo = 0.0;
    double check_hi = 0.0;

    double x_tilde() const { return std::log(x); }
    double a1_tilde(double z) const { return a1(std::exp(z)); }
    double a1_tilde_deriv(double z) const {
        double e = std::exp(z);
        return a1.deriv(e) * e;
    }
    void validate() const;
};

using ModelSpec = std::variant<GeneralSfdeModel, DelayedBsModel, Lifted2dModel>;

int dim_of(const ModelSpec& m);
int wdim_of(const ModelSpec& m);

/// Coefficient dispatch: which = 0 for the drift, i >= 1 for diffusion_i.
/// seg must be the history window anchored at t; out has the model dimension.
void evaluate_coefficient(const ModelSpec& model, int which, double t,
                          const SegView& seg, std::span<double> out);

ModelSpec make_brownian_model(int d);
ModelSpec make_linear_scalar_model(double sigma);

} // namespace sfde
