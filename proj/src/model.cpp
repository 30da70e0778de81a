#include "sfde/model.hpp"

#include <cstdio>
#include <sstream>

namespace sfde {

namespace {

std::vector<double> parse_params(const std::string& s, size_t expect, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ModelError("bad numeric parameter '" + tok + "' in " + what);
        }
    }
    if (out.size() != expect)
        throw ModelError(what + " expects " + std::to_string(expect) + " parameters");
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_floor(const ScalarFn& a1, double floor, double lo, double hi, double x) {
    if (floor <= 0) return;
    if (lo == 0.0 && hi == 0.0) { lo = 0.0; hi = 4.0 * x; }
    const int n = 2048;
    for (int i = 0; i <= n; ++i) {
        double y = lo + (hi - lo) * i / n;
        double v = a1(y);
        if (v * v < floor * (1.0 - 1e-12))
            throw ModelError("ellipticity floor violated: a1(" + fmt(y) + ")^2 = " +
                             fmt(v * v) + " < " + fmt(floor));
    }
}

} // namespace

ScalarFn ScalarFn::parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ModelError("coefficient spec '" + text + "' missing ':'");
    std::string head = text.substr(0, colon);
    std::string tail = text.substr(colon + 1);
    if (head == "const") {
        auto p = parse_params(tail, 1, "const");
        return constant(p[0]);
    }
    if (head == "tanh") {
        auto p = parse_params(tail, 3, "tanh");
        return tanh_fn(p[0], p[1], p[2]);
    }
    if (head == "affine_clip") {
        auto p = parse_params(tail, 4, "affine_clip");
        return affine_clip(p[0], p[1], p[2], p[3]);
    }
    throw ModelError("unknown coefficient kind '" + head + "'");
}

std::string ScalarFn::spec_string() const {
    switch (kind_) {
        case Kind::Constant: return "const:" + fmt(p_[0]);
        case Kind::Tanh: return "tanh:" + fmt(p_[0]) + "," + fmt(p_[1]) + "," + fmt(p_[2]);
        case Kind::AffineClip:
            return "affine_clip:" + fmt(p_[0]) + "," + fmt(p_[1]) + "," + fmt(p_[2]) + "," + fmt(p_[3]);
    }
    return "";
}

void DelayedBsModel::validate() const {
    if (!(x > 0)) throw ModelError("delayed BS model requires x > 0");
    check_floor(a1, ellipticity_floor, check_lo, check_hi, x);
}

void Lifted2dModel::validate() const {
    if (!(x > 0)) throw ModelError("lifted model requires x > 0");
    check_floor(a1, ellipticity_floor, check_lo, check_hi, x);
}

int dim_of(const ModelSpec& m) {
    if (const auto* g = std::get_if<GeneralSfdeModel>(&m)) return g->d;
    if (std::holds_alternative<Lifted2dModel>(m)) return 2;
    return 1;
}

int wdim_of(const ModelSpec& m) {
    if (const auto* g = std::get_if<GeneralSfdeModel>(&m)) return g->m;
    return 1;
}

void evaluate_coefficient(const ModelSpec& model, int which, double t,
                          const SegView& seg, std::span<double> out) {
    if (const auto* g = std::get_if<GeneralSfdeModel>(&model)) {
        if (seg.dim != g->d || static_cast<int>(out.size()) != g->d)
            throw ModelError("coefficient evaluation: dimension mismatch");
        if (which == 0) {
            if (g->drift) g->drift(t, seg, out);
            else for (auto& v : out) v = 0.0;
        } else {
            if (which > g->m) throw ModelError("diffusion index out of range");
            const auto& fn = g->diffusion.at(which - 1);
            if (fn) fn(t, seg, out);
            else for (auto& v : out) v = 0.0;
        }
        return;
    }
    if (const auto* bs = std::get_if<DelayedBsModel>(&model)) {
        if (seg.dim != 1 || out.size() != 1)
            throw ModelError("coefficient evaluation: dimension mismatch");
        const double lag = seg.front();
        const double cur = seg.back();
        out[0] = (which == 0 ? bs->a0(lag) : bs->a1(lag)) * cur;
        return;
    }
    const auto& lf = std::get<Lifted2dModel>(model);
    if (seg.dim != 2 || out.size() != 2)
        throw ModelError("coefficient evaluation: dimension mismatch");
    const double xt_lag = seg.front(0);
    if (which == 0) {
        double a = lf.a1_tilde(xt_lag);
        out[0] = -0.5 * a * a;
        out[1] = std::exp(seg.back(0));
    } else {
        out[0] = lf.a1_tilde(xt_lag);
        out[1] = 0.0;
    }
}

ModelSpec make_brownian_model(int d) {
    GeneralSfdeModel g;
    g.d = d;
    g.m = d;
    g.diffusion.resize(d);
    for (int i = 0; i < d; ++i) {
        g.diffusion[i] = [i, d](double, const SegView&, std::span<double> out) {
            for (int k = 0; k < d; ++k) out[k] = (k == i ? 1.0 : 0.0);
        };
    }
    return g;
}

ModelSpec make_linear_scalar_model(double sigma) {
    GeneralSfdeModel g;
    g.d = 1;
    g.m = 1;
    g.diffusion.resize(1);
    g.diffusion[0] = [sigma](double, const SegView& seg, std::span<double> out) {
        out[0] = sigma * seg.back();
    };
    g.grad_diffusion.resize(1);
    g.grad_diffusion[0] = [sigma](double, const SegView&, const SegView& dir,
                                  std::span<double> out) {
        out[0] = sigma * dir.back();
    };
    return g;
}

} // namespace sfde
