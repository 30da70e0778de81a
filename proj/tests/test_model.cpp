#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sfde/model.hpp"

using namespace sfde;

TEST_CASE("scalar function catalog values and derivatives") {
    ScalarFn c = ScalarFn::constant(0.2);
    CHECK(c(5.0) == 0.2);
    CHECK(c.deriv(5.0) == 0.0);
    CHECK(c.deriv2(5.0) == 0.0);

    ScalarFn t = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    CHECK(t(0.0) == doctest::Approx(0.2));
    CHECK(t(100.0) == doctest::Approx(0.2 + 0.05 * std::tanh(1.0)));
    // derivative against a central difference
    for (double y : {-150.0, -3.0, 0.0, 42.0, 220.0}) {
        const double h = 1e-5;
        CHECK(t.deriv(y) == doctest::Approx((t(y + h) - t(y - h)) / (2 * h)).epsilon(1e-6));
        CHECK(t.deriv2(y) ==
              doctest::Approx((t.deriv(y + h) - t.deriv(y - h)) / (2 * h)).epsilon(1e-5));
    }

    ScalarFn a = ScalarFn::affine_clip(1.0, 2.0, 0.0, 10.0);
    CHECK(a(1.0) == 3.0);
    CHECK(a(100.0) == 10.0);
    CHECK(a(-100.0) == 0.0);
    CHECK(a.deriv(1.0) == 2.0);
    CHECK(a.deriv(100.0) == 0.0);

    ScalarFn id = ScalarFn::identity();
    CHECK(id(7.5) == 7.5);
    CHECK(id.deriv(-3.0) == 1.0);
}

TEST_CASE("scalar function spec strings round-trip") {
    for (const auto& text : {"const:0.2", "tanh:0.2,0.05,100", "affine_clip:1,2,0,10"}) {
        ScalarFn f = ScalarFn::parse(text);
        ScalarFn g = ScalarFn::parse(f.spec_string());
        for (double y : {-5.0, 0.0, 3.25, 88.0}) CHECK(f(y) == g(y));
    }
    CHECK_THROWS_AS(ScalarFn::parse("gaussian:1"), ModelError);
    CHECK_THROWS_AS(ScalarFn::parse("const"), ModelError);
    CHECK_THROWS_AS(ScalarFn::parse("tanh:1,2"), ModelError);
    CHECK_THROWS_AS(ScalarFn::parse("const:abc"), ModelError);
}

namespace {

SegView make_seg(const std::vector<double>& data, int dim) {
    return SegView{data.data(), static_cast<int>(data.size()) / dim, dim, dim, 1};
}

} // namespace

TEST_CASE("delayed BS coefficient is A_i(lagged) times current") {
    DelayedBsModel m;
    m.a1 = ScalarFn::constant(0.2);
    std::vector<double> seg = {3.0, 50.0, 100.0};
    std::vector<double> out(1);
    evaluate_coefficient(m, 1, 0.5, make_seg(seg, 1), out);
    CHECK(out[0] == doctest::Approx(0.2 * 100.0));

    m.a1 = ScalarFn::tanh_fn(0.2, 0.1, 1.0);
    std::vector<double> seg2 = {0.0, 1.0, 50.0};  // lag value 0 => tanh term vanishes
    evaluate_coefficient(m, 1, 0.5, make_seg(seg2, 1), out);
    CHECK(out[0] == doctest::Approx(10.0));

    m.a0 = ScalarFn::constant(0.05);
    evaluate_coefficient(m, 0, 0.5, make_seg(seg2, 1), out);
    CHECK(out[0] == doctest::Approx(0.05 * 50.0));
}

TEST_CASE("lifted coefficients follow the 2-d block form") {
    Lifted2dModel m;
    m.a1 = ScalarFn::constant(0.25);
    m.x = 100.0;
    std::vector<double> seg = {std::log(90.0), 0.0, std::log(110.0), 3.5};
    std::vector<double> out(2);
    evaluate_coefficient(m, 1, 0.5, make_seg(seg, 2), out);
    CHECK(out[0] == doctest::Approx(0.25));
    CHECK(out[1] == 0.0);

    evaluate_coefficient(m, 0, 0.5, make_seg(seg, 2), out);
    CHECK(out[0] == doctest::Approx(-0.5 * 0.25 * 0.25));
    CHECK(out[1] == doctest::Approx(110.0));
}

TEST_CASE("coefficient evaluation is deterministic") {
    DelayedBsModel m;
    m.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);
    std::vector<double> seg = {97.0, 101.5, 103.0};
    std::vector<double> a(1), b(1);
    evaluate_coefficient(m, 1, 0.25, make_seg(seg, 1), a);
    evaluate_coefficient(m, 1, 0.25, make_seg(seg, 1), b);
    CHECK(a[0] == b[0]);
}

TEST_CASE("dimension mismatches are rejected") {
    DelayedBsModel m;
    std::vector<double> seg = {1.0, 2.0};
    std::vector<double> out2(2);
    CHECK_THROWS_AS(evaluate_coefficient(m, 1, 0.0, make_seg(seg, 2), out2), ModelError);

    ModelSpec bm = make_brownian_model(2);
    std::vector<double> out1(1);
    CHECK_THROWS_AS(evaluate_coefficient(bm, 1, 0.0, make_seg(seg, 2), out1), ModelError);
}

TEST_CASE("ellipticity floor is sampled at validation") {
    DelayedBsModel ok;
    ok.a1 = ScalarFn::tanh_fn(0.2, 0.05, 100.0);  // range [0.15, 0.25]
    ok.ellipticity_floor = 0.15 * 0.15;
    CHECK_NOTHROW(ok.validate());

    DelayedBsModel bad = ok;
    bad.ellipticity_floor = 0.04;  // requires |a1| >= 0.2 everywhere
    bad.check_lo = -1000.0;        // the tanh tail dips to 0.15 on the left
    bad.check_hi = 1000.0;
    CHECK_THROWS_AS(bad.validate(), ModelError);

    DelayedBsModel neg = ok;
    neg.x = -1.0;
    CHECK_THROWS_AS(neg.validate(), ModelError);
}

TEST_CASE("brownian factory model has unit diffusion and no drift") {
    ModelSpec bm = make_brownian_model(2);
    std::vector<double> seg = {0.0, 0.0, 1.0, 2.0};
    std::vector<double> out(2);
    evaluate_coefficient(bm, 0, 0.0, make_seg(seg, 2), out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    evaluate_coefficient(bm, 2, 0.0, make_seg(seg, 2), out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 1.0);
}
