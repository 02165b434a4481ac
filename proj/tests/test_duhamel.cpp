#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "heatlab/duhamel.hpp"

using namespace heatlab;
using Catch::Approx;

namespace {

double max_diff(RadialField const& a, RadialField const& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

} // namespace

TEST_CASE("duhamel map with f = 0 is the linear part") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 0.1);
    auto lin = linear_part(P, u0, 0.1, 16);
    auto tr = duhamel_iterate(P, u0, Expression::parse("0"), lin, 10);
    CHECK(tr.converged);
    CHECK(tr.iterations == 0);
    CHECK(sup_distance(tr.limit(), lin) == 0.0);
}

TEST_CASE("linear reaction reproduces e^{at} S(t) u0") {
    HeatPropagator P(RadialGrid::uniform(2, 1.0, 128));
    auto u0 = RadialField::indicator(P.grid(), 0.4, 1.0);
    double const a = 3.0, T = 0.2;
    auto lin = linear_part(P, u0, T, 200);
    auto tr = duhamel_iterate(P, u0, Expression::parse("3*s"), lin, 60, {1e-13});
    REQUIRE(tr.converged);
    double err = 0.0;
    for (std::size_t m = 0; m < lin.slices.size(); ++m) {
        double g = std::exp(a * lin.time(m));
        for (std::size_t i = 0; i < u0.size(); ++i)
            err = std::max(err, std::abs(tr.limit().slices[m].values[i] - g * lin.slices[m].values[i]));
    }
    // trapezoid error a^2 h^2 T / 12 relative to the sup
    CHECK(err < 1e-5);
}

TEST_CASE("trapezoid error is second order in the time step") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
    auto u0 = RadialField::sample(P.grid(), [](double r) { return std::cos(std::numbers::pi * r / 2); });
    auto f = Expression::parse("2*s");
    double errs[2];
    for (int k = 0; k < 2; ++k) {
        std::size_t steps = k == 0 ? 20 : 40;
        auto lin = linear_part(P, u0, 0.5, steps);
        auto tr = duhamel_iterate(P, u0, f, lin, 80, {1e-14});
        RadialField exact = lin.slices.back();
        for (double& v : exact.values) v *= std::exp(1.0);
        errs[k] = max_diff(tr.limit().slices.back(), exact);
    }
    CHECK(errs[0] / errs[1] == Approx(4.0).epsilon(0.05));
}

TEST_CASE("monotone iteration from a supersolution") {
    int const d = 1;
    HeatPropagator P(RadialGrid::uniform(d, 1.0, 256));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 0.1);
    auto f = Expression::parse("s^2");
    auto hz = find_existence_horizon(lq_norm(u0, 1.0), f, d);
    auto lin = linear_part(P, u0, hz.T, 64);
    TimeField v = lin;
    for (auto& s : v.slices)
        for (double& x : s.values) x = 2.0 * x + 1.0;

    auto margin = supersolution_check(P, u0, f, v);
    CHECK(margin.certified());
    auto tr = duhamel_iterate(P, u0, f, v, 50, {1e-12});
    CHECK(tr.converged);
    CHECK(tr.iterations <= 50);
    CHECK(tr.max_increase <= 1e-10);
    CHECK(tr.min_above_linear >= -1e-12);
    CHECK(tr.residual < 1e-6);
    CHECK(tr.warnings.empty());
    for (std::size_t n = 1; n < tr.deltas.size(); ++n) CHECK(tr.deltas[n] <= tr.deltas[n - 1] * (1 + 1e-9));
}

TEST_CASE("a subsolution start is flagged") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 0.1);
    auto f = Expression::parse("s^2");
    auto lin = linear_part(P, u0, 0.01, 8);
    TimeField zero = lin;
    for (auto& s : zero.slices) std::fill(s.values.begin(), s.values.end(), 0.0);
    auto tr = duhamel_iterate(P, u0, f, zero, 5);
    CHECK_FALSE(tr.warnings.empty());
    CHECK(tr.initial_margin.min_margin < 0.0);
}

TEST_CASE("explosive reaction trips the overflow guard") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 10.0);
    auto lin = linear_part(P, u0, 1.0, 8);
    CHECK_THROWS_AS(duhamel_iterate(P, u0, Expression::parse("exp(s)"), lin, 30), DivergenceError);
}

TEST_CASE("existence horizon closed forms") {
    SECTION("linear f, d = 2: integral condition gives T = 1/2") {
        auto h = find_existence_horizon(1e-3, Expression::parse("s"), 2);
        CHECK(h.T_integral == Approx(0.5).epsilon(1e-5));
        CHECK(h.T_integral <= 0.5);
        CHECK(h.T == Approx(1e-3 / (2.0 * std::numbers::pi)).epsilon(1e-12));
        CHECK(h.capped_by_smoothing);
    }
    SECTION("f = s^2, d = 1: Phi(T) = 2 K sqrt(T)") {
        double m = 7.0;
        auto h = find_existence_horizon(m, Expression::parse("s^2"), 1);
        double c = 1.0 / std::sqrt(4.0 * std::numbers::pi);
        double K = 4.0 * c * m;
        CHECK(h.T_integral == Approx(1.0 / (16.0 * K * K)).epsilon(1e-5));
        CHECK(h.T_smoothing == Approx(std::pow(2.0 * c * m, 2.0)).epsilon(1e-12));
        CHECK(h.T == Approx(std::min(h.T_integral, h.T_smoothing)).epsilon(1e-12));
        CHECK(h.integral_value <= h.target * (1 + 1e-9));
    }
    SECTION("f = 0 has no horizon") {
        auto h = find_existence_horizon(1.0, Expression::parse("0"), 3);
        CHECK(h.unbounded);
    }
    SECTION("critical power in d = 2 is divergent") {
        CHECK_THROWS_AS(find_existence_horizon(1.0, Expression::parse("s + s^2"), 2), HorizonError);
    }
    SECTION("log-critical integrable case is accepted") {
        auto h = find_existence_horizon(0.1, Expression::parse("s^2/log(e+s)^3"), 2);
        CHECK(h.T > 0.0);
        CHECK(h.tail_estimate > 0.0);
    }
    CHECK_THROWS_AS(find_existence_horizon(0.0, Expression::parse("s"), 1), std::invalid_argument);
}

TEST_CASE("forward simulation") {
    SECTION("f = 0 follows the semigroup") {
        HeatPropagator P(RadialGrid::uniform(2, 1.0, 64));
        auto u0 = RadialField::indicator(P.grid(), 0.5, 1.0);
        auto tr = simulate_forward(P, u0, Expression::parse("0"), 0.05);
        CHECK(max_diff(tr.final_field, P.apply_raw(0.05, u0)) < 1e-12);
        CHECK_FALSE(tr.numeric_blowup);
        CHECK(tr.samples.back().t == Approx(0.05));
    }
    SECTION("large data with a superlinear reaction blows up numerically") {
        HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
        auto u0 = RadialField::indicator(P.grid(), 0.5, 20.0);
        auto tr = simulate_forward(P, u0, Expression::parse("s^2"), 1.0);
        CHECK(tr.numeric_blowup);
        CHECK(tr.blowup_time < 0.1);
        CHECK_FALSE(tr.blowup_reason.empty());
    }
    SECTION("comparison on a shared schedule") {
        HeatPropagator P(RadialGrid::uniform(1, 1.0, 64));
        auto u0 = RadialField::indicator(P.grid(), 0.5, 1.0);
        auto tg = simulate_forward(P, u0, Expression::parse("s^2 + 1"), 0.2);
        SimulationControls fixed;
        fixed.schedule = tg.accepted_times();
        auto tf = simulate_forward(P, u0, Expression::parse("s^2"), 0.2, fixed);
        auto tg2 = simulate_forward(P, u0, Expression::parse("s^2 + 1"), 0.2, fixed);
        CHECK(max_diff(tg.final_field, tg2.final_field) < 1e-13);
        for (std::size_t i = 0; i < u0.size(); ++i) CHECK(tf.final_field.values[i] <= tg.final_field.values[i]);
    }
}

TEST_CASE("limit is consistent on a twice finer time grid") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 256));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 0.1);
    auto f = Expression::parse("s^2");
    double T = find_existence_horizon(lq_norm(u0, 1.0), f, 1).T;
    auto lin = linear_part(P, u0, T, 64);
    TimeField v = lin;
    for (auto& s : v.slices)
        for (double& x : s.values) x = 2.0 * x + 1.0;
    auto tr = duhamel_iterate(P, u0, f, v, 50, {1e-12});
    REQUIRE(tr.converged);
    auto const& u = tr.limit();
    TimeField fine = TimeField::build(T, 128, [&](double) { return RadialField(P.grid()); });
    for (std::size_t m = 0; m <= 128; ++m) {
        if (m % 2 == 0) {
            fine.slices[m] = u.slices[m / 2];
        } else {
            for (std::size_t i = 0; i < u0.size(); ++i)
                fine.slices[m].values[i] = 0.5 * (u.slices[m / 2].values[i] + u.slices[m / 2 + 1].values[i]);
        }
    }
    auto Fu = duhamel_map(P, u0, f, fine);
    double err = 0.0;
    for (std::size_t m = 0; m <= 64; ++m)
        for (std::size_t i = 0; i < u0.size(); ++i)
            err = std::max(err, std::abs(Fu.slices[2 * m].values[i] - u.slices[m].values[i]));
    CHECK(err < 1e-4);
}

TEST_CASE("chi_Omega is a supersolution for zero data when T f(1) <= 1") {
    HeatPropagator P(RadialGrid::uniform(2, 1.0, 64));
    RadialField u0(P.grid());
    auto f = Expression::parse("s^3");
    double T = 0.5;
    auto v = TimeField::build(T, 32, [&](double) {
        RadialField one(P.grid());
        std::fill(one.values.begin(), one.values.end(), 1.0);
        return one;
    });
    CHECK(supersolution_check(P, u0, f, v).certified());
    auto tr = duhamel_iterate(P, u0, f, v, 200, {1e-12});
    CHECK(tr.max_increase <= 1e-10);
    CHECK(tr.min_above_linear >= -1e-10);
    CHECK(tr.limit().slices.back().max_abs() < 1.0);
}

TEST_CASE("supercritical power with large data is not certified") {
    HeatPropagator P(RadialGrid::uniform(1, 1.0, 128));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 5.0);
    auto f = Expression::parse("s^4");
    auto lin = linear_part(P, u0, 0.5, 32);
    TimeField v = lin;
    for (auto& s : v.slices)
        for (double& x : s.values) x = 2.0 * x + 1.0;
    CHECK_FALSE(supersolution_check(P, u0, f, v).certified());
}
