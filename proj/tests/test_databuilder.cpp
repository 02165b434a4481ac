#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "heatlab/databuilder.hpp"
#include "heatlab/lower_bound.hpp"

using namespace heatlab;
using Catch::Approx;

TEST_CASE("T1 single term has the closed-form norm") {
    for (int d = 1; d <= 3; ++d)
        for (double q : {1.0, 2.0}) {
            auto data = build_t1_data(Expression::parse("s^8"), d, q, 1, 0.1, 1.0);
            auto const& s = data.spec;
            double expect = std::pow(s.constants.omega_d, 1.0 / q) * std::pow(0.1, d / q) / s.constants.beta_d;
            CHECK(s.analytic_lq == Approx(expect).epsilon(1e-12));
            CHECK(data.sampled_lq == Approx(expect).epsilon(1e-9));
            CHECK(s.lq_sum_bound == Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("T1 schedule for s^4, d = 1, q = 1") {
    auto f = Expression::parse("s^4");
    auto data = build_t1_data(f, 1, 1.0, 6, 0.0, 1.0);
    auto const& s = data.spec;
    CHECK(s.p == 3.0);
    REQUIRE(s.terms.size() == 6);
    double prev_phi = 0.0, prev_r = 1.0;
    for (auto const& t : s.terms) {
        // s^{-3} s^4 = s >= e^k
        CHECK(t.phi >= std::exp(static_cast<double>(t.index)));
        CHECK(t.phi < 1.1 * std::max(std::exp(static_cast<double>(t.index)), prev_phi + 1.0) * (1 + 1e-12));
        CHECK(t.phi >= prev_phi + 1.0);
        CHECK(t.schedule_margin >= 0.0);
        CHECK(t.radius == Approx(s.epsilon / (t.phi * t.index * t.index)).epsilon(1e-14));
        CHECK(t.radius < prev_r);
        CHECK(t.amplitude == Approx(t.phi / s.constants.beta_d));
        prev_phi = t.phi;
        prev_r = t.radius;
    }
    CHECK(2.0 * s.terms.front().radius <= 1.0 * (1 + 1e-12));
    // nested data is non-increasing in radius
    for (std::size_t i = 1; i < data.field.size(); ++i) CHECK(data.field.values[i] <= data.field.values[i - 1]);
    CHECK(data.sampled_lq == Approx(s.analytic_lq).epsilon(1e-9));
    CHECK(s.analytic_lq <= s.lq_sum_bound * (1 + 1e-12));
    CHECK(s.lq_sum_bound + s.tail_bound == Approx(s.lq_full_bound));
}

TEST_CASE("T1 norms increase with N below the full bound") {
    auto f = Expression::parse("s^4");
    double prev = 0.0;
    for (int N = 1; N <= 6; ++N) {
        auto data = build_t1_data(f, 1, 1.0, N, 0.5, 1.0);
        CHECK(data.spec.analytic_lq > prev);
        CHECK(data.spec.analytic_lq <= data.spec.lq_full_bound);
        prev = data.spec.analytic_lq;
    }
}

TEST_CASE("T1 failures are explicit") {
    CHECK_THROWS_AS(build_t1_data(Expression::parse("s^2"), 1, 1.0, 3, 0.1, 1.0), ScheduleError);
    CHECK_THROWS_AS(build_t1_data(Expression::parse("s^4"), 1, 1.0, 3, 10.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_t1_data(Expression::parse("1 - s"), 1, 1.0, 3, 0.1, 1.0), AuditFailure);
    CHECK_THROWS_AS(build_t1_data(Expression::parse("s^4"), 1, 1.0, 0, 0.1, 1.0), std::invalid_argument);
    T1Options coarse;
    coarse.grid.cells = 20;
    coarse.grid.h_min_fraction = 0.5;
    CHECK_THROWS_AS(build_t1_data(Expression::parse("s^4"), 1, 1.0, 4, 0.0, 1.0, coarse), std::invalid_argument);
}

TEST_CASE("T1 predictions") {
    auto data = build_t1_data(Expression::parse("s^4"), 1, 1.0, 8, 0.0, 1.0);
    auto pred = predicted_bounds(data.spec);
    REQUIRE(pred.size() == 8);
    auto const& K = data.spec.constants;
    for (auto const& p : pred) {
        double k = p.index;
        double expect = K.beta_d * K.omega_d * std::pow(data.spec.epsilon, 3.0) * std::pow(k, -6.0) * std::exp(k);
        CHECK(p.value == Approx(expect).epsilon(1e-12));
        CHECK(p.chain_value >= p.value * (1 - 1e-12));
        CHECK(p.t_lo == Approx(0.5 * p.t_hi));
    }
    // The closed-form ratio is e (k/(k+1))^6: below 1 for k <= 5, above 1 from k = 6 on.
    for (int k = 1; k < 8; ++k) {
        double ratio = pred[static_cast<std::size_t>(k)].value / pred[static_cast<std::size_t>(k - 1)].value;
        CHECK(ratio == Approx(t1_growth_ratio(k, 1, 1.0)).epsilon(1e-12));
        CHECK((ratio > 1.0) == (k >= 6));
    }
}

TEST_CASE("Todd data for the critical power") {
    int const d = 2;
    auto f = Expression::parse("s^2");
    std::vector<double> witness;
    for (int k = 1; k <= 40; ++k) witness.push_back(std::pow(2.0, k));
    auto data = build_todd_data(f, d, 6, 1.0, witness);
    auto const& s = data.spec;
    CHECK(s.n0 >= 1);
    CHECK(s.k0 == 1);
    double omega = unit_ball_volume(d);
    for (auto const& t : s.terms) {
        double alpha = std::pow(static_cast<double>(t.index) * t.index * t.phi, 0.5);
        CHECK(t.radius == Approx(1.0 / alpha).epsilon(1e-14));
        CHECK(t.radius < s.delta0);
        CHECK(t.phi == Approx(witness[static_cast<std::size_t>(t.zeta - 1)] / s.constants.c_d));
        // zeta is the smallest index with phi_{k_n + 1} <= phi_zeta / 2
        CHECK(witness[static_cast<std::size_t>(t.k_n)] <= 0.5 * witness[static_cast<std::size_t>(t.zeta - 1)]);
        CHECK(witness[static_cast<std::size_t>(t.k_n)] > 0.5 * witness[static_cast<std::size_t>(t.zeta - 2)]);
        CHECK(lq_norm(RadialField::indicator(data.grid, t.radius, t.amplitude), 1.0) ==
              Approx(omega / (t.index * t.index)).epsilon(1e-9));
    }
    CHECK(s.analytic_lq <= omega * std::numbers::pi * std::numbers::pi / 6.0);
    CHECK(data.sampled_lq == Approx(s.analytic_lq).epsilon(1e-9));

    auto pred = predicted_bounds(s);
    for (auto const& p : pred) {
        double n = p.index;
        // critical power: every series term is 1, so the sum counts k0..k_n
        double expect = todd_constant(s.constants, 2.0) * std::pow(n, -4.0) * (p.k_hi - p.k_lo + 1);
        CHECK(p.value == Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("Todd schedule parameter and failures") {
    auto f = Expression::parse("s^2");
    std::vector<double> witness;
    for (int k = 1; k <= 12; ++k) witness.push_back(std::pow(2.0, k));
    ToddOptions fast;
    fast.k_schedule = [](int n) { return n * n; };
    CHECK_THROWS_AS(build_todd_data(f, 2, 6, 1.0, witness, 2.0, fast), ScheduleError);
    auto data = build_todd_data(f, 2, 3, 1.0, witness, 2.0, fast);
    for (auto const& t : data.spec.terms) CHECK(t.k_n == std::max(t.index * t.index, data.spec.k0));
    std::vector<double> bad{1.0, 1.5, 4.0};
    CHECK_THROWS_AS(build_todd_data(f, 2, 3, 1.0, bad), std::invalid_argument);
}

TEST_CASE("Todd prediction is dominated by the lower-bound functional") {
    // d = 1, critical power s^3: the mass of the functional for one term u_n at a time
    // inside the admissible window exceeds c''' psi^p sum_k f(s_k) s_k^{-p}.
    int const d = 1;
    auto f = Expression::parse("s^3");
    std::vector<double> witness;
    for (int k = 1; k <= 40; ++k) witness.push_back(std::pow(2.0, k));
    auto data = build_todd_data(f, d, 3, 1.0, witness);
    auto pred = predicted_bounds(data.spec);
    LowerBoundOptions cert;
    cert.inner = cert.outer = KernelMode::Certified;
    for (std::size_t i = 0; i < data.spec.terms.size(); ++i) {
        auto const& t = data.spec.terms[i];
        double time = std::clamp(2.0 * pred[i].t_lo, 1e-6, 0.5 * pred[i].t_hi);
        auto pr = duhamel_lower_bound({t.radius, {}, t.amplitude}, f, time, d, 1.0, cert, 400);
        CHECK(pr.lq_pow_lower >= pred[i].value);
    }
}
