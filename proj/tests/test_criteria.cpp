#include <catch_amalgamated.hpp>

#include <cmath>

#include "heatlab/criteria.hpp"

using namespace heatlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
Expression P(char const* s) { return Expression::parse(s); }
Expression logfam(double d, double beta) { return builtin_family("log_family", {{"d", d}, {"beta", beta}}); }
} // namespace

TEST_CASE("limsup estimate") {
    auto a = limsup_estimate(P("s^3"), 3, 1e12);
    for (double g : a.g) REQUIRE_THAT(g, WithinRel(1.0, 1e-12));
    REQUIRE_THAT(a.trend, WithinAbs(0.0, 1e-9));
    auto b = limsup_estimate(P("s^3"), 2, 1e12);
    REQUIRE_THAT(b.trend, WithinAbs(1.0, 1e-9));
    auto c = limsup_estimate(P("s^2/log(e+s)"), 2, 1e12);
    REQUIRE(c.trend < 0.0);
    REQUIRE(c.trend > -0.05);
    REQUIRE(c.window_last < c.window_first);
    for (std::size_t i = 1; i < c.running_max_tail.size(); ++i)
        REQUIRE(c.running_max_tail[i] <= c.running_max_tail[i - 1]);
    REQUIRE_THROWS_AS(limsup_estimate(P("s"), 1, 1e5), std::invalid_argument);
    auto o = limsup_estimate(P("exp(s)"), 2, 1e12);
    REQUIRE(o.overflow);
    REQUIRE(std::isinf(o.trend));
}

TEST_CASE("classify_lq examples") {
    REQUIRE(classify_lq(P("s^3"), 2, 2).outcome == Outcome::Exists);
    REQUIRE(classify_lq(P("s^4"), 2, 2).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_lq(P("s^3 + s"), 2, 2).outcome == Outcome::Exists);
    REQUIRE(classify_lq(P("exp(s)"), 2, 2).outcome == Outcome::NoLocalExistence);
    REQUIRE_THROWS_AS(classify_lq(P("s^2/log(e+s)^10"), 2, 2), AuditFailure);
    REQUIRE_THROWS_AS(classify_lq(P("s^3"), 1, 2), std::invalid_argument);
}

TEST_CASE("classify_lq is monotone in q and scale invariant") {
    char const* fs[] = {"s^3", "s^2/log(e+s)", "s^4 + s", "s^2.5", "s*log(e+s)"};
    for (auto text : fs) {
        auto f = P(text);
        for (int d = 1; d <= 3; ++d) {
            bool exists = false;
            for (double q : {1.25, 1.5, 2.0, 3.0, 4.0, 6.0}) {
                auto o = classify_lq(f, q, d).outcome;
                if (exists) REQUIRE(o == Outcome::Exists);
                if (o == Outcome::Exists) exists = true;
                for (char const* c : {"0.1", "10"}) {
                    auto g = P((std::string(c) + "*(" + text + ")").c_str());
                    INFO(text << " c=" << c << " q=" << q << " d=" << d);
                    REQUIRE(classify_lq(g, q, d).outcome == o);
                }
            }
        }
    }
}

TEST_CASE("dead-band honesty of the limsup rule") {
    double const db = 0.05;
    for (double slope = -1.0; slope <= 1.0; slope += 0.01) {
        for (bool growing : {false, true}) {
            auto o = decide_limsup(slope, growing, db);
            for (double delta : {-0.049, -0.03, -0.01, 0.01, 0.03, 0.049}) {
                auto p = decide_limsup(slope + delta, growing, db);
                if (o == Outcome::Exists) REQUIRE(p != Outcome::NoLocalExistence);
                if (o == Outcome::NoLocalExistence) REQUIRE(p != Outcome::Exists);
            }
        }
    }
}

TEST_CASE("block decision") {
    std::vector<double> geo, flat, harmonic, p15, p2;
    for (int j = 1; j <= 256; ++j) {
        geo.push_back(std::pow(0.5, j));
        flat.push_back(std::log(2.0));
        harmonic.push_back(1.0 / j);
        p15.push_back(std::pow(j, -1.5));
        p2.push_back(std::pow(j, -2.0));
    }
    REQUIRE(decide_blocks(geo, 0.05).decision == SeriesDecision::Converges);
    REQUIRE(decide_blocks(flat, 0.05).decision == SeriesDecision::Diverges);
    REQUIRE(decide_blocks(harmonic, 0.05).decision == SeriesDecision::Diverges);
    REQUIRE(decide_blocks(harmonic, 0.05).level == 1);
    REQUIRE(decide_blocks(p15, 0.05).decision == SeriesDecision::Converges);
    REQUIRE(decide_blocks(p2, 0.05).decision == SeriesDecision::Converges);
    REQUIRE(decide_blocks({1, 1, 1}, 0.05).decision == SeriesDecision::Undecided);
}

TEST_CASE("integral tail test") {
    for (int d = 1; d <= 3; ++d) {
        auto f = P(("s^" + format_number(1.0 + 2.0 / d)).c_str());
        auto env = sup_ratio_envelope(f, 0x1p256, EnvelopeOrigin::One);
        auto v = integral_tail_test(env, d, 0x1p256);
        REQUIRE(v.outcome == Outcome::NoLocalExistence);
        // Blocks approach log 2.
        REQUIRE_THAT(v.evidence.y.back(), WithinRel(std::log(2.0), 1e-3));
    }
    auto lin = sup_ratio_envelope(P("s"), 0x1p256, EnvelopeOrigin::One);
    REQUIRE(integral_tail_test(lin, 2, 0x1p256).outcome == Outcome::Exists);
    auto short_env = sup_ratio_envelope(P("s"), 100, EnvelopeOrigin::One);
    REQUIRE_THROWS_AS(integral_tail_test(short_env, 2, 1e8), std::invalid_argument);
}

TEST_CASE("classify_l1 on the log family") {
    REQUIRE(classify_l1(logfam(2, 1.5), 2).outcome == Outcome::Exists);
    REQUIRE(classify_l1(logfam(2, 1.0), 2).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_l1(logfam(1, 1.0), 1).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_l1(P("s^3"), 1).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_l1(P("s"), 2).outcome == Outcome::Exists);
}

TEST_CASE("series search") {
    auto w = series_search(P("s^2"), 2, 2.0, 256);
    REQUIRE(w.ratios_ok());
    REQUIRE(w.sequence.front() == 2.0);
    for (double a : w.terms) REQUIRE_THAT(a, WithinRel(1.0, 1e-12));
    REQUIRE_THAT(w.partial_sums.back(), WithinRel(256.0, 1e-12));
    REQUIRE(w.decision.decision == SeriesDecision::Diverges);

    // mpmath: sum_{k=1}^{256} 1/log(e + 2^k) and the squared version.
    auto b1 = series_search(logfam(2, 1), 2, 2.0, 256);
    REQUIRE_THAT(b1.partial_sums.back(), WithinRel(7.7519622800025498272, 1e-12));
    REQUIRE(b1.decision.decision == SeriesDecision::Diverges);
    auto b2 = series_search(logfam(2, 2), 2, 2.0, 256);
    REQUIRE_THAT(b2.partial_sums.back(), WithinRel(1.4323869443597652912, 1e-12));
    REQUIRE(b2.decision.decision == SeriesDecision::Converges);
    for (std::size_t k = 1; k < b2.partial_sums.size(); ++k) REQUIRE(b2.partial_sums[k] >= b2.partial_sums[k - 1]);

    auto wide = series_search(P("s^2"), 2, 2.0, 64, 3);
    REQUIRE(wide.ratios_ok());
    REQUIRE_THROWS_AS(series_search(P("s"), 2, 2.0, 8), std::invalid_argument);
    REQUIRE_THROWS_AS(series_search(P("s"), 2, 1.0, 32), std::invalid_argument);
}

TEST_CASE("equivalence check") {
    REQUIRE(equivalence_check(P("s^2"), 2).agreement == Agreement::Agree);
    REQUIRE(equivalence_check(P("s"), 2).agreement == Agreement::Agree);
    REQUIRE(equivalence_check(P("s^3"), 1).integral.outcome == Outcome::NoLocalExistence);
}

TEST_CASE("critical exponent") {
    auto a = critical_exponent_report(P("s^3"), 2);
    REQUIRE_THAT(a.gamma_star, WithinAbs(3.0, 1e-6));
    REQUIRE_THAT(a.q_star, WithinAbs(2.0, 1e-6));
    auto b = critical_exponent_report(P("s^3 + s^5"), 2);
    REQUIRE_THAT(b.gamma_star, WithinAbs(5.0, 1e-3));
    auto c = critical_exponent_report(logfam(2, 1), 2);
    REQUIRE_THAT(c.gamma_star, WithinAbs(2.0, 0.05));
    auto z = critical_exponent_report(P("1"), 2);
    REQUIRE(z.degenerate);
    REQUIRE(z.gamma_star == 0.0);
    auto sq = critical_exponent_report(P("s^0.5"), 2);
    REQUIRE_THAT(sq.gamma_star, WithinAbs(0.5, 1e-6));

    // Consistency with the classifier on either side of the bracket.
    for (auto text : {"s^3", "s^4 + s^2", "s^2.5*log(e+s)"}) {
        auto f = P(text);
        for (int d = 1; d <= 3; ++d) {
            auto r = critical_exponent_report(f, d);
            double q_below = d * (r.bracket_lo - 0.05 - 1.0) / 2.0;
            double q_above = d * (r.bracket_hi + 0.05 - 1.0) / 2.0;
            INFO(text << " d=" << d);
            if (q_below > 1.0) REQUIRE(classify_lq(f, q_below, d).outcome == Outcome::NoLocalExistence);
            if (q_above > 1.0) REQUIRE(classify_lq(f, q_above, d).outcome == Outcome::Exists);
        }
    }
}

TEST_CASE("whole space classification") {
    REQUIRE(classify_whole_space(P("s^0.5"), 2, 2).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_whole_space(P("s^0.5"), 2, 2).criterion == Criterion::WholeSpaceZero);
    REQUIRE(classify_whole_space(P("s^0.5"), 1, 2).outcome == Outcome::NoLocalExistence);
    auto sq = classify_whole_space(P("s^2"), 1, 2);
    REQUIRE(sq.outcome == Outcome::NoLocalExistence);
    REQUIRE(sq.criterion == Criterion::L1Integral);
    REQUIRE(classify_whole_space(P("s"), 2, 2).outcome == Outcome::Exists);
    REQUIRE(classify_whole_space(P("s + 1"), 2, 2).outcome == Outcome::NoLocalExistence);
    REQUIRE(classify_whole_space(P("s"), 1, 2).outcome == Outcome::Exists);
}
