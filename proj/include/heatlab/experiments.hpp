#pragma once

// Multi-run experiments built from the library pieces: the randomized
// integral/series equivalence suite, the truncation-level blow-up trend and
// the per-term lower-bound chain for T1 data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "heatlab/criteria.hpp"
#include "heatlab/databuilder.hpp"
#include "heatlab/duhamel.hpp"
#include "heatlab/lower_bound.hpp"
#include "heatlab/parallel.hpp"

namespace heatlab {

// ---------------------------------------------------------------------------
// Equivalence suite

struct EquivalenceCase {
    int d = 1;
    double c = 1.0, a = 1.0, b = 0.0;
    std::string expression;
    EquivalenceReport report;
};

struct EquivalenceSuite {
    std::uint64_t seed = 0;
    std::vector<EquivalenceCase> cases;
    std::size_t decided = 0;
    std::size_t agree = 0;
    std::size_t disagree = 0;
    std::size_t rejected_by_audit = 0;
};

/// f = c s^a log(e+s)^b with d, c, a - p*, b drawn from small discrete sets;
/// draws that fail the monotonicity audit are replaced.
inline EquivalenceSuite equivalence_suite(std::uint64_t seed, std::size_t count, CriteriaOptions const& opt = {}) {
    static constexpr int dims[] = {1, 2, 3};
    static constexpr double cs[] = {0.5, 1.0, 2.0};
    static constexpr double offsets[] = {-0.5, -0.25, 0.0, 0.0, 0.25, 0.5};
    static constexpr double bs[] = {-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0};
    std::mt19937_64 rng(seed);
    auto pick = [&](auto const& arr) {
        std::size_t n = std::size(arr);
        return arr[static_cast<std::size_t>(rng() % n)];
    };
    EquivalenceSuite suite;
    suite.seed = seed;
    while (suite.cases.size() < count) {
        EquivalenceCase c;
        c.d = pick(dims);
        c.c = pick(cs);
        c.a = critical_l1_power(c.d) + pick(offsets);
        c.b = pick(bs);
        c.expression = format_number(c.c) + "*s^" + format_number(c.a) + "*log(e+s)^" + format_number(c.b);
        auto audit = monotonicity_audit(Expression::parse(c.expression), opt.audit_s_max, opt.audit_samples);
        if (!audit.passed()) {
            ++suite.rejected_by_audit;
            continue;
        }
        suite.cases.push_back(std::move(c));
    }
    parallel_for(suite.cases.size(), [&](std::size_t i) {
        auto& c = suite.cases[i];
        c.report = equivalence_check(Expression::parse(c.expression), c.d, opt);
    });
    for (auto const& c : suite.cases) {
        if (c.report.agreement == Agreement::Indeterminate) continue;
        ++suite.decided;
        (c.report.agrees() ? suite.agree : suite.disagree)++;
    }
    return suite;
}

// ---------------------------------------------------------------------------
// Blow-up trend over truncation levels

struct TrendRun {
    int N = 0;
    double u0_l1 = 0.0;
    double peak_l1 = 0.0;
    Trajectory trajectory;
};

struct BlowupTrend {
    BlowupData data; // built at the largest N; smaller N use its leading terms on the same grid
    std::vector<TrendRun> runs;

    bool strictly_increasing() const {
        for (std::size_t i = 1; i < runs.size(); ++i)
            if (!(runs[i].peak_l1 > runs[i - 1].peak_l1)) return false;
        return true;
    }
};

struct TrendOptions {
    double R = 1.0;
    double epsilon = 0.0;
    double T = 0.05;
    T1Options data{};
    SimulationControls controls{};
};

inline BlowupTrend blowup_trend(Expression const& f, int d, double q, int N_lo, int N_hi, TrendOptions const& opt = {}) {
    if (N_lo < 1 || N_hi < N_lo) throw std::invalid_argument("blowup_trend: need 1 <= N_lo <= N_hi");
    BlowupTrend trend;
    trend.data = build_t1_data(f, d, q, N_hi, opt.epsilon, opt.R, opt.data);
    HeatPropagator P(trend.data.grid);
    trend.runs.resize(static_cast<std::size_t>(N_hi - N_lo + 1));
    parallel_for(trend.runs.size(), [&](std::size_t i) {
        auto& run = trend.runs[i];
        run.N = N_lo + static_cast<int>(i);
        RadialField u0(trend.data.grid);
        for (int k = 0; k < run.N; ++k) {
            auto const& t = trend.data.spec.terms[static_cast<std::size_t>(k)];
            RadialField::add_indicator(u0, t.radius, t.amplitude);
        }
        run.u0_l1 = lq_norm(u0, 1.0);
        run.trajectory = simulate_forward(P, u0, f, opt.T, opt.controls);
        run.peak_l1 = run.trajectory.peak_l1();
    });
    return trend;
}

// ---------------------------------------------------------------------------
// T1 lower-bound chain

struct ChainTerm {
    int k = 0;
    double t_k = 0.0;
    Prediction prediction;
    LowerBoundProfile profile;
    /// lq_pow_lower / prediction.value
    double ratio = 0.0;
    /// Pointwise check on B_{r_k}: the bound is radially non-increasing, so its value at r_k is the minimum.
    std::vector<double> window_times;
    std::vector<double> window_values;
    /// beta_d t f(phi_k) at each window time (what the chain proves).
    std::vector<double> window_chain;
    double min_pointwise_ratio = 0.0;
};

struct ChainOptions {
    LowerBoundOptions lower{};
    std::size_t profile_points = 64;
    std::size_t window_points = 3;
};

inline std::vector<ChainTerm> t1_lower_bound_chain(BlowupDataSpec const& spec, std::vector<int> const& ks,
                                                   ChainOptions const& opt = {}) {
    if (spec.kind != DataKind::T1) throw std::invalid_argument("t1_lower_bound_chain: T1 data required");
    auto preds = predicted_bounds(spec);
    Expression f = Expression::parse(spec.f);
    std::vector<ChainTerm> out(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) {
        int k = ks[i];
        if (k < 1 || k > static_cast<int>(spec.terms.size()))
            throw std::invalid_argument("t1_lower_bound_chain: term index out of range");
        auto const& term = spec.terms[static_cast<std::size_t>(k - 1)];
        auto& ct = out[i];
        ct.k = k;
        ct.prediction = preds[static_cast<std::size_t>(k - 1)];
        ct.t_k = ct.prediction.t_hi;
        DuhamelLowerBound lb({term.radius, {}, term.amplitude}, f, spec.d, opt.lower);
        ct.profile = lb.profile(ct.t_k, spec.q, term.radius + 6.0 * std::sqrt(ct.t_k), opt.profile_points);
        ct.ratio = ct.profile.lq_pow_lower / ct.prediction.value;
        ct.min_pointwise_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < opt.window_points; ++j) {
            double w = opt.window_points == 1 ? 1.0 : static_cast<double>(j) / (opt.window_points - 1);
            double t = ct.prediction.t_lo + w * (ct.prediction.t_hi - ct.prediction.t_lo);
            double v = lb.value(term.radius, t);
            double chain = spec.constants.beta_d * t * term.f_phi;
            ct.window_times.push_back(t);
            ct.window_values.push_back(v);
            ct.window_chain.push_back(chain);
            ct.min_pointwise_ratio = std::min(ct.min_pointwise_ratio, v / chain);
        }
    });
    return out;
}

} // namespace heatlab
