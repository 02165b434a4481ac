#pragma once

// Existence / non-existence classification of nonlinearities f by numerical
// trend tests with explicit dead-bands. Inconclusive is a legitimate answer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/expression.hpp"
#include "heatlab/geometry.hpp"
#include "heatlab/nonlinearity.hpp"

namespace heatlab {

enum class Outcome { Exists, NoLocalExistence, Inconclusive };
enum class Criterion { LqLimsup, L1Integral, L1Series, WholeSpaceZero };

inline char const* to_string(Outcome o) {
    switch (o) {
    case Outcome::Exists: return "Exists";
    case Outcome::NoLocalExistence: return "NoLocalExistence";
    case Outcome::Inconclusive: return "Inconclusive";
    }
    return "?";
}

inline char const* to_string(Criterion c) {
    switch (c) {
    case Criterion::LqLimsup: return "LqLimsup";
    case Criterion::L1Integral: return "L1Integral";
    case Criterion::L1Series: return "L1Series";
    case Criterion::WholeSpaceZero: return "WholeSpaceZero";
    }
    return "?";
}

struct Evidence {
    std::map<std::string, double> stats;
    std::vector<std::string> notes;
    /// Plot-ready series: x values and the decision statistic at x.
    std::string series_label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Verdict {
    Outcome outcome = Outcome::Inconclusive;
    Criterion criterion = Criterion::LqLimsup;
    double dead_band = 0.05;
    Evidence evidence;
};

struct CriteriaOptions {
    /// Dead-band on log-log slopes.
    double slope_dead_band = 0.05;
    /// Dead-band on geometric block ratios.
    double block_dead_band = 0.05;
    double limsup_s_max = 1e12;
    std::size_t points_per_decade = 20;
    /// Upper end of the L^1 envelope: 2^256 gives 256 dyadic blocks.
    double l1_s_max = 0x1p256;
    double audit_s_max = 1e12;
    std::size_t audit_samples = 600;
    double theta = 2.0;
    std::size_t series_terms = 256;
    std::size_t window_stride = 1;
    double gamma_hi = 12.0;
    double zero_lo = 1e-8;
    double zero_hi = 1e-2;
};

namespace criteria_detail {

/// Least-squares slope of y against x.
inline double fit_slope(std::vector<double> const& x, std::vector<double> const& y) {
    double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline double safe_log(double v) { return std::log(std::max(v, std::numeric_limits<double>::min())); }

inline void audit_or_throw(Expression const& f, CriteriaOptions const& opt, char const* who) {
    require_audit(monotonicity_audit(f, opt.audit_s_max, opt.audit_samples), who);
}

} // namespace criteria_detail

// ---------------------------------------------------------------------------
// Limsup of s^{-gamma} f(s)

struct LimsupEstimate {
    double exponent = 0.0;
    std::vector<double> s;
    std::vector<double> g;
    /// running_max_tail[i] = max_{j >= i} g[j].
    std::vector<double> running_max_tail;
    /// Log-log slope of g over the last two decades (+inf on overflow).
    double trend = 0.0;
    /// g at the start and end of the fit window.
    double window_first = 0.0;
    double window_last = 0.0;
    bool overflow = false;

    bool tail_growing() const { return overflow || window_last > window_first * (1.0 + 1e-9); }
};

inline LimsupEstimate limsup_estimate(Expression const& f, double gamma, double s_max = 1e12,
                                      std::size_t points_per_decade = 20) {
    if (!(gamma > 0.0)) throw std::invalid_argument("limsup_estimate: gamma must be positive");
    if (!(s_max >= 1e6)) throw std::invalid_argument("limsup_estimate: s_max must be at least 1e6");
    LimsupEstimate est;
    est.exponent = gamma;
    std::size_t n = static_cast<std::size_t>(std::ceil(std::log10(s_max) * static_cast<double>(points_per_decade))) + 1;
    est.s = geometric_grid(1.0, s_max, n);
    est.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = eval_f(f, est.s[i]);
        if (std::isinf(v)) {
            est.g[i] = v;
            est.overflow = true;
        } else {
            est.g[i] = v == 0.0 ? 0.0 : std::exp(std::log(v) - gamma * std::log(est.s[i]));
        }
    }
    est.running_max_tail.resize(n);
    double m = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        m = std::max(m, est.g[i]);
        est.running_max_tail[i] = m;
    }
    std::size_t start = 0;
    while (start < n && est.s[start] < s_max / 100.0 * (1 - 1e-12)) ++start;
    std::vector<double> lx, ly;
    bool all_zero = true;
    for (std::size_t i = start; i < n; ++i) {
        lx.push_back(std::log(est.s[i]));
        ly.push_back(criteria_detail::safe_log(est.g[i]));
        if (est.g[i] != 0.0) all_zero = false;
    }
    est.window_first = est.g[start];
    est.window_last = est.g.back();
    bool window_overflow = std::any_of(est.g.begin() + static_cast<std::ptrdiff_t>(start), est.g.end(),
                                       [](double v) { return std::isinf(v); });
    if (window_overflow)
        est.trend = std::numeric_limits<double>::infinity();
    else if (all_zero)
        est.trend = -std::numeric_limits<double>::infinity();
    else
        est.trend = criteria_detail::fit_slope(lx, ly);
    return est;
}

/// Decision rule for the limsup statistic. Exists needs slope < dead_band and
/// NoLocalExistence needs slope >= dead_band, so a perturbation smaller than the
/// dead-band cannot flip one into the other.
inline Outcome decide_limsup(double slope, bool tail_growing, double dead_band) {
    if (slope <= -dead_band) return Outcome::Exists;
    if (slope >= dead_band) return tail_growing ? Outcome::NoLocalExistence : Outcome::Inconclusive;
    return tail_growing ? Outcome::Inconclusive : Outcome::Exists;
}

inline Verdict classify_lq(Expression const& f, double q, int d, CriteriaOptions const& opt = {}) {
    require_dimension(d);
    if (!(q > 1.0)) throw std::invalid_argument("classify_lq: q must exceed 1 (use classify_l1 for q = 1)");
    criteria_detail::audit_or_throw(f, opt, "classify_lq");
    double gamma = 1.0 + 2.0 * q / d;
    auto est = limsup_estimate(f, gamma, opt.limsup_s_max, opt.points_per_decade);
    Verdict v;
    v.criterion = Criterion::LqLimsup;
    v.dead_band = opt.slope_dead_band;
    v.outcome = decide_limsup(est.trend, est.tail_growing(), opt.slope_dead_band);
    v.evidence.stats = {{"exponent", gamma},
                        {"trend", est.trend},
                        {"window_first", est.window_first},
                        {"window_last", est.window_last},
                        {"tail_max", est.running_max_tail.front()},
                        {"q", q},
                        {"d", static_cast<double>(d)}};
    if (est.overflow) v.evidence.notes.push_back("f overflowed on the grid (divergence evidence)");
    v.evidence.series_label = "s^-exponent f(s)";
    v.evidence.x = est.s;
    v.evidence.y = est.g;
    return v;
}

// ---------------------------------------------------------------------------
// Hierarchical block decision for non-negative sequences

enum class SeriesDecision { Converges, Diverges, Undecided };

struct BlockDecision {
    SeriesDecision decision = SeriesDecision::Undecided;
    /// Condensation level at which the decision was taken.
    int level = 0;
    double rho = 0.0;
    double kappa = 0.0;
    std::size_t blocks_at_level = 0;
};

/// Decides convergence of sum a_n from its first terms; a[i] is the term at
/// position n = first_position + i. At each level the tail (last half, at least
/// four terms) is fitted:
///   geometric ratio rho <= 1 - dead_band              -> converges
///   otherwise power-law exponent kappa >= -dead_band  -> diverges
///   otherwise condense dyadically (b_m = sum_{2^m <= n < 2^{m+1}} a_n) and retry.
/// Fewer than four blocks at a level leaves the question undecided.
inline BlockDecision decide_blocks(std::vector<double> const& a, double dead_band, std::size_t first_position = 1) {
    BlockDecision out;
    std::vector<double> cur = a;
    std::size_t first = first_position;
    for (int level = 0;; ++level) {
        out.level = level;
        out.blocks_at_level = cur.size();
        if (cur.size() < 4) {
            out.decision = SeriesDecision::Undecided;
            return out;
        }
        if (std::any_of(cur.begin(), cur.end(), [](double v) { return std::isinf(v); })) {
            out.decision = SeriesDecision::Diverges;
            out.rho = out.kappa = std::numeric_limits<double>::infinity();
            return out;
        }
        std::size_t w = std::max<std::size_t>(4, cur.size() / 2);
        std::size_t start = cur.size() - w;
        bool tail_zero = std::all_of(cur.begin() + static_cast<std::ptrdiff_t>(start), cur.end(),
                                     [](double v) { return v == 0.0; });
        if (tail_zero) {
            out.decision = SeriesDecision::Converges;
            out.rho = out.kappa = 0.0;
            return out;
        }
        std::vector<double> n, ln, la;
        for (std::size_t i = start; i < cur.size(); ++i) {
            double pos = static_cast<double>(first + i);
            n.push_back(pos);
            ln.push_back(std::log(std::max(pos, 1.0)));
            la.push_back(criteria_detail::safe_log(cur[i]));
        }
        out.rho = std::exp(criteria_detail::fit_slope(n, la));
        if (out.rho <= 1.0 - dead_band) {
            out.decision = SeriesDecision::Converges;
            return out;
        }
        out.kappa = criteria_detail::fit_slope(ln, la);
        if (out.kappa >= -dead_band) {
            out.decision = SeriesDecision::Diverges;
            return out;
        }
        std::size_t const last = first + cur.size(); // one past the last position
        std::vector<double> next;
        for (std::size_t lo = 1; 2 * lo <= last; lo *= 2) {
            double sum = 0.0;
            for (std::size_t pos = std::max(lo, first); pos < 2 * lo; ++pos) sum += cur[pos - first];
            next.push_back(sum);
        }
        cur = std::move(next);
        first = 0;
    }
}

inline Outcome outcome_of(SeriesDecision s) {
    switch (s) {
    case SeriesDecision::Converges: return Outcome::Exists;
    case SeriesDecision::Diverges: return Outcome::NoLocalExistence;
    default: return Outcome::Inconclusive;
    }
}

inline void record_blocks(Evidence& ev, BlockDecision const& b) {
    ev.stats["level"] = b.level;
    ev.stats["rho"] = b.rho;
    ev.stats["kappa"] = b.kappa;
    ev.stats["blocks_at_level"] = static_cast<double>(b.blocks_at_level);
}

// ---------------------------------------------------------------------------
// L^1: integral of s^{-(1+2/d)} F(s) over dyadic blocks

/// Block integrals I_j = int_{2^j}^{2^{j+1}} s^{-(1+2/d)} F(s) ds, trapezoid in log s
/// on the envelope grid.
inline std::vector<double> dyadic_block_integrals(RatioEnvelope const& F, int d, double s_max) {
    double top = std::min(s_max, F.s_max());
    auto J = static_cast<std::size_t>(std::floor(std::log2(top) + 1e-12));
    if (J < 8) throw std::invalid_argument("integral_tail_test: envelope covers fewer than 8 dyadic blocks");
    double const expo = 2.0 / d;
    auto integrand = [&](double s, double Fs) {
        // s^{-(1+2/d)} F(s) * ds/dlog s
        if (Fs == 0.0) return 0.0;
        if (std::isinf(Fs)) return Fs;
        return std::exp(std::log(Fs) - expo * std::log(s));
    };
    std::vector<double> blocks(J, 0.0);
    auto const& g = F.grid;
    auto const& v = F.values;
    for (std::size_t j = 0; j < J; ++j) {
        double a = std::ldexp(1.0, static_cast<int>(j)), b = 2.0 * a;
        std::vector<std::pair<double, double>> pts{{a, F.at(a)}};
        auto it = std::upper_bound(g.begin(), g.end(), a);
        for (; it != g.end() && *it < b; ++it)
            pts.emplace_back(*it, v[static_cast<std::size_t>(it - g.begin())]);
        pts.emplace_back(b, F.at(b));
        double sum = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            double h = std::log(pts[i].first / pts[i - 1].first);
            sum += 0.5 * h * (integrand(pts[i - 1].first, pts[i - 1].second) + integrand(pts[i].first, pts[i].second));
        }
        blocks[j] = sum;
    }
    return blocks;
}

inline Verdict integral_tail_test(RatioEnvelope const& F, int d, double s_max, double dead_band = 0.05) {
    require_dimension(d);
    if (!(s_max >= 1e8)) throw std::invalid_argument("integral_tail_test: s_max must be at least 1e8");
    auto blocks = dyadic_block_integrals(F, d, s_max);
    // Block j covers [2^j, 2^{j+1}], so it sits at position j.
    auto dec = decide_blocks(blocks, dead_band, 0);
    Verdict v;
    v.criterion = Criterion::L1Integral;
    v.dead_band = dead_band;
    v.outcome = outcome_of(dec.decision);
    record_blocks(v.evidence, dec);
    v.evidence.stats["d"] = d;
    v.evidence.stats["blocks"] = static_cast<double>(blocks.size());
    if (std::any_of(blocks.begin(), blocks.end(), [](double b) { return std::isinf(b); }))
        v.evidence.notes.push_back("f overflowed on the envelope grid (divergence evidence)");
    v.evidence.series_label = "I_j";
    for (std::size_t j = 0; j < blocks.size(); ++j) v.evidence.x.push_back(static_cast<double>(j));
    v.evidence.y = std::move(blocks);
    return v;
}

inline Verdict classify_l1(Expression const& f, int d, CriteriaOptions const& opt = {},
                           EnvelopeOrigin origin = EnvelopeOrigin::One) {
    require_dimension(d);
    criteria_detail::audit_or_throw(f, opt, "classify_l1");
    auto env = sup_ratio_envelope(f, opt.l1_s_max, origin);
    return integral_tail_test(env, d, opt.l1_s_max, opt.block_dead_band);
}

// ---------------------------------------------------------------------------
// L^1: series sum s_k^{-p} f(s_k) with s_{k+1} >= theta s_k

struct SeriesWitness {
    double theta = 2.0;
    double p = 0.0;
    std::vector<double> sequence;
    std::vector<double> terms;
    std::vector<double> partial_sums;
    BlockDecision decision;

    /// Exact check of the ratio condition.
    bool ratios_ok() const {
        for (std::size_t k = 1; k < sequence.size(); ++k)
            if (sequence[k] < theta * sequence[k - 1]) return false;
        return true;
    }
};

inline SeriesWitness series_search(Expression const& f, int d, double theta = 2.0, std::size_t K = 256,
                                   std::size_t stride = 1, double dead_band = 0.05) {
    require_dimension(d);
    if (!(theta > 1.0)) throw std::invalid_argument("series_search: theta must exceed 1");
    if (K < 16) throw std::invalid_argument("series_search: need K >= 16");
    if (stride < 1) throw std::invalid_argument("series_search: window stride must be >= 1");
    SeriesWitness w;
    w.theta = theta;
    w.p = 1.0 + 2.0 / d;
    double const lt = std::log(theta);
    auto term_at = [&](double s) {
        double v = eval_f(f, s);
        if (std::isinf(v) || v == 0.0) return v;
        return std::exp(std::log(v) - w.p * std::log(s));
    };
    double sum = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        double best_s = 0.0, best = -1.0;
        for (std::size_t i = 0; i < stride; ++i) {
            double s = std::exp(lt * static_cast<double>(stride * k + i));
            if (stride == 1) s = std::pow(theta, static_cast<double>(k));
            if (!w.sequence.empty() && s < theta * w.sequence.back()) continue;
            double a = term_at(s);
            if (a > best) best = a, best_s = s;
        }
        w.sequence.push_back(best_s);
        w.terms.push_back(best);
        sum += best;
        w.partial_sums.push_back(sum);
    }
    w.decision = decide_blocks(w.terms, dead_band);
    return w;
}

inline Verdict classify_l1_series(Expression const& f, int d, CriteriaOptions const& opt = {}) {
    criteria_detail::audit_or_throw(f, opt, "classify_l1_series");
    auto w = series_search(f, d, opt.theta, opt.series_terms, opt.window_stride, opt.block_dead_band);
    Verdict v;
    v.criterion = Criterion::L1Series;
    v.dead_band = opt.block_dead_band;
    v.outcome = outcome_of(w.decision.decision);
    record_blocks(v.evidence, w.decision);
    v.evidence.stats["theta"] = w.theta;
    v.evidence.stats["p"] = w.p;
    v.evidence.stats["partial_sum"] = w.partial_sums.back();
    v.evidence.series_label = "partial_sums";
    v.evidence.x = w.sequence;
    v.evidence.y = w.partial_sums;
    return v;
}

// ---------------------------------------------------------------------------
// Series <-> integral agreement

enum class Agreement { Agree, Disagree, Indeterminate };

inline char const* to_string(Agreement a) {
    switch (a) {
    case Agreement::Agree: return "agree";
    case Agreement::Disagree: return "disagree";
    case Agreement::Indeterminate: return "indeterminate";
    }
    return "?";
}

struct EquivalenceReport {
    Agreement agreement = Agreement::Indeterminate;
    Verdict integral;
    Verdict series;

    bool agrees() const { return agreement == Agreement::Agree; }
};

inline EquivalenceReport equivalence_check(Expression const& f, int d, CriteriaOptions const& opt = {}) {
    EquivalenceReport r;
    r.integral = classify_l1(f, d, opt);
    r.series = classify_l1_series(f, d, opt);
    if (r.integral.outcome == Outcome::Inconclusive || r.series.outcome == Outcome::Inconclusive)
        r.agreement = Agreement::Indeterminate;
    else
        r.agreement = r.integral.outcome == r.series.outcome ? Agreement::Agree : Agreement::Disagree;
    return r;
}

// ---------------------------------------------------------------------------
// Critical exponent gamma* = sup{gamma : limsup s^{-gamma} f(s) = inf}

struct CriticalExponentReport {
    double gamma_star = 0.0;
    double q_star = 0.0;
    /// gamma in [lo, hi] is inside the dead-band of the limsup trend.
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    bool degenerate = false;
    bool above_range = false;
    int d = 1;
};

inline CriticalExponentReport critical_exponent_report(Expression const& f, int d, CriteriaOptions const& opt = {}) {
    require_dimension(d);
    criteria_detail::audit_or_throw(f, opt, "critical_exponent_report");
    CriticalExponentReport rep;
    rep.d = d;
    // The trend at gamma = 0 is the growth rate of f itself; subtracting gamma shifts it exactly,
    // but the search follows the sign of freshly estimated trends.
    auto trend = [&](double gamma) {
        return limsup_estimate(f, std::max(gamma, 1e-12), opt.limsup_s_max, opt.points_per_decade).trend;
    };
    double lo = 1.0, hi = opt.gamma_hi;
    if (!(trend(lo) > 0.0)) {
        lo = 0.0;
        hi = 1.0;
        if (!(trend(lo) > 0.0)) {
            rep.degenerate = true;
            rep.gamma_star = 0.0;
            rep.bracket_lo = 0.0;
            rep.bracket_hi = opt.slope_dead_band;
            rep.q_star = d * (rep.gamma_star - 1.0) / 2.0;
            return rep;
        }
    } else if (trend(hi) > 0.0) {
        rep.above_range = true;
        rep.gamma_star = hi;
        rep.bracket_lo = hi - opt.slope_dead_band;
        rep.bracket_hi = std::numeric_limits<double>::infinity();
        rep.q_star = d * (hi - 1.0) / 2.0;
        return rep;
    }
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        double mid = 0.5 * (lo + hi);
        if (trend(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    rep.gamma_star = 0.5 * (lo + hi);
    rep.bracket_lo = rep.gamma_star - opt.slope_dead_band;
    rep.bracket_hi = rep.gamma_star + opt.slope_dead_band;
    rep.q_star = d * (rep.gamma_star - 1.0) / 2.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Whole space: behaviour of f(s)/s at 0 plus the criterion at infinity

inline Verdict classify_whole_space(Expression const& f, double q, int d, CriteriaOptions const& opt = {}) {
    require_dimension(d);
    if (!(q >= 1.0)) throw std::invalid_argument("classify_whole_space: q must be >= 1");
    criteria_detail::audit_or_throw(f, opt, "classify_whole_space");

    double f0 = eval_f(f, 0.0);
    auto s = geometric_grid(opt.zero_lo, opt.zero_hi, 61);
    std::vector<double> ls, lr, r;
    for (double x : s) {
        double v = eval_f(f, x) / x;
        r.push_back(v);
        ls.push_back(std::log(x));
        lr.push_back(criteria_detail::safe_log(v));
    }
    bool all_zero = std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; });
    double slope = all_zero ? std::numeric_limits<double>::infinity() : criteria_detail::fit_slope(ls, lr);
    bool grows_towards_zero = r.front() > r.back() * (1.0 + 1e-9);

    Verdict zero;
    zero.criterion = Criterion::WholeSpaceZero;
    zero.dead_band = opt.slope_dead_band;
    zero.evidence.stats = {{"f0", f0}, {"zero_slope", slope}, {"q", q}, {"d", static_cast<double>(d)}};
    zero.evidence.series_label = "f(s)/s near 0";
    zero.evidence.x = s;
    zero.evidence.y = r;
    if (f0 > 0.0 || slope <= -opt.slope_dead_band) {
        zero.outcome = Outcome::NoLocalExistence;
        zero.evidence.notes.push_back("f(s)/s is unbounded as s -> 0");
        return zero;
    }
    if (slope < opt.slope_dead_band && grows_towards_zero) {
        zero.outcome = Outcome::Inconclusive;
        zero.evidence.notes.push_back("f(s)/s near 0 is inside the dead-band and still growing");
        return zero;
    }

    Verdict at_infinity = q > 1.0 ? classify_lq(f, q, d, opt) : [&] {
        auto env = sup_ratio_envelope(f, opt.l1_s_max, EnvelopeOrigin::ZeroPlus);
        auto v = integral_tail_test(env, d, opt.l1_s_max, opt.block_dead_band);
        v.evidence.stats["limit_at_origin"] = env.limit_at_origin;
        return v;
    }();
    at_infinity.evidence.stats["zero_slope"] = slope;
    at_infinity.evidence.stats["f0"] = f0;
    at_infinity.evidence.notes.push_back("f(s)/s bounded as s -> 0");
    return at_infinity;
}

} // namespace heatlab
