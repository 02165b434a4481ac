#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/expression.hpp"

namespace heatlab {

/// Geometric grid of n points from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("geometric_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    double const step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
    g.back() = hi;
    return g;
}

/// Geometric grid with a fixed ratio from lo up to and including hi.
inline std::vector<double> ratio_grid(double lo, double hi, double ratio) {
    if (!(ratio > 1.0)) throw std::invalid_argument("ratio_grid: ratio must exceed 1");
    auto n = static_cast<std::size_t>(std::ceil(std::log(hi / lo) / std::log(ratio))) + 1;
    return geometric_grid(lo, hi, std::max<std::size_t>(n, 2));
}

// ---------------------------------------------------------------------------
// Monotonicity audit

struct MonotonicityAudit {
    std::vector<double> sample_grid;
    std::vector<double> sample_values;
    bool is_nondecreasing = true;
    bool nonneg = true;
    std::optional<std::pair<double, double>> first_violation;
    std::optional<double> first_negative;
    /// Adjacent samples whose values jump by more than `jump_threshold`x; diagnostics only.
    std::vector<std::pair<double, double>> suspected_jumps;
    double tolerance = 1e-10;

    bool passed() const noexcept { return is_nondecreasing && nonneg; }
};

struct AuditOptions {
    double tolerance = 1e-10;
    double s_min = 1e-8;
    double jump_threshold = 1e3;
    std::size_t refine_points = 8;
    /// Change of the log-log slope between neighbouring intervals that triggers refinement.
    double kink_threshold = 0.25;
};

/// Sampling-based check that f >= 0 and f is non-decreasing on [0, s_max].
inline MonotonicityAudit monotonicity_audit(Expression const& f, double s_max, std::size_t n_samples,
                                            AuditOptions const& opt = {}) {
    if (!(s_max > 0.0)) throw std::invalid_argument("monotonicity_audit: s_max must be positive");
    if (n_samples < 2) throw std::invalid_argument("monotonicity_audit: need at least two samples");

    std::vector<double> grid{0.0};
    if (s_max > opt.s_min) {
        auto g = geometric_grid(opt.s_min, s_max, n_samples);
        grid.insert(grid.end(), g.begin(), g.end());
    } else {
        for (std::size_t i = 1; i < n_samples; ++i) grid.push_back(s_max * static_cast<double>(i) / (n_samples - 1));
    }

    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vals[i] = f.evaluate_raw(grid[i]);
        if (std::isnan(vals[i])) throw DomainError("nonlinearity evaluates to NaN", grid[i]);
    }

    // Refine around sharp slope drops and kinks in log-log scale, where a dip
    // narrower than the grid spacing could hide.
    auto loglog_slope = [&](std::size_t i, std::size_t j) {
        if (!(grid[i] > 0.0) || !(vals[i] > 0.0) || !(vals[j] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return std::log(vals[j] / vals[i]) / std::log(grid[j] / grid[i]);
    };
    std::vector<double> extra;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        double left = (vals[i] - vals[i - 1]) / (grid[i] - grid[i - 1]);
        double right = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
        if (!std::isfinite(left) || !std::isfinite(right)) continue;
        double kink = std::abs(loglog_slope(i, i + 1) - loglog_slope(i - 1, i));
        if ((left > 0.0 && right < 0.1 * left) || kink > opt.kink_threshold) {
            for (std::size_t j = 1; j <= opt.refine_points; ++j) {
                double w = static_cast<double>(j) / (opt.refine_points + 1);
                extra.push_back(grid[i - 1] + w * (grid[i] - grid[i - 1]));
                extra.push_back(grid[i] + w * (grid[i + 1] - grid[i]));
            }
        }
    }
    if (!extra.empty()) {
        grid.insert(grid.end(), extra.begin(), extra.end());
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        vals.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            vals[i] = f.evaluate_raw(grid[i]);
            if (std::isnan(vals[i])) throw DomainError("nonlinearity evaluates to NaN", grid[i]);
        }
    }

    MonotonicityAudit audit;
    audit.tolerance = opt.tolerance;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (vals[i] < 0.0 && audit.nonneg) {
            audit.nonneg = false;
            audit.first_negative = grid[i];
        }
        if (i == 0) continue;
        double a = vals[i - 1], b = vals[i];
        if (std::isinf(a) && std::isinf(b) && a > 0 && b > 0) continue;
        double tol = opt.tolerance * std::max(1.0, std::abs(a));
        if (a > b + tol && audit.is_nondecreasing) {
            audit.is_nondecreasing = false;
            audit.first_violation = std::make_pair(grid[i - 1], grid[i]);
        }
        if (a > 1e-300 && std::isfinite(b) && b / a > opt.jump_threshold)
            audit.suspected_jumps.emplace_back(grid[i - 1], grid[i]);
    }
    audit.sample_grid = std::move(grid);
    audit.sample_values = std::move(vals);
    return audit;
}

class AuditFailure : public std::runtime_error {
public:
    explicit AuditFailure(std::string const& what) : std::runtime_error(what) {}
};

inline void require_audit(MonotonicityAudit const& a, std::string const& who) {
    if (!a.nonneg)
        throw AuditFailure(who + ": nonlinearity is negative at s = " + format_number(*a.first_negative));
    if (!a.is_nondecreasing)
        throw AuditFailure(who + ": nonlinearity decreases between s = " + format_number(a.first_violation->first) +
                           " and s = " + format_number(a.first_violation->second));
}

// ---------------------------------------------------------------------------
// Ratio envelope F(s) = sup_{origin <= t <= s} f(t)/t

enum class EnvelopeOrigin { One, ZeroPlus };

struct RatioEnvelope {
    std::vector<double> grid;
    std::vector<double> values;
    EnvelopeOrigin origin = EnvelopeOrigin::One;
    /// ZeroPlus only: estimated limit of f(t)/t as t -> 0 (may be +inf).
    double limit_at_origin = 0.0;
    /// Raw ratios f(t)/t at the grid points, before the running maximum.
    std::vector<double> ratios;

    double s_max() const { return grid.back(); }

    /// F at an arbitrary s inside the grid, interpolated linearly in log-log scale.
    double at(double s) const {
        if (s <= grid.front()) return values.front();
        if (s >= grid.back()) return values.back();
        auto it = std::upper_bound(grid.begin(), grid.end(), s);
        std::size_t j = static_cast<std::size_t>(it - grid.begin());
        double a = grid[j - 1], b = grid[j];
        double w = std::log(s / a) / std::log(b / a);
        double va = values[j - 1], vb = values[j];
        if (std::isinf(vb)) return w > 0.0 ? vb : va;
        // Geometric interpolation is exact for power laws.
        if (va > 0.0) return va * std::pow(vb / va, w);
        return va + w * (vb - va);
    }
};

struct EnvelopeOptions {
    double ratio = 1.05;
    double eps0 = 1e-8;
    double limit_slope_band = 0.05;
    int golden_iterations = 60;
};

namespace detail {

// Golden-section search for a maximum of g on [a, b].
template <class G>
std::pair<double, double> golden_max(G const& g, double a, double b, int iterations) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double g1 = g(x1), g2 = g(x2);
    for (int it = 0; it < iterations && (b - a) > 1e-15 * b; ++it) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = g(x1);
        }
    }
    return g1 >= g2 ? std::make_pair(x1, g1) : std::make_pair(x2, g2);
}

} // namespace detail

inline RatioEnvelope sup_ratio_envelope(Expression const& f, double s_max, EnvelopeOrigin origin,
                                        EnvelopeOptions const& opt = {}) {
    double lo = origin == EnvelopeOrigin::One ? 1.0 : opt.eps0;
    if (!(s_max > std::max(lo, 1.0))) throw std::invalid_argument("sup_ratio_envelope: s_max must exceed 1");

    auto ratio_of = [&](double t) { return eval_f(f, t) / t; };

    std::vector<double> grid = ratio_grid(lo, s_max, opt.ratio);
    std::vector<double> ratio(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) ratio[i] = ratio_of(grid[i]);

    // Interior local maxima of f(t)/t are located more precisely and inserted into the grid.
    std::vector<std::pair<double, double>> inserted;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (ratio[i] >= ratio[i - 1] && ratio[i] > ratio[i + 1] && std::isfinite(ratio[i])) {
            auto [x, g] = detail::golden_max(ratio_of, grid[i - 1], grid[i + 1], opt.golden_iterations);
            if (g > ratio[i] && x != grid[i]) inserted.emplace_back(x, g);
        }
    }
    if (!inserted.empty()) {
        std::vector<std::pair<double, double>> all;
        all.reserve(grid.size() + inserted.size());
        for (std::size_t i = 0; i < grid.size(); ++i) all.emplace_back(grid[i], ratio[i]);
        all.insert(all.end(), inserted.begin(), inserted.end());
        std::sort(all.begin(), all.end());
        grid.clear();
        ratio.clear();
        for (auto const& [x, g] : all) {
            if (!grid.empty() && x == grid.back()) continue;
            grid.push_back(x);
            ratio.push_back(g);
        }
    }

    RatioEnvelope env;
    env.origin = origin;
    double running = 0.0;
    if (origin == EnvelopeOrigin::ZeroPlus) {
        // Log-log slope of f(t)/t over the three smallest samples decides the t -> 0 limit.
        double x0 = std::log(grid[0]), x2 = std::log(grid[2]);
        double r0 = ratio[0], r2 = ratio[2];
        double limit;
        if (r0 <= 0.0 && r2 <= 0.0)
            limit = 0.0;
        else if (r0 <= 0.0)
            limit = 0.0;
        else if (r2 <= 0.0)
            limit = std::numeric_limits<double>::infinity();
        else {
            double slope = (std::log(r2) - std::log(r0)) / (x2 - x0);
            if (slope < -opt.limit_slope_band)
                limit = std::numeric_limits<double>::infinity();
            else if (slope > opt.limit_slope_band)
                limit = 0.0;
            else
                limit = std::max({ratio[0], ratio[1], ratio[2]});
        }
        env.limit_at_origin = limit;
        running = limit;
    }
    env.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        running = std::max(running, ratio[i]);
        env.values[i] = running;
    }
    env.grid = std::move(grid);
    env.ratios = std::move(ratio);
    return env;
}

// ---------------------------------------------------------------------------
// Built-in families

/// Largest positive root of e^x = e^2 x, by bisection on [2, 4].
inline double log_family_lambda() {
    auto g = [](double x) { return std::exp(x) - std::exp(2.0) * x; };
    double a = 2.0, b = 4.0;
    for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
        double m = 0.5 * (a + b);
        (g(m) < 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

/// Critical L^1 power 1 + 2/d.
inline double critical_l1_power(double d) { return 1.0 + 2.0 / d; }

/// Largest beta for which s^p / log(e+s)^beta, p = 1 + 2/d, is non-decreasing.
inline double log_family_beta_max(double d) { return log_family_lambda() * critical_l1_power(d); }

using FamilyParams = std::map<std::string, double>;

inline double require_param(FamilyParams const& params, std::string const& key) {
    auto it = params.find(key);
    if (it == params.end()) throw std::invalid_argument("builtin_family: missing parameter '" + key + "'");
    return it->second;
}

/// Built-in nonlinearities:
///   power            {p}            s^p
///   log_family       {d, beta}      s^p / log(e+s)^beta with p = 1 + 2/d
///   piecewise_power  {p, p_high, s0} s^p below s0, continued as s0^(p - p_high) s^p_high above
inline Expression builtin_family(std::string const& name, FamilyParams const& params) {
    if (name == "power") {
        double p = require_param(params, "p");
        if (!(p >= 0.0)) throw std::invalid_argument("builtin_family: power needs p >= 0");
        return Expression::parse("s^" + format_number(p));
    }
    if (name == "log_family") {
        double d = require_param(params, "d");
        double beta = require_param(params, "beta");
        if (!(d >= 1.0)) throw std::invalid_argument("builtin_family: log_family needs d >= 1");
        if (!(beta >= 0.0)) throw std::invalid_argument("builtin_family: log_family needs beta >= 0");
        return Expression::parse("s^" + format_number(critical_l1_power(d)) + "/log(e+s)^" + format_number(beta));
    }
    if (name == "piecewise_power") {
        double p = require_param(params, "p");
        double p_high = require_param(params, "p_high");
        double s0 = require_param(params, "s0");
        if (!(p >= 0.0) || !(p_high >= p) || !(s0 > 0.0))
            throw std::invalid_argument("builtin_family: piecewise_power needs 0 <= p <= p_high and s0 > 0");
        double c = std::pow(s0, p - p_high);
        return Expression::parse("max(s^" + format_number(p) + "," + format_number(c) + "*s^" +
                                 format_number(p_high) + ")");
    }
    throw std::invalid_argument("builtin_family: unknown family '" + name + "'");
}

} // namespace heatlab
