#pragma once

// Mild-solution machinery on a radial grid:
//   F(v)(t) = S(t)u0 + int_0^t S(t-s) f(v(s)) ds
// evaluated by the composite trapezoid rule on a uniform time grid with exact
// semigroup factors in the eigenbasis, the monotone iteration v_{n+1} = F(v_n),
// the supersolution margin, the existence horizon and a forward integrator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "heatlab/criteria.hpp"
#include "heatlab/expression.hpp"
#include "heatlab/nonlinearity.hpp"
#include "heatlab/radial.hpp"

namespace heatlab {

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Radial fields at the points t_m = m T / steps, m = 0..steps.
struct TimeField {
    double T = 0.0;
    std::vector<RadialField> slices;

    std::size_t steps() const { return slices.empty() ? 0 : slices.size() - 1; }
    double time(std::size_t m) const { return T * static_cast<double>(m) / static_cast<double>(steps()); }

    template <class Fn>
    static TimeField build(double T, std::size_t steps, Fn const& slice_at) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeField: T must be positive");
        if (steps < 1) throw std::invalid_argument("TimeField: need at least one time step");
        TimeField v;
        v.T = T;
        v.slices.reserve(steps + 1);
        for (std::size_t m = 0; m <= steps; ++m) v.slices.push_back(slice_at(T * static_cast<double>(m) / steps));
        return v;
    }
};

/// Largest |a - b| over all nodes and times.
inline double sup_distance(TimeField const& a, TimeField const& b) {
    if (a.slices.size() != b.slices.size()) throw std::invalid_argument("sup_distance: time grids differ");
    double m = 0.0;
    for (std::size_t k = 0; k < a.slices.size(); ++k)
        for (std::size_t i = 0; i < a.slices[k].size(); ++i)
            m = std::max(m, std::abs(a.slices[k].values[i] - b.slices[k].values[i]));
    return m;
}

/// S(t_m) u0 on the time grid of `like`.
inline TimeField linear_part(HeatPropagator const& P, RadialField const& u0, double T, std::size_t steps) {
    require_same_grid(u0, P.grid());
    Eigen::VectorXd c0 = P.to_spectral(u0.values);
    return TimeField::build(T, steps, [&](double t) {
        RadialField out(P.grid());
        P.from_spectral(c0.cwiseProduct(P.decay(t)), out.values);
        return out;
    });
}

struct DuhamelOptions {
    /// Values above this abort the computation (the input was not a supersolution).
    double overflow_guard = 1e12;
};

/// F(v) on the time grid of v.
inline TimeField duhamel_map(HeatPropagator const& P, RadialField const& u0, Expression const& f, TimeField const& v,
                             DuhamelOptions const& opt = {}) {
    require_same_grid(u0, P.grid());
    std::size_t const M = v.steps();
    if (M < 1) throw std::invalid_argument("duhamel_map: empty time grid");
    double const h = v.T / static_cast<double>(M);
    Eigen::VectorXd const c0 = P.to_spectral(u0.values);
    Eigen::VectorXd const decay_h = P.decay(h);

    std::vector<double> fv(u0.size());
    auto nonlinear_coeffs = [&](RadialField const& slice) {
        require_same_grid(slice, P.grid());
        for (std::size_t i = 0; i < fv.size(); ++i) {
            double y = eval_f(f, std::max(0.0, slice.values[i]));
            if (!(y <= opt.overflow_guard)) throw DivergenceError("duhamel_map: f(v) exceeds the overflow guard");
            fv[i] = y;
        }
        return P.to_spectral(fv);
    };

    TimeField out;
    out.T = v.T;
    out.slices.reserve(M + 1);
    out.slices.push_back(u0);
    // R_m = sum_{j<=m} w_j e^{-lambda (t_m - t_j)} g_j with w_0 = 1/2, w_j = 1 otherwise;
    // the trapezoid integral at t_m is h (R_m - g_m / 2).
    Eigen::VectorXd R = 0.5 * nonlinear_coeffs(v.slices[0]);
    for (std::size_t m = 1; m <= M; ++m) {
        Eigen::VectorXd g = nonlinear_coeffs(v.slices[m]);
        R = decay_h.cwiseProduct(R) + g;
        Eigen::VectorXd c = c0.cwiseProduct(P.decay(v.time(m))) + h * (R - 0.5 * g);
        RadialField slice(P.grid());
        P.from_spectral(c, slice.values);
        for (double x : slice.values)
            if (!(std::abs(x) <= opt.overflow_guard)) throw DivergenceError("duhamel_map: iterate exceeds the overflow guard");
        out.slices.push_back(std::move(slice));
    }
    return out;
}

struct SupersolutionMargin {
    /// min over nodes and times of v - F(v).
    double min_margin = std::numeric_limits<double>::infinity();
    std::size_t time_index = 0;
    std::size_t node_index = 0;

    bool certified() const { return min_margin >= 0.0; }
};

inline SupersolutionMargin supersolution_check(HeatPropagator const& P, RadialField const& u0, Expression const& f,
                                               TimeField const& v, DuhamelOptions const& opt = {}) {
    auto Fv = duhamel_map(P, u0, f, v, opt);
    SupersolutionMargin m;
    for (std::size_t k = 0; k < v.slices.size(); ++k)
        for (std::size_t i = 0; i < v.slices[k].size(); ++i) {
            double d = v.slices[k].values[i] - Fv.slices[k].values[i];
            if (d < m.min_margin) m = {d, k, i};
        }
    return m;
}

struct IterationTrace {
    /// v_0 = v_init, v_1, ..., v_N.
    std::vector<TimeField> iterates;
    /// deltas[n] = sup |v_{n+1} - v_n|.
    std::vector<double> deltas;
    bool converged = false;
    /// Number of maps after which the iterate stopped changing.
    std::size_t iterations = 0;
    /// sup |F(v_N) - v_N|.
    double residual = std::numeric_limits<double>::infinity();
    /// max over n, nodes and times of v_{n+1} - v_n.
    double max_increase = -std::numeric_limits<double>::infinity();
    /// min over n, nodes and times of v_n - S(t)u0.
    double min_above_linear = std::numeric_limits<double>::infinity();
    SupersolutionMargin initial_margin;
    std::vector<std::string> warnings;

    TimeField const& limit() const { return iterates.back(); }
};

struct IterationOptions {
    double tolerance = 1e-8;
    double marginal = 1e-10;
    DuhamelOptions duhamel{};
};

inline IterationTrace duhamel_iterate(HeatPropagator const& P, RadialField const& u0, Expression const& f,
                                      TimeField const& v_init, std::size_t n_iter, IterationOptions const& opt = {}) {
    require_same_grid(u0, P.grid());
    if (n_iter < 1) throw std::invalid_argument("duhamel_iterate: need at least one iteration");
    IterationTrace tr;
    auto lin = linear_part(P, u0, v_init.T, v_init.steps());
    auto track = [&](TimeField const& v) {
        for (std::size_t k = 0; k < v.slices.size(); ++k)
            for (std::size_t i = 0; i < v.slices[k].size(); ++i)
                tr.min_above_linear = std::min(tr.min_above_linear, v.slices[k].values[i] - lin.slices[k].values[i]);
    };

    TimeField next = duhamel_map(P, u0, f, v_init, opt.duhamel);
    tr.initial_margin = {};
    for (std::size_t k = 0; k < v_init.slices.size(); ++k)
        for (std::size_t i = 0; i < v_init.slices[k].size(); ++i) {
            double d = v_init.slices[k].values[i] - next.slices[k].values[i];
            if (d < tr.initial_margin.min_margin) tr.initial_margin = {d, k, i};
        }
    if (tr.initial_margin.min_margin < -opt.marginal)
        tr.warnings.push_back("initial guess is not a discrete supersolution (margin " +
                              format_number(tr.initial_margin.min_margin) + ")");
    tr.iterates.push_back(v_init);
    track(v_init);
    for (std::size_t n = 0; n < n_iter; ++n) {
        TimeField const& cur = tr.iterates.back();
        double delta = 0.0;
        for (std::size_t k = 0; k < cur.slices.size(); ++k)
            for (std::size_t i = 0; i < cur.slices[k].size(); ++i) {
                double diff = next.slices[k].values[i] - cur.slices[k].values[i];
                delta = std::max(delta, std::abs(diff));
                tr.max_increase = std::max(tr.max_increase, diff);
            }
        tr.deltas.push_back(delta);
        if (delta < opt.tolerance) {
            tr.converged = true;
            tr.iterations = n;
            tr.residual = delta;
            break;
        }
        track(next);
        tr.iterates.push_back(std::move(next));
        next = duhamel_map(P, u0, f, tr.iterates.back(), opt.duhamel);
    }
    if (!tr.converged) {
        tr.iterations = n_iter;
        tr.residual = sup_distance(next, tr.iterates.back());
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Existence horizon

class HorizonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HorizonOptions {
    double A = 2.0;
    double T_max = 1e6;
    /// Geometric step of the y-grid for the transformed integral.
    double y_ratio = 1.005;
    double y_top = 0x1p256;
    double dead_band = 0.05;
};

struct HorizonResult {
    double T = 0.0;
    /// Largest T allowed by the integral condition alone.
    double T_integral = 0.0;
    /// (A c |u0|_1)^{2/d}: beyond it the smoothing bound no longer dominates the constant part.
    double T_smoothing = 0.0;
    /// Value of the bracketed integral factor at the returned T.
    double integral_value = 0.0;
    double target = 0.0;
    double A = 2.0;
    double c = 0.0;
    double u0_l1 = 0.0;
    /// Extrapolated contribution of the integrand beyond the y-grid.
    double tail_estimate = 0.0;
    bool unbounded = false;
    bool capped_by_smoothing = false;
};

/// Transformed integrand: with y = tau^{-d/2},
///   int_0^X tau^{d/2} ftilde(tau^{-d/2}) dtau = (2/d) int_{X^{-d/2}}^inf y^{-2-2/d} ftilde(y) dy.
class HorizonIntegral {
public:
    HorizonIntegral(Expression const& f, int d, double y_lo, HorizonOptions const& opt) : d_(d) {
        require_dimension(d);
        auto env = sup_ratio_envelope(f, opt.y_top, EnvelopeOrigin::One);
        double const dd = d;
        auto log_h = [&](double y, double fy) {
            // log of (2/d) y^{-2-2/d} ftilde(y) * y  (the extra y is dy = y dlog y)
            if (fy == 0.0) return -std::numeric_limits<double>::infinity();
            return std::log(2.0 / dd) - (1.0 + 2.0 / dd) * std::log(y) + std::log(fy);
        };
        y_ = ratio_grid(std::min(y_lo, 0.5), opt.y_top, opt.y_ratio);
        hy_.resize(y_.size());
        for (std::size_t i = 0; i < y_.size(); ++i) {
            double y = y_[i];
            double ft = y <= 1.0 ? eval_f(f, y) : y * env.at(y);
            if (std::isinf(ft)) throw HorizonError("find_existence_horizon: integrand overflows (integral divergent)");
            double lh = log_h(y, ft);
            hy_[i] = std::isinf(lh) ? 0.0 : std::exp(lh);
        }
        // Tail beyond y_top: power law in y, or in log y.
        std::size_t n = y_.size();
        std::size_t w = std::max<std::size_t>(8, n / 20);
        std::vector<double> ly, llog, lh;
        bool zero_tail = true;
        for (std::size_t i = n - w; i < n; ++i) {
            ly.push_back(std::log(y_[i]));
            llog.push_back(std::log(std::log(y_[i])));
            lh.push_back(std::log(std::max(hy_[i], std::numeric_limits<double>::min())));
            if (hy_[i] > 0.0) zero_tail = false;
        }
        if (!zero_tail) {
            double sigma = criteria_detail::fit_slope(ly, lh);
            double kappa = -criteria_detail::fit_slope(llog, lh);
            double L = std::log(y_.back());
            if (sigma <= -opt.dead_band)
                tail_ = hy_.back() / -sigma;
            else if (kappa >= 1.0 + opt.dead_band)
                tail_ = hy_.back() * L / (kappa - 1.0);
            else
                throw HorizonError("find_existence_horizon: integral numerically divergent (f fails the L^1 criterion)");
        }
        cum_.assign(n, 0.0);
        cum_[n - 1] = tail_;
        for (std::size_t i = n - 1; i-- > 0;)
            cum_[i] = cum_[i + 1] + 0.5 * std::log(y_[i + 1] / y_[i]) * (hy_[i] + hy_[i + 1]);
    }

    /// (2/d) int_Y^inf y^{-2-2/d} ftilde(y) dy.
    double tail_from(double Y) const {
        if (Y >= y_.back()) return tail_ * std::pow(y_.back() / Y, 2.0 / d_);
        if (Y <= y_.front()) throw HorizonError("find_existence_horizon: lower limit below the integration grid");
        auto it = std::upper_bound(y_.begin(), y_.end(), Y);
        std::size_t j = static_cast<std::size_t>(it - y_.begin());
        double a = y_[j - 1], b = y_[j];
        double w = std::log(Y / a) / std::log(b / a);
        double hY = hy_[j - 1] + w * (hy_[j] - hy_[j - 1]);
        return cum_[j] + 0.5 * std::log(b / Y) * (hY + hy_[j]);
    }

    double tail_estimate() const { return tail_; }
    bool identically_zero() const { return cum_.front() == 0.0; }

private:
    int d_;
    std::vector<double> y_, hy_, cum_;
    double tail_ = 0.0;
};

inline HorizonResult find_existence_horizon(double u0_l1, Expression const& f, int d, HorizonOptions const& opt = {}) {
    require_dimension(d);
    if (!(u0_l1 > 0.0)) throw std::invalid_argument("find_existence_horizon: |u0|_1 must be positive");
    if (!(opt.A > 1.0)) throw std::invalid_argument("find_existence_horizon: A must exceed 1");
    HorizonResult res;
    double const dd = d;
    res.A = opt.A;
    res.c = std::pow(4.0 * std::numbers::pi, -dd / 2.0);
    res.u0_l1 = u0_l1;
    res.target = (opt.A - 1.0) / opt.A;
    double const K = 2.0 * opt.A * res.c * u0_l1;
    res.T_smoothing = std::pow(opt.A * res.c * u0_l1, 2.0 / dd);

    double const y_lo = 0.5 * K * std::pow(opt.T_max, -dd / 2.0);
    HorizonIntegral I(f, d, y_lo, opt);
    res.tail_estimate = I.tail_estimate();
    auto phi = [&](double T) { return std::pow(K, 2.0 / dd) * I.tail_from(K * std::pow(T, -dd / 2.0)); };

    if (I.identically_zero()) {
        res.T = res.T_integral = opt.T_max;
        res.unbounded = true;
        res.integral_value = 0.0;
        return res;
    }
    if (phi(opt.T_max) <= res.target) {
        res.T_integral = opt.T_max;
        res.unbounded = true;
    } else {
        double lo = std::log(opt.T_max) - 200.0, hi = std::log(opt.T_max);
        if (phi(std::exp(lo)) > res.target) throw HorizonError("find_existence_horizon: no admissible T found");
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            double mid = 0.5 * (lo + hi);
            (phi(std::exp(mid)) <= res.target ? lo : hi) = mid;
        }
        res.T_integral = std::exp(lo);
    }
    res.T = res.T_integral;
    if (res.T_smoothing < res.T) {
        res.T = res.T_smoothing;
        res.capped_by_smoothing = true;
        res.unbounded = false;
    }
    res.integral_value = phi(res.T);
    return res;
}

// ---------------------------------------------------------------------------
// Forward simulation

struct SimulationControls {
    double q = 2.0;
    double dt_initial = 1e-4;
    double dt_max = 1e-2;
    double dt_min = 1e-14;
    double max_relative_change = 0.05;
    double blowup_sup = 1e12;
    std::size_t max_steps = 2000000;
    /// If non-empty, the accepted times (ascending, starting after 0) are replayed without adaptivity.
    std::vector<double> schedule;
    /// Keep every k-th field (0 keeps none besides the final one).
    std::size_t snapshot_every = 0;
    ClampPolicy clamp{};
};

struct TrajectorySample {
    double t = 0.0;
    double l1 = 0.0;
    double lq = 0.0;
    double linf = 0.0;
    double dt = 0.0;
    std::size_t clamp_count = 0;
};

struct Trajectory {
    double q = 2.0;
    std::vector<TrajectorySample> samples;
    std::vector<std::pair<double, RadialField>> snapshots;
    RadialField final_field;
    bool numeric_blowup = false;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    std::string blowup_reason;
    std::size_t total_clamps = 0;
    std::size_t total_violations = 0;

    double peak_l1() const {
        double m = 0.0;
        for (auto const& s : samples) m = std::max(m, s.l1);
        return m;
    }
    std::vector<double> accepted_times() const {
        std::vector<double> t;
        for (std::size_t i = 1; i < samples.size(); ++i) t.push_back(samples[i].t);
        return t;
    }
};

/// u_{m+1} = S(dt)(u_m + dt f(u_m)); dt is halved while the reaction changes u by more than
/// max_relative_change (relative to |u|_inf), and doubled after comfortably small changes.
inline Trajectory simulate_forward(HeatPropagator const& P, RadialField const& u0, Expression const& f, double T,
                                   SimulationControls const& ctl = {}) {
    require_same_grid(u0, P.grid());
    if (!(T > 0.0)) throw std::invalid_argument("simulate_forward: T must be positive");
    Trajectory tr;
    tr.q = ctl.q;
    RadialField u = u0;
    double t = 0.0;
    auto record = [&](double dt, std::size_t clamps) {
        tr.samples.push_back({t, lq_norm(u, 1.0), lq_norm(u, ctl.q), lq_norm(u, std::numeric_limits<double>::infinity()),
                              dt, clamps});
    };
    record(0.0, 0);
    if (ctl.snapshot_every > 0) tr.snapshots.emplace_back(0.0, u);

    std::vector<double> fu(u.size());
    auto reaction = [&](RadialField const& x) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            fu[i] = eval_f(f, std::max(0.0, x.values[i]));
            m = std::max(m, fu[i]);
        }
        return m;
    };
    auto declare = [&](std::string why) {
        tr.numeric_blowup = true;
        tr.blowup_time = t;
        tr.blowup_reason = std::move(why);
    };

    bool const fixed = !ctl.schedule.empty();
    double dt = ctl.dt_initial;
    std::size_t next_in_schedule = 0;
    for (std::size_t step = 0; step < ctl.max_steps; ++step) {
        if (fixed) {
            if (next_in_schedule >= ctl.schedule.size() || ctl.schedule[next_in_schedule] > T * (1 + 1e-12)) break;
        } else if (t >= T * (1 - 1e-14)) {
            break;
        }
        double fmax = reaction(u);
        double umax = u.max_abs();
        if (fixed) {
            dt = ctl.schedule[next_in_schedule] - t;
            if (!(dt > 0.0)) throw std::invalid_argument("simulate_forward: schedule must be strictly increasing");
        } else {
            dt = std::min(dt, T - t);
            // Halve until the explicit reaction increment is a small relative change.
            while (dt * fmax > ctl.max_relative_change * umax && dt >= ctl.dt_min) dt *= 0.5;
            if (dt < ctl.dt_min) {
                declare("time step fell below " + format_number(ctl.dt_min));
                break;
            }
        }
        RadialField w = u;
        for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += dt * fu[i];
        auto res = semigroup_apply(P, dt, w, ctl.clamp);
        u = std::move(res.field);
        t = fixed ? ctl.schedule[next_in_schedule++] : t + dt;
        tr.total_clamps += res.clamp_count;
        tr.total_violations += res.violation_count;
        record(dt, res.clamp_count);
        if (ctl.snapshot_every > 0 && tr.samples.size() % ctl.snapshot_every == 0) tr.snapshots.emplace_back(t, u);
        if (!(u.max_abs() <= ctl.blowup_sup)) {
            declare("sup norm exceeded " + format_number(ctl.blowup_sup));
            break;
        }
        if (!fixed && dt * fmax < 0.25 * ctl.max_relative_change * umax) dt = std::min(2.0 * dt, ctl.dt_max);
    }
    tr.final_field = u;
    return tr;
}

} // namespace heatlab
