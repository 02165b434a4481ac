#pragma once

// Quadrature lower bounds for solutions started from a ball indicator,
//   u(t) >= int_0^t S(t-s) f(S(s) u_k) ds,
// and the dyadic-shell warm-up integrals for a point mass at the origin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/expression.hpp"
#include "heatlab/heatkernel.hpp"
#include "heatlab/nonlinearity.hpp"
#include "heatlab/quadrature.hpp"

namespace heatlab {

/// How S(s) u_k and the outer S(t - s) are bounded below.
enum class KernelMode {
    /// Whole-space heat flow of a ball, evaluated by quadrature.
    Exact,
    /// c_d (r / (r + sqrt t))^d chi_{r + sqrt t}.
    Certified
};

inline char const* to_string(KernelMode m) { return m == KernelMode::Exact ? "exact" : "certified"; }

struct LowerBoundOptions {
    KernelMode inner = KernelMode::Exact;
    KernelMode outer = KernelMode::Exact;
    KernelVariant variant = KernelVariant::WholeSpace;
    /// Dirichlet only: radius of the domain ball. The bound needs r + 2 sqrt(t) <= R.
    double domain_radius = 0.0;
    std::size_t time_panels = 4;
    std::size_t nodes_per_panel = 12;
    /// Layer-cake levels for the exact inner profile.
    std::size_t levels = 256;
    /// Exact inner profile is resolved on r +- reach * sqrt(s) and cut beyond.
    double reach = 6.0;
    HeatBallOptions ball{1e-10, 4000};
};

struct LowerBoundProfile {
    double t = 0.0;
    double q = 1.0;
    /// Partition 0 = rho_0 < ... < rho_n of [0, rho_max] and the bound at each point.
    std::vector<double> radii;
    std::vector<double> values;
    /// Lower and upper Riemann sums of int |lb|^q dx; the bound is radially non-increasing,
    /// so the lower sum is itself a lower bound.
    double lq_pow_lower = 0.0;
    double lq_pow_upper = 0.0;

    double lq_lower() const { return std::pow(lq_pow_lower, 1.0 / q); }
};

/// Lower bound functional for u_k = chi.amplitude * chi_{chi.radius} centred at the origin.
class DuhamelLowerBound {
public:
    DuhamelLowerBound(BallIndicator chi, Expression f, int d, LowerBoundOptions opt = {})
        : chi_(std::move(chi)), f_(std::move(f)), d_(d), opt_(std::move(opt)) {
        require_dimension(d);
        chi_.validate();
        for (double c : chi_.center)
            if (c != 0.0) throw std::invalid_argument("duhamel_lower_bound: ball must be centred at the origin");
        if (opt_.variant == KernelVariant::Dirichlet) {
            if (opt_.inner == KernelMode::Exact || opt_.outer == KernelMode::Exact)
                throw std::invalid_argument("duhamel_lower_bound: Dirichlet variant needs certified kernel modes");
            if (!(opt_.domain_radius > 0.0))
                throw std::invalid_argument("duhamel_lower_bound: Dirichlet variant needs domain_radius");
        }
        if (opt_.time_panels < 1 || opt_.nodes_per_panel < 2 || opt_.levels < 2)
            throw std::invalid_argument("duhamel_lower_bound: quadrature sizes too small");
        constants_ = kernel_constants(d, opt_.variant);
        f0_ = eval_f(f_, 0.0);
        gauss_legendre(opt_.nodes_per_panel, 0.0, 1.0, gl_x_, gl_w_);
    }

    KernelConstants const& constants() const noexcept { return constants_; }

    /// Lower bound for u(t) at |x| = rho.
    double value(double rho, double t) const {
        auto nodes = time_nodes(t);
        return evaluate(rho, t, nodes);
    }

    /// Bound on [0, rho_max] at n + 1 equally spaced radii with its L^q Riemann sums.
    LowerBoundProfile profile(double t, double q, double rho_max, std::size_t n) const {
        if (!(q >= 1.0)) throw std::invalid_argument("duhamel_lower_bound: q must be >= 1");
        if (n < 2 || !(rho_max > 0.0)) throw std::invalid_argument("duhamel_lower_bound: bad profile partition");
        auto nodes = time_nodes(t);
        LowerBoundProfile pr;
        pr.t = t;
        pr.q = q;
        double const omega = unit_ball_volume(d_);
        for (std::size_t i = 0; i <= n; ++i) {
            double rho = rho_max * static_cast<double>(i) / static_cast<double>(n);
            pr.radii.push_back(rho);
            pr.values.push_back(evaluate(rho, t, nodes));
        }
        for (std::size_t i = 0; i < n; ++i) {
            double shell = omega * (std::pow(pr.radii[i + 1], d_) - std::pow(pr.radii[i], d_));
            pr.lq_pow_lower += shell * std::pow(pr.values[i + 1], q);
            pr.lq_pow_upper += shell * std::pow(pr.values[i], q);
        }
        return pr;
    }

private:
    void check_domain(double t) const {
        if (opt_.variant != KernelVariant::Dirichlet) return;
        if (chi_.radius + 2.0 * std::sqrt(t) > opt_.domain_radius)
            throw std::invalid_argument("duhamel_lower_bound: ball plus 2 sqrt(t) leaves the domain");
    }

    // S(tau) chi_R at rho, bounded below according to the outer mode.
    double outer_ball(double R, double rho, double tau) const {
        if (tau <= 0.0) return rho <= R ? 1.0 : 0.0;
        if (opt_.outer == KernelMode::Exact) return heat_on_ball_radial(R, rho, tau, d_, opt_.ball);
        double reach = R + std::sqrt(tau);
        return rho <= reach ? constants_.c_d * std::pow(R / reach, d_) : 0.0;
    }

    double reaction(double v) const { return eval_f(f_, std::max(0.0, v)) - f0_; }

    // The reaction term at time s is bounded below by sum_l coeff_l chi_{y_l}.
    struct Layer {
        double y, coeff;
    };
    struct TimeNode {
        double s, weight;
        std::vector<Layer> layers;
    };

    std::vector<TimeNode> time_nodes(double t) const {
        if (!(t > 0.0)) throw std::invalid_argument("duhamel_lower_bound: t must be positive");
        check_domain(t);
        std::vector<TimeNode> nodes;
        double const h = t / static_cast<double>(opt_.time_panels);
        for (std::size_t p = 0; p < opt_.time_panels; ++p)
            for (std::size_t j = 0; j < gl_x_.size(); ++j) {
                double s = h * (static_cast<double>(p) + gl_x_[j]);
                nodes.push_back({s, h * gl_w_[j], layers(s)});
            }
        return nodes;
    }

    double evaluate(double rho, double t, std::vector<TimeNode> const& nodes) const {
        double total = 0.0;
        for (auto const& n : nodes) {
            double sum = 0.0;
            for (auto const& l : n.layers) sum += l.coeff * outer_ball(l.y, rho, t - n.s);
            total += n.weight * sum;
        }
        return total;
    }

    std::vector<Layer> layers(double s) const {
        double const r = chi_.radius, amp = chi_.amplitude;
        if (opt_.inner == KernelMode::Certified) {
            double reach = r + std::sqrt(s);
            double level = amp * constants_.c_d * std::pow(r / reach, d_);
            return {{reach, reaction(level)}};
        }
        // g(y) = f(S(s)u_k(y)) - f(0) is radially non-increasing, so with levels y_1 < ... < y_L
        // g >= sum_l (g(y_l) - g(y_{l+1})) chi_{y_l}, g(y_{L+1}) := 0.
        // Levels are spread over the transition band [r - reach sqrt(s), r + reach sqrt(s)].
        double const Y = r + opt_.reach * std::sqrt(s);
        double const Y0 = std::max(0.0, r - opt_.reach * std::sqrt(s));
        std::size_t const L = opt_.levels;
        std::vector<Layer> out;
        double g_next = 0.0;
        for (std::size_t l = L; l >= 1; --l) {
            double y = Y0 + (Y - Y0) * static_cast<double>(l) / static_cast<double>(L);
            double g = reaction(amp * heat_on_ball_radial(r, y, s, d_, opt_.ball));
            double coeff = g - g_next;
            if (coeff > 0.0) out.push_back({y, coeff});
            g_next = std::max(g, g_next);
        }
        return out;
    }

    BallIndicator chi_;
    Expression f_;
    int d_;
    LowerBoundOptions opt_;
    KernelConstants constants_;
    double f0_ = 0.0;
    std::vector<double> gl_x_, gl_w_;
};

inline LowerBoundProfile duhamel_lower_bound(BallIndicator const& chi, Expression const& f, double t, int d, double q,
                                             LowerBoundOptions const& opt = {}, std::size_t n = 64) {
    DuhamelLowerBound lb(chi, f, d, opt);
    double rho_max = chi.radius + 6.0 * std::sqrt(t);
    if (opt.variant == KernelVariant::Dirichlet) rho_max = std::min(rho_max, opt.domain_radius);
    return lb.profile(t, q, rho_max, n);
}

// ---------------------------------------------------------------------------
// Warm-up with a point mass at the origin

struct WarmupShell {
    int k = 0;
    double phi = 0.0;
    /// Shell [t_{k+1}, t_k] in time.
    double t_lo = 0.0, t_hi = 0.0;
    /// int_{t_{k+1}}^{t_k} int_{R^d} f(G_s(x)) dx ds.
    double increment = 0.0;
    /// omega_d (2/(d+2)) c^{(d+2)/2} (1 - theta^{-p}) f(phi_k) phi_k^{-p}.
    double chain_bound = 0.0;
    double partial_sum = 0.0;
};

struct WarmupReport {
    int d = 1;
    double theta = 2.0;
    double p = 0.0;
    double c = 0.0;
    std::vector<WarmupShell> shells;
};

struct WarmupOptions {
    double theta = 2.0;
    int first_k = 1;
    QuadOptions quad{0.0, 1e-10, 4000};
};

/// Shell increments of int_{R^d} int_0^t S(t-s) f(S(s) delta_0) ds dx with
/// t_k = c phi_k^{-2/d}, phi_k = theta^k, c = e^{-1/(2d)} / (4 pi), chosen so that
/// G_s >= phi_k on B_{sqrt s} for s <= t_k. Mass conservation of the outer
/// semigroup on R^d reduces each shell to a double integral of f(G_s).
inline WarmupReport warmup_shells(Expression const& f, int d, int n_shells, WarmupOptions const& opt = {}) {
    require_dimension(d);
    if (n_shells < 1) throw std::invalid_argument("warmup_shells: need at least one shell");
    if (!(opt.theta > 1.0)) throw std::invalid_argument("warmup_shells: theta must exceed 1");
    WarmupReport rep;
    double const dd = d;
    rep.d = d;
    rep.theta = opt.theta;
    rep.p = critical_l1_power(d);
    rep.c = std::exp(-1.0 / (2.0 * dd)) / (4.0 * std::numbers::pi);
    double const sigma = sphere_area(d);
    double const f0 = eval_f(f, 0.0);

    // int_{R^d} (f(G_s) - f(0)) dx with x = sqrt(s) z.
    auto space_integral = [&](double s) {
        double amp = std::pow(4.0 * std::numbers::pi * s, -0.5 * dd);
        auto g = [&](double z) { return (eval_f(f, amp * std::exp(-0.25 * z * z)) - f0) * std::pow(z, d - 1); };
        constexpr double cuts[] = {0.0, 2.0, 5.0, 10.0, 40.0};
        double v = 0.0;
        for (std::size_t i = 0; i + 1 < std::size(cuts); ++i)
            v += integrate_or_throw(g, cuts[i], cuts[i + 1], opt.quad, "warmup_shells").value;
        return sigma * std::pow(s, 0.5 * dd) * v;
    };

    double const omega = unit_ball_volume(d);
    double sum = 0.0;
    for (int k = opt.first_k; k < opt.first_k + n_shells; ++k) {
        WarmupShell sh;
        sh.k = k;
        sh.phi = std::pow(opt.theta, k);
        sh.t_hi = rep.c * std::pow(sh.phi, -2.0 / dd);
        sh.t_lo = rep.c * std::pow(sh.phi * opt.theta, -2.0 / dd);
        // ds = s dlog s
        auto outer = [&](double ls) {
            double s = std::exp(ls);
            return s * space_integral(s);
        };
        sh.increment = integrate_or_throw(outer, std::log(sh.t_lo), std::log(sh.t_hi), opt.quad, "warmup_shells").value;
        sh.chain_bound = omega * (2.0 / (dd + 2.0)) * std::pow(rep.c, 0.5 * (dd + 2.0)) *
                         (1.0 - std::pow(opt.theta, -rep.p)) * (eval_f(f, sh.phi) - f0) * std::pow(sh.phi, -rep.p);
        sum += sh.increment;
        sh.partial_sum = sum;
        rep.shells.push_back(sh);
    }
    return rep;
}

} // namespace heatlab
