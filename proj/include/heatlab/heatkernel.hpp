#pragma once

// Whole-space heat semigroup acting on ball indicators, the constants of the
// ball lower bound S(t)chi_r >= c_d (r/(r+sqrt t))^d chi_{r+sqrt t}, and a
// numerical certification sweep for that bound and its two corollaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/geometry.hpp"
#include "heatlab/quadrature.hpp"

namespace heatlab {

enum class KernelVariant { Dirichlet, WholeSpace };

inline char const* to_string(KernelVariant v) { return v == KernelVariant::Dirichlet ? "dirichlet" : "whole_space"; }

/// (4 pi t)^{-d/2} exp(-|x-y|^2 / 4t).
inline double gaussian_kernel(std::span<double const> x, std::span<double const> y, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("gaussian_kernel: t must be positive");
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
    double d = static_cast<double>(x.size());
    return std::pow(4.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-r2 / (4.0 * t));
}

/// Radial form of the Gaussian kernel: distance |x-y| = dist in dimension d.
inline double gaussian_kernel_radial(double dist, double t, int d) {
    if (!(t > 0.0)) throw std::invalid_argument("gaussian_kernel: t must be positive");
    return std::pow(4.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-dist * dist / (4.0 * t));
}

struct BallIndicator {
    double radius = 1.0;
    std::vector<double> center; // empty means the origin
    double amplitude = 1.0;

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("BallIndicator: radius must be positive");
        if (!(amplitude >= 0.0)) throw std::invalid_argument("BallIndicator: amplitude must be non-negative");
    }
};

struct HeatBallOptions {
    double abs_tol = 1e-8;
    std::size_t max_intervals = 4000;
};

/// [S(t) chi_r](rho) on R^d for a unit-amplitude ball of radius r at the origin, |x| = rho.
inline double heat_on_ball_radial(double r, double rho, double t, int d, HeatBallOptions const& opt = {}) {
    require_dimension(d);
    if (!(t > 0.0)) throw std::invalid_argument("heat_on_ball: t must be positive");
    if (!(r > 0.0)) throw std::invalid_argument("heat_on_ball: radius must be positive");
    rho = std::abs(rho);
    double const sq = 2.0 * std::sqrt(t);
    if (d == 1) {
        // erfc differences keep precision in the far tail.
        double a = (rho - r) / sq, b = (rho + r) / sq;
        if (a > 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
        return 0.5 * (std::erf(b) - std::erf(a));
    }

    // Radial-angular quadrature: with |x| = rho, |y| = s and angle phi,
    // |x-y|^2 = (rho - s)^2 + 4 rho s sin^2(phi/2).
    double const pref = std::pow(4.0 * std::numbers::pi * t, -0.5 * d) * sphere_area(d - 1);
    double const reach = 12.9 * std::sqrt(t); // exp(-reach^2/4t) < 1e-18
    double lo = std::max(0.0, rho - reach), hi = std::min(r, rho + reach);
    if (hi <= lo) return 0.0;

    // Angular integral int_0^pi sin^{d-2}(phi) exp(-a sin^2(phi/2)) dphi in closed form:
    // pi e^{-a/2} I_0(a/2) for d = 2 and 2 (1 - e^{-a}) / a for d = 3.
    auto inner = [&](double s) {
        double a = rho * s / t;
        if (d == 3) return a < 1e-12 ? 2.0 : -2.0 * std::expm1(-a) / a;
        double x = 0.5 * a;
        if (x < 700.0) return std::numbers::pi * std::exp(-x) * std::cyl_bessel_i(0.0, x);
        double ix = 1.0 / x;
        double series = 1.0 + ix * (1.0 / 8.0 + ix * (9.0 / 128.0 + ix * (225.0 / 3072.0 + ix * 11025.0 / 98304.0)));
        return std::numbers::pi * series / std::sqrt(2.0 * std::numbers::pi * x);
    };
    auto outer = [&](double s) {
        double ds = rho - s;
        return std::pow(s, d - 1) * std::exp(-ds * ds / (4.0 * t)) * inner(s);
    };
    QuadOptions outer_opt{opt.abs_tol / pref, 1e-12, opt.max_intervals};
    // Split at rho so the Gaussian peak sits on a panel boundary.
    double total = 0.0;
    if (rho > lo && rho < hi) {
        total += integrate_or_throw(outer, lo, rho, outer_opt, "heat_on_ball").value;
        total += integrate_or_throw(outer, rho, hi, outer_opt, "heat_on_ball").value;
    } else {
        total = integrate_or_throw(outer, lo, hi, outer_opt, "heat_on_ball").value;
    }
    return pref * total;
}

/// [S(t) chi](x) on R^d for a general ball indicator; x is a point of R^d.
inline double heat_on_ball(BallIndicator const& chi, std::span<double const> x, double t, int d,
                           HeatBallOptions const& opt = {}) {
    chi.validate();
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("heat_on_ball: point has wrong dimension");
    if (!chi.center.empty() && static_cast<int>(chi.center.size()) != d)
        throw std::invalid_argument("heat_on_ball: center has wrong dimension");
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
        double c = chi.center.empty() ? 0.0 : chi.center[static_cast<std::size_t>(i)];
        r2 += (x[static_cast<std::size_t>(i)] - c) * (x[static_cast<std::size_t>(i)] - c);
    }
    return chi.amplitude * heat_on_ball_radial(chi.radius, std::sqrt(r2), t, d, opt);
}

/// Constants of the ball lower bound. The Dirichlet variant carries the
/// boundary damping exp(-d^2 pi^2 / 4) of the kernel comparison with t <= delta^2.
struct KernelConstants {
    int d = 1;
    KernelVariant variant = KernelVariant::WholeSpace;
    double boundary_factor = 1.0;
    double c_prime = 0.0;
    double c_doubleprime = 0.0;
    double c_d = 0.0;
    double alpha_d = 0.0;
    double beta_d = 0.0;
    double omega_d = 0.0;
};

inline KernelConstants kernel_constants(int d, KernelVariant variant) {
    require_dimension(d);
    KernelConstants k;
    k.d = d;
    k.variant = variant;
    double const dd = static_cast<double>(d);
    k.boundary_factor =
        variant == KernelVariant::Dirichlet ? std::exp(-dd * dd * std::numbers::pi * std::numbers::pi / 4.0) : 1.0;
    // pi^{-d/2} int_{B_{1/2}(u)} e^{-|w|^2} dw equals [S(1/4) chi_{1/2}](u) for a unit vector u.
    k.c_prime = k.boundary_factor * heat_on_ball_radial(0.5, 1.0, 0.25, d, {1e-14, 20000});
    k.c_doubleprime =
        k.boundary_factor * std::pow(std::numbers::pi, -0.5 * dd) * std::pow(2.0, -dd) * std::exp(-9.0 / 4.0);
    k.c_d = std::min(k.c_prime, k.c_doubleprime);
    k.omega_d = unit_ball_volume(d);
    k.alpha_d = k.c_d * k.omega_d;
    k.beta_d = k.c_d * std::pow(2.0, -dd);
    return k;
}

// ---------------------------------------------------------------------------
// Certification sweep

struct BoundWitness {
    double r = 0.0, t = 0.0, x = 0.0;
    double value = 0.0, bound = 0.0;
};

struct BoundCheck {
    explicit BoundCheck(std::string n = {}) : name(std::move(n)) {}

    std::string name;
    double min_margin = std::numeric_limits<double>::infinity();
    BoundWitness worst;
    std::size_t checks = 0;
    std::vector<BoundWitness> violations;
};

struct CertificationReport {
    int d = 1;
    KernelVariant variant = KernelVariant::WholeSpace;
    double delta = 0.0;
    double tolerance = 1e-6;
    KernelConstants constants;
    double c_scale = 1.0;
    std::vector<double> r_grid;
    std::vector<double> t_grid_relative; // t values as multiples of r^2 (absolute ones are stored per witness)
    std::vector<double> t_grid_absolute;
    BoundCheck pointwise{"ball_lower_bound"};
    BoundCheck mass{"mass_lower_bound"};
    BoundCheck no_tail{"no_tail_lower_bound"};

    bool passed() const {
        return pointwise.violations.empty() && mass.violations.empty() && no_tail.violations.empty();
    }
};

struct CertificationOptions {
    std::vector<double> r_grid{0.25, 1.0, 4.0};
    /// Times given relative to r^2 (t = factor * r^2) ...
    std::vector<double> t_relative{0.25, 1.0, 4.0};
    /// ... and absolute times, both swept for every r.
    std::vector<double> t_absolute{0.01};
    std::size_t x_points = 9;
    double tolerance = 1e-6;
    /// Multiplies c_d before checking; values > 1 are for falsification runs only.
    double c_scale = 1.0;
    /// Dirichlet variant only: distance to the boundary; 0 means sqrt(max t).
    double delta = 0.0;
    HeatBallOptions quad{};
};

namespace kernel_detail {

inline void record(BoundCheck& check, BoundWitness const& w, double margin, double tol) {
    ++check.checks;
    if (margin < check.min_margin) {
        check.min_margin = margin;
        check.worst = w;
    }
    if (margin < -tol) check.violations.push_back(w);
}

} // namespace kernel_detail

/// Checks, on a mesh of |x| <= r + sqrt t:
///   pointwise   damping(t) S(t)chi_r(x) >= c_d (r/(r+sqrt t))^d
///   mass        damping(t) int_{B_{r+sqrt t}} S(t)chi_r >= alpha_d r^d  (margin normalised by omega_d r^d)
///   no_tail     damping(t) S(t)chi_r(x) >= beta_d, only for t <= r^2
/// where damping(t) = exp(-d^2 pi^2 t / 4 delta^2) for the Dirichlet variant and 1 otherwise.
inline CertificationReport verify_lower_bounds(int d, KernelVariant variant, CertificationOptions const& opt = {}) {
    require_dimension(d);
    CertificationReport rep;
    rep.d = d;
    rep.variant = variant;
    rep.tolerance = opt.tolerance;
    rep.constants = kernel_constants(d, variant);
    rep.c_scale = opt.c_scale;
    rep.r_grid = opt.r_grid;
    rep.t_grid_relative = opt.t_relative;
    rep.t_grid_absolute = opt.t_absolute;

    struct Case {
        double r, t;
    };
    std::vector<Case> cases;
    double t_max = 0.0;
    for (double r : opt.r_grid) {
        if (!(r > 0.0)) throw std::invalid_argument("verify_lower_bounds: radii must be positive");
        for (double f : opt.t_relative) cases.push_back({r, f * r * r});
        for (double t : opt.t_absolute) cases.push_back({r, t});
    }
    for (auto const& c : cases) {
        if (!(c.t > 0.0)) throw std::invalid_argument("verify_lower_bounds: times must be positive");
        t_max = std::max(t_max, c.t);
    }
    rep.delta = variant == KernelVariant::Dirichlet ? (opt.delta > 0.0 ? opt.delta : std::sqrt(t_max)) : 0.0;
    if (variant == KernelVariant::Dirichlet && t_max > rep.delta * rep.delta * (1.0 + 1e-12))
        throw std::invalid_argument("verify_lower_bounds: Dirichlet variant needs t <= delta^2");

    double const dd = static_cast<double>(d);
    double const c_d = rep.constants.c_d * opt.c_scale;
    double const beta_d = rep.constants.beta_d * opt.c_scale;
    double const alpha_d = rep.constants.alpha_d * opt.c_scale;
    double const omega_d = rep.constants.omega_d;

    for (auto const& c : cases) {
        double const damping = variant == KernelVariant::Dirichlet
                                   ? std::exp(-dd * dd * std::numbers::pi * std::numbers::pi * c.t /
                                              (4.0 * rep.delta * rep.delta))
                                   : 1.0;
        double const reach = c.r + std::sqrt(c.t);
        double const ball_bound = c_d * std::pow(c.r / reach, dd);
        for (std::size_t i = 0; i < opt.x_points; ++i) {
            double x = reach * static_cast<double>(i) / static_cast<double>(opt.x_points - 1);
            double v = damping * heat_on_ball_radial(c.r, x, c.t, d, opt.quad);
            kernel_detail::record(rep.pointwise, {c.r, c.t, x, v, ball_bound}, v - ball_bound, opt.tolerance);
            if (c.t <= c.r * c.r * (1.0 + 1e-12))
                kernel_detail::record(rep.no_tail, {c.r, c.t, x, v, beta_d}, v - beta_d, opt.tolerance);
        }
        auto integrand = [&](double x) {
            return sphere_area(d) * std::pow(x, d - 1) * heat_on_ball_radial(c.r, x, c.t, d, opt.quad);
        };
        double scale = omega_d * std::pow(c.r, dd);
        QuadOptions mopt{1e-9 * scale, 1e-10, 2000};
        double m = damping * integrate_or_throw(integrand, 0.0, reach, mopt, "verify_lower_bounds").value;
        double bound = alpha_d * std::pow(c.r, dd);
        kernel_detail::record(rep.mass, {c.r, c.t, reach, m, bound}, (m - bound) / scale, opt.tolerance);
    }
    return rep;
}

} // namespace heatlab
