#pragma once

// Truncated initial data built from nested ball indicators centred at the origin:
//   T1:   u0 = sum_{k=1}^N beta_d^{-1} phi_k chi_{r_k},  r_k = eps phi_k^{-q/d} k^{-2q/d},
//         with f(phi_k) >= phi_k^p e^{k/q}, p = 1 + 2q/d;
//   Todd: u0 = sum_{n=n0}^N n^{-2} alpha_n^d chi_{1/alpha_n},  alpha_n = (n^2 phi_{zeta_n})^{1/d},
//         phi_k = s_k / c_d for a divergent series witness s_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatlab/criteria.hpp"
#include "heatlab/expression.hpp"
#include "heatlab/heatkernel.hpp"
#include "heatlab/nonlinearity.hpp"
#include "heatlab/radial.hpp"

namespace heatlab {

class ScheduleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataKind { T1, Todd };

inline char const* to_string(DataKind k) { return k == DataKind::T1 ? "T1" : "Todd"; }

struct DataTerm {
    /// k for T1, n for Todd.
    int index = 0;
    double phi = 0.0;
    double amplitude = 0.0;
    double radius = 0.0;
    double f_phi = 0.0;
    /// T1: log f(phi_k) - p log phi_k - k/q (non-negative when the schedule holds).
    double schedule_margin = 0.0;
    // Todd only
    int k_n = 0;
    int zeta = 0;
};

struct Prediction {
    int index = 0;
    /// Time window on which the bound holds (T1: [t_k/2, t_k], t_k = r_k^2).
    double t_lo = 0.0, t_hi = 0.0;
    /// T1: lower bound for |u(t)|_q^q from the closed form with the certified constants.
    /// Todd: lower bound for int u(t) dx.
    double value = 0.0;
    /// T1: the same chain evaluated with the actual f(phi_k) instead of the schedule inequality.
    double chain_value = 0.0;
    /// T1: pointwise bound on B_{r_k}; the chain proves beta_d t f(phi_k) at time t.
    double pointwise = 0.0;
    /// Todd: k0..k_n summed.
    int k_lo = 0, k_hi = 0;
};

struct BlowupDataSpec {
    DataKind kind = DataKind::T1;
    int d = 1;
    double q = 1.0;
    double p = 0.0;
    std::string f;
    int N = 0;
    double R = 1.0;
    KernelConstants constants;

    // T1
    double epsilon = 0.0;
    // Todd
    int n0 = 0;
    int k0 = 0;
    double theta = 2.0;
    double delta0 = 0.0;
    std::vector<double> witness;

    std::vector<DataTerm> terms;
    /// Exact |u0|_q of the truncated nested sum.
    double analytic_lq = 0.0;
    /// sum of |u_k|_q over retained terms, and the bound on the neglected tail.
    double lq_sum_bound = 0.0;
    double tail_bound = 0.0;
    /// Bound for the infinite sum.
    double lq_full_bound = 0.0;
};

struct BlowupData {
    BlowupDataSpec spec;
    GridPtr grid;
    RadialField field;
    double sampled_lq = 0.0;
};

struct GridRequest {
    std::size_t cells = 400;
    /// Smallest cell as a fraction of the smallest radius.
    double h_min_fraction = 1.0 / 16.0;
    std::size_t min_cells_per_ball = 8;
};

namespace databuilder_detail {

/// Exact |sum a_k chi_{r_k}|_q for nested balls, radii in any order.
inline double nested_lq(std::vector<DataTerm> const& terms, int d, double q) {
    std::vector<std::pair<double, double>> rk;
    for (auto const& t : terms) rk.emplace_back(t.radius, t.amplitude);
    std::sort(rk.begin(), rk.end(), [](auto const& a, auto const& b) { return a.first > b.first; });
    double omega = unit_ball_volume(d), level = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < rk.size(); ++i) {
        level += rk[i].second;
        double inner = i + 1 < rk.size() ? rk[i + 1].first : 0.0;
        sum += std::pow(level, q) * omega * (std::pow(rk[i].first, d) - std::pow(inner, d));
    }
    return std::pow(sum, 1.0 / q);
}

inline BlowupData sample(BlowupDataSpec spec, GridRequest const& gr) {
    std::vector<double> radii;
    for (auto const& t : spec.terms) radii.push_back(t.radius);
    double r_min = *std::min_element(radii.begin(), radii.end());
    BlowupData out;
    out.grid = RadialGrid::graded(spec.d, spec.R, gr.cells, gr.h_min_fraction * r_min, radii);
    auto faces = out.grid->faces();
    for (double r : radii) {
        auto inside = static_cast<std::size_t>(std::upper_bound(faces.begin(), faces.end(), r * (1 + 1e-12)) -
                                               faces.begin()) - 1;
        if (inside < gr.min_cells_per_ball)
            throw std::invalid_argument("blowup data: ball of radius " + format_number(r) + " has only " +
                                        std::to_string(inside) + " cells; refine the grid");
    }
    out.field = RadialField(out.grid);
    for (auto const& t : spec.terms) RadialField::add_indicator(out.field, t.radius, t.amplitude);
    out.sampled_lq = lq_norm(out.field, spec.q);
    if (std::abs(out.sampled_lq - spec.analytic_lq) > 0.01 * spec.analytic_lq)
        throw std::runtime_error("blowup data: sampled norm differs from the analytic norm by more than 1%");
    out.spec = std::move(spec);
    return out;
}

} // namespace databuilder_detail

struct T1Options {
    double search_ratio = 1.1;
    double search_cap = 1e12;
    KernelVariant variant = KernelVariant::WholeSpace;
    GridRequest grid{};
};

/// epsilon <= 0 picks the largest admissible value, 2 r_1 = R.
inline BlowupData build_t1_data(Expression const& f, int d, double q, int N, double epsilon, double R,
                                T1Options const& opt = {}) {
    require_dimension(d);
    if (N < 1) throw std::invalid_argument("build_t1_data: N must be >= 1");
    if (!(q >= 1.0)) throw std::invalid_argument("build_t1_data: q must be >= 1");
    if (!(R > 0.0)) throw std::invalid_argument("build_t1_data: R must be positive");
    require_audit(monotonicity_audit(f, opt.search_cap, 600), "build_t1_data");
    BlowupDataSpec spec;
    spec.kind = DataKind::T1;
    spec.d = d;
    spec.q = q;
    spec.p = 1.0 + 2.0 * q / d;
    spec.f = f.to_string();
    spec.N = N;
    spec.R = R;
    spec.constants = kernel_constants(d, opt.variant);
    double const dd = d, beta = spec.constants.beta_d;

    auto margin = [&](double phi, int k) {
        double v = eval_f(f, phi);
        if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
        return std::log(v) - spec.p * std::log(phi) - k / q;
    };
    double prev = 0.0;
    for (int k = 1; k <= N; ++k) {
        double phi = std::max(static_cast<double>(k), prev + 1.0);
        while (phi <= opt.search_cap && margin(phi, k) < 0.0) phi *= opt.search_ratio;
        if (phi > opt.search_cap)
            throw ScheduleError("build_t1_data: no phi_" + std::to_string(k) + " <= " + format_number(opt.search_cap) +
                                " with f(phi) >= phi^p e^{k/q}");
        DataTerm t;
        t.index = k;
        t.phi = phi;
        t.amplitude = phi / beta;
        t.f_phi = eval_f(f, phi);
        t.schedule_margin = margin(phi, k);
        spec.terms.push_back(t);
        prev = phi;
    }
    double const phi1 = spec.terms.front().phi;
    spec.epsilon = epsilon > 0.0 ? epsilon : 0.5 * R * std::pow(phi1, q / dd);
    for (auto& t : spec.terms)
        t.radius = spec.epsilon * std::pow(t.phi, -q / dd) * std::pow(static_cast<double>(t.index), -2.0 * q / dd);
    double r_max = 0.0;
    for (auto const& t : spec.terms) r_max = std::max(r_max, t.radius);
    if (2.0 * r_max > R * (1 + 1e-12))
        throw std::invalid_argument("build_t1_data: epsilon too large, B_{2 r_1} does not fit in B_R");
    // Re-verify the schedule with fresh evaluations.
    for (auto const& t : spec.terms)
        if (!(std::log(eval_f(f, t.phi)) >= spec.p * std::log(t.phi) + t.index / q))
            throw ScheduleError("build_t1_data: schedule inequality fails on re-check at k = " + std::to_string(t.index));

    double const unit = std::pow(spec.constants.omega_d, 1.0 / q) * std::pow(spec.epsilon, dd / q) / beta;
    double partial = 0.0;
    for (int k = 1; k <= N; ++k) partial += 1.0 / (static_cast<double>(k) * k);
    spec.lq_sum_bound = unit * partial;
    spec.lq_full_bound = unit * std::numbers::pi * std::numbers::pi / 6.0;
    spec.tail_bound = spec.lq_full_bound - spec.lq_sum_bound;
    spec.analytic_lq = databuilder_detail::nested_lq(spec.terms, d, q);
    return databuilder_detail::sample(std::move(spec), opt.grid);
}

struct ToddOptions {
    KernelVariant variant = KernelVariant::WholeSpace;
    /// k_n as a function of n; the default k_n = n.
    std::function<int(int)> k_schedule;
    GridRequest grid{};
};

/// `witness` holds s_1, s_2, ... with s_{k+1} >= theta s_k.
inline BlowupData build_todd_data(Expression const& f, int d, int N, double R, std::vector<double> const& witness,
                                  double theta = 2.0, ToddOptions const& opt = {}) {
    require_dimension(d);
    if (!(R > 0.0)) throw std::invalid_argument("build_todd_data: R must be positive");
    if (witness.size() < 2) throw std::invalid_argument("build_todd_data: witness too short");
    for (std::size_t k = 1; k < witness.size(); ++k)
        if (witness[k] < theta * witness[k - 1])
            throw std::invalid_argument("build_todd_data: witness violates s_{k+1} >= theta s_k at k = " +
                                        std::to_string(k));
    require_audit(monotonicity_audit(f, std::max(1e12, witness.back()), 600), "build_todd_data");
    BlowupDataSpec spec;
    spec.kind = DataKind::Todd;
    spec.d = d;
    spec.q = 1.0;
    spec.p = critical_l1_power(d);
    spec.f = f.to_string();
    spec.N = N;
    spec.R = R;
    spec.theta = theta;
    spec.delta0 = 0.5 * R;
    spec.witness = witness;
    spec.constants = kernel_constants(d, opt.variant);
    double const dd = d, c_d = spec.constants.c_d;
    auto phi = [&](int k) { return witness[static_cast<std::size_t>(k - 1)] / c_d; };
    int const K = static_cast<int>(witness.size());

    spec.k0 = 0;
    for (int k = 1; k <= K; ++k)
        if (phi(k) >= 1.0) {
            spec.k0 = k;
            break;
        }
    if (spec.k0 == 0) throw ScheduleError("build_todd_data: no witness term with phi_k >= 1");

    auto k_of = [&](int n) { return opt.k_schedule ? opt.k_schedule(n) : n; };
    spec.n0 = 0;
    for (int n = 1; n <= N; ++n) {
        int kn = std::max(k_of(n), spec.k0);
        // smallest zeta with phi_{k_n + 1} <= phi_zeta / 2
        int zeta = 0;
        for (int z = kn + 1; z <= K; ++z)
            if (phi(kn + 1) <= 0.5 * phi(z)) {
                zeta = z;
                break;
            }
        if (kn + 1 > K || zeta == 0)
            throw ScheduleError("build_todd_data: witness too short for n = " + std::to_string(n) + " (k_n = " +
                                std::to_string(kn) + ")");
        double alpha = std::pow(static_cast<double>(n) * n * phi(zeta), 1.0 / dd);
        if (spec.n0 == 0) {
            if (!(1.0 / alpha < spec.delta0)) continue;
            spec.n0 = n;
        }
        DataTerm t;
        t.index = n;
        t.k_n = kn;
        t.zeta = zeta;
        t.phi = phi(zeta);
        t.amplitude = std::pow(alpha, dd) / (static_cast<double>(n) * n);
        t.radius = 1.0 / alpha;
        t.f_phi = eval_f(f, t.phi);
        spec.terms.push_back(t);
    }
    if (spec.n0 == 0)
        throw std::invalid_argument("build_todd_data: N is below n0 (no term has 1/alpha_n < R/2)");
    double const omega = spec.constants.omega_d;
    for (auto const& t : spec.terms) spec.lq_sum_bound += omega / (static_cast<double>(t.index) * t.index);
    spec.lq_full_bound = omega * std::numbers::pi * std::numbers::pi / 6.0;
    double partial = 0.0;
    for (int n = 1; n <= N; ++n) partial += 1.0 / (static_cast<double>(n) * n);
    spec.tail_bound = omega * (std::numbers::pi * std::numbers::pi / 6.0 - partial);
    spec.analytic_lq = databuilder_detail::nested_lq(spec.terms, d, 1.0);
    return databuilder_detail::sample(std::move(spec), opt.grid);
}

/// Constant c''' = alpha_d sigma c_d^p of the Todd partial-sum bound, with
/// sigma = (2/(2+d)) (1 - theta^{-p}) (1 - 2^{-2/d})^{d/2+1}.
inline double todd_constant(KernelConstants const& k, double theta) {
    double const dd = k.d, p = 1.0 + 2.0 / dd;
    double sigma = 2.0 / (2.0 + dd) * (1.0 - std::pow(theta, -p)) * std::pow(1.0 - std::pow(2.0, -2.0 / dd), dd / 2.0 + 1.0);
    return k.alpha_d * sigma * std::pow(k.c_d, p);
}

inline std::vector<Prediction> predicted_bounds(BlowupDataSpec const& spec) {
    std::vector<Prediction> out;
    double const dd = spec.d, q = spec.q, beta = spec.constants.beta_d, omega = spec.constants.omega_d;
    if (spec.kind == DataKind::T1) {
        double const expo = 2.0 * q * (dd + 2.0 * q) / dd;
        for (auto const& t : spec.terms) {
            Prediction pr;
            pr.index = t.index;
            pr.t_hi = t.radius * t.radius;
            pr.t_lo = 0.5 * pr.t_hi;
            double k = t.index;
            pr.value = std::pow(beta, q) * omega * std::pow(spec.epsilon, dd + 2.0 * q) * std::pow(k, -expo) *
                       std::exp(k);
            pr.pointwise = beta * pr.t_hi * t.f_phi;
            pr.chain_value = std::pow(pr.pointwise, q) * omega * std::pow(t.radius, dd);
            out.push_back(pr);
        }
        return out;
    }
    double const c3 = todd_constant(spec.constants, spec.theta);
    double const c_d = spec.constants.c_d;
    Expression f = Expression::parse(spec.f);
    for (auto const& t : spec.terms) {
        Prediction pr;
        pr.index = t.index;
        pr.k_lo = spec.k0;
        pr.k_hi = t.k_n;
        double psi = 1.0 / (static_cast<double>(t.index) * t.index);
        double sum = 0.0;
        for (int k = spec.k0; k <= t.k_n; ++k) {
            double s = spec.witness[static_cast<std::size_t>(k - 1)];
            sum += std::exp(std::log(eval_f(f, s)) - spec.p * std::log(s));
        }
        pr.value = c3 * std::pow(psi, spec.p) * sum;
        // The k-range needs psi / phi_{k0} <= (t + 1/alpha^2)^{d/2}, and t < delta0^2.
        double phi_k0 = spec.witness[static_cast<std::size_t>(spec.k0 - 1)] / c_d;
        pr.t_lo = std::max(0.0, std::pow(psi / phi_k0, 2.0 / dd) - t.radius * t.radius);
        pr.t_hi = spec.delta0 * spec.delta0;
        out.push_back(pr);
    }
    return out;
}

/// P_{k+1} / P_k for the T1 closed form: e (k/(k+1))^{2q(d+2q)/d}.
inline double t1_growth_ratio(int k, int d, double q) {
    double expo = 2.0 * q * (d + 2.0 * q) / d;
    return std::exp(1.0) * std::pow(static_cast<double>(k) / (k + 1), expo);
}

} // namespace heatlab
