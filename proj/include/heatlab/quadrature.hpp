#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatlab {

class QuadratureError : public std::runtime_error {
public:
    explicit QuadratureError(std::string const& what) : std::runtime_error(what) {}
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    std::size_t intervals = 0;
    bool converged = false;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_intervals = 2000;
};

namespace quad_detail {

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> xk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(Segment const& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F const& f, double a, double b) {
    double const c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double kron = wk[7] * fc;
    double gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        double dx = h * xk[j];
        double sum = f(c - dx) + f(c + dx);
        kron += wk[j] * sum;
        if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    kron *= h;
    gauss *= h;
    return {a, b, kron, std::abs(kron - gauss)};
}

} // namespace quad_detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature: bisects the segment with
/// the largest error estimate until |error| <= max(abs_tol, rel_tol * |value|)
/// or the interval budget is exhausted (converged = false).
template <class F>
QuadResult integrate(F const& f, double a, double b, QuadOptions const& opt = {}) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<quad_detail::Segment> heap;
    auto first = quad_detail::gk15(f, a, b);
    res.evaluations = 15;
    double total = first.value, err = first.error;
    heap.push(first);
    while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (heap.size() >= opt.max_intervals) {
            res.value = total;
            res.error = err;
            res.intervals = heap.size();
            return res;
        }
        auto worst = heap.top();
        heap.pop();
        double m = 0.5 * (worst.a + worst.b);
        if (m <= worst.a || m >= worst.b) {
            // Interval cannot be split further in floating point.
            res.value = total;
            res.error = err;
            res.intervals = heap.size() + 1;
            return res;
        }
        auto left = quad_detail::gk15(f, worst.a, m);
        auto right = quad_detail::gk15(f, m, worst.b);
        res.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the incremental updates.
    total = 0.0;
    err = 0.0;
    res.intervals = heap.size();
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    res.value = total;
    res.error = err;
    res.converged = true;
    return res;
}

/// Same as integrate() but throws QuadratureError when the budget is exhausted.
template <class F>
QuadResult integrate_or_throw(F const& f, double a, double b, QuadOptions const& opt, char const* who) {
    auto r = integrate(f, a, b, opt);
    if (!r.converged)
        throw QuadratureError(std::string(who) + ": tolerance not met (error estimate " + std::to_string(r.error) +
                              ")");
    return r;
}

/// Gauss-Legendre nodes and weights on [a, b] (Newton iteration on P_n).
inline void gauss_legendre(std::size_t n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    double const pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        double h = 0.5 * (b - a), c = 0.5 * (a + b);
        x[i] = c - h * z;
        x[n - 1 - i] = c + h * z;
        w[i] = w[n - 1 - i] = 2.0 * h / ((1.0 - z * z) * dp * dp);
    }
}

} // namespace heatlab
