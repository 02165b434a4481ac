#pragma once

// Radially symmetric fields on a ball B_R in R^d with a homogeneous Dirichlet
// condition at |x| = R, and the exact-in-time heat propagator of the
// finite-volume radial Laplacian.
//
// Cells are [f_i, f_{i+1}] with faces 0 = f_0 < ... < f_n = R. Cell 0 is the
// ball of radius f_1 and carries its value at the origin; cell i >= 1 carries
// its value at the midpoint. Node n sits on the boundary where u = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "heatlab/heatkernel.hpp"
#include "heatlab/nonlinearity.hpp"

namespace heatlab {

class RadialGrid {
public:
    /// n equal cells.
    static std::shared_ptr<RadialGrid const> uniform(int d, double R, std::size_t n) {
        if (n < 2) throw std::invalid_argument("RadialGrid: need at least two cells");
        std::vector<double> faces(n + 1);
        for (std::size_t i = 0; i <= n; ++i) faces[i] = R * static_cast<double>(i) / static_cast<double>(n);
        faces.back() = R;
        return from_faces(d, std::move(faces));
    }

    /// First cell [0, h_min], then geometrically growing cells up to R; every
    /// radius in `snap` becomes a face (neighbouring faces closer than a third
    /// of the local spacing are dropped).
    static std::shared_ptr<RadialGrid const> graded(int d, double R, std::size_t n, double h_min,
                                                    std::span<double const> snap = {}) {
        if (n < 2) throw std::invalid_argument("RadialGrid: need at least two cells");
        if (!(h_min > 0.0) || !(h_min < R)) throw std::invalid_argument("RadialGrid: need 0 < h_min < R");
        std::vector<double> faces{0.0};
        auto g = geometric_grid(h_min, R, n);
        faces.insert(faces.end(), g.begin(), g.end());
        if (!snap.empty()) {
            std::vector<double> pinned;
            for (double s : snap)
                if (s > 0.0 && s < R) pinned.push_back(s);
            std::sort(pinned.begin(), pinned.end());
            pinned.erase(std::unique(pinned.begin(), pinned.end()), pinned.end());
            std::vector<double> kept{0.0};
            for (std::size_t i = 1; i + 1 < faces.size(); ++i) {
                double f = faces[i];
                double spacing = faces[i + 1] - faces[i - 1];
                auto it = std::lower_bound(pinned.begin(), pinned.end(), f);
                bool close = false;
                if (it != pinned.end() && *it - f < spacing / 6.0) close = true;
                if (it != pinned.begin() && f - *(it - 1) < spacing / 6.0) close = true;
                if (!close) kept.push_back(f);
            }
            kept.insert(kept.end(), pinned.begin(), pinned.end());
            kept.push_back(R);
            std::sort(kept.begin(), kept.end());
            kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
            faces = std::move(kept);
        }
        return from_faces(d, std::move(faces));
    }

    static std::shared_ptr<RadialGrid const> from_faces(int d, std::vector<double> faces) {
        require_dimension(d);
        if (faces.size() < 3 || faces.front() != 0.0)
            throw std::invalid_argument("RadialGrid: faces must start at 0 and define at least two cells");
        for (std::size_t i = 1; i < faces.size(); ++i)
            if (!(faces[i] > faces[i - 1])) throw std::invalid_argument("RadialGrid: faces must be strictly increasing");
        auto g = std::shared_ptr<RadialGrid>(new RadialGrid);
        g->d_ = d;
        g->faces_ = std::move(faces);
        std::size_t n = g->faces_.size() - 1;
        g->R_ = g->faces_.back();
        g->nodes_.resize(n + 1);
        g->weights_.resize(n + 1);
        double const omega = unit_ball_volume(d);
        for (std::size_t i = 0; i < n; ++i) {
            g->nodes_[i] = i == 0 ? 0.0 : 0.5 * (g->faces_[i] + g->faces_[i + 1]);
            g->weights_[i] = omega * (std::pow(g->faces_[i + 1], d) - std::pow(g->faces_[i], d));
        }
        g->nodes_[n] = g->R_;
        g->weights_[n] = 0.0;
        return g;
    }

    int d() const noexcept { return d_; }
    double R() const noexcept { return R_; }
    /// Number of unknowns (cells); the boundary node is not an unknown.
    std::size_t size() const noexcept { return faces_.size() - 1; }
    std::span<double const> faces() const noexcept { return faces_; }
    /// size() + 1 radii, the last being R.
    std::span<double const> nodes() const noexcept { return nodes_; }
    /// Cell volumes; the boundary node has weight 0 so the sum is the ball volume.
    std::span<double const> quad_weights() const noexcept { return weights_; }

private:
    RadialGrid() = default;
    int d_ = 1;
    double R_ = 1.0;
    std::vector<double> faces_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<RadialGrid const>;

class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Values of a radial function at the cells of a grid.
struct RadialField {
    GridPtr grid;
    std::vector<double> values;

    RadialField() = default;
    explicit RadialField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
    RadialField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid->size()) throw GridMismatch("RadialField: value count does not match grid");
    }

    /// Pointwise samples at the cell nodes.
    template <class Fn>
    static RadialField sample(GridPtr g, Fn const& fn) {
        RadialField u(g);
        auto nodes = g->nodes();
        for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = fn(nodes[i]);
        return u;
    }

    /// Cell averages of amplitude * chi_{B_r}; exact in L^1.
    static RadialField indicator(GridPtr g, double r, double amplitude = 1.0) {
        RadialField u(g);
        add_indicator(u, r, amplitude);
        return u;
    }

    static void add_indicator(RadialField& u, double r, double amplitude) {
        auto faces = u.grid->faces();
        int const d = u.grid->d();
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            double a = faces[i], b = faces[i + 1];
            if (r <= a) break;
            double frac = r >= b ? 1.0 : (std::pow(r, d) - std::pow(a, d)) / (std::pow(b, d) - std::pow(a, d));
            u.values[i] += amplitude * frac;
        }
    }

    std::size_t size() const noexcept { return values.size(); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline void require_same_grid(RadialField const& a, GridPtr const& g) {
    if (a.grid != g) throw GridMismatch("field lives on a different grid");
}

/// (sum_i w_i |u_i|^q)^{1/q}; q = +inf gives max |u_i|.
inline double lq_norm(RadialField const& u, double q) {
    if (std::isinf(q)) return u.max_abs();
    if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
    auto w = u.grid->quad_weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) sum += w[i] * std::pow(std::abs(u.values[i]), q);
    return std::pow(sum, 1.0 / q);
}

/// Exact semigroup e^{-tA} of the finite-volume radial Dirichlet Laplacian A,
/// through the eigendecomposition of the symmetrised operator W^{-1/2} K W^{-1/2}.
class HeatPropagator {
public:
    explicit HeatPropagator(GridPtr grid) : grid_(std::move(grid)) {
        std::size_t const n = grid_->size();
        if (n < 32) throw std::invalid_argument("HeatPropagator: need at least 32 cells");
        int const d = grid_->d();
        auto faces = grid_->faces();
        auto nodes = grid_->nodes();
        auto w = grid_->quad_weights();
        double const sigma = sphere_area(d);

        // Conductances across faces 1..n; the last one couples to the boundary node.
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            double gface = sigma * std::pow(faces[i + 1], d - 1) / (nodes[i + 1] - nodes[i]);
            auto ii = static_cast<Eigen::Index>(i);
            K(ii, ii) += gface;
            if (i + 1 < n) {
                K(ii + 1, ii + 1) += gface;
                K(ii, ii + 1) -= gface;
                K(ii + 1, ii) -= gface;
            }
        }
        sqrt_w_.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) sqrt_w_(static_cast<Eigen::Index>(i)) = std::sqrt(w[i]);
        Eigen::MatrixXd M = sqrt_w_.cwiseInverse().asDiagonal() * K * sqrt_w_.cwiseInverse().asDiagonal();
        M = 0.5 * (M + M.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        if (es.info() != Eigen::Success) throw std::runtime_error("HeatPropagator: eigensolver failed");
        lambda_ = es.eigenvalues();
        if (!(lambda_(0) > 0.0)) throw std::runtime_error("HeatPropagator: non-positive eigenvalue");
        Q_ = es.eigenvectors();
    }

    GridPtr const& grid() const noexcept { return grid_; }
    Eigen::VectorXd const& eigenvalues() const noexcept { return lambda_; }

    /// j-th eigenvector, orthonormal in the quad_weights inner product.
    RadialField eigenvector(std::size_t j) const {
        Eigen::VectorXd v = sqrt_w_.cwiseInverse().cwiseProduct(Q_.col(static_cast<Eigen::Index>(j)));
        return RadialField(grid_, std::vector<double>(v.data(), v.data() + v.size()));
    }

    /// Spectral coefficients Q^T W^{1/2} u.
    Eigen::VectorXd to_spectral(std::span<double const> u) const {
        Eigen::Map<Eigen::VectorXd const> x(u.data(), static_cast<Eigen::Index>(u.size()));
        return Q_.transpose() * sqrt_w_.cwiseProduct(x);
    }

    void from_spectral(Eigen::VectorXd const& c, std::span<double> out) const {
        Eigen::VectorXd x = sqrt_w_.cwiseInverse().cwiseProduct(Q_ * c);
        std::copy(x.data(), x.data() + x.size(), out.begin());
    }

    Eigen::VectorXd decay(double t) const { return (-t * lambda_.array()).exp().matrix(); }

    /// e^{-tA} u without any post-processing.
    RadialField apply_raw(double t, RadialField const& u) const {
        if (!(t >= 0.0)) throw std::invalid_argument("semigroup_apply: t must be non-negative");
        require_same_grid(u, grid_);
        if (t == 0.0) return u;
        Eigen::VectorXd c = to_spectral(u.values).cwiseProduct(decay(t));
        RadialField out(grid_);
        from_spectral(c, out.values);
        return out;
    }

private:
    GridPtr grid_;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXd Q_;
    Eigen::VectorXd sqrt_w_;
};

/// Result of applying the semigroup with the non-negativity floor.
struct SemigroupResult {
    RadialField field;
    /// Entries in [-clamp_floor, -noise) that were set to zero.
    std::size_t clamp_count = 0;
    /// Entries below -clamp_floor (left untouched; a resolved grid never produces these).
    std::size_t violation_count = 0;
};

struct ClampPolicy {
    double clamp_floor = 1e-9;
    /// Rounding noise of the spectral round trip, relative to max |input|; zeroed silently.
    double relative_noise = 1e-13;
};

/// S(t) u with small negative values reset to zero.
inline SemigroupResult semigroup_apply(HeatPropagator const& P, double t, RadialField const& u,
                                       ClampPolicy const& policy = {}) {
    SemigroupResult res{P.apply_raw(t, u)};
    double const noise = policy.relative_noise * u.max_abs();
    for (double& v : res.field.values) {
        if (v >= 0.0) continue;
        if (v >= -noise) {
            v = 0.0;
        } else if (v >= -policy.clamp_floor) {
            v = 0.0;
            ++res.clamp_count;
        } else {
            ++res.violation_count;
        }
    }
    return res;
}

} // namespace heatlab
