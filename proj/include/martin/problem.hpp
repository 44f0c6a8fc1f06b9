#pragma once

// Quadratic-reward stopping problem, affine polar geometry, star-shaped
// boundaries and the admissibility checks for candidate continuation sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "martin/kernels.hpp"
#include "martin/oracles.hpp"
#include "martin/point.hpp"
#include "martin/sphere_grid.hpp"

namespace martin {

/// Reward g(x) = sum_i lambda_i x_i^2 for Brownian motion discounted at rate r.
class QuadraticProblem {
public:
    QuadraticProblem(double r, std::vector<double> lambdas) : r_(r), lambdas_(std::move(lambdas)) { validate(); }

    void validate() const {
        if (!(r_ > 0.0) || !std::isfinite(r_)) throw std::domain_error("QuadraticProblem: r must be positive and finite");
        if (lambdas_.size() < 2) throw std::domain_error("QuadraticProblem: need d >= 2 coefficients");
        for (double l : lambdas_)
            if (!(l > 0.0) || !std::isfinite(l))
                throw std::domain_error("QuadraticProblem: every lambda must be positive and finite");
    }

    double r() const noexcept { return r_; }
    int dim() const noexcept { return static_cast<int>(lambdas_.size()); }
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    KillingConfig killing() const { return {r_, dim()}; }

    double beta_squared() const {
        double s = 0.0;
        for (double l : lambdas_) s += l;
        return s / r_;
    }
    double beta() const { return std::sqrt(beta_squared()); }

    double reward(const Point& x) const {
        require_same_dim(x.dim(), lambdas_.size(), "reward");
        double s = 0.0;
        for (std::size_t i = 0; i < x.dim(); ++i) s += lambdas_[i] * x[i] * x[i];
        return s;
    }

    /// (r - L) g = r g - sum lambda with L = Laplacian / 2.
    double excess_generator(const Point& x) const { return r_ * (reward(x) - beta_squared()); }

    bool negative_set_contains(const Point& x) const { return reward(x) <= beta_squared(); }

    /// x_k = rho omega_k / sqrt(lambda_k).
    Point to_cartesian(std::span<const double> omega, double rho) const {
        require_same_dim(omega.size(), lambdas_.size(), "to_cartesian");
        if (!(rho >= 0.0)) throw std::domain_error("to_cartesian: rho must be >= 0");
        const double n = norm(omega);
        if (std::abs(n - 1.0) > 1e-12) throw std::domain_error("to_cartesian: omega must be a unit vector");
        Point x(omega.size());
        for (std::size_t k = 0; k < omega.size(); ++k) x[k] = rho * omega[k] / std::sqrt(lambdas_[k]);
        return x;
    }

    struct Polar {
        std::vector<double> omega;
        double rho;
        bool degenerate;  // x = 0: omega is an arbitrary unit vector
    };

    Polar to_polar(const Point& x) const {
        require_same_dim(x.dim(), lambdas_.size(), "to_polar");
        std::vector<double> w(x.dim());
        for (std::size_t k = 0; k < x.dim(); ++k) w[k] = x[k] * std::sqrt(lambdas_[k]);
        const double rho = norm(w);
        if (rho == 0.0) {
            std::fill(w.begin(), w.end(), 0.0);
            w[0] = 1.0;
            return {std::move(w), 0.0, true};
        }
        for (double& v : w) v /= rho;
        return {std::move(w), rho, false};
    }

private:
    double r_;
    std::vector<double> lambdas_;
};

/// Continuation set {rho < rho(omega)} in affine polar coordinates, given by
/// one radius per grid node.
class StarBoundary {
public:
    StarBoundary(SphereGrid grid, std::vector<double> radii) : grid_(std::move(grid)), radii_(std::move(radii)) {
        if (radii_.size() != grid_.size())
            throw std::domain_error("StarBoundary: " + std::to_string(radii_.size()) + " radii for " +
                                    std::to_string(grid_.size()) + " grid nodes");
        for (double v : radii_)
            if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("StarBoundary: radii must be positive and finite");
        if (dim() == 2) compute_fourier();
    }

    const SphereGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& radii() const noexcept { return radii_; }
    std::size_t size() const noexcept { return radii_.size(); }
    int dim() const noexcept { return grid_.dim(); }

    /// Piecewise-linear radius in the angle (d = 2), bilinear in
    /// (cos polar angle, longitude) for d = 3 with rings clamped at the poles.
    double radius_at(std::span<const double> omega) const {
        require_same_dim(omega.size(), static_cast<std::size_t>(dim()), "radius_at");
        const int nl = grid_.n_lon();
        const double two_pi = 2.0 * std::numbers::pi;
        double phi = std::atan2(omega[1], omega[0]);
        if (phi < 0.0) phi += two_pi;
        const double u = phi / two_pi * nl;
        int j0 = static_cast<int>(std::floor(u));
        const double t = u - j0;
        j0 %= nl;
        const int j1 = (j0 + 1) % nl;
        if (dim() == 2) return (1.0 - t) * radii_[j0] + t * radii_[j1];

        const double mu = std::clamp(omega[2], -1.0, 1.0);
        auto ring = [&](int a) {
            return (1.0 - t) * radii_[a * nl + j0] + t * radii_[a * nl + j1];
        };
        const int na = grid_.n_lat();
        // Ring mu values are ascending in the lat index.
        auto ring_mu = [&](int a) { return grid_.node(static_cast<std::size_t>(a) * nl)[2]; };
        if (mu <= ring_mu(0)) return ring(0);
        if (mu >= ring_mu(na - 1)) return ring(na - 1);
        int a = 0;
        while (a + 1 < na && ring_mu(a + 1) < mu) ++a;
        const double s = (mu - ring_mu(a)) / (ring_mu(a + 1) - ring_mu(a));
        return (1.0 - s) * ring(a) + s * ring(a + 1);
    }

    /// Trigonometric interpolant of the radii at angle theta (d = 2): the
    /// unique degree-N/2 trigonometric polynomial through the nodes.
    double radius_trig(double theta) const {
        if (dim() != 2) throw std::domain_error("radius_trig: d must be 2");
        double s = fourier_a_[0];
        for (std::size_t m = 1; m < fourier_a_.size(); ++m)
            s += fourier_a_[m] * std::cos(m * theta) + fourier_b_[m] * std::sin(m * theta);
        return s;
    }

    /// d rho_trig / d theta.
    double radius_trig_derivative(double theta) const {
        if (dim() != 2) throw std::domain_error("radius_trig: d must be 2");
        double s = 0.0;
        for (std::size_t m = 1; m < fourier_a_.size(); ++m)
            s += m * (-fourier_a_[m] * std::sin(m * theta) + fourier_b_[m] * std::cos(m * theta));
        return s;
    }

    /// Cartesian point of node i.
    Point node_point(const QuadraticProblem& p, std::size_t i) const {
        return p.to_cartesian(grid_.node(i), radii_[i]);
    }

    /// True when x lies strictly inside the continuation set (linear interpolation).
    bool contains(const QuadraticProblem& p, const Point& x) const {
        require_same_dim(x.dim(), static_cast<std::size_t>(dim()), "contains");
        std::array<double, 3> w{};
        double rho2 = 0.0;
        for (int k = 0; k < dim(); ++k) {
            w[k] = x[k] * std::sqrt(p.lambdas()[k]);
            rho2 += w[k] * w[k];
        }
        if (rho2 == 0.0) return true;
        const double rho = std::sqrt(rho2);
        for (int k = 0; k < dim(); ++k) w[k] /= rho;
        return rho < radius_at(std::span<const double>(w.data(), dim()));
    }

private:
    void compute_fourier() {
        const std::size_t n = radii_.size();
        const std::size_t half = n / 2;
        fourier_a_.assign(half + 1, 0.0);
        fourier_b_.assign(half + 1, 0.0);
        for (std::size_t m = 0; m <= half; ++m) {
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = grid_.theta(i);
                a += radii_[i] * std::cos(m * t);
                b += radii_[i] * std::sin(m * t);
            }
            const double scale = (m == 0 || (n % 2 == 0 && m == half)) ? 1.0 / n : 2.0 / n;
            fourier_a_[m] = a * scale;
            fourier_b_[m] = (n % 2 == 0 && m == half) ? 0.0 : b * scale;
        }
    }

    SphereGrid grid_;
    std::vector<double> radii_;
    std::vector<double> fourier_a_, fourier_b_;
};

struct ClassCheckReport {
    bool closed_ok = true;
    bool contains_negative_set = true;
    bool bounded_ok = true;
    bool star_shaped_ok = true;
    bool symmetry_ok = true;
    bool box_ok = true;
    double worst_violation = 0.0;
    std::vector<std::string> notes;

    bool all_ok() const {
        return closed_ok && contains_negative_set && bounded_ok && star_shaped_ok && symmetry_ok && box_ok;
    }
};

/// Structural admissibility of a candidate continuation set. Never throws.
inline ClassCheckReport class_membership_check(const QuadraticProblem& p, const StarBoundary& b, double tol,
                                               double rho_cap = 1e6) {
    ClassCheckReport rep;
    const double beta = p.beta();
    auto violate = [&](double amount) { rep.worst_violation = std::max(rep.worst_violation, amount); };

    rep.notes.push_back("closedness and star shape follow from the radial parametrization");
    for (double rho : b.radii()) {
        if (rho < beta - tol) {
            rep.contains_negative_set = false;
            violate(beta - rho);
        }
        if (!std::isfinite(rho) || rho > rho_cap) {
            rep.bounded_ok = false;
            violate(std::isfinite(rho) ? rho - rho_cap : std::numeric_limits<double>::infinity());
        }
    }

    const auto& grid = b.grid();
    for (int k = 0; k < grid.dim(); ++k) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            std::size_t m = 0;
            try {
                m = grid.mirror_index(i, k);
            } catch (const std::domain_error&) {
                rep.symmetry_ok = false;
                rep.notes.push_back("grid is not closed under coordinate reflection " + std::to_string(k));
                break;
            }
            const double diff = std::abs(b.radii()[i] - b.radii()[m]);
            if (diff > tol) {
                rep.symmetry_ok = false;
                violate(diff);
            }
        }
    }

    if (p.dim() == 2) {
        try {
            const double R = oracles::symmetric_radius(2, p.r());
            // Scale so the smaller coefficient is 1; alpha^2 = lambda_max / lambda_min.
            const auto& l = p.lambdas();
            const int big = l[1] >= l[0] ? 1 : 0;
            const double alpha2 = l[big] / l[1 - big];
            double lim[2];
            lim[1 - big] = alpha2 * R;
            lim[big] = R;
            for (std::size_t i = 0; i < b.size(); ++i) {
                const Point x = b.node_point(p, i);
                const double over = std::min(std::abs(x[0]) - lim[0], std::abs(x[1]) - lim[1]);
                if (over > tol) {
                    rep.box_ok = false;
                    violate(over);
                }
            }
        } catch (const std::exception& e) {
            rep.box_ok = false;
            rep.notes.push_back(std::string("box check failed: ") + e.what());
        }
    } else {
        rep.notes.push_back("stopping box check applies to d = 2 only");
    }
    return rep;
}

}  // namespace martin
