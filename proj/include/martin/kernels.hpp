#pragma once

// Transition density, r-Green kernel and Martin kernel of the d-dimensional
// Wiener process killed at exponential rate r, together with r-harmonic
// mixtures of exponentials and the line integral of the Green kernel.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "martin/errors.hpp"
#include "martin/point.hpp"
#include "martin/quadrature.hpp"
#include "martin/specfun.hpp"

namespace martin {

struct KillingConfig {
    double r = 1.0;  // discount rate, 1/time
    int d = 2;       // dimension

    void validate() const {
        if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("KillingConfig: r must be positive");
        if (d < 1) throw std::domain_error("KillingConfig: d must be >= 1");
    }
    double sqrt2r() const { return std::sqrt(2.0 * r); }
};

/// A point a of the sphere ||a||^2 = 2r indexing the Martin boundary.
class MartinDirection {
public:
    MartinDirection(const KillingConfig& cfg, std::vector<double> a) : a_(std::move(a)) {
        cfg.validate();
        require_same_dim(a_.size(), static_cast<std::size_t>(cfg.d), "MartinDirection");
        const double n2 = dot(a_, a_);
        if (std::abs(n2 - 2.0 * cfg.r) > 1e-12 * 2.0 * cfg.r)
            throw std::domain_error("MartinDirection: ||a||^2 must equal 2r");
    }

    /// Rescales any nonzero vector onto the sphere ||a||^2 = 2r.
    static MartinDirection normalized(const KillingConfig& cfg, std::vector<double> raw) {
        const double n = norm(raw);
        if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("MartinDirection: zero direction");
        const double s = cfg.sqrt2r() / n;
        for (double& v : raw) v *= s;
        return MartinDirection(cfg, std::move(raw));
    }

    std::span<const double> coords() const noexcept { return a_; }
    std::size_t dim() const noexcept { return a_.size(); }
    double operator[](std::size_t i) const { return a_[i]; }

private:
    std::vector<double> a_;
};

struct MixtureAtom {
    MartinDirection a;
    double weight;
};

/// Finite measure on the sphere ||a||^2 = 2r with finitely many atoms.
struct DiscreteMixture {
    std::vector<MixtureAtom> atoms;

    double total_weight() const {
        double s = 0.0;
        for (const auto& at : atoms) s += at.weight;
        return s;
    }

    /// n equally spaced atoms on the circle (d = 2) sharing total weight `total`.
    static DiscreteMixture uniform_circle(const KillingConfig& cfg, int n, double total = 1.0) {
        if (cfg.d != 2) throw std::domain_error("uniform_circle: d must be 2");
        if (n < 1) throw std::domain_error("uniform_circle: n must be >= 1");
        DiscreteMixture mu;
        mu.atoms.reserve(n);
        const double k = cfg.sqrt2r();
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * std::numbers::pi * i / n;
            mu.atoms.push_back({MartinDirection::normalized(cfg, {k * std::cos(t), k * std::sin(t)}), total / n});
        }
        return mu;
    }
};

inline double transition_density(const KillingConfig& cfg, double t, const Point& x, const Point& y) {
    cfg.validate();
    if (!(t > 0.0)) throw std::domain_error("transition_density: t must be positive");
    require_same_dim(x.dim(), static_cast<std::size_t>(cfg.d), "transition_density");
    require_same_dim(y.dim(), static_cast<std::size_t>(cfg.d), "transition_density");
    const double s = distance(x, y);
    return std::pow(2.0 * std::numbers::pi * t, -0.5 * cfg.d) * std::exp(-s * s / (2.0 * t));
}

/// log G_r at separation s = ||x - y||; s > 0 is required for d >= 2.
inline double log_green_kernel_at_distance(const KillingConfig& cfg, double s) {
    cfg.validate();
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("green_kernel: distance must be finite and >= 0");
    const double k = cfg.sqrt2r();
    if (cfg.d == 1) return -k * s - std::log(k);
    if (s == 0.0) throw SingularityError("green_kernel: singular at x = y for d >= 2");
    const auto order = specfun::HalfIntOrder::for_dimension(cfg.d);
    const double d = cfg.d;
    return std::log(2.0) - 0.5 * d * std::log(2.0 * std::numbers::pi) +
           0.25 * (2.0 - d) * std::log(s * s / (2.0 * cfg.r)) + specfun::log_bessel_K(order, k * s);
}

inline double green_kernel_at_distance(const KillingConfig& cfg, double s) {
    return std::exp(log_green_kernel_at_distance(cfg, s));
}

inline double green_kernel(const KillingConfig& cfg, const Point& x, const Point& y) {
    require_same_dim(x.dim(), static_cast<std::size_t>(cfg.d), "green_kernel");
    require_same_dim(y.dim(), static_cast<std::size_t>(cfg.d), "green_kernel");
    return green_kernel_at_distance(cfg, distance(x, y));
}

/// Martin kernel exp(sqrt(2r) a.y / ||a||), which is exp(a.y) on the sphere.
inline double martin_kernel(const KillingConfig& cfg, const MartinDirection& a, const Point& y) {
    require_same_dim(a.dim(), y.dim(), "martin_kernel");
    require_same_dim(y.dim(), static_cast<std::size_t>(cfg.d), "martin_kernel");
    return std::exp(cfg.sqrt2r() * dot(a.coords(), y.coords()) / norm(a.coords()));
}

/// G_r(x, y) / G_r(x, 0) evaluated as a difference of log Macdonald values.
inline double green_ratio(const KillingConfig& cfg, const Point& x, const Point& y) {
    cfg.validate();
    if (cfg.d < 2) throw std::domain_error("green_ratio: requires d >= 2");
    require_same_dim(x.dim(), static_cast<std::size_t>(cfg.d), "green_ratio");
    require_same_dim(y.dim(), static_cast<std::size_t>(cfg.d), "green_ratio");
    const double nx = norm(x.coords());
    const double nxy = distance(x, y);
    if (nx == 0.0) throw SingularityError("green_ratio: x = 0");
    if (nxy == 0.0) throw SingularityError("green_ratio: x = y");
    const auto order = specfun::HalfIntOrder::for_dimension(cfg.d);
    const double k = cfg.sqrt2r();
    const double log_ratio = order.value() * std::log(nx / nxy) + specfun::log_bessel_K(order, k * nxy) -
                             specfun::log_bessel_K(order, k * nx);
    return std::exp(log_ratio);
}

/// f_mu(x) = sum of weight * exp(a.x) over the atoms of mu.
inline double harmonic_mixture(const KillingConfig& cfg, const DiscreteMixture& mu, const Point& x) {
    if (mu.atoms.empty()) throw std::domain_error("harmonic_mixture: empty mixture");
    require_same_dim(x.dim(), static_cast<std::size_t>(cfg.d), "harmonic_mixture");
    double s = 0.0;
    for (const auto& at : mu.atoms) s += at.weight * std::exp(dot(at.a.coords(), x.coords()));
    return s;
}

struct HyperplaneResult {
    double lhs;            // 4r * line integral of G_r(x, .) over H
    double rhs;            // exp(-|a.x - b|)
    double line_integral;  // integral of G_r(x, .) over H with arc length
};

/// Integral of G_r(x, y) over the line H = {y : a.y = b} in d = 2.
///
/// The line is parametrised from the foot point of x; the part within
/// max(h, 1/k) of the foot point uses a logarithmic radial variable, which
/// removes the K0 log singularity when x lies on H. The tail is walked in
/// doubling panels until the integrand stays below 1e-16 of its running
/// maximum for three consecutive panels.
inline HyperplaneResult hyperplane_identity(const KillingConfig& cfg, const MartinDirection& a, double b,
                                            const Point& x) {
    cfg.validate();
    if (cfg.d != 2) throw std::domain_error("hyperplane_identity: only d = 2 is supported");
    require_same_dim(x.dim(), 2, "hyperplane_identity");
    const double k = cfg.sqrt2r();
    const double ax_b = dot(a.coords(), x.coords()) - b;
    const double h = std::abs(ax_b) / norm(a.coords());
    auto integrand = [&](double s) { return green_kernel_at_distance(cfg, std::hypot(h, s)); };

    const quad::Tolerance tol{1e-16, 1e-13, 4000};
    const double s0 = std::max(h, 1.0 / k);
    // Core [0, s0] with s = s0 e^t, t in [-50, 0].
    auto core = [&](double t) {
        const double s = s0 * std::exp(t);
        return integrand(s) * s;
    };
    double half = quad::integrate_or_throw(core, -50.0, 0.0, tol);

    double running_max = integrand(0.0 + (h > 0.0 ? 0.0 : s0 * 1e-22));
    int quiet = 0;
    double lo = s0;
    while (quiet < 3) {
        const double hi = 2.0 * lo;
        half += quad::integrate_or_throw(integrand, lo, hi, tol);
        const double end_value = integrand(hi);
        running_max = std::max(running_max, end_value);
        quiet = (end_value < 1e-16 * running_max) ? quiet + 1 : 0;
        lo = hi;
    }
    const double line = 2.0 * half;
    return {4.0 * cfg.r * line, std::exp(-std::abs(ax_b)), line};
}

}  // namespace martin
