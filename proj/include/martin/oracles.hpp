#pragma once

// Independent reference computations: a bracketing root finder, adaptive
// quadrature, and the radius of the optimal stopping sphere for the
// symmetric quadratic reward ||x||^2.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "martin/quadrature.hpp"
#include "martin/specfun.hpp"

namespace martin::oracles {

/// Interval [lo, hi] on which f changes sign; checked at construction.
class Bracket {
public:
    template <class F>
    Bracket(F&& f, double lo, double hi) : lo_(lo), hi_(hi) {
        if (!(lo < hi)) throw std::domain_error("Bracket: requires lo < hi");
        flo_ = f(lo);
        fhi_ = f(hi);
        if (!(flo_ * fhi_ <= 0.0)) throw std::domain_error("Bracket: no sign change on [lo, hi]");
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double f_lo() const noexcept { return flo_; }
    double f_hi() const noexcept { return fhi_; }

private:
    double lo_, hi_, flo_, fhi_;
};

/// Called after every iteration with the current bracketing interval.
using BracketObserver = std::function<void(double lo, double hi)>;

/// Brent's method (inverse quadratic interpolation, secant, bisection).
/// Root to absolute tolerance `tol`; throws after 200 iterations.
template <class F>
double brent_root(F&& f, const Bracket& bracket, double tol, const BracketObserver& observe = {}) {
    double a = bracket.lo();
    double b = bracket.hi();
    double fa = bracket.f_lo();
    double fb = bracket.f_hi();
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < 200; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        if (observe) observe(std::min(b, c), std::max(b, c));
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    throw std::runtime_error("brent_root: no convergence within 200 iterations");
}

/// Adaptive Gauss-Kronrod quadrature to absolute/relative tolerance `tol`.
template <class F>
double quad_adaptive_1d(F&& f, double a, double b, double tol) {
    return quad::integrate_or_throw(f, a, b, quad::Tolerance{tol, tol, 20000});
}

/// Dimensionless root w* of the smooth-fit condition for the symmetric
/// reward: w I1(w) / I0(w) = 2 for d = 2, tanh(w) = w / 3 for d = 3.
inline double symmetric_w_star(int d) {
    if (d == 2) {
        auto f = [](double w) { return w * specfun::bessel_I(1, w) / specfun::bessel_I(0, w) - 2.0; };
        return brent_root(f, Bracket(f, 2.0, 3.0), 1e-15);
    }
    if (d == 3) {
        auto f = [](double w) { return std::tanh(w) - w / 3.0; };
        return brent_root(f, Bracket(f, 2.5, 3.0), 1e-15);
    }
    throw std::domain_error("symmetric_radius: d must be 2 or 3, got " + std::to_string(d));
}

/// Radius R of the optimal stopping sphere for g(x) = ||x||^2, discount r.
inline double symmetric_radius(int d, double r) {
    if (!(r > 0.0)) throw std::domain_error("symmetric_radius: r must be positive");
    return symmetric_w_star(d) / std::sqrt(2.0 * r);
}

/// Radial profile of the symmetric-case value function: A h(k z) inside the
/// ball with h = I0 (d = 2) or sinh(u)/u (d = 3), and z^2 outside.
inline double symmetric_value(int d, double r, double z) {
    const double R = symmetric_radius(d, r);
    if (z >= R) return z * z;
    const double k = std::sqrt(2.0 * r);
    auto h = [d](double u) {
        if (d == 2) return specfun::bessel_I(0, u);
        return u == 0.0 ? 1.0 : std::sinh(u) / u;
    };
    return R * R * h(k * z) / h(k * R);
}

/// Stopping radius of the 2-d symmetric problem from the discrete obstacle
/// problem min((r - L)V, V - z^2) = 0 for the Bessel(2) generator
/// L = (V'' + V'/z) / 2, solved by policy iteration (Howard's algorithm) on
/// `points` uniform nodes over [0, z_max] with V = z^2 imposed at z_max.
/// Returns the first node of the stopping region.
inline double symmetric_radius_value_iteration(double r, double z_max, int points) {
    if (points < 10) throw std::domain_error("value iteration: too few grid points");
    if (!(r > 0.0) || !(z_max > 0.0)) throw std::domain_error("value iteration: r and z_max must be positive");
    const int n = points;
    const double h = z_max / (n - 1);
    std::vector<double> z(n), g(n);
    for (int i = 0; i < n; ++i) {
        z[i] = i * h;
        g[i] = z[i] * z[i];
    }
    // Tridiagonal rows of (r - L); at z = 0 symmetry gives L V = V''(0).
    std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0);
    di[0] = r + 2.0 / (h * h);
    up[0] = -2.0 / (h * h);
    for (int i = 1; i < n - 1; ++i) {
        const double a = 0.5 / (h * h);
        const double c = 0.25 / (h * z[i]);
        lo[i] = -(a - c);
        di[i] = r + 2.0 * a;
        up[i] = -(a + c);
    }
    auto apply = [&](const std::vector<double>& V, int i) {
        double s = di[i] * V[i];
        if (i > 0) s += lo[i] * V[i - 1];
        if (i + 1 < n) s += up[i] * V[i + 1];
        return s;
    };

    std::vector<char> stop(n, 1);
    std::vector<double> V = g;
    std::vector<double> B(n), C(n), D(n);
    for (int iter = 0; iter < n + 2; ++iter) {
        bool changed = false;
        for (int i = 0; i < n - 1; ++i) {
            const char want = (V[i] - g[i] <= apply(V, i)) ? 1 : 0;
            if (want != stop[i]) {
                stop[i] = want;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        // Thomas algorithm on the policy's linear system.
        for (int i = 0; i < n; ++i) {
            B[i] = stop[i] ? 1.0 : di[i];
            C[i] = stop[i] ? 0.0 : up[i];
            D[i] = stop[i] ? g[i] : 0.0;
        }
        for (int i = 1; i < n; ++i) {
            const double a = stop[i] ? 0.0 : lo[i];
            const double m = a / B[i - 1];
            B[i] -= m * C[i - 1];
            D[i] -= m * D[i - 1];
        }
        V[n - 1] = D[n - 1] / B[n - 1];
        for (int i = n - 2; i >= 0; --i) V[i] = (D[i] - C[i] * V[i + 1]) / B[i];
    }
    for (int i = 0; i < n; ++i)
        if (stop[i]) return z[i];
    return z_max;
}

}  // namespace martin::oracles
