#pragma once

// Globally adaptive Gauss-Kronrod integration with absolute and relative
// tolerances, plus Gauss-Legendre rule generation.
//
// Panel rules come from Boost.Math (21-point Kronrod extension of the
// 10-point Gauss rule). The subdivision strategy is the classical QAG one:
// always bisect the panel with the largest error estimate.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "martin/errors.hpp"

namespace martin::quad {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
    bool converged = false;
};

struct Tolerance {
    double abs = 1e-12;
    double rel = 1e-10;
    int max_panels = 4000;
};

namespace detail {

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk21_panel(F& f, double a, double b) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 0, 0.0, &err);
    // Boost reports |K21 - G10| on the reference interval [-1, 1]; rescale
    // it to [a, b] so it is comparable with the panel value.
    return {a, b, v, err * 0.5 * (b - a)};
}

}  // namespace detail

/// Integrates f over [a, b]. Interior breakpoints (kinks, log singularities)
/// seed the initial panels; singular points must be breakpoints or endpoints,
/// since Kronrod nodes never touch panel ends. Never throws on
/// non-convergence: check QuadResult::converged.
template <class F>
QuadResult integrate(F&& f, double a, double b, Tolerance tol = {},
                     std::span<const double> breakpoints = {}) {
    if (!(a <= b)) throw std::domain_error("quad::integrate: requires a <= b");
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::vector<double> edges;
    edges.reserve(breakpoints.size() + 2);
    edges.push_back(a);
    for (double p : breakpoints)
        if (p > a && p < b) edges.push_back(p);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto p = detail::gk21_panel(f, edges[i], edges[i + 1]);
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    int panels = static_cast<int>(heap.size());
    while (total_err > std::max(tol.abs, tol.rel * std::abs(total)) && panels < tol.max_panels) {
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // panel at machine resolution
        heap.pop();
        auto left = detail::gk21_panel(f, worst.a, mid);
        auto right = detail::gk21_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    // Re-sum to shed the drift of incremental updates.
    total = 0.0;
    total_err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        total_err += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = total_err;
    out.panels = panels;
    out.converged = total_err <= std::max(tol.abs, tol.rel * std::abs(total));
    return out;
}

/// Same as integrate() but throws QuadratureError when the tolerance is not met.
template <class F>
double integrate_or_throw(F&& f, double a, double b, Tolerance tol = {},
                          std::span<const double> breakpoints = {}) {
    const auto r = integrate(f, a, b, tol, breakpoints);
    if (!r.converged)
        throw QuadratureError("adaptive quadrature did not reach tolerance within " +
                                  std::to_string(tol.max_panels) + " panels",
                              r.value, r.error);
    return r.value;
}

struct GaussRule {
    std::vector<double> nodes;    // ascending, in (-1, 1)
    std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline GaussRule gauss_legendre(int n) {
    if (n < 1) throw std::domain_error("gauss_legendre: n must be >= 1");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace martin::quad
