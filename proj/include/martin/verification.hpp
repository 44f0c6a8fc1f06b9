#pragma once

// Certification of a candidate continuation set C: the Green-kernel
// representation V = g - int_C G_r(., y) (r - L) g(y) dy, majorant and
// boundary residual checks, Monte Carlo evaluation of the induced stopping
// rule, the Green-measure identity for exit times, and growth diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "martin/errors.hpp"
#include "martin/kernels.hpp"
#include "martin/parallel.hpp"
#include "martin/problem.hpp"
#include "martin/quadrature.hpp"
#include "martin/specfun.hpp"

namespace martin {

struct GreenOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-13;
    int max_panels = 4000;
    // d = 3 only: Monte Carlo sample count and seed.
    std::int64_t samples = 1000000;
    std::uint64_t seed = 20240601;
};

struct GreenIntegral {
    double value = 0.0;  // int_C G_r(x, y) r (g(y) - beta^2) dy
    double scale = 0.0;  // r beta^2 int_C G_r(x, y) dy, the natural size of `value`
    double error = 0.0;  // quadrature error estimate, or Monte Carlo standard error (d = 3)

    double normalized() const { return scale > 0.0 ? value / scale : 0.0; }
};

namespace detail {

inline double green2(double k, double s) { return specfun::bessel_K(specfun::HalfIntOrder(0), k * s) / std::numbers::pi; }

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent engine for stream `index` under `seed`.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(mix64(seed ^ index))};
    return std::mt19937_64(seq);
}

// Nested adaptive quadrature over C = {s < rho(theta)} in affine polar
// coordinates (d = 2), using the trigonometric interpolant of the radii.
// The ray integral is split at the point closest to x and the angular one
// at the polar angle of x, which isolates the logarithmic singularity.
template <class Weight>
GreenIntegral green_integral_2d(const QuadraticProblem& p, const StarBoundary& b, const Point& x, Weight&& weight,
                                double abs_tol, double rel_tol, int max_panels) {
    const double k = std::sqrt(2.0 * p.r());
    const double l0 = std::sqrt(p.lambdas()[0]);
    const double l1 = std::sqrt(p.lambdas()[1]);
    const double jac = 1.0 / (l0 * l1);
    const auto pol = p.to_polar(x);
    double theta_x = std::atan2(pol.omega[1], pol.omega[0]);
    if (theta_x < 0.0) theta_x += 2.0 * std::numbers::pi;

    bool inner_failed = false;
    double inner_err = 0.0;
    const quad::Tolerance inner_tol{abs_tol * 1e-2, rel_tol * 1e-2, max_panels};
    auto ray = [&](double theta) {
        const double ex = std::cos(theta) / l0;
        const double ey = std::sin(theta) / l1;
        const double e2 = ex * ex + ey * ey;
        const double rho = b.radius_trig(theta);
        const double s_star = (x[0] * ex + x[1] * ey) / e2;
        auto f = [&](double s) {
            const double dist = std::hypot(s * ex - x[0], s * ey - x[1]);
            if (dist == 0.0) return 0.0;  // integrable log singularity, measure zero
            return green2(k, dist) * weight(s) * s;
        };
        const double bp[1] = {s_star};
        const auto res = quad::integrate(f, 0.0, rho, inner_tol, std::span<const double>(bp, 1));
        if (!res.converged) inner_failed = true;
        inner_err += res.error;
        return res.value * jac;
    };
    const double bp[1] = {theta_x};
    const auto outer = quad::integrate(ray, 0.0, 2.0 * std::numbers::pi,
                                       quad::Tolerance{abs_tol, rel_tol, max_panels},
                                       std::span<const double>(bp, 1));
    if (!outer.converged || inner_failed)
        throw QuadratureError("green integral over C did not reach tolerance", outer.value, outer.error + inner_err);
    GreenIntegral out;
    out.value = outer.value;
    out.error = outer.error;
    return out;
}

}  // namespace detail

/// E(x) = int_C G_r(x, y) (r - L) g(y) dy together with its scale
/// r beta^2 int_C G_r(x, y) dy. Adaptive quadrature for d = 2, Monte Carlo
/// with the closed-form Yukawa kernel for d = 3.
inline GreenIntegral green_integral_over_C(const QuadraticProblem& p, const StarBoundary& b, const Point& x,
                                           const GreenOptions& opt = {}) {
    require_same_dim(x.dim(), static_cast<std::size_t>(p.dim()), "green_integral_over_C");
    if (b.dim() != p.dim()) throw std::domain_error("green_integral_over_C: boundary dimension mismatch");
    const double r = p.r();
    const double b2 = p.beta_squared();
    if (p.dim() == 2) {
        // The scale integrand is positive, so a relative tolerance is
        // meaningful; E itself vanishes on the boundary and gets an absolute
        // tolerance derived from the scale.
        const auto S = detail::green_integral_2d(p, b, x, [&](double) { return r * b2; }, opt.abs_tol, opt.rel_tol,
                                                 opt.max_panels);
        auto E = detail::green_integral_2d(p, b, x, [&](double s) { return r * (s * s - b2); },
                                           std::max(opt.abs_tol, opt.rel_tol * S.value), opt.rel_tol, opt.max_panels);
        E.scale = S.value;
        return E;
    }
    if (p.dim() != 3) throw std::domain_error("green_integral_over_C: d must be 2 or 3");

    // y = s omega / sqrt(lambda), omega uniform on S^2, s uniform on [0, rho(omega)]:
    // dy = s^2 ds d omega / sqrt(prod lambda), sampling density 1 / (4 pi rho(omega)).
    const double k = std::sqrt(2.0 * r);
    const double jac = 1.0 / std::sqrt(p.lambdas()[0] * p.lambdas()[1] * p.lambdas()[2]);
    constexpr std::int64_t kBlock = 4096;
    const std::int64_t blocks = (opt.samples + kBlock - 1) / kBlock;
    std::vector<std::array<double, 4>> sums(blocks, {0.0, 0.0, 0.0, 0.0});
    parallel_for(static_cast<std::size_t>(blocks), 1, [&](std::size_t blk) {
        auto eng = detail::stream_engine(opt.seed, blk);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;
        auto& acc = sums[blk];
        const std::int64_t lo = static_cast<std::int64_t>(blk) * kBlock;
        const std::int64_t hi = std::min(opt.samples, lo + kBlock);
        for (std::int64_t n = lo; n < hi; ++n) {
            double w[3] = {normal(eng), normal(eng), normal(eng)};
            const double nw = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
            for (double& v : w) v /= nw;
            const double rho = b.radius_at(w);
            const double s = rho * unif(eng);
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double dy = s * w[c] / std::sqrt(p.lambdas()[c]) - x[c];
                d2 += dy * dy;
            }
            const double dist = std::sqrt(d2);
            const double G = dist > 0.0 ? std::exp(-k * dist) / (2.0 * std::numbers::pi * dist) : 0.0;
            const double base = 4.0 * std::numbers::pi * rho * G * s * s * jac;
            const double e = base * r * (s * s - b2);
            const double sc = base * r * b2;
            acc[0] += e;
            acc[1] += e * e;
            acc[2] += sc;
        }
    });
    double s1 = 0.0, s2 = 0.0, sc = 0.0;
    for (const auto& a : sums) {
        s1 += a[0];
        s2 += a[1];
        sc += a[2];
    }
    const double n = static_cast<double>(opt.samples);
    GreenIntegral out;
    out.value = s1 / n;
    out.scale = sc / n;
    out.error = std::sqrt(std::max(0.0, s2 / n - out.value * out.value) / (n - 1.0));
    return out;
}

/// V(x) = g(x) - E(x).
inline double value(const QuadraticProblem& p, const StarBoundary& b, const Point& x, const GreenOptions& opt = {}) {
    return p.reward(x) - green_integral_over_C(p, b, x, opt).value;
}

/// Direct 2-d quadrature of int_C exp(a.y) (r - L) g(y) dy (d = 2) and the
/// same integral with |(r - L) g| as its scale; no radial closed form used.
inline std::pair<double, double> martin_integral_direct(const QuadraticProblem& p, const StarBoundary& b,
                                                        const MartinDirection& a, double rel_tol = 1e-11) {
    if (p.dim() != 2 || b.dim() != 2) throw std::domain_error("martin_integral_direct: d must be 2");
    const double l0 = std::sqrt(p.lambdas()[0]);
    const double l1 = std::sqrt(p.lambdas()[1]);
    const double r = p.r();
    const double b2 = p.beta_squared();
    auto integral = [&](bool absolute, double abs_tol) {
        auto ray = [&](double theta) {
            const double ex = std::cos(theta) / l0;
            const double ey = std::sin(theta) / l1;
            const double ae = a[0] * ex + a[1] * ey;
            auto f = [&](double s) {
                const double gen = r * (s * s - b2);
                return std::exp(ae * s) * (absolute ? std::abs(gen) : gen) * s;
            };
            const double bp[1] = {std::sqrt(b2)};
            return quad::integrate_or_throw(f, 0.0, b.radius_trig(theta),
                                            quad::Tolerance{abs_tol * 1e-2, rel_tol * 1e-2, 4000},
                                            std::span<const double>(bp, 1)) /
                   (l0 * l1);
        };
        return quad::integrate_or_throw(ray, 0.0, 2.0 * std::numbers::pi, quad::Tolerance{abs_tol, rel_tol, 4000});
    };
    const double scale = integral(true, 0.0);
    return {integral(false, rel_tol * scale), scale};
}

struct MajorantScan {
    double min_gap = std::numeric_limits<double>::infinity();  // min of V - g over scanned points
    Point argmin;
    int points_used = 0;
};

/// Points of an n x n grid over the bounding box of C that lie strictly
/// inside C, at most `shrink` of the boundary radius along their ray (d = 2).
inline std::vector<Point> interior_scan_grid(const QuadraticProblem& p, const StarBoundary& b, int n,
                                             double shrink = 0.98) {
    if (p.dim() != 2) throw std::domain_error("interior_scan_grid: d must be 2");
    double xmax = 0.0, ymax = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Point y = b.node_point(p, i);
        xmax = std::max(xmax, std::abs(y[0]));
        ymax = std::max(ymax, std::abs(y[1]));
    }
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Point x{-xmax + 2.0 * xmax * (i + 0.5) / n, -ymax + 2.0 * ymax * (j + 0.5) / n};
            const auto pol = p.to_polar(x);
            if (pol.degenerate || pol.rho < shrink * b.radius_at(pol.omega)) pts.push_back(x);
        }
    }
    return pts;
}

/// Minimum of V - g = -E over the given points; points outside C are skipped.
inline MajorantScan majorant_gap_scan(const QuadraticProblem& p, const StarBoundary& b,
                                      const std::vector<Point>& scan_grid, const GreenOptions& opt = {}) {
    MajorantScan out;
    for (const auto& x : scan_grid) {
        if (!b.contains(p, x)) continue;
        const double gap = -green_integral_over_C(p, b, x, opt).value;
        ++out.points_used;
        if (gap < out.min_gap) {
            out.min_gap = gap;
            out.argmin = x;
        }
    }
    return out;
}

struct MCConfig {
    std::int64_t paths = 100000;
    double time_step = 1e-3;
    double horizon = 50.0;
    std::uint64_t seed = 12345;
    int threads = 1;

    void validate() const {
        if (paths < 100) throw std::domain_error("MCConfig: paths must be >= 100");
        if (!(time_step > 0.0) || !(horizon > 0.0)) throw std::domain_error("MCConfig: time_step and horizon must be positive");
        if (time_step > horizon) throw std::domain_error("MCConfig: time_step must not exceed horizon");
    }
};

struct MCEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t truncated = 0;  // paths that reached the horizon
};

/// E[e^{-r tau} g(X_tau)] for tau the first grid time with X in the stopping
/// set (polar radius >= linearly interpolated boundary radius). Each path
/// owns an RNG stream keyed by (seed, path index), so the result does not
/// depend on the thread count.
inline MCEstimate mc_value(const QuadraticProblem& p, const StarBoundary& b, const Point& x0, const MCConfig& cfg) {
    cfg.validate();
    require_same_dim(x0.dim(), static_cast<std::size_t>(p.dim()), "mc_value");
    if (!b.contains(p, x0)) return {p.reward(x0), 0.0, 0};
    const int d = p.dim();
    const double sq = std::sqrt(cfg.time_step);
    const std::int64_t max_steps = static_cast<std::int64_t>(std::ceil(cfg.horizon / cfg.time_step));
    std::vector<double> payoff(cfg.paths);
    std::vector<char> truncated(cfg.paths, 0);
    parallel_for(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t path) {
        auto eng = detail::stream_engine(cfg.seed, path);
        std::normal_distribution<double> normal;
        Point x = x0;
        std::int64_t step = 0;
        while (true) {
            ++step;
            for (int c = 0; c < d; ++c) x[c] += sq * normal(eng);
            const double t = step * cfg.time_step;
            if (!b.contains(p, x)) {
                payoff[path] = std::exp(-p.r() * t) * p.reward(x);
                return;
            }
            if (step >= max_steps) {
                payoff[path] = std::exp(-p.r() * t) * p.reward(x);
                truncated[path] = 1;
                return;
            }
        }
    });
    double s1 = 0.0, s2 = 0.0;
    std::int64_t nt = 0;
    for (std::int64_t i = 0; i < cfg.paths; ++i) {
        s1 += payoff[i];
        s2 += payoff[i] * payoff[i];
        nt += truncated[i];
    }
    const double n = static_cast<double>(cfg.paths);
    const double mean = s1 / n;
    return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0)), nt};
}

struct Rectangle {
    double x0, x1, y0, y1;
};

/// G_r(x, H) = int_H G_r(x, y) dy for an axis-parallel rectangle (d = 2).
///
/// The rectangle is split into signed rectangles having x as a corner, each
/// split into two right triangles with apex x. In polar coordinates about x
/// the radial integral is closed form,
///   int_0^R s K0(k s) ds / pi = (1 - k R K1(k R)) / (pi k^2),
/// leaving a smooth angular integral.
inline double green_measure(const KillingConfig& cfg, const Rectangle& H, const Point& x) {
    cfg.validate();
    if (cfg.d != 2) throw std::domain_error("green_measure: d must be 2");
    if (!(H.x0 < H.x1 && H.y0 < H.y1)) throw std::domain_error("green_measure: empty rectangle");
    const double k = cfg.sqrt2r();
    auto radial = [&](double R) {
        const double u = k * R;
        if (u > 700.0) return 1.0 / (std::numbers::pi * k * k);
        return (1.0 - u * specfun::bessel_K(specfun::HalfIntOrder(2), u)) / (std::numbers::pi * k * k);
    };
    // Triangle with legs a (adjacent) and b (opposite) at apex x.
    auto triangle = [&](double a, double b) {
        if (a <= 0.0 || b <= 0.0) return 0.0;
        const double phi = std::atan2(b, a);
        return quad::integrate_or_throw([&](double t) { return radial(a / std::cos(t)); }, 0.0, phi,
                                        quad::Tolerance{1e-15, 1e-13, 2000});
    };
    auto corner = [&](double a, double b) { return triangle(a, b) + triangle(b, a); };
    // Signed corner decomposition: for a side [lo, hi] seen from c, the
    // interval is [c, hi] minus [c, lo] (with orientation).
    auto split = [](double lo, double hi, double c, std::array<std::pair<double, double>, 2>& parts) {
        // parts: (length, sign) for the two half-axes from c
        if (c <= lo) {
            parts = {{{hi - c, 1.0}, {lo - c, -1.0}}};
        } else if (c >= hi) {
            parts = {{{c - lo, 1.0}, {c - hi, -1.0}}};
        } else {
            parts = {{{hi - c, 1.0}, {c - lo, 1.0}}};
        }
    };
    std::array<std::pair<double, double>, 2> px{}, py{};
    split(H.x0, H.x1, x[0], px);
    split(H.y0, H.y1, x[1], py);
    double total = 0.0;
    for (const auto& [ax, sx] : px)
        for (const auto& [ay, sy] : py) total += sx * sy * corner(ax, ay);
    return total;
}

struct GreenMeasureCheck {
    double lhs = 0.0;     // G_r(x, H)
    double rhs = 0.0;     // E[e^{-r tau} G_r(X_tau, H)] + E[int_0^tau e^{-r s} 1_H(X_s) ds]
    double std_error = 0.0;
    std::int64_t truncated = 0;
};

/// Both sides of G_r(x, H) = E[e^{-r tau} G_r(X_tau, H)] + E[int_0^tau e^{-rs} 1_H(X_s) ds]
/// for tau the first grid time outside the disc |X - center| < radius.
/// The occupation integral uses the left-point rule on the simulation grid.
inline GreenMeasureCheck green_measure_identity_check(const KillingConfig& cfg, const Rectangle& H, const Point& x,
                                                      const Point& center, double radius, const MCConfig& mc) {
    cfg.validate();
    mc.validate();
    if (cfg.d != 2) throw std::domain_error("green_measure_identity_check: d must be 2");
    GreenMeasureCheck out;
    out.lhs = green_measure(cfg, H, x);
    if (!(distance(x, center) < radius)) {
        out.rhs = out.lhs;  // tau = 0
        return out;
    }
    const double dt = mc.time_step;
    const double sq = std::sqrt(dt);
    const std::int64_t max_steps = static_cast<std::int64_t>(std::ceil(mc.horizon / dt));
    std::vector<double> sample(mc.paths);
    std::vector<char> truncated(mc.paths, 0);
    auto inside_H = [&](const Point& y) { return y[0] >= H.x0 && y[0] <= H.x1 && y[1] >= H.y0 && y[1] <= H.y1; };
    parallel_for(static_cast<std::size_t>(mc.paths), mc.threads, [&](std::size_t path) {
        auto eng = detail::stream_engine(mc.seed, path);
        std::normal_distribution<double> normal;
        Point y = x;
        double occupation = 0.0;
        std::int64_t step = 0;
        while (true) {
            const double t = step * dt;
            if (inside_H(y)) occupation += std::exp(-cfg.r * t) * dt;
            ++step;
            y[0] += sq * normal(eng);
            y[1] += sq * normal(eng);
            const double t1 = step * dt;
            if (!(distance(y, center) < radius)) {
                sample[path] = occupation + std::exp(-cfg.r * t1) * green_measure(cfg, H, y);
                return;
            }
            if (step >= max_steps) {
                // min(tau, horizon) is again a stopping time, so the identity still holds.
                sample[path] = occupation + std::exp(-cfg.r * t1) * green_measure(cfg, H, y);
                truncated[path] = 1;
                return;
            }
        }
    });
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t i = 0; i < mc.paths; ++i) {
        s1 += sample[i];
        s2 += sample[i] * sample[i];
        out.truncated += truncated[i];
    }
    const double n = static_cast<double>(mc.paths);
    out.rhs = s1 / n;
    out.std_error = std::sqrt(std::max(0.0, s2 / n - out.rhs * out.rhs) / (n - 1.0));
    return out;
}

/// For each radius z: max over `angles` directions of g(x) / I0(sqrt(2r) z)
/// with ||x|| = z (d = 2). I0 is taken in scaled form so large z is fine.
template <class Reward>
std::vector<double> finiteness_ratio_scan(const QuadraticProblem& p, const std::vector<double>& radii, Reward&& reward,
                                          int angles = 360) {
    if (p.dim() != 2) throw std::domain_error("finiteness_ratio_scan: d must be 2");
    const double k = std::sqrt(2.0 * p.r());
    std::vector<double> out;
    out.reserve(radii.size());
    for (double z : radii) {
        if (!(z >= 0.0)) throw std::domain_error("finiteness_ratio_scan: radii must be >= 0");
        const double u = k * z;
        const double log_i0 = std::log(specfun::bessel_I_scaled(0, u)) + u;
        double best = 0.0;
        for (int a = 0; a < angles; ++a) {
            const double t = 2.0 * std::numbers::pi * a / angles;
            const double g = reward(Point{z * std::cos(t), z * std::sin(t)});
            if (g > 0.0) best = std::max(best, std::exp(std::log(g) - log_i0));
        }
        out.push_back(best);
    }
    return out;
}

inline std::vector<double> finiteness_ratio_scan(const QuadraticProblem& p, const std::vector<double>& radii) {
    return finiteness_ratio_scan(p, radii, [&](const Point& x) { return p.reward(x); });
}

struct VerificationReport {
    std::vector<double> boundary_residuals;  // normalized E at boundary nodes
    std::vector<double> exterior_residuals;  // normalized E at exterior probe points
    double majorant_min_gap = 0.0;
    int majorant_points = 0;
    double mc_value = 0.0;
    double mc_stderr = 0.0;
    double reconstructed_value = 0.0;  // V(0)
    ClassCheckReport class_check;
};

}  // namespace martin
