// Acceptance suite. One line per criterion: PASS, FAIL or INFO, with the
// measured quantity, its threshold and the wall time against its budget.
//
//   acceptance [--criterion N] [--artifacts DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "martin/io.hpp"
#include "martin/kernels.hpp"
#include "martin/martin_solver.hpp"
#include "martin/oracles.hpp"
#include "martin/problem.hpp"
#include "martin/specfun.hpp"
#include "martin/verification.hpp"

using namespace martin;
using specfun::HalfIntOrder;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
    bool pass;
    std::string detail;
    bool informational = false;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

std::string artifacts_dir = ".";

// ---------------------------------------------------------------- 1

Outcome special_functions() {
    double k_half = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double u = 1e-3 * std::pow(1e5, i / 399.0);
        const double exact = std::sqrt(kPi / (2.0 * u)) * std::exp(-u);
        k_half = std::max(k_half, std::abs(specfun::bessel_K(HalfIntOrder(1), u) / exact - 1.0));
    }
    const double oracle = oracles::quad_adaptive_1d([](double t) { return std::exp(-std::cosh(t)); }, 0.0, 40.0, 1e-15);
    const double k0 = std::abs(specfun::bessel_K(HalfIntOrder(0), 1.0) / oracle - 1.0);
    bool asym = true;
    const double c = std::sqrt(kPi / 2.0);
    for (int twice : {0, 1, 2, 3}) {
        const double nu = 0.5 * twice;
        for (int i = 0; i < 200; ++i) {
            const double u = 20.0 * std::pow(35.0, i / 199.0);
            const double dev = std::abs(std::sqrt(u) * specfun::bessel_K_scaled(HalfIntOrder(twice), u) - c);
            if (dev > c * (std::abs(4.0 * nu * nu - 1.0) / (8.0 * u) + 1.0 / (u * u))) asym = false;
        }
    }
    return {k_half <= 1e-13 && k0 <= 1e-10 && asym,
            "K_1/2 rel err " + sci(k_half) + " (<= 1e-13), K_0(1) rel err " + sci(k0) + " (<= 1e-10), asymptotic bound " +
                (asym ? "holds" : "violated")};
}

// ---------------------------------------------------------------- 2

Outcome green_definition() {
    double worst = 0.0;
    for (int d : {2, 3}) {
        for (double r : {0.5, 1.0}) {
            const KillingConfig cfg{r, d};
            const Point x(static_cast<std::size_t>(d));
            for (int i = 0; i < 5; ++i) {
                for (int j = 0; j < 5; ++j) {
                    Point y(static_cast<std::size_t>(d));
                    y[0] = 0.1 + 4.9 * i / 4.0;
                    y[1] = -2.0 + 4.0 * j / 4.0;
                    const double dist = distance(x, y);
                    auto f = [&](double u) {
                        const double t = std::exp(u);
                        return std::exp(-r * t) * transition_density(cfg, t, x, y) * t;
                    };
                    const double oracle =
                        oracles::quad_adaptive_1d(f, std::log(dist * dist / 2000.0), std::log(60.0 / r), 1e-14);
                    worst = std::max(worst, std::abs(green_kernel(cfg, x, y) / oracle - 1.0));
                }
            }
        }
    }
    return {worst <= 1e-8, "max rel err " + sci(worst) + " (<= 1e-8) over 100 kernel evaluations"};
}

// ---------------------------------------------------------------- 3

Outcome martin_limit() {
    const KillingConfig cfg{1.0, 2};
    const MartinDirection a(cfg, {std::sqrt(2.0), 0.0});
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double rad = 0.2 * (i + 1);
            const double t = 2.0 * kPi * (j + 0.1 * i) / 5.0;
            const Point y{rad * std::cos(t), rad * std::sin(t)};
            worst = std::max(worst, std::abs(green_ratio(cfg, Point{1e4, 0.0}, y) - martin_kernel(cfg, a, y)));
        }
    }
    return {worst <= 1e-3, "max |G(x,y)/G(x,0) - e^{a.y}| = " + sci(worst) + " (<= 1e-3)"};
}

// ---------------------------------------------------------------- 4

Outcome hyperplane() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0, worst_line = 0.0;
    for (double r : {0.5, 1.0}) {
        const KillingConfig cfg{r, 2};
        for (int t = 0; t < 20; ++t) {
            const double ang = kPi * u(rng);
            const auto a = MartinDirection::normalized(cfg, {std::cos(ang), std::sin(ang)});
            const double b = 2.0 * u(rng);
            const Point x{3.0 * u(rng), 3.0 * u(rng)};
            const auto res = hyperplane_identity(cfg, a, b, x);
            worst = std::max(worst, std::abs(res.lhs - res.rhs));
            // The line integral itself against its closed form exp(-|a.x - b|) / sqrt(2r).
            worst_line = std::max(worst_line, std::abs(res.line_integral * cfg.sqrt2r() / res.rhs - 1.0));
        }
    }
    return {worst <= 1e-6, "max |4r int_H G - e^{-|a.x-b|}| = " + sci(worst) +
                               " (<= 1e-6); line quadrature vs exp(-|a.x-b|)/sqrt(2r) rel err " + sci(worst_line)};
}

// ---------------------------------------------------------------- 5

Outcome radial_moment_audit() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int series = 0;
    for (int t = 0; t < 500; ++t) {
        const int d = t % 2 ? 3 : 2;
        const double beta = 0.3 + 4.0 * u(rng);
        const double rho = 0.05 + 3.0 * beta * u(rng);
        const double gamma = (t % 3 == 0 ? 0.5 / rho : 4.0) * (2.0 * u(rng) - 1.0);
        if (std::abs(gamma) * rho < 0.5) ++series;
        auto f = [&](double s) { return std::exp(gamma * s) * (s * s - beta * beta) * std::pow(s, d - 1); };
        auto g = [&](double s) { return std::abs(f(s)); };
        const double split = std::min(rho, beta);
        double value = oracles::quad_adaptive_1d(f, 0.0, split, 1e-14);
        double scale = oracles::quad_adaptive_1d(g, 0.0, split, 1e-14);
        if (rho > beta) {
            value += oracles::quad_adaptive_1d(f, beta, rho, 1e-14);
            scale += oracles::quad_adaptive_1d(g, beta, rho, 1e-14);
        }
        worst = std::max(worst, std::abs(radial_moment(d, rho, gamma, beta) - value) / scale);
    }
    double worst_d = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int d = t % 2 ? 3 : 2;
        const double beta = 0.5 + 3.0 * u(rng);
        const double rho = 0.2 + 2.5 * beta * u(rng);
        const double gamma = 3.0 * (2.0 * u(rng) - 1.0);
        // Five-point stencil; the error is measured against the integrand size
        // plus |m| / rho, the level at which differencing m loses digits.
        const double h = 1e-3 * rho;
        auto m = [&](double s) { return radial_moment(d, s, gamma, beta); };
        const double fd = (m(rho - 2 * h) - 8.0 * m(rho - h) + 8.0 * m(rho + h) - m(rho + 2 * h)) / (12.0 * h);
        const double mag = std::exp(gamma * rho) * (rho * rho + beta * beta) * std::pow(rho, d - 1) +
                           std::abs(m(rho)) / rho;
        worst_d = std::max(worst_d, std::abs(fd - radial_moment_drho(d, rho, gamma, beta)) / mag);
    }
    return {worst <= 1e-10 && worst_d <= 1e-6 && series > 0,
            "closed form vs quadrature " + sci(worst) + " (<= 1e-10, " + std::to_string(series) +
                " samples with |gamma| rho < 0.5), derivative vs FD " + sci(worst_d) + " (<= 1e-6)"};
}

// ---------------------------------------------------------------- 6

Outcome symmetric_2d() {
    const QuadraticProblem p(1.0, {1.0, 1.0});
    const auto [b, rep] = solve_boundary(p, SphereGrid::circle(64), SolveConfig{});
    const double R = oracles::symmetric_radius(2, 1.0);
    const auto [lo, hi] = std::minmax_element(b.radii().begin(), b.radii().end());
    const double spread = *hi - *lo;
    const double dev = std::max(std::abs(*hi - R), std::abs(*lo - R));
    const double vi = oracles::symmetric_radius_value_iteration(1.0, 4.0 * R, 4000);
    const double vi_dev = std::abs(vi - R);
    return {rep.converged && spread <= 1e-6 && dev <= 1e-4 && vi_dev <= 1e-2,
            std::string(rep.converged ? "converged" : "NOT converged") + ", spread " + sci(spread) +
                " (<= 1e-6), |rho - R| " + sci(dev) + " (<= 1e-4), R = " + fmt("%.8f", R) +
                ", value iteration " + fmt("%.5f", vi) + " (|diff| " + sci(vi_dev) + " <= 1e-2)"};
}

// ---------------------------------------------------------------- 7

Outcome symmetric_3d() {
    const QuadraticProblem p(0.5, {1.0, 1.0, 1.0});
    const auto [b, rep] = solve_boundary(p, SphereGrid::sphere(16, 32), SolveConfig{});
    auto th = [](double w) { return std::tanh(w) - w / 3.0; };
    const double w = oracles::brent_root(th, oracles::Bracket(th, 2.5, 3.0), 1e-15);
    double dev = 0.0;
    for (double rho : b.radii()) dev = std::max(dev, std::abs(rho - w));
    return {rep.converged && dev <= 1e-3,
            std::string(rep.converged ? "converged" : "NOT converged") + ", max |rho - w*| " + sci(dev) +
                " (<= 1e-3), w* = " + fmt("%.8f", w)};
}

// ---------------------------------------------------------------- 8

Outcome asymmetric_2d() {
    bool ok = true;
    std::string detail;
    for (double r : {1.0, 0.3}) {
        const QuadraticProblem p(r, {1.0, 4.0});
        const auto [b, rep] = solve_boundary(p, SphereGrid::circle(64), SolveConfig{});
        double min_margin = INFINITY, mirror = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            min_margin = std::min(min_margin, b.radii()[i] - p.beta());
            for (int k = 0; k < 2; ++k)
                mirror = std::max(mirror, std::abs(b.radii()[i] - b.radii()[b.grid().mirror_index(i, k)]));
        }
        const auto cc = class_membership_check(p, b, 1e-6);
        const double beta_expected = std::sqrt(5.0 / r);
        const bool this_ok = rep.converged && min_margin >= 0.0 && mirror <= 1e-6 && cc.all_ok() &&
                             std::abs(p.beta() - beta_expected) <= 1e-12;
        ok = ok && this_ok;
        const auto [lo, hi] = std::minmax_element(b.radii().begin(), b.radii().end());
        detail += (detail.empty() ? "" : "; ") + std::string("r=") + fmt("%g", r) + ": " +
                  (rep.converged ? "converged" : "NOT converged") + ", beta " + fmt("%.4f", p.beta()) + ", rho in [" +
                  fmt("%.4f", *lo) + ", " + fmt("%.4f", *hi) + "], min(rho - beta) " + sci(min_margin) + ", mirror " +
                  sci(mirror) + " (<= 1e-6), class check " + (cc.all_ok() ? "ok" : "FAILED");
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 9, 10

const StarBoundary& solved_elliptic() {
    static const StarBoundary b = solve_boundary(QuadraticProblem(1.0, {1.0, 4.0}), SphereGrid::circle(64), SolveConfig{}).first;
    return b;
}

Outcome green_martin_equivalence() {
    const QuadraticProblem p(1.0, {1.0, 4.0});
    const auto& b = solved_elliptic();
    double nodes = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
        nodes = std::max(nodes, std::abs(green_integral_over_C(p, b, b.node_point(p, i)).normalized()));
    double ext = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double t = 0.3 + 1.1 * k;
        const std::vector<double> w{std::cos(t), std::sin(t)};
        const Point x = p.to_cartesian(w, 1.5 * b.radius_at(w));
        ext = std::max(ext, std::abs(green_integral_over_C(p, b, x).normalized()));
    }
    return {nodes <= 1e-3 && ext <= 1e-3,
            "max normalized residual at 64 boundary nodes " + sci(nodes) + ", at 5 exterior points " + sci(ext) + " (<= 1e-3)"};
}

Outcome value_consistency() {
    bool ok = true;
    std::string detail;
    MCConfig mc;
    mc.paths = 100000;
    mc.time_step = 1e-3;
    mc.seed = 12345;
    const double R = oracles::symmetric_radius(2, 1.0);
    const QuadraticProblem sym(1.0, {1.0, 1.0});
    const QuadraticProblem ell(1.0, {1.0, 4.0});
    const StarBoundary disc(SphereGrid::circle(64), std::vector<double>(64, R));
    const std::vector<std::pair<const char*, std::pair<const QuadraticProblem*, const StarBoundary*>>> cases = {
        {"symmetric", {&sym, &disc}}, {"lambda=(1,4)", {&ell, &solved_elliptic()}}};
    for (const auto& [name, pb] : cases) {
        const auto& p = *pb.first;
        const auto& b = *pb.second;
        const double v0 = value(p, b, Point{0.0, 0.0});
        const auto est = mc_value(p, b, Point{0.0, 0.0}, mc);
        const double allowed = 3.0 * est.std_error + 0.5 * std::sqrt(mc.time_step) * v0;
        const double diff = std::abs(est.estimate - v0);
        const auto scan = majorant_gap_scan(p, b, interior_scan_grid(p, b, 40));
        const bool this_ok = diff <= allowed && scan.min_gap >= -1e-4 && est.truncated == 0;
        ok = ok && this_ok;
        detail += (detail.empty() ? "" : "; ") + std::string(name) + ": V(0) " + fmt("%.6f", v0) + ", MC " +
                  fmt("%.6f", est.estimate) + " +- " + fmt("%.6f", est.std_error) + " (|diff| " + sci(diff) +
                  " <= " + sci(allowed) + "), min gap " + sci(scan.min_gap) + " over " +
                  std::to_string(scan.points_used) + " points (>= -1e-4)";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 11

Outcome green_measure_identity() {
    const KillingConfig cfg{1.0, 2};
    MCConfig mc;
    mc.paths = 20000;
    mc.time_step = 1e-3;
    mc.seed = 99;
    struct Case {
        Rectangle H;
        Point x, center;
        double radius;
    };
    const std::vector<Case> cases = {
        {{-0.5, 0.8, -0.2, 0.4}, Point{0.1, 0.0}, Point{0.0, 0.0}, 1.0},
        {{1.5, 2.5, -0.5, 0.5}, Point{0.0, 0.3}, Point{0.0, 0.0}, 1.2},
        {{-1.0, 1.0, -1.0, 1.0}, Point{0.5, -0.5}, Point{0.2, 0.0}, 2.0},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto res = green_measure_identity_check(cfg, c.H, c.x, c.center, c.radius, mc);
        const double z = std::abs(res.lhs - res.rhs) / res.std_error;
        ok = ok && z <= 4.0;
        detail += (detail.empty() ? "" : "; ") + fmt("lhs %.6f", res.lhs) + fmt(" rhs %.6f", res.rhs) + fmt(" (%.2f stderr)", z);
    }
    return {ok, detail + " (<= 4 stderr)"};
}

// ---------------------------------------------------------------- 12

Outcome f_audit() {
    const std::vector<double> rhos = {0.5, 1.0, 2.0, std::sqrt(5.0), 2.5, 3.0, 4.0};
    const std::vector<double> gammas = {-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0};
    const auto rows = f_pair_audit(2.0, 1.0, rhos, gammas);
    const auto path = (std::filesystem::path(artifacts_dir) / "f_audit.csv").string();
    std::ofstream out(path);
    out << "rho,gamma,beta,F1,F2,m2,m2_quadrature,F2_minus_F1_plus_m2,F1_plus_F2_plus_m2\n";
    double diff = 0.0, sum = 0.0;
    for (const auto& r : rows) {
        out << io::fmt(r.rho) << ',' << io::fmt(r.gamma) << ',' << io::fmt(r.beta) << ',' << io::fmt(r.F1) << ','
            << io::fmt(r.F2) << ',' << io::fmt(r.m2) << ',' << io::fmt(r.m2_oracle) << ','
            << io::fmt(r.diff_F2_minus_F1_plus_m2) << ',' << io::fmt(r.sum_F1_F2_plus_m2) << '\n';
        diff = std::max(diff, std::abs(r.diff_F2_minus_F1_plus_m2));
        sum = std::max(sum, std::abs(r.sum_F1_F2_plus_m2));
    }
    return {true,
            std::to_string(rows.size()) + " rows written to " + path + "; max |F2 - F1 + m2| " + sci(diff) +
                ", max |F1 + F2 + m2| " + sci(sum),
            true};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (!std::strcmp(argv[i], "--artifacts") && i + 1 < argc) {
            artifacts_dir = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--criterion N] [--artifacts DIR]\n";
            return 2;
        }
    }
    const std::vector<Criterion> all = {
        {1, "special functions", 1.0, special_functions},
        {2, "Green kernel equals time integral of killed density", 10.0, green_definition},
        {3, "Martin kernel as limit of Green ratios", 1.0, martin_limit},
        {4, "hyperplane identity", 30.0, hyperplane},
        {5, "radial moment closed form and derivative", 5.0, radial_moment_audit},
        {6, "symmetric 2-d solve", 30.0, symmetric_2d},
        {7, "symmetric 3-d solve", 300.0, symmetric_3d},
        {8, "asymmetric 2-d solve", 120.0, asymmetric_2d},
        {9, "Green and Martin equations agree on the solved boundary", 300.0, green_martin_equivalence},
        {10, "value reconstruction vs Monte Carlo, majorant scan", 600.0, value_consistency},
        {11, "Green-measure identity", 120.0, green_measure_identity},
        {12, "F1/F2 audit report", 60.0, f_audit},
    };
    bool all_ok = true;
    bool any = false;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        any = true;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        const char* tag = o.informational ? "INFO" : (pass ? "PASS" : "FAIL");
        std::printf("%s  #%-2d %s: %s [%.2f s, budget %.0f s%s]\n", tag, c.id, c.title, o.detail.c_str(), secs, c.budget_s,
                    in_time ? "" : ", OVER BUDGET");
        std::fflush(stdout);
        all_ok = all_ok && (pass || o.informational);
    }
    if (!any) {
        std::cerr << "no criterion " << only << "\n";
        return 2;
    }
    return all_ok ? 0 : 1;
}
