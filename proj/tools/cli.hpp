#pragma once

// Command-line front end. Kept in a header so tests can drive run() in
// process; tools/main.cpp is a thin wrapper.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 solver did not converge,
// 3 verification failed.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "martin/io.hpp"
#include "martin/kernels.hpp"
#include "martin/martin_solver.hpp"
#include "martin/oracles.hpp"
#include "martin/problem.hpp"
#include "martin/verification.hpp"

namespace martin::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNotConverged = 2, kVerifyFailed = 3 };

/// Flags shared by the problem-level subcommands. Each option remembers
/// whether it was given so that flag > config file > default holds.
struct ProblemFlags {
    std::string config;
    double r = 0.0;
    std::vector<double> lambdas;
    int n = 0, n_lat = 0, n_lon = 0;
    int threads = 0;
    CLI::Option* r_opt = nullptr;
    CLI::Option* lambdas_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* lat_opt = nullptr;
    CLI::Option* lon_opt = nullptr;
    CLI::Option* threads_opt = nullptr;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON run configuration");
        r_opt = cmd->add_option("--r", r, "discount rate");
        lambdas_opt = cmd->add_option("--lambdas", lambdas, "reward coefficients, comma separated")->delimiter(',');
        n_opt = cmd->add_option("--n", n, "number of angular nodes (d = 2)");
        lat_opt = cmd->add_option("--lat", n_lat, "Gauss-Legendre latitude rings (d = 3)");
        lon_opt = cmd->add_option("--lon", n_lon, "longitude nodes per ring (d = 3)");
        threads_opt = cmd->add_option("--threads", threads, "worker threads (results do not depend on it)");
    }

    /// Defaults, then the config file, then explicit flags.
    io::RunConfig resolve() const {
        io::RunConfig cfg;
        if (!config.empty()) io::apply_config_json(io::read_json_file(config), cfg, config);
        if (r_opt->count()) cfg.r = r;
        if (lambdas_opt->count()) cfg.lambdas = lambdas;
        if (n_opt->count()) cfg.grid.n = n;
        if (lat_opt->count()) cfg.grid.n_lat = n_lat;
        if (lon_opt->count()) cfg.grid.n_lon = n_lon;
        if (threads_opt->count()) cfg.threads = threads;
        if (cfg.threads < 1) throw ConfigError("--threads must be >= 1");
        cfg.solver.threads = cfg.threads;
        return cfg;
    }
};

inline QuadraticProblem make_problem(const io::RunConfig& cfg) {
    try {
        return cfg.problem();
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
}

// ------------------------------------------------------------------ solve

struct SolveFlags {
    ProblemFlags problem;
    std::string out, report;
    int max_iterations = 0, homotopy_steps = -1;
    double residual_tol = 0.0, init_factor = 0.0;
    bool overdetermined = false;
    CLI::Option *out_opt, *report_opt, *maxit_opt, *homotopy_opt, *tol_opt, *init_opt, *overdet_opt;
};

inline int cmd_solve(const SolveFlags& f, std::ostream& out) {
    auto cfg = f.problem.resolve();
    if (f.out_opt->count()) cfg.output.boundary = f.out;
    if (f.report_opt->count()) cfg.output.report = f.report;
    if (f.maxit_opt->count()) cfg.solver.max_iterations = f.max_iterations;
    if (f.homotopy_opt->count()) cfg.solver.homotopy_steps = f.homotopy_steps;
    if (f.tol_opt->count()) cfg.solver.residual_tol = f.residual_tol;
    if (f.init_opt->count()) cfg.solver.init_factor = f.init_factor;
    if (f.overdet_opt->count()) cfg.solver.overdetermined = f.overdetermined;
    try {
        cfg.solver.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
    const auto p = make_problem(cfg);
    if (p.dim() != 2 && p.dim() != 3) throw ConfigError("lambdas: d must be 2 or 3");
    const auto [b, rep] = solve_boundary(p, cfg.grid.make(p.dim()), cfg.solver);
    io::write_text(cfg.output.boundary, io::boundary_csv(p, b));
    auto j = io::to_json(rep);
    j["problem"] = {{"r", p.r()}, {"lambdas", p.lambdas()}, {"beta", p.beta()}};
    io::write_text(cfg.output.report, j.dump(2) + "\n");
    out << (rep.converged ? "converged" : "NOT converged") << " after " << rep.iterations
        << " iterations, relative residual " << rep.residual_inf_norm << " (" << rep.stop_reason << ")\n"
        << "boundary: " << cfg.output.boundary << "\nreport: " << cfg.output.report << "\n";
    return rep.converged ? kOk : kNotConverged;
}

// ------------------------------------------------------------------ verify

struct VerifyFlags {
    ProblemFlags problem;
    std::string boundary, report;
    std::int64_t paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    int scan_n = 0;
    bool no_mc = false;
    CLI::Option *boundary_opt, *report_opt, *paths_opt, *dt_opt, *seed_opt, *scan_opt, *no_mc_opt;
};

struct CheckLine {
    std::string name;
    bool pass;
    std::string detail;
};

/// Runs every verification check against the thresholds in `limits`.
inline std::pair<VerificationReport, std::vector<CheckLine>> run_verification(const QuadraticProblem& p,
                                                                              const StarBoundary& b,
                                                                              const io::VerifySpec& limits, int threads) {
    VerificationReport rep;
    std::vector<CheckLine> checks;
    auto num = [](double v) {
        std::ostringstream os;
        os << std::setprecision(4) << v;
        return os.str();
    };

    rep.class_check = class_membership_check(p, b, 1e-6);
    checks.push_back({"class membership", rep.class_check.all_ok(),
                      "worst violation " + num(rep.class_check.worst_violation)});

    GreenOptions gopt;
    gopt.rel_tol = limits.green_rel_tol;
    gopt.seed = limits.seed;
    const bool d2 = p.dim() == 2;
    if (!d2) gopt.samples = 200000;

    // Boundary residuals: all nodes for d = 2, a spread subset for d = 3.
    const std::size_t stride = d2 ? 1 : std::max<std::size_t>(1, b.size() / 16);
    double worst_boundary = 0.0;
    bool boundary_ok = true;
    for (std::size_t i = 0; i < b.size(); i += stride) {
        const auto E = green_integral_over_C(p, b, b.node_point(p, i), gopt);
        const double v = E.normalized();
        rep.boundary_residuals.push_back(v);
        worst_boundary = std::max(worst_boundary, std::abs(v));
        const double allowance = limits.residual_tol + (d2 ? 0.0 : 3.0 * E.error / E.scale);
        if (std::abs(v) > allowance) boundary_ok = false;
    }
    checks.push_back({"green residual at boundary", boundary_ok, "max |E|/scale " + num(worst_boundary)});

    std::vector<std::vector<double>> ext = limits.exterior_points;
    if (ext.empty()) {
        // Five rays, 1.5 times the boundary radius out.
        for (int k = 0; k < 5; ++k) {
            const double t = 0.3 + 1.1 * k;
            std::vector<double> w(p.dim(), 0.0);
            w[0] = std::cos(t);
            w[1] = std::sin(t);
            if (!d2) {
                w[0] *= 0.8;
                w[1] *= 0.8;
                w[2] = 0.6;
            }
            const Point x = p.to_cartesian(w, 1.5 * b.radius_at(w));
            ext.push_back(x.vec());
        }
    }
    bool ext_ok = true;
    double worst_ext = 0.0;
    for (const auto& e : ext) {
        if (e.size() != static_cast<std::size_t>(p.dim())) throw ConfigError("verify.exterior_points: wrong dimension");
        const Point x(e);
        if (b.contains(p, x)) throw ConfigError("verify.exterior_points: point lies inside the continuation set");
        const auto E = green_integral_over_C(p, b, x, gopt);
        const double v = E.normalized();
        rep.exterior_residuals.push_back(v);
        worst_ext = std::max(worst_ext, std::abs(v));
        const double allowance = limits.residual_tol + (d2 ? 0.0 : 3.0 * E.error / E.scale);
        if (std::abs(v) > allowance) ext_ok = false;
    }
    checks.push_back({"green residual outside C", ext_ok, "max |E|/scale " + num(worst_ext)});

    const Point origin(static_cast<std::size_t>(p.dim()));
    const auto E0 = green_integral_over_C(p, b, origin, gopt);
    rep.reconstructed_value = -E0.value;

    if (d2) {
        const auto scan = majorant_gap_scan(p, b, interior_scan_grid(p, b, limits.scan_n), gopt);
        rep.majorant_min_gap = scan.min_gap;
        rep.majorant_points = scan.points_used;
        checks.push_back({"majorant V >= g inside C", scan.min_gap >= -limits.majorant_tol,
                          "min gap " + num(scan.min_gap) + " over " + std::to_string(scan.points_used) + " points"});
    } else {
        rep.majorant_min_gap = rep.reconstructed_value;
        rep.majorant_points = 1;
        checks.push_back({"majorant V >= g inside C", rep.reconstructed_value >= -limits.majorant_tol,
                          "V(0) " + num(rep.reconstructed_value) + " (grid scan is d = 2 only)"});
    }

    if (limits.run_mc) {
        MCConfig mc;
        mc.paths = limits.mc_paths;
        mc.time_step = limits.mc_dt;
        mc.horizon = limits.mc_horizon;
        mc.seed = limits.seed;
        mc.threads = threads;
        const auto est = mc_value(p, b, origin, mc);
        rep.mc_value = est.estimate;
        rep.mc_stderr = est.std_error;
        const double se = std::hypot(est.std_error, d2 ? 0.0 : E0.error);
        const double allowed = limits.mc_sigmas * se + limits.mc_bias_coef * std::sqrt(limits.mc_dt) * rep.reconstructed_value;
        const double diff = std::abs(est.estimate - rep.reconstructed_value);
        checks.push_back({"monte carlo value at origin", diff <= allowed,
                          "|MC - V| " + num(diff) + " allowed " + num(allowed)});
    }
    return {rep, checks};
}

inline int cmd_verify(const VerifyFlags& f, std::ostream& out) {
    auto cfg = f.problem.resolve();
    if (f.report_opt->count()) cfg.output.report = f.report;
    if (f.paths_opt->count()) cfg.verify.mc_paths = f.paths;
    if (f.dt_opt->count()) cfg.verify.mc_dt = f.dt;
    if (f.seed_opt->count()) cfg.verify.seed = f.seed;
    if (f.scan_opt->count()) cfg.verify.scan_n = f.scan_n;
    if (f.no_mc_opt->count()) cfg.verify.run_mc = !f.no_mc;
    if (f.boundary.empty()) throw ConfigError("verify: --boundary is required");
    const auto loaded = io::read_boundary_csv(f.boundary);
    // A problem in the file is used unless r or lambdas were set explicitly.
    const bool explicit_problem = f.problem.r_opt->count() || f.problem.lambdas_opt->count() || !f.problem.config.empty();
    const QuadraticProblem p = (loaded.problem && !explicit_problem) ? *loaded.problem : make_problem(cfg);
    if (p.dim() != loaded.boundary.dim()) throw ConfigError("verify: boundary dimension differs from the problem");
    const auto [rep, checks] = run_verification(p, loaded.boundary, cfg.verify, cfg.threads);
    bool all = true;
    nlohmann::json jc = nlohmann::json::array();
    for (const auto& c : checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        all = all && c.pass;
        jc.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    auto j = io::to_json(rep);
    j["checks"] = jc;
    j["passed"] = all;
    io::write_text(cfg.output.report, j.dump(2) + "\n");
    return all ? kOk : kVerifyFailed;
}

// ------------------------------------------------------------------ plot

/// SVG with the boundary polygon, the negative-set ellipse g = beta^2 and axes.
inline std::string boundary_svg(const QuadraticProblem& p, const StarBoundary& b) {
    if (p.dim() != 2) throw ConfigError("plot: only d = 2 boundaries can be drawn");
    std::vector<Point> curve, ellipse;
    for (std::size_t i = 0; i < b.size(); ++i) curve.push_back(b.node_point(p, i));
    const int m = 256;
    for (int i = 0; i < m; ++i) {
        const double t = 2.0 * std::numbers::pi * i / m;
        ellipse.push_back(p.to_cartesian(std::vector<double>{std::cos(t), std::sin(t)}, p.beta()));
    }
    double ext = 0.0;
    for (const auto& c : curve) ext = std::max({ext, std::abs(c[0]), std::abs(c[1])});
    for (const auto& c : ellipse) ext = std::max({ext, std::abs(c[0]), std::abs(c[1])});
    ext *= 1.15;
    const double size = 600.0;
    auto sx = [&](double x) { return io::fmt(std::round((x / ext + 1.0) * 0.5 * size * 100.0) / 100.0); };
    auto sy = [&](double y) { return io::fmt(std::round((1.0 - y / ext) * 0.5 * size * 100.0) / 100.0); };
    auto polygon = [&](const std::vector<Point>& pts, const char* colour) {
        std::string s = "  <polygon fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + sx(pts[i][0]) + "," + sy(pts[i][1]);
        return s + "\"/>\n";
    };
    std::ostringstream os;
    const std::string sz = io::fmt(size);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << sz << "\" height=\"" << sz << "\" viewBox=\"0 0 "
       << sz << " " << sz << "\">\n"
       << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "  <line x1=\"0\" y1=\"" << sy(0) << "\" x2=\"" << sz << "\" y2=\"" << sy(0) << "\" stroke=\"#999\"/>\n"
       << "  <line x1=\"" << sx(0) << "\" y1=\"0\" x2=\"" << sx(0) << "\" y2=\"" << sz << "\" stroke=\"#999\"/>\n"
       << polygon(ellipse, "red") << polygon(curve, "blue") << "</svg>\n";
    return os.str();
}

struct PlotFlags {
    ProblemFlags problem;
    std::string boundary, out;
    CLI::Option* out_opt;
};

inline int cmd_plot(const PlotFlags& f, std::ostream& out) {
    auto cfg = f.problem.resolve();
    if (f.out_opt->count()) cfg.output.plot = f.out;
    if (f.boundary.empty()) throw ConfigError("plot: --boundary is required");
    const auto loaded = io::read_boundary_csv(f.boundary);
    const bool explicit_problem = f.problem.r_opt->count() || f.problem.lambdas_opt->count() || !f.problem.config.empty();
    const QuadraticProblem p = (loaded.problem && !explicit_problem) ? *loaded.problem : make_problem(cfg);
    io::write_text(cfg.output.plot, boundary_svg(p, loaded.boundary));
    out << "plot: " << cfg.output.plot << "\n";
    return kOk;
}

// ------------------------------------------------------------------ kernel / oracle

struct EvalFlags {
    std::string config;
    std::string which;
    int d = 2;
    double r = 1.0, dist = 0.0;
    std::vector<double> a, x, y;
    CLI::Option *d_opt, *r_opt, *dist_opt, *a_opt, *x_opt, *y_opt;

    /// Config files may carry "r", "d", "dist", "a", "x", "y" at top level.
    void resolve() {
        if (config.empty()) return;
        const auto j = io::read_json_file(config);
        io::detail::reject_unknown(j, config, {"r", "d", "dist", "a", "x", "y"});
        auto vec = [&](const char* key) {
            std::vector<double> v;
            if (!j[key].is_array()) throw ConfigError(config + "." + key + ": expected an array");
            for (std::size_t i = 0; i < j[key].size(); ++i)
                v.push_back(io::detail::get_number(j[key][i], config + "." + key + "[" + std::to_string(i) + "]"));
            return v;
        };
        if (j.contains("r") && !r_opt->count()) r = io::detail::get_positive(j["r"], config + ".r");
        if (j.contains("d") && !d_opt->count()) d = static_cast<int>(io::detail::get_int(j["d"], config + ".d", 1));
        if (j.contains("dist") && !dist_opt->count()) dist = io::detail::get_number(j["dist"], config + ".dist");
        if (j.contains("a") && !a_opt->count()) a = vec("a");
        if (j.contains("x") && !x_opt->count()) x = vec("x");
        if (j.contains("y") && !y_opt->count()) y = vec("y");
    }
};

inline void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
    cmd->add_option("--config", f.config, "JSON file with r, d, dist, a, x, y");
    f.d_opt = cmd->add_option("--d", f.d, "dimension");
    f.r_opt = cmd->add_option("--r", f.r, "discount rate");
    f.dist_opt = cmd->add_option("--dist", f.dist, "distance |x - y|");
    f.a_opt = cmd->add_option("--a", f.a, "Martin direction (rescaled to |a|^2 = 2r)")->delimiter(',');
    f.x_opt = cmd->add_option("--x", f.x, "point x")->delimiter(',');
    f.y_opt = cmd->add_option("--y", f.y, "point y")->delimiter(',');
}

inline int cmd_kernel(EvalFlags& f, std::ostream& out) {
    f.resolve();
    out << std::setprecision(17);
    if (f.which == "green") {
        const KillingConfig cfg{f.r, f.d};
        double v;
        if (!f.x.empty() || !f.y.empty()) {
            v = green_kernel({f.r, static_cast<int>(f.x.size())}, Point(f.x), Point(f.y));
        } else {
            if (!f.dist_opt->count() && f.dist == 0.0) throw ConfigError("kernel green: give --dist or --x/--y");
            v = green_kernel_at_distance(cfg, f.dist);
        }
        out << v << "\n";
        return kOk;
    }
    if (f.which == "martin") {
        if (f.a.empty() || f.y.empty()) throw ConfigError("kernel martin: --a and --y are required");
        const KillingConfig cfg{f.r, static_cast<int>(f.a.size())};
        out << martin_kernel(cfg, MartinDirection::normalized(cfg, f.a), Point(f.y)) << "\n";
        return kOk;
    }
    throw ConfigError("kernel: unknown kind '" + f.which + "' (green or martin)");
}

inline int cmd_oracle(EvalFlags& f, std::ostream& out) {
    f.resolve();
    out << std::setprecision(17);
    if (f.which == "sym-radius") {
        out << oracles::symmetric_radius(f.d, f.r) << "\n";
        return kOk;
    }
    if (f.which == "sym-value") {
        out << oracles::symmetric_value(f.d, f.r, 0.0) << "\n";
        return kOk;
    }
    throw ConfigError("oracle: unknown kind '" + f.which + "' (sym-radius or sym-value)");
}

// ------------------------------------------------------------------ audit

inline int cmd_audit(double alpha, double r, const std::string& path, std::ostream& out) {
    const std::vector<double> rhos = {0.5, 1.0, 2.0, 2.5, 3.0, 4.0};
    const std::vector<double> gammas = {-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0};
    const auto rows = f_pair_audit(alpha, r, rhos, gammas);
    std::ostringstream os;
    os << "rho,gamma,beta,F1,F2,m2,m2_quadrature,F2_minus_F1_plus_m2,F1_plus_F2_plus_m2\n";
    for (const auto& row : rows)
        os << io::fmt(row.rho) << ',' << io::fmt(row.gamma) << ',' << io::fmt(row.beta) << ',' << io::fmt(row.F1)
           << ',' << io::fmt(row.F2) << ',' << io::fmt(row.m2) << ',' << io::fmt(row.m2_oracle) << ','
           << io::fmt(row.diff_F2_minus_F1_plus_m2) << ',' << io::fmt(row.sum_F1_F2_plus_m2) << '\n';
    if (path.empty())
        out << os.str();
    else
        io::write_text(path, os.str());
    return kOk;
}

// ------------------------------------------------------------------ entry

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal stopping boundaries of Brownian motion with quadratic reward"};
    app.require_subcommand(1);

    SolveFlags sf;
    auto* solve = app.add_subcommand("solve", "solve for the stopping boundary");
    sf.problem.add(solve);
    sf.out_opt = solve->add_option("--out", sf.out, "boundary CSV path");
    sf.report_opt = solve->add_option("--report", sf.report, "solve report JSON path");
    sf.maxit_opt = solve->add_option("--max-iterations", sf.max_iterations, "Levenberg-Marquardt iteration limit per homotopy stage");
    sf.homotopy_opt = solve->add_option("--homotopy-steps", sf.homotopy_steps, "stages from the symmetric problem (0 disables)");
    sf.tol_opt = solve->add_option("--residual-tol", sf.residual_tol, "tolerance on the scaled residual sup-norm");
    sf.init_opt = solve->add_option("--init-factor", sf.init_factor, "initial radii as a multiple of beta (no homotopy)");
    sf.overdet_opt = solve->add_flag("--overdetermined", sf.overdetermined, "use 2N test directions");

    VerifyFlags vf;
    auto* verify = app.add_subcommand("verify", "certify a boundary file");
    vf.problem.add(verify);
    vf.boundary_opt = verify->add_option("--boundary", vf.boundary, "boundary CSV");
    vf.report_opt = verify->add_option("--report", vf.report, "verification report JSON path");
    vf.paths_opt = verify->add_option("--paths", vf.paths, "Monte Carlo paths");
    vf.dt_opt = verify->add_option("--dt", vf.dt, "Monte Carlo time step");
    vf.seed_opt = verify->add_option("--seed", vf.seed, "Monte Carlo seed");
    vf.scan_opt = verify->add_option("--scan-n", vf.scan_n, "majorant scan grid size");
    vf.no_mc_opt = verify->add_flag("--no-mc", vf.no_mc, "skip the Monte Carlo check");

    PlotFlags pf;
    auto* plot = app.add_subcommand("plot", "draw a boundary as SVG");
    pf.problem.add(plot);
    plot->add_option("--boundary", pf.boundary, "boundary CSV");
    pf.out_opt = plot->add_option("--out", pf.out, "SVG path");

    EvalFlags kf;
    auto* kernel = app.add_subcommand("kernel", "evaluate the Green or Martin kernel");
    kernel->add_option("kind", kf.which, "green or martin")->required();
    add_eval_flags(kernel, kf);

    EvalFlags of;
    auto* oracle = app.add_subcommand("oracle", "symmetric-case reference values");
    oracle->add_option("kind", of.which, "sym-radius or sym-value")->required();
    add_eval_flags(oracle, of);

    double alpha = 2.0, audit_r = 1.0;
    std::string audit_out;
    auto* audit = app.add_subcommand("audit", "tabulate the closed-form F1/F2 pair against the radial moment");
    audit->add_option("--alpha", alpha, "lambda = (1, alpha^2)");
    audit->add_option("--r", audit_r, "discount rate");
    audit->add_option("--out", audit_out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*solve) return cmd_solve(sf, out);
        if (*verify) return cmd_verify(vf, out);
        if (*plot) return cmd_plot(pf, out);
        if (*kernel) return cmd_kernel(kf, out);
        if (*oracle) return cmd_oracle(of, out);
        if (*audit) return cmd_audit(alpha, audit_r, audit_out, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace martin::cli
