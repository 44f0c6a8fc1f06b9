#pragma once

// Discretized Martin kernel equation for a star-shaped continuation set and
// its Levenberg-Marquardt solver.
//
// In affine polar coordinates y = rho omega / sqrt(lambda) the condition
//   integral over C of exp(a.y) (r - L) g(y) dy = 0   for all ||a||^2 = 2r
// becomes, up to a constant factor, one equation per test direction omega'_j:
//   R_j = sum_i w_i m_d(rho_i, gamma(omega_i, omega'_j), beta) = 0,
// with the radial moment m_d(rho, gamma; beta) = int_0^rho e^{gamma s} (s^2 - beta^2) s^{d-1} ds.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "martin/parallel.hpp"
#include "martin/problem.hpp"
#include "martin/sphere_grid.hpp"

namespace martin {

/// gamma(omega, omega') = sqrt(2r) sum_k omega_k omega'_k / sqrt(lambda_k).
inline double gamma(const QuadraticProblem& p, std::span<const double> omega, std::span<const double> omega2) {
    require_same_dim(omega.size(), static_cast<std::size_t>(p.dim()), "gamma");
    require_same_dim(omega2.size(), static_cast<std::size_t>(p.dim()), "gamma");
    double s = 0.0;
    for (int k = 0; k < p.dim(); ++k) s += omega[k] * omega2[k] / std::sqrt(p.lambdas()[k]);
    return std::sqrt(2.0 * p.r()) * s;
}

inline constexpr double kDefaultSeriesSwitch = 2.0;

namespace detail {

// e^{gamma s} * sum_k (-1)^k n!/(n-k)! s^{n-k} / gamma^{k+1}: antiderivative of e^{gamma s} s^n.
inline double exp_poly_antiderivative(int n, double s, double gamma) {
    double sum = 0.0;
    double coef = 1.0;  // n!/(n-k)!
    double gpow = 1.0 / gamma;
    for (int k = 0; k <= n; ++k) {
        const double term = coef * std::pow(s, n - k) * gpow;
        sum += (k % 2 == 0) ? term : -term;
        coef *= (n - k);
        gpow /= gamma;
    }
    return std::exp(gamma * s) * sum;
}

}  // namespace detail

/// m_d(rho, gamma; beta) for d in {2, 3}. Taylor series in gamma when
/// |gamma| rho < series_switch, closed form otherwise.
inline double radial_moment(int d, double rho, double gamma, double beta,
                            double series_switch = kDefaultSeriesSwitch) {
    if (d != 2 && d != 3) throw std::domain_error("radial_moment: d must be 2 or 3");
    if (!(rho >= 0.0)) throw std::domain_error("radial_moment: rho must be >= 0");
    if (rho == 0.0) return 0.0;
    const double b2 = beta * beta;
    const double x = gamma * rho;
    if (std::abs(x) < series_switch) {
        // sum_n x^n/n! [rho^{d+2}/(n+d+2) - beta^2 rho^d/(n+d)]
        double t = 1.0;
        double s_hi = 0.0;
        double s_lo = 0.0;
        for (int n = 0; n < 200; ++n) {
            if (n > 0) t *= x / n;
            const double a = t / (n + d + 2);
            const double c = t / (n + d);
            s_hi += a;
            s_lo += c;
            if (n > 3 && std::abs(c) < 1e-17 * std::abs(s_lo) && std::abs(a) < 1e-17 * std::abs(s_hi)) break;
        }
        const double rd = std::pow(rho, d);
        return rd * (rho * rho * s_hi - b2 * s_lo);
    }
    auto A = [&](double s) {
        return detail::exp_poly_antiderivative(d + 1, s, gamma) - b2 * detail::exp_poly_antiderivative(d - 1, s, gamma);
    };
    return A(rho) - A(0.0);
}

/// d m_d / d rho = e^{gamma rho} (rho^2 - beta^2) rho^{d-1}.
inline double radial_moment_drho(int d, double rho, double gamma, double beta) {
    if (d != 2 && d != 3) throw std::domain_error("radial_moment: d must be 2 or 3");
    return std::exp(gamma * rho) * (rho * rho - beta * beta) * std::pow(rho, d - 1);
}

/// Test directions omega'_j paired with a grid of unknowns. The square
/// system reuses the unknown grid; the over-determined one doubles it.
inline SphereGrid test_directions(const SphereGrid& grid, bool overdetermined) {
    if (!overdetermined) return grid;
    if (grid.dim() == 2) return SphereGrid::circle(2 * static_cast<int>(grid.size()));
    return SphereGrid::sphere(2 * grid.n_lat(), 2 * grid.n_lon());
}

struct MartinSystem {
    std::vector<double> residual;
    double scale = 0.0;  // max_j sum_i w_i |m_d(rho_i, gamma_ij, beta)|
};

inline void require_compatible(const QuadraticProblem& p, const StarBoundary& b, const SphereGrid& tests) {
    if (b.dim() != p.dim() || tests.dim() != p.dim())
        throw std::domain_error("martin system: dimension mismatch between problem, boundary and test grid");
}

/// Residual R_j of the discrete Martin equation and its natural scale.
inline MartinSystem assemble_system(const QuadraticProblem& p, const StarBoundary& b, const SphereGrid& tests,
                                    double series_switch = kDefaultSeriesSwitch, int threads = 1) {
    require_compatible(p, b, tests);
    const auto& grid = b.grid();
    const double beta = p.beta();
    const int d = p.dim();
    MartinSystem out;
    out.residual.assign(tests.size(), 0.0);
    std::vector<double> mag(tests.size(), 0.0);
    parallel_for(tests.size(), threads, [&](std::size_t j) {
        double s = 0.0, m = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = grid.weight(i) *
                             radial_moment(d, b.radii()[i], gamma(p, grid.node(i), tests.node(j)), beta, series_switch);
            s += v;
            m += std::abs(v);
        }
        out.residual[j] = s;
        mag[j] = m;
    });
    out.scale = *std::max_element(mag.begin(), mag.end());
    return out;
}

inline std::vector<double> assemble_residual(const QuadraticProblem& p, const StarBoundary& b) {
    return assemble_system(p, b, b.grid()).residual;
}

/// J_ji = w_i e^{gamma_ij rho_i} (rho_i^2 - beta^2) rho_i^{d-1}.
inline Eigen::MatrixXd assemble_jacobian(const QuadraticProblem& p, const StarBoundary& b, const SphereGrid& tests,
                                         int threads = 1) {
    require_compatible(p, b, tests);
    const auto& grid = b.grid();
    const double beta = p.beta();
    Eigen::MatrixXd J(tests.size(), grid.size());
    parallel_for(tests.size(), threads, [&](std::size_t j) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            J(j, i) = grid.weight(i) *
                      radial_moment_drho(p.dim(), b.radii()[i], gamma(p, grid.node(i), tests.node(j)), beta);
    });
    return J;
}

inline Eigen::MatrixXd assemble_jacobian(const QuadraticProblem& p, const StarBoundary& b) {
    return assemble_jacobian(p, b, b.grid());
}

struct SolveConfig {
    int max_iterations = 200;
    double residual_tol = 1e-10;  // on ||R||_inf / scale
    double step_tol = 1e-14;      // on ||delta rho||_inf / beta
    double damping = 1e-3;        // initial mu, relative to sigma_max^2
    double init_factor = 1.2;
    int homotopy_steps = 4;
    double series_switch = kDefaultSeriesSwitch;
    double svd_cutoff = 1e-10;    // singular values below this fraction of sigma_max are dropped
    double rho_cap_factor = 50.0; // radii are capped at this multiple of beta
    bool overdetermined = false;
    bool symmetrize = true;       // average each step over coordinate reflections
    int threads = 1;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::domain_error(std::string("SolveConfig: ") + name + " must be positive");
        };
        if (max_iterations < 1) throw std::domain_error("SolveConfig: max_iterations must be >= 1");
        positive(residual_tol, "residual_tol");
        positive(step_tol, "step_tol");
        positive(damping, "damping");
        positive(series_switch, "series_switch");
        positive(svd_cutoff, "svd_cutoff");
        if (!(init_factor > 1.0)) throw std::domain_error("SolveConfig: init_factor must exceed 1");
        if (!(rho_cap_factor > init_factor)) throw std::domain_error("SolveConfig: rho_cap_factor must exceed init_factor");
        if (homotopy_steps < 0) throw std::domain_error("SolveConfig: homotopy_steps must be >= 0");
    }
};

struct HomotopyPoint {
    std::vector<double> lambdas;
    double residual;  // relative residual reached at this stage
    int iterations;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double residual_inf_norm = 0.0;  // ||R||_inf / scale
    double residual_scale = 0.0;
    double step_inf_norm = 0.0;
    std::string stop_reason;
    std::vector<HomotopyPoint> homotopy_trace;
};

namespace detail {

// Orbit of every node under the 2^d coordinate sign flips, or empty when the
// grid is not closed under them.
inline std::vector<std::vector<std::size_t>> reflection_orbits(const SphereGrid& grid) {
    const int d = grid.dim();
    std::vector<std::vector<std::size_t>> orbits(grid.size());
    try {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (int mask = 0; mask < (1 << d); ++mask) {
                std::size_t m = i;
                for (int k = 0; k < d; ++k)
                    if (mask & (1 << k)) m = grid.mirror_index(m, k);
                orbits[i].push_back(m);
            }
        }
    } catch (const std::domain_error&) {
        return {};
    }
    return orbits;
}

struct LmOutcome {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    double scale = 0.0;
    double step = 0.0;
    std::string reason;
};

// Levenberg-Marquardt on 1/2 ||R||^2 using the SVD of J. The step filter is
// sigma / (sigma^2 + mu) with singular values below svd_cutoff * sigma_max
// discarded: the Martin system is severely ill-conditioned in its high
// angular frequencies, and those directions carry no usable information.
// Each iteration first tries the undamped truncated Gauss-Newton step.
inline LmOutcome levenberg_marquardt(const QuadraticProblem& p, std::vector<double>& rho, const SphereGrid& grid,
                                     const SphereGrid& tests, const SolveConfig& cfg) {
    const double beta = p.beta();
    const double lo = beta * (1.0 + 1e-6);
    const double hi = cfg.rho_cap_factor * beta;
    const std::size_t n = rho.size();
    auto eval = [&](const std::vector<double>& r) {
        return assemble_system(p, StarBoundary(grid, r), tests, cfg.series_switch, cfg.threads);
    };
    auto sse = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    for (double& v : rho) v = std::clamp(v, lo, hi);
    const auto orbits = cfg.symmetrize ? reflection_orbits(grid) : std::vector<std::vector<std::size_t>>{};
    LmOutcome out;
    auto sys = eval(rho);
    double F = sse(sys.residual);
    double mu_rel = cfg.damping;
    double nu = 2.0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        out.iterations = it;
        out.residual = inf_norm(sys.residual) / sys.scale;
        out.scale = sys.scale;
        if (out.residual <= cfg.residual_tol) {
            out.converged = true;
            out.reason = "residual below tolerance";
            return out;
        }
        const Eigen::MatrixXd J = assemble_jacobian(p, StarBoundary(grid, rho), tests, cfg.threads);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd sigma = svd.singularValues();
        const double smax = sigma.size() ? sigma(0) : 0.0;
        if (!(smax > 0.0)) {
            out.reason = "jacobian vanished";
            return out;
        }
        const Eigen::Map<const Eigen::VectorXd> R(sys.residual.data(), static_cast<Eigen::Index>(sys.residual.size()));
        const Eigen::VectorXd UtR = svd.matrixU().transpose() * R;

        auto trial = [&](double mu_abs, std::vector<double>& cand, double& predicted) {
            Eigen::VectorXd f(sigma.size());
            for (Eigen::Index k = 0; k < sigma.size(); ++k)
                f(k) = sigma(k) > cfg.svd_cutoff * smax ? sigma(k) / (sigma(k) * sigma(k) + mu_abs) : 0.0;
            Eigen::VectorXd delta = -(svd.matrixV() * f.cwiseProduct(UtR));
            if (!orbits.empty()) {
                const Eigen::VectorXd raw = delta;
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (std::size_t m : orbits[i]) s += raw(m);
                    delta(i) = s / orbits[i].size();
                }
            }
            cand.resize(n);
            Eigen::VectorXd taken(n);
            for (std::size_t i = 0; i < n; ++i) {
                cand[i] = std::clamp(rho[i] + delta(i), lo, hi);
                taken(i) = cand[i] - rho[i];
            }
            predicted = F - (R + J * taken).squaredNorm();
            return taken.cwiseAbs().maxCoeff();
        };

        std::vector<double> cand;
        double predicted = 0.0;
        // Undamped truncated Gauss-Newton first.
        double step = trial(0.0, cand, predicted);
        auto cand_sys = eval(cand);
        double F_new = sse(cand_sys.residual);
        bool accepted = F_new < F;
        if (accepted) {
            mu_rel = std::max(mu_rel / 10.0, 1e-16);
            nu = 2.0;
        }
        while (!accepted) {
            step = trial(mu_rel * smax * smax, cand, predicted);
            cand_sys = eval(cand);
            F_new = sse(cand_sys.residual);
            const double gain = predicted > 0.0 ? (F - F_new) / predicted : -1.0;
            if (gain > 0.0 && F_new < F) {
                accepted = true;
                mu_rel *= (gain > 0.75) ? 0.1 : std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
                nu = 2.0;
            } else {
                mu_rel *= nu;
                nu *= 2.0;
                if (nu > 1e12 || mu_rel > 1e30) {
                    out.reason = "damping exhausted without decrease";
                    out.step = step;
                    return out;
                }
            }
        }
        rho = std::move(cand);
        sys = std::move(cand_sys);
        F = F_new;
        out.step = step;
        if (step <= cfg.step_tol * beta) {
            out.iterations = it + 1;
            out.residual = inf_norm(sys.residual) / sys.scale;
            out.scale = sys.scale;
            out.converged = out.residual <= cfg.residual_tol;
            out.reason = out.converged ? "residual below tolerance" : "step below tolerance";
            return out;
        }
    }
    out.iterations = cfg.max_iterations;
    out.residual = inf_norm(sys.residual) / sys.scale;
    out.scale = sys.scale;
    out.converged = out.residual <= cfg.residual_tol;
    out.reason = out.converged ? "residual below tolerance" : "iteration limit";
    return out;
}

}  // namespace detail

/// Radius of the optimal ball for a problem with all coefficients equal to
/// the mean of p's, in affine polar units.
inline double symmetric_start_radius(const QuadraticProblem& p) {
    double mean = 0.0;
    for (double l : p.lambdas()) mean += l;
    mean /= p.dim();
    return std::sqrt(mean) * oracles::symmetric_radius(p.dim(), p.r());
}

/// Solves the discrete Martin equation for the boundary radii.
///
/// With homotopy_steps = k > 0 the coefficients move linearly from their
/// mean (a rotationally symmetric problem with known solution) to the target
/// in k stages, each warm-started from the previous one. Otherwise the
/// iteration starts from rho = init_factor * beta.
inline std::pair<StarBoundary, SolveReport> solve_boundary(const QuadraticProblem& p, const SphereGrid& grid,
                                                           const SolveConfig& cfg) {
    cfg.validate();
    if (grid.dim() != p.dim()) throw std::domain_error("solve_boundary: grid dimension differs from problem");
    const SphereGrid tests = test_directions(grid, cfg.overdetermined);
    SolveReport rep;
    std::vector<double> rho;

    std::vector<std::vector<double>> stages;
    const bool homotopy = cfg.homotopy_steps > 0 && (p.dim() == 2 || p.dim() == 3);
    if (homotopy) {
        double mean = 0.0;
        for (double l : p.lambdas()) mean += l;
        mean /= p.dim();
        rho.assign(grid.size(), symmetric_start_radius(p));
        for (int s = 1; s <= cfg.homotopy_steps; ++s) {
            const double t = static_cast<double>(s) / cfg.homotopy_steps;
            std::vector<double> l(p.dim());
            for (int k = 0; k < p.dim(); ++k) l[k] = (1.0 - t) * mean + t * p.lambdas()[k];
            stages.push_back(std::move(l));
        }
    } else {
        rho.assign(grid.size(), cfg.init_factor * p.beta());
        stages.push_back(p.lambdas());
    }

    detail::LmOutcome last;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const QuadraticProblem stage(p.r(), stages[s]);
        last = detail::levenberg_marquardt(stage, rho, grid, tests, cfg);
        rep.iterations += last.iterations;
        if (homotopy) rep.homotopy_trace.push_back({stages[s], last.residual, last.iterations});
    }
    rep.converged = last.converged;
    rep.residual_inf_norm = last.residual;
    rep.residual_scale = last.scale;
    rep.step_inf_norm = last.step;
    rep.stop_reason = last.reason;
    return {StarBoundary(grid, std::move(rho)), rep};
}

struct FPair {
    double F1;
    double F2;
};

/// Closed-form F1, F2 pair for the quadratic reward with lambda = (1, alpha^2),
/// kept verbatim with its known sign defect in F1 (alpha enters only through
/// beta and gamma). Audit use only; the solver relies on radial_moment.
inline FPair f_pair_evaluator(double alpha, double r, double rho, double gamma, double beta) {
    (void)alpha;
    (void)r;
    if (gamma == 0.0) throw std::domain_error("f_pair_evaluator: gamma must be nonzero");
    const double g2 = gamma * gamma;
    const double g4 = g2 * g2;
    const double b2 = beta * beta;
    const double F1 = -2.0 * (g2 * b2 - 3.0 * gamma * beta + 3.0) * std::exp(gamma * beta) / g4 + (g2 * b2 - 6.0) / g4;
    const double F2 = 2.0 * (b2 * g2 - 3.0 * beta * gamma + 3.0) * std::exp(beta * gamma) / g4 +
                      ((b2 * rho - rho * rho * rho) * g2 * gamma - (b2 - 3.0 * rho * rho) * g2 - 6.0 * gamma * rho + 6.0) *
                          std::exp(gamma * rho) / g4;
    return {F1, F2};
}

struct FAuditRow {
    double rho, gamma, beta;
    double F1, F2;
    double m2;          // radial_moment(2, rho, gamma, beta)
    double m2_oracle;   // adaptive quadrature of the defining integral
    double diff_F2_minus_F1_plus_m2;  // (F2 - F1) - (-m2)
    double sum_F1_F2_plus_m2;         // (F1 + F2) - (-m2)
};

/// Tabulates F1, F2 against m_2 over a parameter grid.
inline std::vector<FAuditRow> f_pair_audit(double alpha, double r, const std::vector<double>& rhos,
                                            const std::vector<double>& gammas) {
    const double beta = std::sqrt((1.0 + alpha * alpha) / r);
    std::vector<FAuditRow> rows;
    for (double rho : rhos) {
        for (double g : gammas) {
            const auto F = f_pair_evaluator(alpha, r, rho, g, beta);
            const double m2 = radial_moment(2, rho, g, beta);
            const double oracle = oracles::quad_adaptive_1d(
                [&](double s) { return std::exp(g * s) * (s * s - beta * beta) * s; }, 0.0, rho, 1e-13);
            rows.push_back({rho, g, beta, F.F1, F.F2, m2, oracle, (F.F2 - F.F1) + m2, (F.F1 + F.F2) + m2});
        }
    }
    return rows;
}

}  // namespace martin
