#pragma once

// File formats: boundary CSV, JSON run configuration and JSON reports.
//
// Boundary CSV (schema 1):
//   # schema_version=1 r=<r> lambdas=<l1>;<l2>[;<l3>]
//   theta,rho,x1,x2                               (d = 2)
//   lat_index,lon_index,rho,x1,x2,x3              (d = 3)
// The comment line makes the file self-describing; readers accept files
// without it when the problem is supplied separately.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "martin/errors.hpp"
#include "martin/martin_solver.hpp"
#include "martin/problem.hpp"
#include "martin/verification.hpp"

namespace martin::io {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

/// Shortest decimal text that round-trips a double.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- boundary CSV

inline std::string boundary_csv(const QuadraticProblem& p, const StarBoundary& b) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << " r=" << fmt(p.r()) << " lambdas=";
    for (std::size_t k = 0; k < p.lambdas().size(); ++k) os << (k ? ";" : "") << fmt(p.lambdas()[k]);
    os << "\n";
    const auto& g = b.grid();
    if (b.dim() == 2) {
        os << "theta,rho,x1,x2\n";
        for (std::size_t i = 0; i < b.size(); ++i) {
            const Point x = b.node_point(p, i);
            os << fmt(g.theta(i)) << ',' << fmt(b.radii()[i]) << ',' << fmt(x[0]) << ',' << fmt(x[1]) << '\n';
        }
    } else {
        os << "lat_index,lon_index,rho,x1,x2,x3\n";
        for (std::size_t i = 0; i < b.size(); ++i) {
            const Point x = b.node_point(p, i);
            os << g.lat_index(i) << ',' << g.lon_index(i) << ',' << fmt(b.radii()[i]) << ',' << fmt(x[0]) << ','
               << fmt(x[1]) << ',' << fmt(x[2]) << '\n';
        }
    }
    return os.str();
}

struct LoadedBoundary {
    std::optional<QuadraticProblem> problem;  // from the schema comment, if present
    StarBoundary boundary;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + s + "'");
    }
}

inline std::optional<QuadraticProblem> parse_schema_comment(const std::string& line, const std::string& where) {
    double r = 0.0;
    std::vector<double> lambdas;
    bool have_r = false;
    for (const auto& tok : split(line.substr(1), ' ')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "schema_version") {
            if (val != std::to_string(kSchemaVersion)) throw ConfigError(where + ": unsupported schema_version " + val);
        } else if (key == "r") {
            r = parse_double(val, where + ": r");
            have_r = true;
        } else if (key == "lambdas") {
            for (const auto& l : split(val, ';')) lambdas.push_back(parse_double(l, where + ": lambdas"));
        }
    }
    if (!have_r || lambdas.empty()) return std::nullopt;
    try {
        return QuadraticProblem(r, lambdas);
    } catch (const std::domain_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace detail

/// Parses a boundary CSV; `name` labels error messages.
inline LoadedBoundary parse_boundary_csv(std::istream& in, const std::string& name) {
    std::string line;
    int lineno = 0;
    std::optional<QuadraticProblem> problem;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = name + ":" + std::to_string(lineno);
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (auto p = detail::parse_schema_comment(line, where)) problem = std::move(p);
            continue;
        }
        const auto cells = detail::split(line, ',');
        if (header.empty()) {
            header = cells;
            const std::vector<std::string> h2 = {"theta", "rho", "x1", "x2"};
            const std::vector<std::string> h3 = {"lat_index", "lon_index", "rho", "x1", "x2", "x3"};
            if (header != h2 && header != h3)
                throw ConfigError(where + ": unexpected header '" + line + "'");
            continue;
        }
        if (cells.size() != header.size())
            throw ConfigError(where + ": expected " + std::to_string(header.size()) + " columns, found " +
                              std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(detail::parse_double(cells[c], where + ": " + header[c]));
        rows.push_back(std::move(row));
    }
    if (header.empty()) throw ConfigError(name + ": empty boundary file");
    if (rows.empty()) throw ConfigError(name + ": boundary file has no rows");

    if (header.size() == 4) {
        const int n = static_cast<int>(rows.size());
        auto grid = SphereGrid::circle(n);
        std::vector<double> radii(n);
        for (int i = 0; i < n; ++i) {
            const double expect = grid.theta(i);
            if (std::abs(rows[i][0] - expect) > 1e-9)
                throw ConfigError(name + ": row " + std::to_string(i + 1) + " theta " + fmt(rows[i][0]) +
                                  " is not the equispaced node " + fmt(expect));
            radii[i] = rows[i][1];
        }
        try {
            return {problem, StarBoundary(std::move(grid), std::move(radii))};
        } catch (const std::domain_error& e) {
            throw ConfigError(name + ": " + e.what());
        }
    }
    int n_lat = 0, n_lon = 0;
    for (const auto& r : rows) {
        n_lat = std::max(n_lat, static_cast<int>(r[0]) + 1);
        n_lon = std::max(n_lon, static_cast<int>(r[1]) + 1);
    }
    if (static_cast<std::size_t>(n_lat) * n_lon != rows.size())
        throw ConfigError(name + ": lat/lon indices do not form a full grid");
    auto grid = SphereGrid::sphere(n_lat, n_lon);
    std::vector<double> radii(rows.size(), -1.0);
    for (const auto& r : rows) radii[static_cast<std::size_t>(r[0]) * n_lon + static_cast<std::size_t>(r[1])] = r[2];
    try {
        return {problem, StarBoundary(std::move(grid), std::move(radii))};
    } catch (const std::domain_error& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

inline LoadedBoundary read_boundary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open boundary file '" + path + "'");
    return parse_boundary_csv(in, path);
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------- run config

struct GridSpec {
    int n = 64;       // d = 2
    int n_lat = 16;   // d = 3
    int n_lon = 32;

    SphereGrid make(int d) const { return d == 2 ? SphereGrid::circle(n) : SphereGrid::sphere(n_lat, n_lon); }
};

struct VerifySpec {
    std::int64_t mc_paths = 100000;
    double mc_dt = 1e-3;
    double mc_horizon = 50.0;
    std::uint64_t seed = 12345;
    int scan_n = 40;
    double green_rel_tol = 1e-9;
    double residual_tol = 1e-3;   // normalized Green residual at boundary / exterior points
    double majorant_tol = 1e-4;   // allowed negative V - g inside C
    double mc_sigmas = 3.0;
    double mc_bias_coef = 0.5;    // bias allowance c sqrt(dt) * scale
    bool run_mc = true;
    std::vector<std::vector<double>> exterior_points;
};

struct OutputSpec {
    std::string boundary = "boundary.csv";
    std::string report = "report.json";
    std::string plot = "boundary.svg";
};

struct RunConfig {
    double r = 1.0;
    std::vector<double> lambdas = {1.0, 4.0};
    GridSpec grid;
    SolveConfig solver;
    VerifySpec verify;
    OutputSpec output;
    int threads = 1;

    QuadraticProblem problem() const { return QuadraticProblem(r, lambdas); }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(path + "." + it.key() + ": unknown key");
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number, got " + std::string(v.type_name()));
    return v.get<double>();
}

inline double get_positive(const json& v, const std::string& path) {
    const double x = get_number(v, path);
    if (!(x > 0.0)) throw ConfigError(path + ": must be positive, got " + fmt(x));
    return x;
}

inline std::int64_t get_int(const json& v, const std::string& path, std::int64_t min) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer, got " + std::string(v.type_name()));
    const auto x = v.get<std::int64_t>();
    if (x < min) throw ConfigError(path + ": must be >= " + std::to_string(min) + ", got " + std::to_string(x));
    return x;
}

inline bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    return v.get<std::string>();
}

}  // namespace detail

/// Overlays the keys present in `j` onto `cfg`; missing keys keep their values.
inline void apply_config_json(const json& j, RunConfig& cfg, const std::string& root = "config") {
    using namespace detail;
    reject_unknown(j, root, {"r", "lambdas", "grid", "solver", "verify", "output", "threads"});
    if (j.contains("r")) cfg.r = get_positive(j["r"], root + ".r");
    if (j.contains("lambdas")) {
        const auto& l = j["lambdas"];
        if (!l.is_array() || l.size() < 2 || l.size() > 3)
            throw ConfigError(root + ".lambdas: expected an array of 2 or 3 positive numbers");
        cfg.lambdas.clear();
        for (std::size_t i = 0; i < l.size(); ++i)
            cfg.lambdas.push_back(get_positive(l[i], root + ".lambdas[" + std::to_string(i) + "]"));
    }
    if (j.contains("threads")) cfg.threads = static_cast<int>(get_int(j["threads"], root + ".threads", 1));
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        const std::string p = root + ".grid";
        reject_unknown(g, p, {"n", "n_lat", "n_lon"});
        if (g.contains("n")) cfg.grid.n = static_cast<int>(get_int(g["n"], p + ".n", 4));
        if (g.contains("n_lat")) cfg.grid.n_lat = static_cast<int>(get_int(g["n_lat"], p + ".n_lat", 2));
        if (g.contains("n_lon")) cfg.grid.n_lon = static_cast<int>(get_int(g["n_lon"], p + ".n_lon", 4));
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        const std::string p = root + ".solver";
        reject_unknown(s, p,
                       {"max_iterations", "residual_tol", "step_tol", "damping", "init_factor", "homotopy_steps",
                        "series_switch", "svd_cutoff", "rho_cap_factor", "overdetermined", "symmetrize"});
        auto& c = cfg.solver;
        if (s.contains("max_iterations")) c.max_iterations = static_cast<int>(get_int(s["max_iterations"], p + ".max_iterations", 1));
        if (s.contains("residual_tol")) c.residual_tol = get_positive(s["residual_tol"], p + ".residual_tol");
        if (s.contains("step_tol")) c.step_tol = get_positive(s["step_tol"], p + ".step_tol");
        if (s.contains("damping")) c.damping = get_positive(s["damping"], p + ".damping");
        if (s.contains("init_factor")) {
            c.init_factor = get_number(s["init_factor"], p + ".init_factor");
            if (!(c.init_factor > 1.0)) throw ConfigError(p + ".init_factor: must exceed 1");
        }
        if (s.contains("homotopy_steps")) c.homotopy_steps = static_cast<int>(get_int(s["homotopy_steps"], p + ".homotopy_steps", 0));
        if (s.contains("series_switch")) c.series_switch = get_positive(s["series_switch"], p + ".series_switch");
        if (s.contains("svd_cutoff")) c.svd_cutoff = get_positive(s["svd_cutoff"], p + ".svd_cutoff");
        if (s.contains("rho_cap_factor")) c.rho_cap_factor = get_positive(s["rho_cap_factor"], p + ".rho_cap_factor");
        if (s.contains("overdetermined")) c.overdetermined = get_bool(s["overdetermined"], p + ".overdetermined");
        if (s.contains("symmetrize")) c.symmetrize = get_bool(s["symmetrize"], p + ".symmetrize");
    }
    if (j.contains("verify")) {
        const auto& v = j["verify"];
        const std::string p = root + ".verify";
        reject_unknown(v, p,
                       {"mc_paths", "mc_dt", "mc_horizon", "seed", "scan_n", "green_rel_tol", "residual_tol",
                        "majorant_tol", "mc_sigmas", "mc_bias_coef", "run_mc", "exterior_points"});
        auto& c = cfg.verify;
        if (v.contains("mc_paths")) c.mc_paths = get_int(v["mc_paths"], p + ".mc_paths", 100);
        if (v.contains("mc_dt")) c.mc_dt = get_positive(v["mc_dt"], p + ".mc_dt");
        if (v.contains("mc_horizon")) c.mc_horizon = get_positive(v["mc_horizon"], p + ".mc_horizon");
        if (v.contains("seed")) c.seed = static_cast<std::uint64_t>(get_int(v["seed"], p + ".seed", 0));
        if (v.contains("scan_n")) c.scan_n = static_cast<int>(get_int(v["scan_n"], p + ".scan_n", 1));
        if (v.contains("green_rel_tol")) c.green_rel_tol = get_positive(v["green_rel_tol"], p + ".green_rel_tol");
        if (v.contains("residual_tol")) c.residual_tol = get_positive(v["residual_tol"], p + ".residual_tol");
        if (v.contains("majorant_tol")) c.majorant_tol = get_positive(v["majorant_tol"], p + ".majorant_tol");
        if (v.contains("mc_sigmas")) c.mc_sigmas = get_positive(v["mc_sigmas"], p + ".mc_sigmas");
        if (v.contains("mc_bias_coef")) c.mc_bias_coef = get_number(v["mc_bias_coef"], p + ".mc_bias_coef");
        if (v.contains("run_mc")) c.run_mc = get_bool(v["run_mc"], p + ".run_mc");
        if (v.contains("exterior_points")) {
            const auto& e = v["exterior_points"];
            if (!e.is_array()) throw ConfigError(p + ".exterior_points: expected an array of points");
            c.exterior_points.clear();
            for (std::size_t i = 0; i < e.size(); ++i) {
                const std::string q = p + ".exterior_points[" + std::to_string(i) + "]";
                if (!e[i].is_array()) throw ConfigError(q + ": expected an array of coordinates");
                std::vector<double> pt;
                for (std::size_t k = 0; k < e[i].size(); ++k) pt.push_back(get_number(e[i][k], q + "[" + std::to_string(k) + "]"));
                c.exterior_points.push_back(std::move(pt));
            }
        }
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        const std::string p = root + ".output";
        reject_unknown(o, p, {"boundary", "report", "plot"});
        if (o.contains("boundary")) cfg.output.boundary = get_string(o["boundary"], p + ".boundary");
        if (o.contains("report")) cfg.output.report = get_string(o["report"], p + ".report");
        if (o.contains("plot")) cfg.output.plot = get_string(o["plot"], p + ".plot");
    }
}

/// Reads a JSON config file; parse errors carry the byte offset.
inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- reports

inline json to_json(const SolveReport& rep) {
    json trace = json::array();
    for (const auto& h : rep.homotopy_trace)
        trace.push_back({{"lambdas", h.lambdas}, {"residual", h.residual}, {"iterations", h.iterations}});
    return {{"schema_version", kSchemaVersion},
            {"converged", rep.converged},
            {"iterations", rep.iterations},
            {"residual_inf_norm", rep.residual_inf_norm},
            {"residual_scale", rep.residual_scale},
            {"step_inf_norm", rep.step_inf_norm},
            {"stop_reason", rep.stop_reason},
            {"homotopy_trace", trace}};
}

inline json to_json(const ClassCheckReport& c) {
    return {{"closed_ok", c.closed_ok},
            {"contains_negative_set", c.contains_negative_set},
            {"bounded_ok", c.bounded_ok},
            {"star_shaped_ok", c.star_shaped_ok},
            {"symmetry_ok", c.symmetry_ok},
            {"box_ok", c.box_ok},
            {"worst_violation", c.worst_violation},
            {"notes", c.notes}};
}

inline json to_json(const VerificationReport& v) {
    return {{"schema_version", kSchemaVersion},
            {"boundary_residuals", v.boundary_residuals},
            {"exterior_residuals", v.exterior_residuals},
            {"majorant_min_gap", v.majorant_min_gap},
            {"majorant_points", v.majorant_points},
            {"mc_value", v.mc_value},
            {"mc_stderr", v.mc_stderr},
            {"reconstructed_value", v.reconstructed_value},
            {"class_check", to_json(v.class_check)}};
}

}  // namespace martin::io
