#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "martin/io.hpp"
#include "martin/oracles.hpp"

using namespace martin;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

io::LoadedBoundary parse(const std::string& text) {
    std::istringstream in(text);
    return io::parse_boundary_csv(in, "mem.csv");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

io::RunConfig apply(const std::string& text) {
    io::RunConfig cfg;
    io::apply_config_json(nlohmann::json::parse(text), cfg, "cfg.json");
    return cfg;
}

std::string config_error(const std::string& text) {
    try {
        apply(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("boundary CSV round trip, d = 2", "[io]") {
    const QuadraticProblem p(0.3, {1.0, 4.0});
    const auto grid = SphereGrid::circle(8);
    std::vector<double> radii{5.0, 4.5, 4.2, 4.5, 5.0, 4.5, 4.2, 4.5};
    const StarBoundary b(grid, radii);
    const std::string text = io::boundary_csv(p, b);
    CHECK_THAT(text, ContainsSubstring("# schema_version=1 r=0.29999999999999999 lambdas=1;4\ntheta,rho,x1,x2\n"));
    const auto back = parse(text);
    REQUIRE(back.problem);
    CHECK(back.problem->r() == 0.3);
    CHECK(back.problem->lambdas() == p.lambdas());
    CHECK(back.boundary.radii() == radii);
    CHECK(io::boundary_csv(*back.problem, back.boundary) == text);
}

TEST_CASE("boundary CSV round trip, d = 3", "[io]") {
    const QuadraticProblem p(0.5, {1.0, 1.0, 1.0});
    const auto grid = SphereGrid::sphere(3, 4);
    std::vector<double> radii(12);
    for (int i = 0; i < 12; ++i) radii[i] = 3.0 + 0.01 * i;
    const std::string text = io::boundary_csv(p, StarBoundary(grid, radii));
    CHECK_THAT(text, ContainsSubstring("lat_index,lon_index,rho,x1,x2,x3\n"));
    const auto back = parse(text);
    CHECK(back.boundary.dim() == 3);
    CHECK(back.boundary.radii() == radii);
}

TEST_CASE("boundary CSV without the schema comment", "[io]") {
    const auto b = parse("theta,rho,x1,x2\n0,3,3,0\n1.5707963267948966,3,0,3\n3.1415926535897931,3,-3,0\n4.7123889803846897,3,0,-3\n");
    CHECK_FALSE(b.problem);
    CHECK(b.boundary.size() == 4);
}

TEST_CASE("boundary CSV errors name the file and line", "[io]") {
    CHECK_THAT(error_of(""), ContainsSubstring("empty boundary file"));
    CHECK_THAT(error_of("theta,rho,x1,x2\n"), ContainsSubstring("no rows"));
    CHECK_THAT(error_of("theta,radius\n"), ContainsSubstring("mem.csv:1: unexpected header"));
    CHECK_THAT(error_of("theta,rho,x1,x2\n0,3,3\n"), ContainsSubstring("mem.csv:2: expected 4 columns"));
    CHECK_THAT(error_of("theta,rho,x1,x2\n0,abc,3,0\n"), ContainsSubstring("mem.csv:2: rho"));
    CHECK_THAT(error_of("theta,rho,x1,x2\n0.1,3,3,0\n1,3,3,0\n2,3,3,0\n3,3,3,0\n"), ContainsSubstring("equispaced"));
    CHECK_THAT(error_of("theta,rho,x1,x2\n0,-3,3,0\n1.5707963267948966,3,0,3\n3.1415926535897931,3,-3,0\n4.7123889803846897,3,0,-3\n"),
               ContainsSubstring("positive"));
    CHECK_THAT(error_of("# schema_version=9 r=1 lambdas=1;1\ntheta,rho,x1,x2\n"), ContainsSubstring("schema_version"));
    CHECK_THROWS_AS(io::read_boundary_csv("/nonexistent/boundary.csv"), IoError);
}

TEST_CASE("run config overlays defaults", "[io]") {
    const auto def = apply("{}");
    CHECK(def.r == 1.0);
    CHECK(def.grid.n == 64);
    const auto cfg = apply(R"({"r": 0.3, "lambdas": [1, 9], "grid": {"n": 32},
                               "solver": {"homotopy_steps": 6, "overdetermined": true},
                               "verify": {"mc_paths": 500, "run_mc": false, "exterior_points": [[5, 0]]},
                               "output": {"boundary": "b.csv"}, "threads": 2})");
    CHECK(cfg.r == 0.3);
    CHECK(cfg.lambdas == std::vector<double>{1.0, 9.0});
    CHECK(cfg.grid.n == 32);
    CHECK(cfg.grid.n_lat == 16);
    CHECK(cfg.solver.homotopy_steps == 6);
    CHECK(cfg.solver.overdetermined);
    CHECK(cfg.solver.residual_tol == SolveConfig{}.residual_tol);
    CHECK(cfg.verify.mc_paths == 500);
    CHECK_FALSE(cfg.verify.run_mc);
    CHECK(cfg.verify.exterior_points.size() == 1);
    CHECK(cfg.output.boundary == "b.csv");
    CHECK(cfg.output.report == "report.json");
    CHECK(cfg.threads == 2);
}

TEST_CASE("run config errors are field-precise", "[io]") {
    CHECK_THAT(config_error(R"({"rr": 1})"), ContainsSubstring("cfg.json.rr: unknown key"));
    CHECK_THAT(config_error(R"({"r": -1})"), ContainsSubstring("cfg.json.r"));
    CHECK_THAT(config_error(R"({"r": "one"})"), ContainsSubstring("cfg.json.r"));
    CHECK_THAT(config_error(R"({"lambdas": [1, 0]})"), ContainsSubstring("cfg.json.lambdas[1]"));
    CHECK_THAT(config_error(R"({"lambdas": [1]})"), ContainsSubstring("cfg.json.lambdas"));
    CHECK_THAT(config_error(R"({"grid": {"n": 2}})"), ContainsSubstring("cfg.json.grid.n"));
    CHECK_THAT(config_error(R"({"solver": {"init_factor": 0.5}})"), ContainsSubstring("cfg.json.solver.init_factor"));
    CHECK_THAT(config_error(R"({"solver": {"tolerance": 1}})"), ContainsSubstring("cfg.json.solver.tolerance: unknown key"));
    CHECK_THAT(config_error(R"({"verify": {"mc_paths": 5}})"), ContainsSubstring("cfg.json.verify.mc_paths"));
    CHECK_THAT(config_error(R"({"verify": {"run_mc": 1}})"), ContainsSubstring("cfg.json.verify.run_mc"));
    CHECK_THAT(config_error(R"({"verify": {"exterior_points": [[1, "a"]]}})"),
               ContainsSubstring("cfg.json.verify.exterior_points[0][1]"));
    CHECK_THAT(config_error(R"({"output": {"plot": 3}})"), ContainsSubstring("cfg.json.output.plot"));
    CHECK_THAT(config_error(R"([1, 2])"), ContainsSubstring("cfg.json"));
}

TEST_CASE("reports serialize with a schema version", "[io]") {
    SolveReport rep;
    rep.converged = true;
    rep.iterations = 7;
    rep.homotopy_trace.push_back({{1.0, 2.0}, 1e-12, 3});
    const auto j = io::to_json(rep);
    CHECK(j["schema_version"] == 1);
    CHECK(j["iterations"] == 7);
    CHECK(j["homotopy_trace"].size() == 1);
    VerificationReport v;
    v.boundary_residuals = {1e-9, -2e-9};
    const auto jv = io::to_json(v);
    CHECK(jv["schema_version"] == 1);
    CHECK(jv["boundary_residuals"].size() == 2);
    CHECK(jv.contains("class_check"));
}

TEST_CASE("number formatting round-trips", "[io]") {
    for (double v : {0.1, 1.0 / 3.0, 2.6186196475028085, 1e-300, -7.5})
        CHECK(std::stod(io::fmt(v)) == v);
}
