#include "kg/errors.hpp"
#include "kg/io.hpp"
#include "kg/runner.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kg;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kg_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  auto gen = kgtest::rng(50);
  for (int i = 0; i < 100; ++i) {
    const double x = kgtest::normal(gen, 1, 1)(0, 0) * std::pow(10.0, kgtest::uniform(gen, -20, 20));
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("CSV matrices round-trip") {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  auto gen = kgtest::rng(51);
  const Eigen::MatrixXd m = kgtest::normal(gen, 4, 3);
  io::write_atomic(dir / "m.csv", io::matrix_to_csv(m));
  CHECK(io::read_csv_matrix(dir / "m.csv") == m);
  io::write_atomic(dir / "bad.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::read_csv_matrix(dir / "bad.csv"), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("parsers validate keys") {
  const MeasureGrid g = io::parse_grid(json{{"kind", "uniform"}, {"n", 4}});
  CHECK(g.size() == 4);
  CHECK(io::parse_grid(json{{"weights", {1, 3}}}).weight(1) == doctest::Approx(0.75));
  CHECK_THROWS_AS(io::parse_grid(json{{"kind", "uniform"}, {"n", 4}, {"extra", 1}}), InvalidArgument);
  CHECK_THROWS_AS(io::parse_kernel(json{{"kind", "constant"}, {"r", 0.5}, {"q", 1}}, g), InvalidArgument);
  CHECK_THROWS_AS(io::parse_kernel(json{{"kind", "nope"}}, g), InvalidArgument);
  CHECK(io::parse_kernel(json{{"kind", "matrix"}, {"values", {{1, 2, 3, 4}, {1, 2, 3, 4}, {0, 0, 0, 0}, {1, 1, 1, 1}}}}, g)(0, 3) == 4.0);

  const BasicGame game = io::parse_game(json{{"kind", "constant"}, {"r", 0.5}}, json{{"mean", 1.0}, {"var", 2.0}}, g);
  CHECK(game.common_state_var() == 2.0);
  CHECK(io::parse_info(json{{"kind", "targeted"}, {"mass", 0.5}}, game).total_signal_dim() == 4);
  CHECK_THROWS_AS(io::parse_info(json{{"kind", "public"}}, game), InvalidArgument);

  const DesignObjective obj = io::parse_objective(json{{"alpha", 0.3}, {"beta", 0.1}});
  CHECK(obj.alpha() == doctest::Approx(0.3));
  CHECK_THROWS_AS(io::parse_objective(json{{"alpha", 0.3}, {"u", 1}}), InvalidArgument);
  const EquilibriumMoment m = io::parse_moment(json{{"kind", "targeted"}, {"mass", 0.5}}, g, 0.5);
  CHECK(m.xi()(0, 0) == doctest::Approx(16.0 / 9.0));
}

TEST_CASE("malformed JSON is an input error") {
  const fs::path dir = scratch("malformed");
  fs::create_directories(dir);
  io::write_atomic(dir / "bad.json", "{\"command\": \"design\", ");
  CHECK_THROWS_AS(io::read_json(dir / "bad.json"), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("resolved config is a fixed point") {
  for (const json& cfg : {json{{"command", "design"}, {"mode", "cournot"}, {"lambda", 0.5}},
                          json{{"command", "equilibrium"}, {"solver", {{"method", "direct"}}}},
                          json{{"command", "mc"}, {"mode", "bm"}},
                          json{{"command", "spectral"}, {"payoff", {{"kind", "unidirectional"}, {"r", 2.0}}}},
                          json{{"command", "moments"}, {"moment", {{"kind", "symmetric"}, {"m", 0.5}}}}}) {
    const json once = runner::resolve_config(cfg);
    CHECK(runner::resolve_config(once) == once);
    CHECK(runner::resolve_config(json::parse(once.dump())) == once);
  }
  const json eq = runner::resolve_config(json{{"command", "equilibrium"}, {"solver", {{"method", "direct"}}}});
  CHECK(eq["solver"]["tol"] == 1e-12);
  CHECK_THROWS_AS(runner::resolve_config(json{{"command", "design"}, {"bogus", 1}}), InvalidArgument);
  CHECK_THROWS_AS(runner::resolve_config(json{{"command", "design"}, {"mode", "cournot"}, {"r", 0.5}}), InvalidArgument);
  CHECK_THROWS_AS(runner::resolve_config(json{{"command", "fly"}}), InvalidArgument);
  CHECK_THROWS_AS(runner::resolve_config(json{{"command", "spectral"}, {"mode", "x"}}), InvalidArgument);
  CHECK_THROWS_AS(runner::resolve_config(json{{"command", "spectral"}, {"tol", -1}}), InvalidArgument);
}

TEST_CASE("runs emit artifacts and the resolved config") {
  const fs::path dir = scratch("run");
  const json cfg{{"command", "equilibrium"},
                 {"grid", {{"kind", "uniform"}, {"n", 6}}},
                 {"payoff", {{"kind", "leave_one_out"}, {"r", 0.5}}},
                 {"info", {{"kind", "bm"}, {"mu_theta", 0.0}, {"var_theta", 1.0}, {"var_x", 1.0}, {"var_y", 1.0}, {"s", 1.0}}},
                 {"out", dir.string()}};
  const runner::Outcome first = runner::run(cfg);
  CHECK(first.exit_code == runner::kOk);
  for (const char* f : {"config.json", "result.json", "equilibrium.csv", "action_cov.csv"}) CHECK(fs::exists(dir / f));
  const json emitted = io::read_json(dir / "config.json");
  CHECK(runner::resolve_config(emitted) == first.resolved);
  const std::string result = slurp(dir / "result.json");
  const std::string csv = slurp(dir / "equilibrium.csv");

  // Rerunning from the emitted config reproduces every artifact byte for byte.
  const runner::Outcome second = runner::run(emitted);
  CHECK(second.exit_code == runner::kOk);
  CHECK(slurp(dir / "result.json") == result);
  CHECK(slurp(dir / "equilibrium.csv") == csv);
  fs::remove_all(dir);
}

TEST_CASE("input errors write nothing") {
  const fs::path dir = scratch("noartifacts");
  const json cfg{{"command", "equilibrium"}, {"payoff", {{"kind", "constant"}, {"r", "half"}}}, {"out", dir.string()}};
  CHECK_THROWS_AS(runner::run(cfg), InvalidArgument);
  CHECK_FALSE(fs::exists(dir));
  const json cfg2{{"command", "equilibrium"}, {"info", {{"kind", "targeted"}, {"nodes", {500}}}}, {"out", dir.string()}};
  CHECK_THROWS_AS(runner::run(cfg2), InvalidArgument);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("exit codes follow the verification outcome") {
  CHECK(runner::run(json{{"command", "spectral"}, {"payoff", {{"kind", "constant"}, {"r", 2.0}}}, {"require", "r2"}})
            .exit_code == runner::kVerificationFailure);
  CHECK(runner::run(json{{"command", "spectral"}, {"payoff", {{"kind", "unidirectional"}, {"r", 5.0}}}, {"require", "r2"}})
            .exit_code == runner::kOk);

  const runner::Outcome cournot = runner::run(json{{"command", "design"}, {"mode", "cournot"}, {"lambda", 0.5}, {"gamma", 2.0}});
  CHECK(cournot.exit_code == runner::kOk);
  CHECK(cournot.result["full_disclosure"] == true);

  const runner::Outcome feasible = runner::run(
      json{{"command", "moments"}, {"grid", {{"kind", "uniform"}, {"n", 8}}}, {"moment", {{"kind", "targeted"}, {"mass", 0.5}}},
           {"canonical", true}});
  CHECK(feasible.exit_code == runner::kOk);
  CHECK(feasible.result["canonical_round_trip_error"].get<double>() <= 1e-8);

  const fs::path dir = scratch("bad_moment");
  fs::create_directories(dir);
  io::write_atomic(dir / "xi.csv", io::matrix_to_csv(Eigen::MatrixXd::Zero(3, 3)));
  const runner::Outcome infeasible = runner::run(
      json{{"command", "moments"}, {"grid", {{"kind", "uniform"}, {"n", 3}}},
           {"moment", {{"xi_csv", "xi.csv"}, {"zeta", {1, 1, 1}}, {"state_var", 1.0}}}, {"canonical", true}},
      dir);
  CHECK(infeasible.exit_code == runner::kVerificationFailure);
  fs::remove_all(dir);
}

TEST_CASE("regime diagram artifact") {
  const fs::path dir = scratch("diagram");
  const runner::Outcome o = runner::run(
      json{{"command", "design"}, {"mode", "diagram"}, {"r", 0.5},
           {"diagram", {{"alpha", {-2, 2}}, {"beta", {-2, 2}}, {"resolution", 40}}}, {"out", dir.string()}});
  CHECK(o.exit_code == runner::kOk);
  std::ifstream in(dir / "diagram.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha,beta,regime,m_star,v_star");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 1600);
  fs::remove_all(dir);
}
