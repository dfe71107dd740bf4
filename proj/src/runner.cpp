#include "kg/runner.hpp"

#include "kg/acceptance.hpp"
#include "kg/errors.hpp"
#include "kg/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <ostream>
#include <vector>

namespace kg::runner {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240611;

using Keys = std::vector<std::string>;

void check_allowed(const json& j, const Keys& allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
  }
}

json defaults_for(const std::string& key) {
  static const std::map<std::string, json> table = {
      {"grid", {{"kind", "uniform"}, {"n", 100}}},
      {"payoff", {{"kind", "constant"}, {"r", 0.5}}},
      {"state", {{"mean", 0.0}, {"var", 1.0}}},
      {"info", {{"kind", "full_info"}}},
      {"solver", {{"method", "auto"}, {"tol", 1e-12}, {"max_iter", 100000}}},
      {"require", "none"},
      {"r", 0.5},
      {"moment", {{"kind", "zero"}}},
      {"canonical", false},
      {"objective", {{"alpha", 1.0}, {"beta", 1.0}}},
      {"m", 0.5},
      {"samples", 500},
      {"n", 100},
      {"diagram", {{"alpha", {-2.0, 2.0}}, {"beta", {-2.0, 2.0}}, {"resolution", 200}}},
      {"lambda", 0.5},
      {"gamma", 2.0},
      {"draws", 100000},
      {"tol_se", 4.0},
      {"conditioning", json::array({0})},
      {"scale", 1.0},
      {"bm", {{"mu_theta", 0.0}, {"var_theta", 1.0}, {"var_x", 1.0}, {"var_y", 1.0}, {"r", 0.5}, {"s", 0.5}, {"k", 0.0}}},
  };
  return table.at(key);
}

double default_tol(const std::string& command) {
  if (command == "design") return 1e-6;
  if (command == "mc" || command == "spectral") return 1e-9;
  return 1e-8;
}

// Keys each command (and mode) reads besides the common ones.
Keys command_keys(const std::string& command, const std::string& mode) {
  if (command == "spectral") return {"grid", "payoff", "require"};
  if (command == "equilibrium") return {"grid", "payoff", "state", "info", "solver"};
  if (command == "moments") return {"grid", "r", "moment", "canonical"};
  if (command == "design") {
    if (mode == "targeted" || mode == "public") return {"r", "objective"};
    if (mode == "symmetric") return {"grid", "r", "objective", "m"};
    if (mode == "audit") return {"r", "objective", "samples", "n"};
    if (mode == "diagram") return {"r", "diagram"};
    if (mode == "cournot") return {"lambda", "gamma"};
    throw InvalidArgument("design: unknown mode '" + mode + "'");
  }
  if (command == "mc") {
    if (mode == "fubini") return {"grid", "payoff", "state", "info", "draws", "tol_se", "conditioning"};
    if (mode == "br-audit") return {"grid", "payoff", "state", "info", "draws", "tol_se"};
    if (mode == "duplicate") return {"grid", "payoff", "state", "draws", "tol_se", "scale"};
    if (mode == "bm") return {"grid", "bm", "draws", "tol_se"};
    throw InvalidArgument("mc: unknown mode '" + mode + "'");
  }
  throw InvalidArgument("unknown command '" + command + "'");
}

std::string default_mode(const std::string& command) {
  if (command == "design") return "targeted";
  if (command == "mc") return "br-audit";
  return "";
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

struct Artifacts {
  std::map<std::string, std::string> files;
};

SolveOptions parse_solver(const json& j) {
  io::check_keys(j, {"method", "tol", "max_iter"}, "solver");
  SolveOptions opts;
  const std::string method = j.at("method");
  if (method == "auto") opts.method = SolveOptions::Method::Auto;
  else if (method == "direct") opts.method = SolveOptions::Method::Direct;
  else if (method == "iterative") opts.method = SolveOptions::Method::Iterative;
  else throw InvalidArgument("solver: method must be auto, direct or iterative");
  opts.tol = j.at("tol").get<double>();
  opts.max_iter = j.at("max_iter").get<std::size_t>();
  return opts;
}

int run_spectral(const json& c, const fs::path& base, json& result, Artifacts& art) {
  const MeasureGrid grid = io::parse_grid(c["grid"]);
  const Kernel k = io::parse_kernel(c["payoff"], grid, base);
  const std::string require = c["require"];
  if (require != "none" && require != "r1" && require != "r2") throw InvalidArgument("require: none, r1 or r2");
  const SpectralReport rep = spectral_report(k);
  result = io::to_json(rep);
  std::string csv = "re,im\n";
  for (auto z : eigenvalues(k)) csv += io::format_double(z.real()) + "," + io::format_double(z.imag()) + "\n";
  art.files["eigenvalues.csv"] = csv;
  const bool ok = require == "none" || (require == "r1" ? check_r1(k) : check_r2(k));
  result["requirement"] = require;
  result["requirement_met"] = ok;
  return ok ? kOk : kVerificationFailure;
}

int run_equilibrium(const json& c, const fs::path& base, json& result, Artifacts& art) {
  const MeasureGrid grid = io::parse_grid(c["grid"]);
  const BasicGame game = io::parse_game(c["payoff"], c["state"], grid, base);
  const GaussianInfo info = io::parse_info(c["info"], game, base);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info, parse_solver(c["solver"]));
  const MomentRestrictionReport mr = verify_moment_restrictions(eq, game, c["tol"].get<double>());
  result = {{"iterations", eq.iterations},
            {"fixed_point_residual", eq.fixed_point_residual},
            {"moment_restrictions", io::to_json(mr)},
            {"induced_mean", vector_json(eq.induced_mean.values())}};
  art.files["equilibrium.csv"] = io::equilibrium_csv(eq);
  art.files["action_cov.csv"] = io::matrix_to_csv(eq.induced_action_cov.values());
  return mr.pass ? kOk : kVerificationFailure;
}

int run_moments(const json& c, const fs::path& base, json& result, Artifacts&) {
  const MeasureGrid grid = io::parse_grid(c["grid"]);
  const double r = c["r"].get<double>();
  const double tol = c["tol"].get<double>();
  const EquilibriumMoment m = io::parse_moment(c["moment"], grid, r, base);
  const BoundsReport b = bounds_check(m, r, tol);
  result = {{"bounds", io::to_json(b)}, {"obedience_residual", check_obedience(m, kernels::constant(grid, r))}};
  bool ok = b.pass;
  if (c["canonical"].get<bool>()) {
    try {
      const BasicGame game = BasicGame::common_state(kernels::constant(grid, r), 0.0, m.state_var());
      const LinearEquilibrium eq = solve_linear_equilibrium(game, construct_canonical_signals(m, game));
      const double err = std::max((eq.induced_action_cov.values() - m.xi().values()).cwiseAbs().maxCoeff(),
                                  (eq.induced_action_state_cov.values() - m.zeta().values()).cwiseAbs().maxCoeff());
      result["canonical_round_trip_error"] = err;
      ok = ok && err <= tol;
    } catch (const InfeasibleMoment& e) {
      result["canonical_error"] = e.what();
      ok = false;
    }
  }
  return ok ? kOk : kVerificationFailure;
}

int run_design(const json& c, const fs::path& base, json& result, Artifacts& art) {
  const std::string mode = c["mode"];
  const double tol = c["tol"].get<double>();
  if (mode == "cournot") {
    const CournotPolicy p = cournot_policy(c["lambda"].get<double>(), c["gamma"].get<double>());
    result = {{"u", p.u},           {"v", p.v},         {"w", p.w},
              {"r", p.r},           {"alpha", p.alpha}, {"beta", p.beta},
              {"full_disclosure", p.full_disclosure}, {"m_star", p.m_star},
              {"regime", io::to_json(p.regime)},      {"consistent", p.consistent}};
    return p.consistent ? kOk : kVerificationFailure;
  }
  const double r = c["r"].get<double>();
  if (mode == "diagram") {
    const json& d = c["diagram"];
    io::check_keys(d, {"alpha", "beta", "resolution"}, "diagram");
    const auto cells = regime_diagram(r, d.at("alpha").at(0).get<double>(), d.at("alpha").at(1).get<double>(),
                                      d.at("beta").at(0).get<double>(), d.at("beta").at(1).get<double>(),
                                      d.at("resolution").get<std::size_t>());
    std::map<std::string, std::size_t> tally;
    for (const auto& cell : cells) ++tally[to_string(cell.report.regime)];
    result = {{"cells", cells.size()}, {"regime_counts", tally}};
    art.files["diagram.csv"] = io::diagram_csv(cells);
    return kOk;
  }
  const DesignObjective obj = io::parse_objective(c["objective"]);
  const RegimeReport opt = optimal_targeted(r, obj);
  result = {{"targeted", io::to_json(opt)}, {"alpha", obj.alpha()}, {"beta", obj.beta(r)}};
  if (mode == "targeted") return kOk;
  if (mode == "public") {
    const PublicOptimum p = public_optimum(r, obj);
    result["public"] = {{"z_star", p.z_star}, {"v_pub", p.v_pub}, {"boundary", p.boundary}};
    result["gap"] = opt.v_star - p.v_pub;
    return kOk;
  }
  if (mode == "symmetric") {
    const MeasureGrid grid = io::parse_grid(c["grid"]);
    const double m = c["m"].get<double>();
    const double v = objective_value(symmetric_moment(m, r, grid).moment, obj);
    result["symmetric_value"] = v;
    result["targeted_value"] = targeted_value(m, r, obj);
    return kOk;
  }
  // audit
  const AuditReport a = global_optimality_audit(r, obj, c["samples"].get<std::size_t>(), c["seed"].get<std::uint64_t>(),
                                                c["n"].get<std::size_t>());
  const double bound = tol * (1.0 + std::abs(a.v_star));
  result["audit"] = {{"max_excess", a.max_excess}, {"v_star", a.v_star},          {"samples", a.samples},
                     {"worst_index", a.worst_index}, {"worst_kind", a.worst_kind}, {"tolerance", bound}};
  (void)base;
  return a.max_excess <= bound ? kOk : kVerificationFailure;
}

int run_mc(const json& c, const fs::path& base, json& result, Artifacts&) {
  const std::string mode = c["mode"];
  const std::uint64_t seed = c["seed"].get<std::uint64_t>();
  const std::size_t draws = c["draws"].get<std::size_t>();
  const double tol_se = c["tol_se"].get<double>();
  const MeasureGrid grid = io::parse_grid(c["grid"]);
  if (mode == "bm") {
    const json& p = c["bm"];
    io::check_keys(p, {"mu_theta", "var_theta", "var_x", "var_y", "r", "s", "k"}, "bm");
    const double mu = p.at("mu_theta"), vt = p.at("var_theta"), vx = p.at("var_x"), vy = p.at("var_y");
    const double r = p.at("r"), s = p.at("s"), k = p.at("k");
    const BmSolution sol = bm_example_equilibrium(mu, vt, vx, vy, r, s, k);
    const BasicGame game = bm_game(grid, mu, vt, r, s, k);
    const GaussianInfo info = bm_info(game, mu, vt, vx, vy, s);
    const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
    double disc = 0.0;
    for (std::size_t t = 0; t < grid.size(); ++t)
      disc = std::max({disc, std::abs(eq.intercepts[t] - sol.alpha0), std::abs(eq.loadings[t](0) - sol.alpha_x),
                       std::abs(eq.loadings[t](1) - sol.alpha_y)});
    const BestResponseAudit audit = best_response_audit(eq, game, info, draws, seed, tol_se);
    result = {{"alpha0", sol.alpha0},         {"alpha_x", sol.alpha_x},     {"alpha_y", sol.alpha_y},
              {"volatility", sol.volatility}, {"dispersion", sol.dispersion}, {"grid_discrepancy", disc},
              {"audit", io::to_json(audit)}};
    return audit.pass ? kOk : kVerificationFailure;
  }
  const BasicGame game = io::parse_game(c["payoff"], c["state"], grid, base);
  if (mode == "duplicate") {
    const DuplicateReport d = duplicate_equilibria(game, draws, seed, c["scale"].get<double>(), tol_se);
    result = {{"lambda", d.lambda},
              {"distance", d.distance},
              {"phi", vector_json(d.phi.values())},
              {"audit_f", io::to_json(d.audit_f)},
              {"audit_g", io::to_json(d.audit_g)},
              {"pass", d.pass}};
    return d.pass ? kOk : kVerificationFailure;
  }
  const GaussianInfo info = io::parse_info(c["info"], game, base);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
  if (mode == "br-audit") {
    const BestResponseAudit a = best_response_audit(eq, game, info, draws, seed, tol_se);
    result = {{"audit", io::to_json(a)}};
    return a.pass ? kOk : kVerificationFailure;
  }
  // fubini: the equilibrium action process together with states and signals
  const JointLaw law = profile_joint_law(eq, game, info);
  const ProcessSample s = sample_gaussian(law.mean, law.cov, draws, seed, law.state_dim);
  const StatCheck mean_check = verify_unconditional_fubini(s, grid, tol_se);
  const StatCheck var_check = verify_aggregate_variance(s, grid, tol_se);
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(law.mean.size(), 1.0, 2.0);
  const double exchange = covariance_exchange_residual(law.cov, law.state_dim, grid, a);
  std::vector<std::size_t> cond;
  for (const auto& e : c["conditioning"]) {
    const auto i = e.get<std::size_t>();
    if (i >= static_cast<std::size_t>(law.mean.size())) throw InvalidArgument("conditioning: index out of range");
    cond.push_back(i);
  }
  const double tol = c["tol"].get<double>();
  const ConditionalFubiniReport cf = verify_conditional_fubini(s, grid, cond, tol);
  const bool ok = mean_check.pass && var_check.pass && exchange <= tol && cf.pass;
  result = {{"unconditional", io::to_json(mean_check)},
            {"aggregate_variance", io::to_json(var_check)},
            {"covariance_exchange_residual", exchange},
            {"conditional_discrepancy", cf.max_discrepancy},
            {"clamp_warning", s.clamp_warning},
            {"generator", s.generator_id}};
  return ok ? kOk : kVerificationFailure;
}

}  // namespace

json resolve_config(const json& config) {
  if (!config.is_object()) throw InvalidArgument("config: expected a JSON object");
  if (!config.contains("command") || !config["command"].is_string()) throw InvalidArgument("config: missing 'command'");
  const std::string command = config["command"];
  if (default_mode(command).empty() && config.contains("mode")) throw InvalidArgument("config: '" + command + "' takes no mode");
  const std::string mode = config.contains("mode") ? config["mode"].get<std::string>() : default_mode(command);
  Keys keys = command_keys(command, mode);
  Keys allowed{"command", "seed", "tol", "out"};
  if (!mode.empty()) allowed.push_back("mode");
  allowed.insert(allowed.end(), keys.begin(), keys.end());
  check_allowed(config, allowed, "config");

  json out = {{"command", command},
              {"seed", config.value("seed", kDefaultSeed)},
              {"tol", config.value("tol", default_tol(command))},
              {"out", config.value("out", std::string())}};
  if (!out["seed"].is_number_integer() || out["seed"].get<long long>() < 0) throw InvalidArgument("seed: expected a non-negative integer");
  if (!out["tol"].is_number() || !(out["tol"].get<double>() > 0.0)) throw InvalidArgument("tol: expected a positive number");
  if (!mode.empty()) out["mode"] = mode;
  for (const auto& k : keys) {
    json value = config.contains(k) ? config[k] : defaults_for(k);
    if (k == "solver" && config.contains(k)) {
      value = defaults_for(k);
      value.merge_patch(config[k]);
    }
    out[k] = value;
  }
  if (command == "mc" && !config.contains("grid")) out["grid"] = {{"kind", "uniform"}, {"n", 20}};
  return out;
}

Outcome run(const json& config, const fs::path& base_dir) {
  Outcome outcome;
  Artifacts art;
  try {
    outcome.resolved = resolve_config(config);
    const json& c = outcome.resolved;
    const std::string command = c["command"];
    int code = kOk;
    if (command == "spectral") code = run_spectral(c, base_dir, outcome.result, art);
    else if (command == "equilibrium") code = run_equilibrium(c, base_dir, outcome.result, art);
    else if (command == "moments") code = run_moments(c, base_dir, outcome.result, art);
    else if (command == "design") code = run_design(c, base_dir, outcome.result, art);
    else code = run_mc(c, base_dir, outcome.result, art);
    outcome.exit_code = code;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  outcome.result["pass"] = outcome.exit_code == kOk;
  const std::string out = outcome.resolved["out"];
  if (!out.empty()) {
    const fs::path dir(out);
    fs::create_directories(dir);
    for (const auto& [name, content] : art.files) io::write_atomic(dir / name, content);
    io::write_atomic(dir / "config.json", outcome.resolved.dump(2) + "\n");
    io::write_atomic(dir / "result.json", outcome.result.dump(2) + "\n");
  }
  return outcome;
}

int reproduce_all(const ReproduceOptions& opts, std::ostream& log) {
  fs::create_directories(opts.out);
  acceptance::Options aopts;
  aopts.seed = opts.seed;
  aopts.inject_perturbation = opts.inject_perturbation;

  json checks = json::array();
  json timing = json::object();
  bool all = true;
  acceptance::run_all(aopts, [&](const acceptance::Result& r) {
    log << acceptance::format_line(r) << std::endl;
    checks.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"metrics", r.metrics}});
    timing[std::to_string(r.id)] = r.seconds;
    all = all && r.pass;
  });

  // Regime rasters for two complementarity levels and the Cournot classification.
  for (double r : {0.5, -1.0}) {
    const auto cells = regime_diagram(r, -2.0, 2.0, -2.0, 2.0, 200);
    io::write_atomic(opts.out / ("diagram_r" + io::format_double(r) + ".csv"), io::diagram_csv(cells));
  }
  std::string cournot = "lambda,gamma,full_disclosure,m_star,regime\n";
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t j = 0; j < 200; ++j) {
      const double lambda = (static_cast<double>(i) + 0.5) / 200.0, gamma = (static_cast<double>(j) + 0.5) * 12.0 / 200.0;
      const CournotPolicy p = cournot_policy(lambda, gamma);
      cournot += io::format_double(lambda) + "," + io::format_double(gamma) + "," + (p.full_disclosure ? "1" : "0") +
                 "," + io::format_double(p.m_star) + "," + to_string(p.regime.regime) + "\n";
    }
  }
  io::write_atomic(opts.out / "cournot.csv", cournot);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const json manifest = {{"header", {{"generated_at", stamp}, {"seconds", timing}}},
                         {"seed", opts.seed},
                         {"inject_perturbation", opts.inject_perturbation},
                         {"generator", kGeneratorId},
                         {"checks", checks},
                         {"all_pass", all}};
  io::write_atomic(opts.out / "manifest.json", manifest.dump(2) + "\n");
  log << (all ? "all checks passed" : "some checks FAILED") << std::endl;
  return all ? kOk : kVerificationFailure;
}

}  // namespace kg::runner
