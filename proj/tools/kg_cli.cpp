// Command-line front end. Flags are merged into a JSON run configuration,
// which is resolved, executed, and emitted alongside the results.

#include "kg/errors.hpp"
#include "kg/io.hpp"
#include "kg/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using json = nlohmann::json;

struct Shortcuts {
  std::optional<std::size_t> n;
  std::optional<std::string> kernel;
  std::optional<double> r;
  std::optional<std::string> info;
  std::optional<double> noise_var;
  std::optional<double> mass;
  std::optional<std::string> method;
  std::optional<std::string> require;
  std::optional<std::string> mode;
  std::optional<std::string> moment;
  std::optional<double> m;
  std::optional<double> z;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> audit_n;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<std::size_t> resolution;
  std::optional<std::size_t> draws;
  std::optional<double> tol_se;
  std::optional<double> scale;
  bool canonical = false;
};

void apply_payoff(json& cfg, const Shortcuts& s) {
  if (s.kernel) cfg["payoff"] = {{"kind", *s.kernel}};
  if (s.r) {
    if (!cfg.contains("payoff")) cfg["payoff"] = {{"kind", "constant"}};
    cfg["payoff"]["r"] = *s.r;
  }
  if (cfg.contains("payoff") && cfg["payoff"].value("kind", "") != "identity" && !cfg["payoff"].contains("r") &&
      s.kernel)
    cfg["payoff"]["r"] = 0.5;
}

void apply_info(json& cfg, const Shortcuts& s) {
  if (s.info) cfg["info"] = {{"kind", *s.info}};
  if (s.noise_var) cfg["info"]["noise_var"] = *s.noise_var;
  if (s.mass) cfg["info"]["mass"] = *s.mass;
}

// Overlays command-line shortcuts on the configuration read from --config.
void apply(json& cfg, const std::string& command, const Shortcuts& s) {
  if (s.n) cfg["grid"] = {{"kind", "uniform"}, {"n", *s.n}};
  if (s.mode) cfg["mode"] = *s.mode;
  if (command == "spectral") {
    apply_payoff(cfg, s);
    if (s.require) cfg["require"] = *s.require;
  } else if (command == "equilibrium") {
    apply_payoff(cfg, s);
    apply_info(cfg, s);
    if (s.method) cfg["solver"]["method"] = *s.method;
  } else if (command == "moments") {
    if (s.r) cfg["r"] = *s.r;
    if (s.moment) cfg["moment"] = {{"kind", *s.moment}};
    if (s.m) cfg["moment"]["m"] = *s.m;
    if (s.z) cfg["moment"]["z"] = *s.z;
    if (s.mass) cfg["moment"]["mass"] = *s.mass;
    if (s.canonical) cfg["canonical"] = true;
  } else if (command == "design") {
    if (s.r) cfg["r"] = *s.r;
    if (s.alpha || s.beta) {
      json obj = cfg.value("objective", json{{"alpha", 1.0}, {"beta", 1.0}});
      if (s.alpha) obj["alpha"] = *s.alpha;
      if (s.beta) obj["beta"] = *s.beta;
      cfg["objective"] = obj;
    }
    if (s.m) cfg["m"] = *s.m;
    if (s.samples) cfg["samples"] = *s.samples;
    if (s.audit_n) cfg["n"] = *s.audit_n;
    if (s.lambda) cfg["lambda"] = *s.lambda;
    if (s.gamma) cfg["gamma"] = *s.gamma;
    if (s.resolution) cfg["diagram"] = {{"alpha", {-2.0, 2.0}}, {"beta", {-2.0, 2.0}}, {"resolution", *s.resolution}};
  } else if (command == "mc") {
    apply_payoff(cfg, s);
    apply_info(cfg, s);
    if (s.draws) cfg["draws"] = *s.draws;
    if (s.tol_se) cfg["tol_se"] = *s.tol_se;
    if (s.scale) cfg["scale"] = *s.scale;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian network games: spectral checks, equilibria, moments, information design, Monte Carlo audits"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> tol;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output directory for artifacts");
  app.add_option("--tol", tol, "verification tolerance");
  app.fallthrough();

  Shortcuts s;
  auto* spectral = app.add_subcommand("spectral", "eigenvalues, numerical range and (R1)/(R2) of a payoff kernel");
  auto* equilibrium = app.add_subcommand("equilibrium", "solve the linear equilibrium of a Gaussian game");
  auto* moments = app.add_subcommand("moments", "obedience, positivity and bounds of a candidate moment");
  auto* design = app.add_subcommand("design", "information design under a constant payoff r");
  auto* mc = app.add_subcommand("mc", "Monte Carlo checks");
  auto* reproduce = app.add_subcommand("reproduce-all", "run every acceptance check and write a manifest");

  for (auto* sub : {spectral, equilibrium, mc}) {
    sub->add_option("--n", s.n, "uniform grid size");
    sub->add_option("--kernel", s.kernel, "payoff kernel kind");
    sub->add_option("--r", s.r, "payoff strength");
  }
  spectral->add_option("--require", s.require, "none, r1 or r2; exit 2 when violated");
  for (auto* sub : {equilibrium, mc}) {
    sub->add_option("--info", s.info, "information structure kind");
    sub->add_option("--noise-var", s.noise_var, "signal noise variance");
    sub->add_option("--mass", s.mass, "informed mass for targeted information");
  }
  equilibrium->add_option("--method", s.method, "auto, direct or iterative");

  moments->add_option("--n", s.n, "uniform grid size");
  moments->add_option("--r", s.r, "constant payoff strength");
  moments->add_option("--moment", s.moment, "zero, targeted, symmetric or public");
  moments->add_option("--m", s.m, "disclosed mass (symmetric)");
  moments->add_option("--z", s.z, "public signal weight");
  moments->add_option("--mass", s.mass, "informed mass (targeted)");
  moments->add_flag("--canonical", s.canonical, "round-trip through canonical signals");

  design->add_option("--mode", s.mode, "targeted, symmetric, public, audit, diagram or cournot");
  design->add_option("--r", s.r, "constant payoff strength");
  design->add_option("--alpha", s.alpha, "objective alpha");
  design->add_option("--beta", s.beta, "objective beta");
  design->add_option("--m", s.m, "disclosed mass (symmetric)");
  design->add_option("--n", s.audit_n, "grid size (audit)");
  design->add_option("--samples", s.samples, "audit sample count");
  design->add_option("--lambda", s.lambda, "Cournot lambda");
  design->add_option("--gamma", s.gamma, "Cournot gamma");
  design->add_option("--resolution", s.resolution, "diagram cells per axis");

  mc->add_option("--mode", s.mode, "fubini, br-audit, duplicate or bm");
  mc->add_option("--draws", s.draws, "Monte Carlo draws");
  mc->add_option("--tol-se", s.tol_se, "standard errors allowed");
  mc->add_option("--scale", s.scale, "duplicate equilibrium scale");

  bool inject = false;
  reproduce->add_flag("--inject-perturbation", inject, "perturb the discretized example loadings (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kg::runner::kInputError;
  }

  try {
    if (reproduce->parsed()) {
      kg::runner::ReproduceOptions opts;
      opts.out = out.value_or("reproduce");
      if (seed) opts.seed = *seed;
      opts.inject_perturbation = inject;
      return kg::runner::reproduce_all(opts, std::cout);
    }
    const std::string command = app.get_subcommands().front()->get_name();
    json cfg = json::object();
    std::filesystem::path base;
    if (!config_path.empty()) {
      cfg = kg::io::read_json(config_path);
      base = std::filesystem::path(config_path).parent_path();
      if (cfg.contains("command") && cfg["command"] != command)
        throw kg::InvalidArgument("config command '" + cfg["command"].get<std::string>() + "' differs from '" + command + "'");
    }
    cfg["command"] = command;
    if (seed) cfg["seed"] = *seed;
    if (out) cfg["out"] = *out;
    if (tol) cfg["tol"] = *tol;
    apply(cfg, command, s);
    const kg::runner::Outcome outcome = kg::runner::run(cfg, base);
    std::cout << outcome.result.dump(2) << std::endl;
    if (outcome.exit_code != kg::runner::kOk) std::cerr << "verification failed" << std::endl;
    return outcome.exit_code;
  } catch (const kg::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kg::runner::kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kg::runner::kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kg::runner::kInputError;
  }
}
