#include "kg/io.hpp"

#include "kg/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace kg::io {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

Eigen::VectorXd to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidArgument(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument(where + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = to_vector(j[static_cast<std::size_t>(i)], where);
    if (row.size() != cols) throw InvalidArgument(where + ": ragged rows");
    m.row(i) = row.transpose();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) throw InvalidArgument(where + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::vector<std::size_t> node_list(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array()) throw InvalidArgument(where + ": expected an array of node indices");
  std::vector<std::size_t> out;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<long long>() < 0 || e.get<std::size_t>() >= n) throw InvalidArgument(where + ": bad node index");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

// Nodes of a targeted set: explicit "nodes" or the leading nodes of mass "mass".
std::vector<std::size_t> targeted_nodes(const json& j, const MeasureGrid& grid, const std::string& where) {
  if (j.contains("nodes")) return node_list(j["nodes"], grid.size(), where);
  const double mass = number(j, "mass", where);
  std::vector<std::size_t> out;
  double acc = 0.0;
  for (std::size_t t = 0; t < grid.size() && acc + 0.5 * grid.weight(t) < mass; ++t) {
    out.push_back(t);
    acc += grid.weight(t);
  }
  return out;
}

}  // namespace

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

MeasureGrid parse_grid(const json& j) {
  if (j.contains("weights")) {
    check_keys(j, {"weights", "coords"}, "grid");
    std::optional<Eigen::VectorXd> coords;
    if (j.contains("coords")) coords = to_vector(j["coords"], "grid.coords");
    return MeasureGrid::normalized(to_vector(j["weights"], "grid.weights"), coords);
  }
  check_keys(j, {"kind", "n"}, "grid");
  if (j.value("kind", "uniform") != "uniform") throw InvalidArgument("grid: unknown kind");
  if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<long long>() < 1) throw InvalidArgument("grid: 'n' must be a positive integer");
  return uniform_grid(j["n"].get<std::size_t>());
}

json grid_to_json(const MeasureGrid& grid) {
  json out{{"weights", vector_to_json(grid.weights())}};
  if (grid.has_coords()) out["coords"] = vector_to_json(grid.coords());
  return out;
}

Kernel parse_kernel(const json& j, const MeasureGrid& grid, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw InvalidArgument("kernel: missing 'kind'");
  const std::string kind = j["kind"];
  const std::string where = "kernel(" + kind + ")";
  if (kind == "constant") {
    check_keys(j, {"kind", "r"}, where);
    return kernels::constant(grid, number(j, "r", where));
  }
  if (kind == "leave_one_out") {
    check_keys(j, {"kind", "r"}, where);
    return kernels::leave_one_out(grid, number(j, "r", where));
  }
  if (kind == "unidirectional") {
    check_keys(j, {"kind", "r"}, where);
    return kernels::unidirectional(grid, number(j, "r", where));
  }
  if (kind == "separable") {
    check_keys(j, {"kind", "r", "q"}, where);
    return kernels::separable(grid, number(j, "r", where), to_vector(j.at("q"), where + ".q"));
  }
  if (kind == "graph") {
    check_keys(j, {"kind", "rbar", "edges"}, where);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : j.at("edges")) {
      const auto pair = node_list(e, grid.size(), where + ".edges");
      if (pair.size() != 2) throw InvalidArgument(where + ": edges are index pairs");
      edges.emplace_back(pair[0], pair[1]);
    }
    return kernels::graph(grid, edges, number(j, "rbar", where));
  }
  if (kind == "identity") {
    check_keys(j, {"kind"}, where);
    return kernels::identity(grid);
  }
  if (kind == "two_level") {
    check_keys(j, {"kind", "on", "off"}, where);
    return kernels::two_level(grid, number(j, "on", where), number(j, "off", where));
  }
  if (kind == "matrix") {
    check_keys(j, {"kind", "values"}, where);
    return Kernel(grid, to_matrix(j.at("values"), where));
  }
  if (kind == "csv") {
    check_keys(j, {"kind", "path"}, where);
    return Kernel(grid, read_csv_matrix(resolve(j.at("path").get<std::string>(), base_dir)));
  }
  throw InvalidArgument("kernel: unknown kind '" + kind + "'");
}

BasicGame parse_game(const json& payoff, const json& state, const MeasureGrid& grid, const fs::path& base_dir) {
  Kernel r = parse_kernel(payoff, grid, base_dir);
  check_keys(state, {"mean", "var", "cov"}, "state");
  const json mean = state.value("mean", json(0.0));
  if (state.contains("cov")) {
    GridFunction mu = mean.is_number() ? GridFunction::constant(grid, mean.get<double>())
                                       : GridFunction(grid, to_vector(mean, "state.mean"));
    return BasicGame(std::move(r), std::move(mu), parse_kernel(state["cov"], grid, base_dir));
  }
  if (!mean.is_number()) throw InvalidArgument("state: a common state needs a scalar mean");
  return BasicGame::common_state(std::move(r), mean.get<double>(), state.value("var", 1.0));
}

GaussianInfo parse_info(const json& j, const BasicGame& game, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidArgument("info: missing 'kind'");
  const std::string kind = j["kind"];
  const std::string where = "info(" + kind + ")";
  if (kind == "no_info") {
    check_keys(j, {"kind"}, where);
    return GaussianInfo::no_info(game);
  }
  if (kind == "full_info") {
    check_keys(j, {"kind"}, where);
    return GaussianInfo::full_info(game);
  }
  if (kind == "public") {
    check_keys(j, {"kind", "noise_var"}, where);
    return GaussianInfo::public_signal(game, number(j, "noise_var", where));
  }
  if (kind == "private_iid") {
    check_keys(j, {"kind", "noise_var"}, where);
    return GaussianInfo::private_iid(game, number(j, "noise_var", where));
  }
  if (kind == "targeted") {
    check_keys(j, {"kind", "nodes", "mass"}, where);
    return GaussianInfo::targeted(game, targeted_nodes(j, game.grid(), where));
  }
  if (kind == "symmetric") {
    check_keys(j, {"kind", "m", "r"}, where);
    return symmetric_info(game, number(j, "m", where), number(j, "r", where));
  }
  if (kind == "bm") {
    check_keys(j, {"kind", "mu_theta", "var_theta", "var_x", "var_y", "s"}, where);
    return bm_info(game, number(j, "mu_theta", where), number(j, "var_theta", where), number(j, "var_x", where),
                   number(j, "var_y", where), number(j, "s", where));
  }
  if (kind == "custom") {
    check_keys(j, {"kind", "file"}, where);
    const fs::path file = resolve(j.at("file").get<std::string>(), base_dir);
    const json spec = read_json(file);
    check_keys(spec, {"signal_dims", "signal_mean", "joint_cov_csv"}, "custom info");
    std::vector<std::size_t> dims = spec.at("signal_dims").get<std::vector<std::size_t>>();
    return GaussianInfo(game.grid(), std::move(dims), to_vector(spec.at("signal_mean"), "custom info.signal_mean"),
                        read_csv_matrix(resolve(spec.at("joint_cov_csv").get<std::string>(), file.parent_path())));
  }
  throw InvalidArgument("info: unknown kind '" + kind + "'");
}

DesignObjective parse_objective(const json& j) {
  if (j.contains("alpha") || j.contains("beta")) {
    check_keys(j, {"alpha", "beta"}, "objective");
    return DesignObjective::from_alpha_beta(number(j, "alpha", "objective"), number(j, "beta", "objective"));
  }
  check_keys(j, {"u", "v", "w"}, "objective");
  return DesignObjective{j.value("u", 0.0), j.value("v", 0.0), j.value("w", 0.0)};
}

EquilibriumMoment parse_moment(const json& j, const MeasureGrid& grid, double r, const fs::path& base_dir) {
  if (j.contains("xi_csv")) {
    check_keys(j, {"xi_csv", "zeta", "state_var"}, "moment");
    Eigen::MatrixXd xi = read_csv_matrix(resolve(j["xi_csv"].get<std::string>(), base_dir));
    return EquilibriumMoment(Kernel(grid, std::move(xi)), GridFunction(grid, to_vector(j.at("zeta"), "moment.zeta")),
                             j.value("state_var", 1.0));
  }
  const std::string kind = j.value("kind", "");
  const std::string where = "moment(" + kind + ")";
  if (kind == "zero") {
    check_keys(j, {"kind"}, where);
    return EquilibriumMoment::zero(grid);
  }
  if (kind == "targeted") {
    check_keys(j, {"kind", "nodes", "mass"}, where);
    return targeted_equilibrium_moment(targeted_nodes(j, grid, where), r, grid);
  }
  if (kind == "symmetric") {
    check_keys(j, {"kind", "m", "self_weight"}, where);
    const double m = number(j, "m", where);
    return j.value("self_weight", true) ? symmetric_moment_with_self_weight(m, r, grid)
                                        : symmetric_moment(m, r, grid).moment;
  }
  if (kind == "public") {
    check_keys(j, {"kind", "z"}, where);
    return public_moment(number(j, "z", where), r, grid);
  }
  throw InvalidArgument("moment: expected 'xi_csv' or a known 'kind'");
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* b = cell.data();
      while (*b == ' ') ++b;
      auto res = std::from_chars(b, cell.data() + cell.size(), v);
      if (res.ec != std::errc()) throw InvalidArgument("bad number '" + cell + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows[0].size()) throw InvalidArgument("ragged CSV matrix " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("empty CSV matrix " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return m;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      fs::remove(tmp);
      throw InvalidArgument("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string equilibrium_csv(const LinearEquilibrium& eq) {
  std::size_t k = 0;
  for (const auto& c : eq.loadings) k = std::max<std::size_t>(k, static_cast<std::size_t>(c.size()));
  std::string out = "node,intercept";
  for (std::size_t i = 0; i < k; ++i) out += ",loading_" + std::to_string(i);
  out += ",var,cov_theta\n";
  for (std::size_t t = 0; t < eq.loadings.size(); ++t) {
    out += std::to_string(t) + ',' + format_double(eq.intercepts[t]);
    for (std::size_t i = 0; i < k; ++i) {
      out += ',';
      if (i < static_cast<std::size_t>(eq.loadings[t].size()))
        out += format_double(eq.loadings[t](static_cast<Eigen::Index>(i)));
    }
    out += ',' + format_double(eq.induced_action_cov(t, t)) + ',' + format_double(eq.induced_action_state_cov[t]) + '\n';
  }
  return out;
}

std::string diagram_csv(const std::vector<DiagramCell>& cells) {
  std::string out = "alpha,beta,regime,m_star,v_star\n";
  for (const auto& c : cells)
    out += format_double(c.alpha) + ',' + format_double(c.beta) + ',' + to_string(c.report.regime) + ',' +
           format_double(c.report.m_star) + ',' + format_double(c.report.v_star) + '\n';
  return out;
}

json to_json(const SpectralReport& r, std::size_t max_eigenvalues) {
  json eig = json::array();
  for (std::size_t i = 0; i < r.eigenvalues.size() && i < max_eigenvalues; ++i)
    eig.push_back({r.eigenvalues[i].real(), r.eigenvalues[i].imag()});
  return {{"eigenvalues", eig},
          {"eigenvalue_count", r.eigenvalues.size()},
          {"numerical_range", {r.numerical_range_inf, r.numerical_range_sup}},
          {"operator_norm_bound", r.operator_norm_bound},
          {"diag_sup", r.diag_sup},
          {"r1", r.r1_holds},
          {"r2", r.r2_holds}};
}

json to_json(const RegimeReport& r) {
  return {{"regime", to_string(r.regime)}, {"m_star", r.m_star}, {"v_star", r.v_star}};
}

json to_json(const StatCheck& c) {
  return {{"name", c.name}, {"statistic", c.statistic}, {"target", c.target}, {"se", c.se}, {"pass", c.pass}};
}

json to_json(const BestResponseAudit& a) {
  return {{"max_abs_z", a.max_abs_z},
          {"failing_nodes", a.failing_nodes},
          {"coefficient_residual", a.coefficient_residual},
          {"draws", a.draws},
          {"pass", a.pass}};
}

json to_json(const BoundsReport& b) {
  return {{"cauchy_slack", b.cauchy}, {"diag_slack", b.diag},  {"cap_slack", b.cap},
          {"obedient", b.obedient},   {"positive", b.positive}, {"pass", b.pass}};
}

json to_json(const MomentRestrictionReport& r) {
  return {{"max_mean_residual", r.mean_residual.cwiseAbs().maxCoeff()},
          {"max_var_residual", r.var_residual.cwiseAbs().maxCoeff()},
          {"max_residual", r.max_residual},
          {"pass", r.pass}};
}

}  // namespace kg::io
