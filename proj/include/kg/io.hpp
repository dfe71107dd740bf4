#pragma once

#include "kg/game.hpp"
#include "kg/info_design.hpp"
#include "kg/kernel.hpp"
#include "kg/measure_grid.hpp"
#include "kg/moments.hpp"
#include "kg/montecarlo.hpp"
#include "kg/spectral.hpp"

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <string>

namespace kg::io {

using json = nlohmann::json;

/// Throws InvalidArgument naming the first key of `j` outside `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Reads a JSON file; malformed content raises InvalidArgument.
json read_json(const std::filesystem::path& path);

/// {"kind": "uniform", "n": N} or {"weights": [...], "coords": [...]} (masses are normalised).
MeasureGrid parse_grid(const json& j);
json grid_to_json(const MeasureGrid& grid);

/// Kernel config: {"kind": constant|leave_one_out|unidirectional|separable|graph|
/// identity|two_level|matrix|csv, ...}. Relative CSV paths resolve against base_dir.
Kernel parse_kernel(const json& j, const MeasureGrid& grid, const std::filesystem::path& base_dir = {});

/// {"mean": number | [...], "var": number} (common state) or {"mean": ..., "cov": kernel spec}.
BasicGame parse_game(const json& payoff, const json& state, const MeasureGrid& grid,
                     const std::filesystem::path& base_dir = {});

/// {"kind": no_info|full_info|public|private_iid|targeted|bm|symmetric|custom, ...}.
GaussianInfo parse_info(const json& j, const BasicGame& game, const std::filesystem::path& base_dir = {});

/// {"u", "v", "w"} or {"alpha", "beta"}.
DesignObjective parse_objective(const json& j);

/// {"xi_csv": path, "zeta": [...], "state_var": v} or a named moment
/// {"kind": targeted|symmetric|public|zero, ...} under the constant payoff r.
EquilibriumMoment parse_moment(const json& j, const MeasureGrid& grid, double r,
                               const std::filesystem::path& base_dir = {});

/// Comma-separated matrix, one row per line, full round-trip precision.
std::string matrix_to_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames, so readers never see partial files.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// node,intercept,loading_0..loading_{k-1},var,cov_theta
std::string equilibrium_csv(const LinearEquilibrium& eq);
/// alpha,beta,regime,m_star,v_star
std::string diagram_csv(const std::vector<DiagramCell>& cells);

json to_json(const SpectralReport& r, std::size_t max_eigenvalues = 20);
json to_json(const RegimeReport& r);
json to_json(const StatCheck& c);
json to_json(const BestResponseAudit& a);
json to_json(const BoundsReport& b);
json to_json(const MomentRestrictionReport& r);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace kg::io
