#pragma once

#include "kg/game.hpp"
#include "kg/kernel.hpp"
#include "kg/measure_grid.hpp"

#include <optional>

namespace kg {

/// Candidate second moments of an equilibrium under a common normal state:
/// xi(s,t) = Cov[f(s), f(t)], zeta(t) = Cov[f(t), theta], state_var = Var[theta].
class EquilibriumMoment {
 public:
  /// Throws InvalidArgument when xi is directed, has a negative diagonal entry,
  /// state_var < 0, or state_var = 0 with zeta not identically zero.
  EquilibriumMoment(Kernel xi, GridFunction zeta, double state_var);

  /// xi = 0, zeta = 0.
  static EquilibriumMoment zero(const MeasureGrid& grid, double state_var = 1.0);

  const MeasureGrid& grid() const { return xi_.grid(); }
  const Kernel& xi() const { return xi_; }
  const GridFunction& zeta() const { return zeta_; }
  double state_var() const { return state_var_; }
  std::size_t size() const { return xi_.size(); }

  /// (n+1) x (n+1) matrix [[xi, zeta], [zeta', Var theta]].
  Eigen::MatrixXd bordered() const;

 private:
  Kernel xi_;
  GridFunction zeta_;
  double state_var_;
};

/// Moments of a solved profile; the game must have a common state.
EquilibriumMoment moment_of(const LinearEquilibrium& eq, const BasicGame& game);

/// Designer weights on volatility (u), dispersion-adjusted variance (v) and
/// covariance with the state (w). alpha and beta are always recomputed.
struct DesignObjective {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;

  double alpha() const { return v + w; }
  double beta(double r) const { return r * w - u; }

  /// Some (u, v, w) with the given alpha and beta at r.
  static DesignObjective from_alpha_beta(double alpha, double beta);
};

/// Per-node |xi(t,t) - sum_t' w_t' R(t,t') xi(t,t') - zeta(t)|.
Eigen::VectorXd obedience_residuals(const EquilibriumMoment& m, const Kernel& payoff);
/// Maximum of obedience_residuals.
double check_obedience(const EquilibriumMoment& m, const Kernel& payoff);
/// Default obedience tolerance: 1e-8 (1 + max |xi|).
double default_obedience_tol(const EquilibriumMoment& m);

/// Smallest eigenvalue of the bordered matrix.
double positivity_margin(const EquilibriumMoment& m);
/// Default positivity tolerance: 1e-8 times the bordered trace.
double default_positivity_tol(const EquilibriumMoment& m);
/// Bordered matrix has smallest eigenvalue >= -tol.
bool check_positivity(const EquilibriumMoment& m, std::optional<double> tol = std::nullopt);
/// Same test through the Schur complement kappa = xi - zeta zeta' / Var theta
/// (or zeta = 0 and xi PSD when Var theta = 0).
bool check_positivity_schur(const EquilibriumMoment& m, std::optional<double> tol = std::nullopt);

/// Slacks of the feasibility bounds under a constant payoff r:
/// cauchy = iint xi - (int zeta)^2 / Var theta, diag = int xi(t,t) - iint xi,
/// cap = Var theta / (1 - r)^2 - iint xi.
struct BoundsReport {
  double cauchy = 0.0;
  double diag = 0.0;
  double cap = 0.0;
  bool obedient = false;
  bool positive = false;
  bool pass = false;
};

/// Feasibility bounds for a constant payoff r < 1. `pass` requires obedience,
/// positivity and all slacks >= -tol.
BoundsReport bounds_check(const EquilibriumMoment& m, double r, double tol = 1e-9);

/// Weighted quadratures: iint xi includes the diagonal terms.
double double_integral(const Kernel& k);
double diagonal_integral(const Kernel& k);

/// u iint xi + v int xi(t,t) + w int zeta.
double objective_value(const EquilibriumMoment& m, const DesignObjective& obj);

/// Gaussian information whose signals are the candidate actions themselves:
/// x(t) with Cov[x(s), x(t)] = xi(s,t), Cov[x(t), theta] = zeta(t) and mean equal
/// to the mean-equation solution. Throws PreconditionViolation unless the game has
/// a common state with variance state_var; InfeasibleMoment when obedience or
/// positivity fails.
GaussianInfo construct_canonical_signals(const EquilibriumMoment& m, const BasicGame& game);

}  // namespace kg
