#include "kg/moments.hpp"

#include "kg/errors.hpp"
#include "kg/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace kg {

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("positivity eigensolve did not converge");
  return es.eigenvalues()(0);
}

}  // namespace

EquilibriumMoment::EquilibriumMoment(Kernel xi, GridFunction zeta, double state_var)
    : xi_(std::move(xi)), zeta_(std::move(zeta)), state_var_(state_var) {
  require_same_grid(xi_.grid(), zeta_.grid(), "EquilibriumMoment");
  if (!xi_.undirected()) throw InvalidArgument("EquilibriumMoment: xi must be undirected");
  const double scale = 1.0 + xi_.values().cwiseAbs().maxCoeff();
  if (xi_.values().diagonal().minCoeff() < -1e-12 * scale)
    throw InvalidArgument("EquilibriumMoment: negative variance on the diagonal of xi");
  if (!(state_var >= 0.0) || !std::isfinite(state_var))
    throw InvalidArgument("EquilibriumMoment: state variance must be >= 0");
  if (state_var == 0.0 && zeta_.values().cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("EquilibriumMoment: zeta must vanish when the state is deterministic");
}

EquilibriumMoment EquilibriumMoment::zero(const MeasureGrid& grid, double state_var) {
  return EquilibriumMoment(kernels::constant(grid, 0.0), GridFunction::constant(grid, 0.0), state_var);
}

Eigen::MatrixXd EquilibriumMoment::bordered() const {
  const Eigen::Index n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd b(n + 1, n + 1);
  b.topLeftCorner(n, n) = xi_.values();
  b.topRightCorner(n, 1) = zeta_.values();
  b.bottomLeftCorner(1, n) = zeta_.values().transpose();
  b(n, n) = state_var_;
  return b;
}

EquilibriumMoment moment_of(const LinearEquilibrium& eq, const BasicGame& game) {
  require_same_grid(eq.grid, game.grid(), "moment_of");
  return EquilibriumMoment(eq.induced_action_cov, eq.induced_action_state_cov, game.common_state_var());
}

DesignObjective DesignObjective::from_alpha_beta(double alpha, double beta) {
  return DesignObjective{-beta, alpha, 0.0};
}

Eigen::VectorXd obedience_residuals(const EquilibriumMoment& m, const Kernel& payoff) {
  require_same_grid(m.grid(), payoff.grid(), "check_obedience");
  const Eigen::MatrixXd a = operator_matrix(payoff);
  const Eigen::MatrixXd& xi = m.xi().values();
  return (xi.diagonal() - a.cwiseProduct(xi).rowwise().sum() - m.zeta().values()).cwiseAbs();
}

double check_obedience(const EquilibriumMoment& m, const Kernel& payoff) {
  return obedience_residuals(m, payoff).maxCoeff();
}

double default_obedience_tol(const EquilibriumMoment& m) {
  return 1e-8 * (1.0 + m.xi().values().cwiseAbs().maxCoeff());
}

double positivity_margin(const EquilibriumMoment& m) { return min_eigenvalue(m.bordered()); }

double default_positivity_tol(const EquilibriumMoment& m) {
  return 1e-8 * (m.xi().values().trace() + m.state_var());
}

bool check_positivity(const EquilibriumMoment& m, std::optional<double> tol) {
  return positivity_margin(m) >= -tol.value_or(default_positivity_tol(m));
}

bool check_positivity_schur(const EquilibriumMoment& m, std::optional<double> tol) {
  const double t = tol.value_or(default_positivity_tol(m));
  const Eigen::VectorXd& z = m.zeta().values();
  if (m.state_var() <= 0.0) return z.cwiseAbs().maxCoeff() <= t && min_eigenvalue(m.xi().values()) >= -t;
  const Eigen::MatrixXd kappa = m.xi().values() - z * z.transpose() / m.state_var();
  return min_eigenvalue(kappa) >= -t;
}

double double_integral(const Kernel& k) {
  const Eigen::VectorXd& w = k.grid().weights();
  return w.dot(k.values() * w);
}

double diagonal_integral(const Kernel& k) { return k.grid().weights().dot(k.values().diagonal()); }

BoundsReport bounds_check(const EquilibriumMoment& m, double r, double tol) {
  if (!(r < 1.0)) throw InvalidArgument("bounds_check: r must be < 1");
  BoundsReport rep;
  rep.obedient = check_obedience(m, kernels::constant(m.grid(), r)) <= default_obedience_tol(m);
  rep.positive = check_positivity(m);
  const double dbl = double_integral(m.xi());
  const double z = integrate(m.zeta());
  const double var = m.state_var();
  rep.cauchy = var > 0.0 ? dbl - z * z / var : dbl;
  rep.diag = diagonal_integral(m.xi()) - dbl;
  rep.cap = var / ((1.0 - r) * (1.0 - r)) - dbl;
  rep.pass = rep.obedient && rep.positive && rep.cauchy >= -tol && rep.diag >= -tol && rep.cap >= -tol;
  return rep;
}

double objective_value(const EquilibriumMoment& m, const DesignObjective& obj) {
  return obj.u * double_integral(m.xi()) + obj.v * diagonal_integral(m.xi()) + obj.w * integrate(m.zeta());
}

GaussianInfo construct_canonical_signals(const EquilibriumMoment& m, const BasicGame& game) {
  require_same_grid(m.grid(), game.grid(), "construct_canonical_signals");
  if (!game.has_common_state() ||
      std::abs(game.common_state_var() - m.state_var()) > 1e-12 * (1.0 + m.state_var()))
    throw PreconditionViolation("construct_canonical_signals: needs a common state with the moment's variance");
  if (check_obedience(m, game.payoff()) > default_obedience_tol(m))
    throw InfeasibleMoment("construct_canonical_signals: obedience fails");
  if (!check_positivity(m)) throw InfeasibleMoment("construct_canonical_signals: positivity fails");

  const GridFunction mean = solve_mean(game);
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd joint(2 * n, 2 * n);
  joint.topLeftCorner(n, n) = game.state_cov().values();
  joint.bottomLeftCorner(n, n) = m.zeta().values().replicate(1, n);
  joint.topRightCorner(n, n) = joint.bottomLeftCorner(n, n).transpose();
  joint.bottomRightCorner(n, n) = m.xi().values();
  return GaussianInfo(m.grid(), std::vector<std::size_t>(m.size(), 1), mean.values(), std::move(joint));
}

}  // namespace kg
