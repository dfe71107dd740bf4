#pragma once

#include "kg/kernel.hpp"
#include "kg/measure_grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace kg {

/// Basic game: states theta(t) with given mean and covariance, and a payoff
/// structure R. Best responses read f(t) = E_t[ sum_t' w_t' R(t,t') f(t') ] + E_t[theta(t)].
class BasicGame {
 public:
  /// Throws InvalidArgument on grid mismatch; PreconditionViolation when the
  /// state covariance is not an undirected PSD kernel.
  BasicGame(Kernel payoff, GridFunction state_mean, Kernel state_cov);

  /// Common state: every theta(t) equals one normal variable with the given mean and variance.
  static BasicGame common_state(Kernel payoff, double mean, double var);

  const MeasureGrid& grid() const { return payoff_.grid(); }
  const Kernel& payoff() const { return payoff_; }
  const GridFunction& state_mean() const { return state_mean_; }
  const Kernel& state_cov() const { return state_cov_; }
  std::size_t size() const { return payoff_.size(); }

  /// True when the state mean and covariance are constant (within `tol`).
  bool has_common_state(double tol = 1e-12) const;
  /// Common-state variance; throws PreconditionViolation otherwise.
  double common_state_var() const;

  BasicGame with_state_mean(GridFunction mean) const;

 private:
  Kernel payoff_;
  GridFunction state_mean_;
  Kernel state_cov_;
};

/// Jointly Gaussian states and signals. Node t observes a signal vector x(t) of
/// dimension signal_dims[t]. The joint covariance is ordered as the n state
/// entries theta(0..n-1) followed by all signal blocks in node order.
class GaussianInfo {
 public:
  GaussianInfo(MeasureGrid grid, std::vector<std::size_t> signal_dims, Eigen::VectorXd signal_mean,
               Eigen::MatrixXd joint_cov);

  /// Signals carry no information (one zero-variance component per node).
  static GaussianInfo no_info(const BasicGame& game);
  /// x(t) = theta(t).
  static GaussianInfo full_info(const BasicGame& game);
  /// x(t) = theta(t) + eta with one common noise eta ~ N(0, noise_var).
  static GaussianInfo public_signal(const BasicGame& game, double noise_var);
  /// x(t) = theta(t) + eps(t), eps independent across nodes with variance noise_var.
  static GaussianInfo private_iid(const BasicGame& game, double noise_var);
  /// x(t) = theta(t) for t in `nodes`, a constant otherwise.
  static GaussianInfo targeted(const BasicGame& game, const std::vector<std::size_t>& nodes);
  /// Signals x = loading * theta + noise, noise ~ N(noise_mean, noise_cov) independent
  /// of the states; loading is S x n.
  static GaussianInfo linear(const BasicGame& game, std::vector<std::size_t> signal_dims,
                             const Eigen::MatrixXd& loading, const Eigen::VectorXd& noise_mean,
                             const Eigen::MatrixXd& noise_cov);

  const MeasureGrid& grid() const { return grid_; }
  const std::vector<std::size_t>& signal_dims() const { return dims_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  std::size_t total_signal_dim() const { return static_cast<std::size_t>(signal_mean_.size()); }
  const Eigen::VectorXd& signal_mean() const { return signal_mean_; }
  const Eigen::MatrixXd& joint_cov() const { return joint_cov_; }

  /// Views into joint_cov.
  Eigen::MatrixXd state_block() const;
  Eigen::MatrixXd signal_block() const;
  /// Cov[x, theta]: S x n.
  Eigen::MatrixXd signal_state_block() const;
  /// Node owning each stacked signal coordinate.
  std::vector<std::size_t> owner() const;

 private:
  MeasureGrid grid_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd signal_mean_;
  Eigen::MatrixXd joint_cov_;
};

/// Linear strategy profile f(t) = b(t) + c(t)' x(t) with its induced moments.
struct LinearEquilibrium {
  MeasureGrid grid;
  GridFunction intercepts;
  std::vector<Eigen::VectorXd> loadings;
  Kernel induced_action_cov;            // Cov[f(s), f(t)]
  GridFunction induced_action_state_cov;  // Cov[f(t), theta(t)]
  GridFunction induced_mean;            // E[f(t)]
  std::size_t iterations = 0;           // 0 for the direct solve
  double fixed_point_residual = 0.0;    // max_t sd of the best-response gap

  /// Loadings stacked in node order.
  Eigen::VectorXd stacked_loadings() const;
};

/// Unique solution of (I - K W) phi = E[theta]. Throws SingularMeanEquation when
/// 1 is an eigenvalue of the payoff operator.
GridFunction solve_mean(const BasicGame& game);

struct SolveOptions {
  enum class Method { Auto, Direct, Iterative };
  Method method = Method::Auto;
  double tol = 1e-12;
  std::size_t max_iter = 100000;
  /// Damping for the iteration; chosen from the payoff spectrum when absent.
  std::optional<double> relaxation;
  /// Starting loadings for the iteration (stacked); zero when absent.
  std::optional<Eigen::VectorXd> initial;
};

/// Direct assembly is used up to this many stacked coefficients under Method::Auto.
inline constexpr std::size_t kDirectSolveLimit = 10000;

/// Linear equilibrium by matching coefficients. Own-signal covariances are
/// inverted by pseudo-inverse (cutoff 1e-10 times the largest singular value).
/// Throws SingularEquilibriumSystem, NoConvergence or SingularMeanEquation.
LinearEquilibrium solve_linear_equilibrium(const BasicGame& game, const GaussianInfo& info,
                                           const SolveOptions& opts = {});

/// Profile with prescribed coefficients and its induced moments (no solving).
LinearEquilibrium make_profile(const BasicGame& game, const GaussianInfo& info,
                               const Eigen::VectorXd& intercepts,
                               const std::vector<Eigen::VectorXd>& loadings);

/// Best-response gap c - (M c + s) of stacked loadings, measured as the
/// standard deviation it induces at each node.
Eigen::VectorXd loading_residuals(const BasicGame& game, const GaussianInfo& info,
                                  const LinearEquilibrium& eq);

struct MomentRestrictionReport {
  Eigen::VectorXd mean_residual;  // E f - R W E f - E theta
  Eigen::VectorXd var_residual;   // Var f - sum w R Cov f - Cov[f, theta]
  double max_residual = 0.0;
  bool pass = false;
};

MomentRestrictionReport verify_moment_restrictions(const LinearEquilibrium& eq, const BasicGame& game,
                                                   double tol);

/// Sd f - Corr[f, theta] Sd theta / (1 - r Corr[f, f']) for a symmetric profile,
/// using a representative pair of distinct nodes. Zero-variance profiles give 0.
/// Throws PreconditionViolation unless all diagonal entries, all off-diagonal
/// entries and all action-state covariances agree to 1e-9, or when n < 2.
double symmetric_moment_identity(const LinearEquilibrium& eq, double r);

/// Symmetric game with best response a_i = r E_i[A] + s E_i[theta] + k on a grid:
/// theta is rescaled to s theta + k and the payoff is the leave-one-out constant r.
BasicGame bm_game(const MeasureGrid& grid, double mu_theta, double var_theta, double r, double s,
                  double k);
/// Signals (x_i, y) with x_i = theta + eps_i, y = theta + eta, for the game from bm_game.
GaussianInfo bm_info(const BasicGame& game, double mu_theta, double var_theta, double var_x,
                     double var_y, double s);

}  // namespace kg
