#pragma once

#include "kg/game.hpp"
#include "kg/measure_grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace kg {

/// Draw j belongs to chunk j / kSampleChunk; chunk c is generated from an
/// mt19937_64 seeded with seed_seq{seed, c}. Draws therefore do not depend on
/// the number of worker threads.
inline constexpr std::size_t kSampleChunk = 4096;
inline constexpr const char* kGeneratorId = "mt19937_64/seed_seq(seed,chunk)/normal_distribution(libstdc++)/chunk4096";

/// Multivariate normal sampler through the spectral factor of the covariance,
/// with negative eigenvalues clamped at zero and null directions dropped.
class GaussianSampler {
 public:
  /// Throws InvalidArgument when cov is not symmetric PSD (tolerance 1e-8 max(1, max diag)).
  GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov, std::uint64_t seed);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(factor_.cols()); }
  /// Largest |eigenvalue| clamped to zero; warn() is true beyond 1e-8 lambda_max.
  double clamped() const { return clamped_; }
  bool warn() const { return warn_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t chunk_count(std::size_t draws) const { return (draws + kSampleChunk - 1) / kSampleChunk; }
  /// Rows of chunk c when d draws are requested in total.
  Eigen::MatrixXd chunk(std::size_t c, std::size_t draws) const;
  /// All d draws, one per row.
  Eigen::MatrixXd sample(std::size_t draws) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
  std::uint64_t seed_;
  double clamped_ = 0.0;
  bool warn_ = false;
};

/// d draws of the stacked vector (a state block of size state_dim, then process
/// values at the grid nodes), together with the target moments.
struct ProcessSample {
  Eigen::MatrixXd draws;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t state_dim = 0;
  std::uint64_t seed = 0;
  std::string generator_id;
  bool clamp_warning = false;

  Eigen::Index process_offset() const { return static_cast<Eigen::Index>(state_dim); }
};

ProcessSample sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t draws,
                              std::uint64_t seed, std::size_t state_dim = 0);

/// A stochastic or exact check with its statistic.
struct StatCheck {
  std::string name;
  double statistic = 0.0;
  double target = 0.0;
  double se = 0.0;
  bool pass = false;
  double z() const;
};

/// Empirical variance of the aggregate sum_i w_i f(t_i) against the quadrature
/// w' Cov w, within tol_se standard errors.
StatCheck verify_aggregate_variance(const ProcessSample& s, const MeasureGrid& grid, double tol_se = 4.0);
/// Empirical mean of the aggregate against sum_i w_i E f(t_i).
StatCheck verify_unconditional_fubini(const ProcessSample& s, const MeasureGrid& grid, double tol_se = 4.0);

/// |Cov[x, sum w f] - sum w Cov[x, f]| for the linear functional x = a' (stacked
/// vector), evaluated on the covariance matrix along two summation orders.
double covariance_exchange_residual(const Eigen::MatrixXd& cov, std::size_t state_dim, const MeasureGrid& grid,
                                    const Eigen::VectorXd& a);

/// E[sum w f | conditioning coordinates] against sum w E[f | ...], each through the
/// conditional normal formula, at every sampled draw. Coordinates index the stacked vector.
struct ConditionalFubiniReport {
  double max_discrepancy = 0.0;
  bool pass = false;
};
ConditionalFubiniReport verify_conditional_fubini(const ProcessSample& s, const MeasureGrid& grid,
                                                  const std::vector<std::size_t>& conditioning, double tol = 1e-9);

/// Regression check of the best-response property: the gap
/// u(t) = sum_t' w R(t,t') f(t') + theta(t) - f(t) must have mean zero and be
/// uncorrelated with every component of x(t).
struct BestResponseAudit {
  double max_abs_z = 0.0;             // worst |estimate| / se over all tests
  std::vector<std::size_t> failing_nodes;
  double coefficient_residual = 0.0;  // exact best-response gap from the coefficients
  std::size_t draws = 0;
  bool pass = false;
};
BestResponseAudit best_response_audit(const LinearEquilibrium& eq, const BasicGame& game, const GaussianInfo& info,
                                      std::size_t draws, std::uint64_t seed, double tol_se = 4.0);

/// Two equilibria of one game whose payoff operator has a real eigenvalue >= 1:
/// f uses no information and g = f + scale * phi(t) x(t) with signals
/// independent of the state whose covariance is 1 + (lambda - 1) / (1 - w_t R(t,t))
/// on the diagonal and 1 elsewhere.
struct DuplicateReport {
  double lambda = 0.0;
  GridFunction phi;
  BasicGame game;  // mean shifted to zero when the mean equation is singular
  GaussianInfo info;
  LinearEquilibrium f;
  LinearEquilibrium g;
  BestResponseAudit audit_f;
  BestResponseAudit audit_g;
  double distance = 0.0;  // L2 distance between f and g
  bool pass = false;
};
/// Throws NoRealEigenvalueAtLeastOne without a real eigenvalue >= 1 (to 1e-9), and
/// PreconditionViolation when some node with phi(t) != 0 has w_t R(t,t) >= 1.
DuplicateReport duplicate_equilibria(const BasicGame& game, std::size_t draws, std::uint64_t seed,
                                     double scale = 1.0, double tol_se = 4.0);

/// Symmetric game a_i = r E_i[A] + s E_i[theta] + k with signals x_i = theta + eps_i
/// and y = theta + eta: coefficients of a_i = alpha0 + alpha_x x_i + alpha_y y,
/// volatility V = Cov[a_i, a_j] and dispersion D = Var[a_i] - Cov[a_i, a_j].
struct BmSolution {
  double alpha0 = 0.0;
  double alpha_x = 0.0;
  double alpha_y = 0.0;
  double volatility = 0.0;
  double dispersion = 0.0;
};
BmSolution bm_example_equilibrium(double mu_theta, double var_theta, double var_x, double var_y, double r, double s,
                                  double k);

/// Joint mean and covariance of (theta block, signal block, actions) under a profile.
struct JointLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t state_dim = 0;  // states plus signals
};
JointLaw profile_joint_law(const LinearEquilibrium& eq, const BasicGame& game, const GaussianInfo& info);

}  // namespace kg
