#include "kg/game.hpp"

#include "kg/errors.hpp"
#include "kg/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kg {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

// Pseudo-inverse of a symmetric PSD block with relative cutoff 1e-10.
Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw SingularSignalCov("own-signal covariance eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (top > 0.0 && ev(i) > 1e-10 * top) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

bool joint_cov_is_psd(const Eigen::MatrixXd& c) {
  if (c.rows() == 0) return true;
  const double tol = 1e-8 * std::max(1.0, c.diagonal().maxCoeff());
  // The dense eigensolve is skipped for very large systems.
  if (c.rows() > 4000) return c.diagonal().minCoeff() >= -tol;
  return is_psd_matrix(c, tol);
}

// Per-node pieces of the best-response map c -> M c + s.
struct BestResponseMap {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> owner;
  std::vector<Eigen::MatrixXd> pinv;  // P_t
  Eigen::VectorXd s;
  const Eigen::MatrixXd* payoff = nullptr;
  const Eigen::VectorXd* weights = nullptr;
  Eigen::MatrixXd sxx;

  BestResponseMap(const BasicGame& game, const GaussianInfo& info)
      : n(game.size()),
        offsets(info.offsets()),
        dims(info.signal_dims()),
        owner(info.owner()),
        payoff(&game.payoff().values()),
        weights(&game.grid().weights()),
        sxx(info.signal_block()) {
    const Eigen::MatrixXd sxt = info.signal_state_block();
    s.resize(sxx.rows());
    pinv.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      const Index o = idx(offsets[t]), d = idx(dims[t]);
      pinv.push_back(psd_pinv(sxx.block(o, o, d, d)));
      s.segment(o, d) = pinv.back() * sxt.block(o, idx(t), d, 1);
    }
  }

  Index total() const { return s.size(); }

  // G c with G(i,j) = Sxx(i,j) R(o_i, o_j) w_{o_j}, then P applied blockwise.
  Eigen::VectorXd apply(const Eigen::VectorXd& c) const {
    const Index S = total();
    Eigen::VectorXd v(S);
    for (Index j = 0; j < S; ++j) v(j) = (*weights)(idx(owner[j])) * c(j);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(S);
    for (Index j = 0; j < S; ++j) {
      if (v(j) == 0.0) continue;
      const Index oj = idx(owner[j]);
      for (Index i = 0; i < S; ++i) g(i) += sxx(i, j) * (*payoff)(idx(owner[i]), oj) * v(j);
    }
    return block_pinv(g);
  }

  Eigen::VectorXd block_pinv(const Eigen::VectorXd& g) const {
    Eigen::VectorXd out(g.size());
    for (std::size_t t = 0; t < n; ++t) {
      const Index o = idx(offsets[t]), d = idx(dims[t]);
      out.segment(o, d) = pinv[t] * g.segment(o, d);
    }
    return out;
  }

  Eigen::MatrixXd assemble() const {
    const Index S = total();
    Eigen::MatrixXd g(S, S);
    for (Index j = 0; j < S; ++j) {
      const Index oj = idx(owner[j]);
      const double wj = (*weights)(oj);
      for (Index i = 0; i < S; ++i) g(i, j) = sxx(i, j) * (*payoff)(idx(owner[i]), oj) * wj;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const Index o = idx(offsets[t]), d = idx(dims[t]);
      g.middleRows(o, d) = pinv[t] * g.middleRows(o, d);
    }
    return g;
  }

  // Standard deviation of the best-response gap at each node.
  Eigen::VectorXd gap_sd(const Eigen::VectorXd& c) const {
    const Eigen::VectorXd gap = c - apply(c) - s;
    Eigen::VectorXd out(idx(n));
    for (std::size_t t = 0; t < n; ++t) {
      const Index o = idx(offsets[t]), d = idx(dims[t]);
      const Eigen::VectorXd r = gap.segment(o, d);
      out(idx(t)) = std::sqrt(std::max(0.0, r.dot(sxx.block(o, o, d, d) * r)));
    }
    return out;
  }
};

std::vector<Eigen::VectorXd> split(const Eigen::VectorXd& c, const GaussianInfo& info) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(info.signal_dims().size());
  for (std::size_t t = 0; t < info.signal_dims().size(); ++t)
    out.push_back(c.segment(idx(info.offsets()[t]), idx(info.signal_dims()[t])));
  return out;
}

double default_relaxation(const Kernel& payoff) {
  const double rho = payoff.size() <= 2000 ? operator_norm(payoff) : l2_norm(payoff);
  if (rho < 1.0) return 1.0;
  const double sup = numerical_range_bounds(payoff).sup;
  // Contraction factor 1 - (1 - sup)^2 / (1 + rho)^2 in the induced L2 norm.
  if (sup < 1.0) return (1.0 - sup) / ((1.0 + rho) * (1.0 + rho));
  return 1.0 / (1.0 + rho);
}

Eigen::VectorXd iterate(const BestResponseMap& map, const Kernel& payoff, const SolveOptions& opts,
                        std::size_t& iterations) {
  const Index S = map.total();
  Eigen::VectorXd c = opts.initial ? *opts.initial : Eigen::VectorXd::Zero(S);
  if (c.size() != S) throw InvalidArgument("solve_linear_equilibrium: initial loadings have wrong length");
  const double tau = opts.relaxation ? *opts.relaxation : default_relaxation(payoff);
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidArgument("solve_linear_equilibrium: relaxation must lie in (0, 1]");
  for (iterations = 1; iterations <= opts.max_iter; ++iterations) {
    Eigen::VectorXd next = (1.0 - tau) * c + tau * (map.apply(c) + map.s);
    const double step = (next - c).lpNorm<Eigen::Infinity>();
    c = std::move(next);
    const double size = c.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(size) || size > 1e150)
      throw NoConvergence("solve_linear_equilibrium: iteration diverged");
    if (step <= opts.tol * std::max(1.0, size)) return c;
  }
  throw NoConvergence("solve_linear_equilibrium: iteration cap reached");
}

}  // namespace

// ---------------------------------------------------------------- BasicGame

BasicGame::BasicGame(Kernel payoff, GridFunction state_mean, Kernel state_cov)
    : payoff_(std::move(payoff)), state_mean_(std::move(state_mean)), state_cov_(std::move(state_cov)) {
  require_same_grid(payoff_.grid(), state_mean_.grid(), "BasicGame: state mean");
  require_same_grid(payoff_.grid(), state_cov_.grid(), "BasicGame: state covariance");
  if (!state_cov_.undirected() || !check_psd(state_cov_))
    throw PreconditionViolation("BasicGame: state covariance must be undirected PSD");
}

BasicGame BasicGame::common_state(Kernel payoff, double mean, double var) {
  if (!(var >= 0.0) || !std::isfinite(var)) throw InvalidArgument("common_state: variance must be >= 0");
  MeasureGrid grid = payoff.grid();
  return BasicGame(std::move(payoff), GridFunction::constant(grid, mean), kernels::constant(grid, var));
}

bool BasicGame::has_common_state(double tol) const {
  const auto& m = state_mean_.values();
  const auto& c = state_cov_.values();
  return m.maxCoeff() - m.minCoeff() <= tol && c.maxCoeff() - c.minCoeff() <= tol;
}

double BasicGame::common_state_var() const {
  if (!has_common_state()) throw PreconditionViolation("game does not have a common state");
  return state_cov_(0, 0);
}

BasicGame BasicGame::with_state_mean(GridFunction mean) const {
  return BasicGame(payoff_, std::move(mean), state_cov_);
}

// ------------------------------------------------------------- GaussianInfo

GaussianInfo::GaussianInfo(MeasureGrid grid, std::vector<std::size_t> signal_dims,
                           Eigen::VectorXd signal_mean, Eigen::MatrixXd joint_cov)
    : grid_(std::move(grid)), dims_(std::move(signal_dims)), signal_mean_(std::move(signal_mean)) {
  const std::size_t n = grid_.size();
  if (dims_.size() != n) throw InvalidArgument("GaussianInfo: one signal dimension per node required");
  offsets_.resize(n);
  std::size_t total = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (dims_[t] == 0) throw InvalidArgument("GaussianInfo: signal dimensions must be positive");
    offsets_[t] = total;
    total += dims_[t];
  }
  if (signal_mean_.size() != idx(total)) throw InvalidArgument("GaussianInfo: signal mean has wrong length");
  const Index full = idx(n + total);
  if (joint_cov.rows() != full || joint_cov.cols() != full)
    throw InvalidArgument("GaussianInfo: joint covariance must be (n + S) x (n + S)");
  if (!joint_cov.allFinite() || !signal_mean_.allFinite())
    throw InvalidArgument("GaussianInfo: non-finite entries");
  const double scale = std::max(1.0, joint_cov.cwiseAbs().maxCoeff());
  if ((joint_cov - joint_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("GaussianInfo: joint covariance is not symmetric");
  joint_cov_ = 0.5 * (joint_cov + joint_cov.transpose());
  if (!joint_cov_is_psd(joint_cov_)) throw InvalidArgument("GaussianInfo: joint covariance is not PSD");
}

GaussianInfo GaussianInfo::linear(const BasicGame& game, std::vector<std::size_t> signal_dims,
                                  const Eigen::MatrixXd& loading, const Eigen::VectorXd& noise_mean,
                                  const Eigen::MatrixXd& noise_cov) {
  const Index n = idx(game.size());
  const Index S = noise_mean.size();
  if (loading.rows() != S || loading.cols() != n || noise_cov.rows() != S || noise_cov.cols() != S)
    throw InvalidArgument("GaussianInfo::linear: inconsistent shapes");
  const Eigen::MatrixXd& st = game.state_cov().values();
  Eigen::MatrixXd joint(n + S, n + S);
  joint.topLeftCorner(n, n) = st;
  joint.bottomLeftCorner(S, n) = loading * st;
  joint.topRightCorner(n, S) = joint.bottomLeftCorner(S, n).transpose();
  joint.bottomRightCorner(S, S) = loading * st * loading.transpose() + noise_cov;
  Eigen::VectorXd mean = loading * game.state_mean().values() + noise_mean;
  return GaussianInfo(game.grid(), std::move(signal_dims), std::move(mean), std::move(joint));
}

GaussianInfo GaussianInfo::no_info(const BasicGame& game) {
  const Index n = idx(game.size());
  return linear(game, std::vector<std::size_t>(game.size(), 1), Eigen::MatrixXd::Zero(n, n),
                Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n));
}

GaussianInfo GaussianInfo::full_info(const BasicGame& game) {
  const Index n = idx(game.size());
  return linear(game, std::vector<std::size_t>(game.size(), 1), Eigen::MatrixXd::Identity(n, n),
                Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n));
}

GaussianInfo GaussianInfo::public_signal(const BasicGame& game, double noise_var) {
  if (!(noise_var >= 0.0)) throw InvalidArgument("public_signal: noise variance must be >= 0");
  const Index n = idx(game.size());
  return linear(game, std::vector<std::size_t>(game.size(), 1), Eigen::MatrixXd::Identity(n, n),
                Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Constant(n, n, noise_var));
}

GaussianInfo GaussianInfo::private_iid(const BasicGame& game, double noise_var) {
  if (!(noise_var >= 0.0)) throw InvalidArgument("private_iid: noise variance must be >= 0");
  const Index n = idx(game.size());
  return linear(game, std::vector<std::size_t>(game.size(), 1), Eigen::MatrixXd::Identity(n, n),
                Eigen::VectorXd::Zero(n), noise_var * Eigen::MatrixXd::Identity(n, n));
}

GaussianInfo GaussianInfo::targeted(const BasicGame& game, const std::vector<std::size_t>& nodes) {
  const Index n = idx(game.size());
  Eigen::MatrixXd loading = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t : nodes) {
    if (t >= game.size()) throw InvalidArgument("targeted: node index out of range");
    loading(idx(t), idx(t)) = 1.0;
  }
  return linear(game, std::vector<std::size_t>(game.size(), 1), loading, Eigen::VectorXd::Zero(n),
                Eigen::MatrixXd::Zero(n, n));
}

Eigen::MatrixXd GaussianInfo::state_block() const {
  const Index n = idx(grid_.size());
  return joint_cov_.topLeftCorner(n, n);
}

Eigen::MatrixXd GaussianInfo::signal_block() const {
  const Index S = signal_mean_.size();
  return joint_cov_.bottomRightCorner(S, S);
}

Eigen::MatrixXd GaussianInfo::signal_state_block() const {
  const Index n = idx(grid_.size());
  return joint_cov_.bottomLeftCorner(signal_mean_.size(), n);
}

std::vector<std::size_t> GaussianInfo::owner() const {
  std::vector<std::size_t> out;
  out.reserve(total_signal_dim());
  for (std::size_t t = 0; t < dims_.size(); ++t) out.insert(out.end(), dims_[t], t);
  return out;
}

// ------------------------------------------------------------------ solving

Eigen::VectorXd LinearEquilibrium::stacked_loadings() const {
  Index total = 0;
  for (const auto& c : loadings) total += c.size();
  Eigen::VectorXd out(total);
  Index o = 0;
  for (const auto& c : loadings) {
    out.segment(o, c.size()) = c;
    o += c.size();
  }
  return out;
}

GridFunction solve_mean(const BasicGame& game) {
  for (auto z : eigenvalues(game.payoff()))
    if (is_real_eigenvalue(z) && std::abs(z.real() - 1.0) <= 1e-9 * (1.0 + std::abs(z)))
      throw SingularMeanEquation("solve_mean: 1 is an eigenvalue of the payoff operator");
  const Index n = idx(game.size());
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - operator_matrix(game.payoff());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularMeanEquation("solve_mean: singular mean equation");
  return GridFunction(game.grid(), lu.solve(game.state_mean().values()));
}

LinearEquilibrium make_profile(const BasicGame& game, const GaussianInfo& info,
                               const Eigen::VectorXd& intercepts,
                               const std::vector<Eigen::VectorXd>& loadings) {
  require_same_grid(game.grid(), info.grid(), "make_profile");
  const std::size_t n = game.size();
  if (intercepts.size() != idx(n) || loadings.size() != n)
    throw InvalidArgument("make_profile: one intercept and one loading vector per node required");
  const auto& offsets = info.offsets();
  const auto& dims = info.signal_dims();
  for (std::size_t t = 0; t < n; ++t)
    if (loadings[t].size() != idx(dims[t])) throw InvalidArgument("make_profile: loading dimension mismatch");

  const Eigen::MatrixXd sxx = info.signal_block();
  const Eigen::MatrixXd sxt = info.signal_state_block();
  const Index S = sxx.rows();

  // Y(:, t) = Sxx(:, block t) c_t, then Xi(s, t) = c_s' Y(block s, t).
  Eigen::MatrixXd y(S, idx(n));
  for (std::size_t t = 0; t < n; ++t)
    y.col(idx(t)) = sxx.middleCols(idx(offsets[t]), idx(dims[t])) * loadings[t];
  Eigen::MatrixXd xi(idx(n), idx(n));
  Eigen::VectorXd zeta(idx(n)), mean(idx(n));
  for (std::size_t s = 0; s < n; ++s) {
    const Index o = idx(offsets[s]), d = idx(dims[s]);
    xi.row(idx(s)) = loadings[s].transpose() * y.middleRows(o, d);
    zeta(idx(s)) = loadings[s].dot(sxt.block(o, idx(s), d, 1).col(0));
    mean(idx(s)) = intercepts(idx(s)) + loadings[s].dot(info.signal_mean().segment(o, d));
  }
  xi = 0.5 * (xi + xi.transpose()).eval();

  const MeasureGrid& grid = game.grid();
  return LinearEquilibrium{grid,
                           GridFunction(grid, intercepts),
                           loadings,
                           Kernel(grid, std::move(xi), true),
                           GridFunction(grid, std::move(zeta)),
                           GridFunction(grid, std::move(mean))};
}

LinearEquilibrium solve_linear_equilibrium(const BasicGame& game, const GaussianInfo& info,
                                           const SolveOptions& opts) {
  require_same_grid(game.grid(), info.grid(), "solve_linear_equilibrium");
  const BestResponseMap map(game, info);
  const Index S = map.total();

  bool direct = opts.method == SolveOptions::Method::Direct ||
                (opts.method == SolveOptions::Method::Auto && static_cast<std::size_t>(S) <= kDirectSolveLimit);
  Eigen::VectorXd c;
  std::size_t iterations = 0;
  if (direct) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(S, S) - map.assemble();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw SingularEquilibriumSystem("solve_linear_equilibrium: coefficient system is singular");
    c = lu.solve(map.s);
  } else {
    c = iterate(map, game.payoff(), opts, iterations);
  }

  const GridFunction mu = solve_mean(game);
  std::vector<Eigen::VectorXd> loadings = split(c, info);
  Eigen::VectorXd b(idx(game.size()));
  for (std::size_t t = 0; t < game.size(); ++t)
    b(idx(t)) = mu[t] - loadings[t].dot(info.signal_mean().segment(idx(info.offsets()[t]), loadings[t].size()));

  LinearEquilibrium eq = make_profile(game, info, b, loadings);
  eq.iterations = iterations;
  eq.fixed_point_residual = map.gap_sd(c).maxCoeff();
  return eq;
}

Eigen::VectorXd loading_residuals(const BasicGame& game, const GaussianInfo& info,
                                  const LinearEquilibrium& eq) {
  require_same_grid(game.grid(), info.grid(), "loading_residuals");
  const BestResponseMap map(game, info);
  return map.gap_sd(eq.stacked_loadings());
}

MomentRestrictionReport verify_moment_restrictions(const LinearEquilibrium& eq, const BasicGame& game,
                                                   double tol) {
  require_same_grid(eq.grid, game.grid(), "verify_moment_restrictions");
  const Eigen::MatrixXd a = operator_matrix(game.payoff());
  const Eigen::MatrixXd& xi = eq.induced_action_cov.values();
  MomentRestrictionReport rep;
  rep.mean_residual = eq.induced_mean.values() - a * eq.induced_mean.values() - game.state_mean().values();
  rep.var_residual = xi.diagonal() - (a.cwiseProduct(xi)).rowwise().sum() - eq.induced_action_state_cov.values();
  rep.max_residual = std::max(rep.mean_residual.cwiseAbs().maxCoeff(), rep.var_residual.cwiseAbs().maxCoeff());
  rep.pass = rep.max_residual <= tol;
  return rep;
}

double symmetric_moment_identity(const LinearEquilibrium& eq, double r) {
  const Eigen::MatrixXd& xi = eq.induced_action_cov.values();
  const Eigen::VectorXd& zeta = eq.induced_action_state_cov.values();
  const Index n = xi.rows();
  if (n < 2) throw PreconditionViolation("symmetric_moment_identity: needs two distinct nodes");
  const double d1 = xi(0, 0), d2 = xi(0, 1), z = zeta(0);
  constexpr double kTol = 1e-9;
  for (Index s = 0; s < n; ++s) {
    if (std::abs(zeta(s) - z) > kTol) throw PreconditionViolation("symmetric_moment_identity: zeta not constant");
    for (Index t = 0; t < n; ++t)
      if (std::abs(xi(s, t) - (s == t ? d1 : d2)) > kTol)
        throw PreconditionViolation("symmetric_moment_identity: action covariance not symmetric across nodes");
  }
  if (d1 <= 0.0) return 0.0;
  const double sd = std::sqrt(d1);
  // Corr[f, theta] Sd theta = zeta / Sd f, so Var theta cancels.
  return sd - (z / sd) / (1.0 - r * d2 / d1);
}

BasicGame bm_game(const MeasureGrid& grid, double mu_theta, double var_theta, double r, double s, double k) {
  if (!(var_theta > 0.0)) throw InvalidArgument("bm_game: state variance must be positive");
  return BasicGame::common_state(kernels::leave_one_out(grid, r), s * mu_theta + k, s * s * var_theta);
}

GaussianInfo bm_info(const BasicGame& game, double mu_theta, double var_theta, double var_x, double var_y,
                     double s) {
  if (!(var_theta > 0.0 && var_x > 0.0 && var_y > 0.0))
    throw InvalidArgument("bm_info: variances must be positive");
  const Index n = idx(game.size());
  const Index S = 2 * n;
  Eigen::MatrixXd joint(n + S, n + S);
  // Scaled state s theta + k against raw signals about theta.
  joint.topLeftCorner(n, n) = game.state_cov().values();
  joint.bottomLeftCorner(S, n).setConstant(s * var_theta);
  joint.topRightCorner(n, S).setConstant(s * var_theta);
  Eigen::MatrixXd sxx = Eigen::MatrixXd::Constant(S, S, var_theta);
  for (Index i = 0; i < n; ++i) {
    sxx(2 * i, 2 * i) += var_x;
    for (Index j = 0; j < n; ++j) sxx(2 * i + 1, 2 * j + 1) += var_y;
  }
  joint.bottomRightCorner(S, S) = sxx;
  return GaussianInfo(game.grid(), std::vector<std::size_t>(game.size(), 2),
                      Eigen::VectorXd::Constant(S, mu_theta), std::move(joint));
}

}  // namespace kg
