#include "kg/montecarlo.hpp"

#include "kg/errors.hpp"
#include "kg/parallel.hpp"
#include "kg/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace kg {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("conditioning block eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (top > 0.0 && ev(i) > 1e-10 * top) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd aggregate(const ProcessSample& s, const MeasureGrid& grid) {
  if (s.draws.cols() != s.process_offset() + idx(grid.size()))
    throw InvalidArgument("sample columns do not match state block plus grid size");
  return s.draws.middleCols(s.process_offset(), idx(grid.size())) * grid.weights();
}

// Sparse S x n loading matrix C with column t holding c_t in block t.
Eigen::MatrixXd loading_matrix(const LinearEquilibrium& eq, const GaussianInfo& info) {
  const std::size_t n = info.grid().size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(idx(info.total_signal_dim()), idx(n));
  for (std::size_t t = 0; t < n; ++t)
    c.block(idx(info.offsets()[t]), idx(t), idx(info.signal_dims()[t]), 1) = eq.loadings[t];
  return c;
}

// Per-chunk partial sums for the two-pass audit.
struct AuditMoments {
  Eigen::VectorXd u, target, x;             // first pass: sums
  Eigen::VectorXd uu, tt, xx, ux, uxux;     // second pass: centred sums
};

}  // namespace

// ---------------------------------------------------------------- sampling

GaussianSampler::GaussianSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov, std::uint64_t seed)
    : mean_(std::move(mean)), seed_(seed) {
  const Index d = mean_.size();
  if (cov.rows() != d || cov.cols() != d) throw InvalidArgument("GaussianSampler: covariance shape mismatch");
  if (d == 0) {
    factor_.resize(0, 0);
    return;
  }
  const double tol = 1e-8 * std::max(1.0, cov.diagonal().maxCoeff());
  if (!cov.allFinite() || !is_psd_matrix(cov, tol)) throw InvalidArgument("GaussianSampler: covariance is not PSD");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  if (es.info() != Eigen::Success) throw EigenSolverFailure("GaussianSampler: eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = std::max(0.0, ev.maxCoeff());
  std::vector<Index> keep;
  for (Index i = 0; i < d; ++i) {
    if (ev(i) > 0.0) {
      keep.push_back(i);
    } else {
      clamped_ = std::max(clamped_, -ev(i));
    }
  }
  warn_ = clamped_ > 1e-8 * top;
  factor_.resize(d, idx(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    factor_.col(idx(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(ev(keep[k]));
}

Eigen::MatrixXd GaussianSampler::chunk(std::size_t c, std::size_t draws) const {
  const std::size_t first = c * kSampleChunk;
  if (first >= draws) throw InvalidArgument("GaussianSampler: chunk index out of range");
  const std::size_t count = std::min(kSampleChunk, draws - first);
  std::seed_seq seq{seed_, static_cast<std::uint64_t>(c)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  // Row-major fill: draw by draw, component by component.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z(idx(count), factor_.cols());
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  Eigen::MatrixXd out = z * factor_.transpose();
  out.rowwise() += mean_.transpose();
  return out;
}

Eigen::MatrixXd GaussianSampler::sample(std::size_t draws) const {
  Eigen::MatrixXd out(idx(draws), mean_.size());
  parallel_for(chunk_count(draws), [&](std::size_t c) {
    const Eigen::MatrixXd block = chunk(c, draws);
    out.middleRows(idx(c * kSampleChunk), block.rows()) = block;
  });
  return out;
}

ProcessSample sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t draws,
                              std::uint64_t seed, std::size_t state_dim) {
  if (state_dim > static_cast<std::size_t>(mean.size())) throw InvalidArgument("sample_gaussian: state block too large");
  const GaussianSampler sampler(mean, cov, seed);
  return ProcessSample{sampler.sample(draws), mean, cov, state_dim, seed, kGeneratorId, sampler.warn()};
}

// ------------------------------------------------------------------ checks

double StatCheck::z() const {
  const double diff = statistic - target;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(HUGE_VAL, diff);
}

StatCheck verify_aggregate_variance(const ProcessSample& s, const MeasureGrid& grid, double tol_se) {
  const Eigen::VectorXd a = aggregate(s, grid);
  const auto d = static_cast<double>(a.size());
  if (a.size() < 2) throw InvalidArgument("verify_aggregate_variance: need at least two draws");
  const Eigen::VectorXd w = grid.weights();
  const Eigen::MatrixXd cpp = s.cov.block(s.process_offset(), s.process_offset(), w.size(), w.size());
  const Eigen::ArrayXd c = a.array() - a.mean();
  const double var = c.square().sum() / (d - 1.0);
  const double m4 = c.square().square().mean();
  StatCheck out{"aggregate_variance", var, w.dot(cpp * w), std::sqrt(std::max(0.0, m4 - var * var) / d), false};
  out.pass = std::abs(out.statistic - out.target) <= tol_se * out.se + 1e-12 * (1.0 + std::abs(out.target));
  return out;
}

StatCheck verify_unconditional_fubini(const ProcessSample& s, const MeasureGrid& grid, double tol_se) {
  const Eigen::VectorXd a = aggregate(s, grid);
  const auto d = static_cast<double>(a.size());
  if (a.size() < 2) throw InvalidArgument("verify_unconditional_fubini: need at least two draws");
  const double mean = a.mean();
  const double sd = std::sqrt((a.array() - mean).square().sum() / (d - 1.0));
  const double target = grid.weights().dot(s.mean.segment(s.process_offset(), idx(grid.size())));
  StatCheck out{"unconditional_fubini", mean, target, sd / std::sqrt(d), false};
  out.pass = std::abs(mean - target) <= tol_se * out.se + 1e-12 * (1.0 + std::abs(target));
  return out;
}

double covariance_exchange_residual(const Eigen::MatrixXd& cov, std::size_t state_dim, const MeasureGrid& grid,
                                    const Eigen::VectorXd& a) {
  const Index n = idx(grid.size());
  const Index off = idx(state_dim);
  if (cov.rows() != off + n || a.size() != cov.rows()) throw InvalidArgument("covariance_exchange_residual: shape mismatch");
  // Cov[x, aggregate]: the aggregate as one linear functional.
  Eigen::VectorXd agg = Eigen::VectorXd::Zero(cov.rows());
  agg.segment(off, n) = grid.weights();
  const double lhs = a.dot(cov * agg);
  // Integral of the pointwise covariances.
  double rhs = 0.0;
  for (Index t = 0; t < n; ++t) rhs += grid.weights()(t) * a.dot(cov.col(off + t));
  return std::abs(lhs - rhs);
}

ConditionalFubiniReport verify_conditional_fubini(const ProcessSample& s, const MeasureGrid& grid,
                                                  const std::vector<std::size_t>& conditioning, double tol) {
  const Index n = idx(grid.size());
  const Index off = s.process_offset();
  const Index k = idx(conditioning.size());
  if (s.cov.rows() != off + n) throw InvalidArgument("verify_conditional_fubini: shape mismatch");
  Eigen::MatrixXd stt(k, k), stp(k, n);
  Eigen::VectorXd mt(k);
  Eigen::MatrixXd dev(s.draws.rows(), k);
  for (Index i = 0; i < k; ++i) {
    const Index ci = idx(conditioning[static_cast<std::size_t>(i)]);
    if (ci >= s.cov.rows()) throw InvalidArgument("verify_conditional_fubini: coordinate out of range");
    mt(i) = s.mean(ci);
    dev.col(i) = s.draws.col(ci).array() - mt(i);
    stp.row(i) = s.cov.block(ci, off, 1, n);
    for (Index j = 0; j < k; ++j) stt(i, j) = s.cov(ci, idx(conditioning[static_cast<std::size_t>(j)]));
  }
  const Eigen::MatrixXd g = dev * psd_pinv(stt);
  const Eigen::VectorXd w = grid.weights();
  const Eigen::VectorXd mp = s.mean.segment(off, n);
  // Conditional mean of the aggregate.
  const Eigen::VectorXd lhs = (g * (stp * w)).array() + mp.dot(w);
  // Weighted sum of the nodewise conditional means.
  Eigen::MatrixXd nodewise = g * stp;
  nodewise.rowwise() += mp.transpose();
  const Eigen::VectorXd rhs = nodewise * w;
  ConditionalFubiniReport out;
  out.max_discrepancy = lhs.size() ? (lhs - rhs).cwiseAbs().maxCoeff() : 0.0;
  out.pass = out.max_discrepancy <= tol;
  return out;
}

BestResponseAudit best_response_audit(const LinearEquilibrium& eq, const BasicGame& game, const GaussianInfo& info,
                                      std::size_t draws, std::uint64_t seed, double tol_se) {
  require_same_grid(eq.grid, game.grid(), "best_response_audit");
  require_same_grid(eq.grid, info.grid(), "best_response_audit");
  if (draws < 2) throw InvalidArgument("best_response_audit: need at least two draws");
  const std::size_t n = game.size();
  const Index N = idx(n), S = idx(info.total_signal_dim());
  const auto owner = info.owner();

  Eigen::VectorXd mean(N + S);
  mean << game.state_mean().values(), info.signal_mean();
  const GaussianSampler sampler(mean, info.joint_cov(), seed);
  const Eigen::MatrixXd cmat = loading_matrix(eq, info);
  const Eigen::MatrixXd rwt = operator_matrix(game.payoff()).transpose();
  const Eigen::RowVectorXd b = eq.intercepts.values().transpose();

  // Gap u = R W f + theta - f and best-response target R W f + theta for a chunk.
  auto evaluate = [&](std::size_t c, Eigen::MatrixXd& u, Eigen::MatrixXd& target, Eigen::MatrixXd& x) {
    const Eigen::MatrixXd z = sampler.chunk(c, draws);
    x = z.rightCols(S);
    Eigen::MatrixXd f = x * cmat;
    f.rowwise() += b;
    target = f * rwt + z.leftCols(N);
    u = target - f;
  };

  const std::size_t chunks = sampler.chunk_count(draws);
  std::vector<AuditMoments> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Eigen::MatrixXd u, t, x;
    evaluate(c, u, t, x);
    parts[c].u = u.colwise().sum().transpose();
    parts[c].target = t.colwise().sum().transpose();
    parts[c].x = x.colwise().sum().transpose();
  });
  const auto dd = static_cast<double>(draws);
  Eigen::VectorXd ubar = Eigen::VectorXd::Zero(N), tbar = Eigen::VectorXd::Zero(N), xbar = Eigen::VectorXd::Zero(S);
  for (const auto& p : parts) {
    ubar += p.u;
    tbar += p.target;
    xbar += p.x;
  }
  ubar /= dd;
  tbar /= dd;
  xbar /= dd;

  parallel_for(chunks, [&](std::size_t c) {
    Eigen::MatrixXd u, t, x;
    evaluate(c, u, t, x);
    u.rowwise() -= ubar.transpose();
    t.rowwise() -= tbar.transpose();
    x.rowwise() -= xbar.transpose();
    AuditMoments& p = parts[c];
    p.uu = u.array().square().colwise().sum().transpose();
    p.tt = t.array().square().colwise().sum().transpose();
    p.xx = x.array().square().colwise().sum().transpose();
    p.ux.setZero(S);
    p.uxux.setZero(S);
    for (Index j = 0; j < S; ++j) {
      const Eigen::ArrayXd prod = u.col(idx(owner[static_cast<std::size_t>(j)])).array() * x.col(j).array();
      p.ux(j) = prod.sum();
      p.uxux(j) = prod.square().sum();
    }
  });
  Eigen::VectorXd uu = Eigen::VectorXd::Zero(N), tt = Eigen::VectorXd::Zero(N), xx = Eigen::VectorXd::Zero(S),
                  ux = Eigen::VectorXd::Zero(S), uxux = Eigen::VectorXd::Zero(S);
  for (const auto& p : parts) {
    uu += p.uu;
    tt += p.tt;
    xx += p.xx;
    ux += p.ux;
    uxux += p.uxux;
  }

  BestResponseAudit out;
  out.draws = draws;
  std::vector<bool> failed(n, false);
  auto record = [&](std::size_t t, double est, double se, double floor) {
    const double excess = std::abs(est) - floor;
    if (se > 0.0) out.max_abs_z = std::max(out.max_abs_z, std::max(0.0, excess) / se);
    else if (excess > 0.0) out.max_abs_z = HUGE_VAL;
    if (excess > tol_se * se) failed[t] = true;
  };
  for (std::size_t t = 0; t < n; ++t) {
    const Index ti = idx(t);
    const double sd_u = std::sqrt(uu(ti) / (dd - 1.0));
    const double sd_t = std::sqrt(tt(ti) / (dd - 1.0));
    record(t, ubar(ti), sd_u / std::sqrt(dd), 1e-12 * (1.0 + sd_t));
    for (Index j = idx(info.offsets()[t]); j < idx(info.offsets()[t] + info.signal_dims()[t]); ++j) {
      const double cov = ux(j) / dd;
      const double se = std::sqrt(std::max(0.0, uxux(j) / dd - cov * cov) / dd);
      const double sd_x = std::sqrt(xx(j) / (dd - 1.0));
      record(t, cov, se, 1e-12 * (1.0 + sd_t * sd_x));
    }
  }
  for (std::size_t t = 0; t < n; ++t)
    if (failed[t]) out.failing_nodes.push_back(t);
  out.coefficient_residual = loading_residuals(game, info, eq).maxCoeff();
  out.pass = out.failing_nodes.empty();
  return out;
}

DuplicateReport duplicate_equilibria(const BasicGame& game, std::size_t draws, std::uint64_t seed, double scale,
                                     double tol_se) {
  const auto pair = leading_real_eigenpair(game.payoff());
  if (!pair || pair->value < 1.0 - 1e-9)
    throw NoRealEigenvalueAtLeastOne("duplicate_equilibria: payoff operator has no real eigenvalue >= 1");
  const double lambda = pair->value;
  const std::size_t n = game.size();
  const Index N = idx(n);

  BasicGame base = game;
  Eigen::VectorXd mu;
  try {
    mu = solve_mean(game).values();
  } catch (const SingularMeanEquation&) {
    base = game.with_state_mean(GridFunction::constant(game.grid(), 0.0));
    mu = Eigen::VectorXd::Zero(N);
  }

  const Eigen::VectorXd& phi = pair->vector.values();
  const Eigen::VectorXd& w = game.grid().weights();
  Eigen::MatrixXd k = Eigen::MatrixXd::Ones(N, N);
  for (Index t = 0; t < N; ++t) {
    const double self = w(t) * game.payoff().values()(t, t);
    if (self >= 1.0) {
      if (phi(t) != 0.0) throw PreconditionViolation("duplicate_equilibria: needs w_t R(t,t) < 1");
      k(t, t) = lambda;
    } else {
      k(t, t) = 1.0 + (lambda - 1.0) / (1.0 - self);
    }
  }
  GaussianInfo info = GaussianInfo::linear(base, std::vector<std::size_t>(n, 1), Eigen::MatrixXd::Zero(N, N),
                                           Eigen::VectorXd::Zero(N), k);

  std::vector<Eigen::VectorXd> zero(n, Eigen::VectorXd::Zero(1)), shifted(n);
  for (std::size_t t = 0; t < n; ++t) shifted[t] = Eigen::VectorXd::Constant(1, scale * phi(idx(t)));
  LinearEquilibrium f = make_profile(base, info, mu, zero);
  LinearEquilibrium g = make_profile(base, info, mu, shifted);
  BestResponseAudit af = best_response_audit(f, base, info, draws, seed, tol_se);
  BestResponseAudit ag = best_response_audit(g, base, info, draws, seed, tol_se);
  const double distance = std::abs(scale) * std::sqrt(w.dot(phi.cwiseAbs2().cwiseProduct(k.diagonal())));
  const bool pass = af.pass && ag.pass && distance > 0.0;
  return DuplicateReport{lambda, pair->vector, std::move(base), std::move(info), std::move(f), std::move(g),
                         std::move(af), std::move(ag), distance, pass};
}

BmSolution bm_example_equilibrium(double mu_theta, double var_theta, double var_x, double var_y, double r, double s,
                                  double k) {
  if (!(r < 1.0)) throw InvalidArgument("bm_example_equilibrium: r must be < 1");
  if (!(var_theta > 0.0 && var_x > 0.0 && var_y > 0.0))
    throw InvalidArgument("bm_example_equilibrium: variances must be positive");
  const double precision = 1.0 / var_theta + 1.0 / var_x + 1.0 / var_y;
  const double kx = (1.0 / var_x) / precision;
  const double ky = (1.0 / var_y) / precision;
  const double k0 = (mu_theta / var_theta) / precision;
  BmSolution out;
  out.alpha_x = s * kx / (1.0 - r * kx);
  const double pass_through = r * out.alpha_x + s;
  out.alpha_y = ky * pass_through / (1.0 - r);
  out.alpha0 = (k0 * pass_through + k) / (1.0 - r);
  const double sum = out.alpha_x + out.alpha_y;
  out.volatility = sum * sum * var_theta + out.alpha_y * out.alpha_y * var_y;
  out.dispersion = out.alpha_x * out.alpha_x * var_x;
  return out;
}

JointLaw profile_joint_law(const LinearEquilibrium& eq, const BasicGame& game, const GaussianInfo& info) {
  require_same_grid(eq.grid, info.grid(), "profile_joint_law");
  const Index N = idx(info.grid().size());
  const Index S = idx(info.total_signal_dim());
  const Eigen::MatrixXd c = loading_matrix(eq, info);
  const Eigen::MatrixXd& joint = info.joint_cov();
  JointLaw law;
  law.state_dim = static_cast<std::size_t>(N + S);
  law.mean.resize(N + S + N);
  law.mean.head(N + S) << game.state_mean().values(), info.signal_mean();
  law.mean.tail(N) = eq.induced_mean.values();
  law.cov.resize(N + S + N, N + S + N);
  law.cov.topLeftCorner(N + S, N + S) = joint;
  const Eigen::MatrixXd cross = c.transpose() * joint.bottomRows(S);  // Cov[f, (theta, x)]
  law.cov.bottomLeftCorner(N, N + S) = cross;
  law.cov.topRightCorner(N + S, N) = cross.transpose();
  Eigen::MatrixXd ff = c.transpose() * joint.bottomRightCorner(S, S) * c;
  law.cov.bottomRightCorner(N, N) = 0.5 * (ff + ff.transpose());
  return law;
}

}  // namespace kg
