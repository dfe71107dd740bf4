#include "kg/info_design.hpp"

#include "kg/errors.hpp"
#include "kg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace kg {

namespace {

void require_r(double r, const char* what) {
  if (!(r < 1.0)) throw InvalidArgument(std::string(what) + ": r must be < 1");
}

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument(std::string(what) + ": parameter must lie in [0,1]");
}

double tie_tol(double alpha, double beta) {
  return 1e-12 * std::max({1.0, std::abs(alpha), std::abs(beta)});
}

EquilibriumMoment constant_moment(const MeasureGrid& grid, double xi, double zeta) {
  return EquilibriumMoment(kernels::constant(grid, xi), GridFunction::constant(grid, zeta), 1.0);
}

// Random signal structure on a unit common state: x(t) = a(t) theta + common and
// idiosyncratic noise, solved under the constant payoff r.
EquilibriumMoment random_gaussian_moment(double r, const MeasureGrid& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const BasicGame game = BasicGame::common_state(kernels::constant(grid, r), 0.0, 1.0);

  const double informed = unif(rng);
  Eigen::MatrixXd loading = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t)
    if (unif(rng) < informed) loading(t, t) = normal(rng);
  const Eigen::Index factors = 2;
  Eigen::MatrixXd f(n, factors);
  const double common = 1.5 * unif(rng);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = common * normal(rng);
  const double idio = 2.0 * unif(rng);
  Eigen::VectorXd sd(n);
  for (Eigen::Index t = 0; t < n; ++t) sd(t) = idio * unif(rng);
  Eigen::MatrixXd noise = f * f.transpose();
  noise.diagonal() += sd.cwiseAbs2();

  const GaussianInfo info = GaussianInfo::linear(game, std::vector<std::size_t>(grid.size(), 1), loading,
                                                 Eigen::VectorXd::Zero(n), noise);
  return moment_of(solve_linear_equilibrium(game, info), game);
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::T1: return "T1";
    case Regime::T2: return "T2";
    case Regime::T3: return "T3";
    case Regime::Boundary: return "boundary";
  }
  return "unknown";
}

double targeted_value(double m, double r, double alpha, double beta) {
  require_unit(m, "targeted_value");
  require_r(r, "targeted_value");
  const double d = 1.0 - r * m;
  return (alpha * m - beta * m * m) / (d * d);
}

double targeted_value(double m, double r, const DesignObjective& obj) {
  return targeted_value(m, r, obj.alpha(), obj.beta(r));
}

RegimeReport optimal_targeted(double r, double alpha, double beta) {
  require_r(r, "optimal_targeted");
  const double tol = tie_tol(alpha, beta);
  if (std::abs(alpha - beta) <= tol && alpha <= tol) return {Regime::Boundary, 0.0, 0.0};
  if (alpha <= 0.0 && alpha <= beta) return {Regime::T1, 0.0, 0.0};
  if (alpha > 0.0 && beta > 0.5 * (1.0 + r) * alpha)
    return {Regime::T2, alpha / (2.0 * beta - r * alpha), alpha * alpha / (4.0 * (beta - r * alpha))};
  return {Regime::T3, 1.0, (alpha - beta) / ((1.0 - r) * (1.0 - r))};
}

RegimeReport optimal_targeted(double r, const DesignObjective& obj) {
  return optimal_targeted(r, obj.alpha(), obj.beta(r));
}

ScanResult scan_targeted(double r, double alpha, double beta, std::size_t points) {
  require_r(r, "scan_targeted");
  if (points < 2) throw InvalidArgument("scan_targeted: need at least two points");
  const double h = 1.0 / static_cast<double>(points - 1);
  ScanResult out;
  out.points = points;
  out.v_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    const double m = static_cast<double>(i) * h;
    const double d = 1.0 - r * m;
    const double v = (alpha - beta * m) * m / (d * d);
    if (v > out.v_max) {
      out.v_max = v;
      out.first = out.last = i;
    } else if (v == out.v_max) {
      out.last = i;
    }
  }
  return out;
}

std::vector<std::size_t> leading_nodes(std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = i;
  return out;
}

double mass_of(const MeasureGrid& grid, const std::vector<std::size_t>& nodes) {
  std::vector<bool> seen(grid.size(), false);
  double m = 0.0;
  for (std::size_t t : nodes) {
    if (t >= grid.size()) throw InvalidArgument("mass_of: node index out of range");
    if (!seen[t]) m += grid.weight(t);
    seen[t] = true;
  }
  return std::min(m, 1.0);
}

EquilibriumMoment targeted_equilibrium_moment(const std::vector<std::size_t>& nodes, double r,
                                              const MeasureGrid& grid) {
  require_r(r, "targeted_equilibrium_moment");
  const double c = 1.0 / (1.0 - r * mass_of(grid, nodes));
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
  for (std::size_t t : nodes) ind(static_cast<Eigen::Index>(t)) = 1.0;
  return EquilibriumMoment(Kernel(grid, c * c * ind * ind.transpose(), true), GridFunction(grid, c * ind), 1.0);
}

SymmetricDisclosure symmetric_moment(double m, double r, const MeasureGrid& grid) {
  require_unit(m, "symmetric_moment");
  require_r(r, "symmetric_moment");
  const double d = 1.0 - r * m;
  SymmetricDisclosure out{m / (d * d),
                          m * m / (d * d),
                          m / d,
                          m / d,
                          std::sqrt(std::max(0.0, m * (1.0 - m))) / d,
                          EquilibriumMoment::zero(grid)};
  out.moment = EquilibriumMoment(kernels::two_level(grid, out.xi_diag, out.xi_off),
                                 GridFunction::constant(grid, out.zeta), 1.0);
  return out;
}

EquilibriumMoment symmetric_moment_with_self_weight(double m, double r, const MeasureGrid& grid) {
  const SymmetricDisclosure s = symmetric_moment(m, r, grid);
  const Eigen::VectorXd& w = grid.weights();
  if (w.maxCoeff() - w.minCoeff() > 1e-15) throw PreconditionViolation("symmetric moment: grid weights must be uniform");
  const double d = 1.0 - r * w(0);
  if (!(d > 0.0)) throw PreconditionViolation("symmetric moment: needs r w < 1");
  const double diag = s.xi_off + (s.xi_diag - s.xi_off) / d;
  return EquilibriumMoment(kernels::two_level(grid, diag, s.xi_off), GridFunction::constant(grid, s.zeta), 1.0);
}

GaussianInfo symmetric_info(const BasicGame& game, double m, double r) {
  if (!game.has_common_state() || std::abs(game.common_state_var() - 1.0) > 1e-12)
    throw PreconditionViolation("symmetric_info: needs a unit-variance common state");
  const SymmetricDisclosure s = symmetric_moment(m, r, game.grid());
  const auto n = static_cast<Eigen::Index>(game.size());
  return GaussianInfo::linear(game, std::vector<std::size_t>(game.size(), 1),
                              s.signal_coef * Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n),
                              s.noise_coef * s.noise_coef * Eigen::MatrixXd::Identity(n, n));
}

PublicOptimum public_optimum(double r, double alpha, double beta) {
  require_r(r, "public_optimum");
  const double tol = tie_tol(alpha, beta);
  if (alpha - beta > tol) return {1.0, (alpha - beta) / ((1.0 - r) * (1.0 - r)), false};
  if (beta - alpha > tol) return {0.0, 0.0, false};
  return {0.0, 0.0, true};
}

PublicOptimum public_optimum(double r, const DesignObjective& obj) {
  return public_optimum(r, obj.alpha(), obj.beta(r));
}

EquilibriumMoment public_moment(double z, double r, const MeasureGrid& grid) {
  require_unit(z, "public_moment");
  require_r(r, "public_moment");
  return constant_moment(grid, z / ((1.0 - r) * (1.0 - r)), z / (1.0 - r));
}

EquilibriumMoment policy_moment(const DisclosurePolicy& p, double r, const MeasureGrid& grid) {
  switch (p.kind) {
    case DisclosurePolicy::Kind::Targeted: return targeted_equilibrium_moment(p.nodes, r, grid);
    case DisclosurePolicy::Kind::Symmetric: return symmetric_moment_with_self_weight(p.m, r, grid);
    case DisclosurePolicy::Kind::Public: return public_moment(p.z, r, grid);
  }
  throw InvalidArgument("policy_moment: unknown policy kind");
}

AuditReport global_optimality_audit(double r, const DesignObjective& obj, std::size_t samples,
                                    std::uint64_t seed, std::size_t n,
                                    const std::vector<EquilibriumMoment>& extra) {
  require_r(r, "global_optimality_audit");
  AuditReport rep;
  rep.v_star = optimal_targeted(r, obj).v_star;
  rep.samples = samples + extra.size();
  rep.max_excess = -std::numeric_limits<double>::infinity();
  if (rep.samples == 0) return rep;

  static const char* kKinds[] = {"gaussian", "targeted", "symmetric", "public"};
  const MeasureGrid grid = uniform_grid(n);
  std::vector<double> values(samples);
  parallel_for(samples, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif;
    DisclosurePolicy p;
    switch (i % 4) {
      case 0: values[i] = objective_value(random_gaussian_moment(r, grid, rng), obj); return;
      case 1: {
        p.kind = DisclosurePolicy::Kind::Targeted;
        const double share = unif(rng);
        for (std::size_t t = 0; t < n; ++t)
          if (unif(rng) < share) p.nodes.push_back(t);
        break;
      }
      case 2:
        p.kind = DisclosurePolicy::Kind::Symmetric;
        p.m = unif(rng);
        break;
      default:
        p.kind = DisclosurePolicy::Kind::Public;
        p.z = unif(rng);
        break;
    }
    values[i] = objective_value(policy_moment(p, r, grid), obj);
  });

  for (std::size_t i = 0; i < samples; ++i) {
    if (values[i] - rep.v_star > rep.max_excess) {
      rep.max_excess = values[i] - rep.v_star;
      rep.worst_index = i;
      rep.worst_kind = kKinds[i % 4];
    }
  }
  for (std::size_t j = 0; j < extra.size(); ++j) {
    const double e = objective_value(extra[j], obj) - rep.v_star;
    if (e > rep.max_excess) {
      rep.max_excess = e;
      rep.worst_index = samples + j;
      rep.worst_kind = "extra";
    }
  }
  return rep;
}

CournotPolicy cournot_policy(double lambda, double gamma) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("cournot_policy: lambda must lie in [0,1]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("cournot_policy: gamma must be positive");
  CournotPolicy c;
  c.u = 1.0 - lambda - lambda * gamma;
  c.v = -0.5 * lambda;
  c.w = lambda;
  c.r = -gamma;
  const DesignObjective obj{c.u, c.v, c.w};
  c.alpha = obj.alpha();
  c.beta = obj.beta(c.r);
  c.full_disclosure = lambda == 0.0 || gamma <= 4.0 / lambda - 3.0;
  c.m_star = c.full_disclosure ? 1.0 : lambda / (lambda * gamma - 4.0 * (1.0 - lambda));
  c.regime = optimal_targeted(c.r, obj);
  c.consistent = std::abs(c.regime.m_star - c.m_star) <= 1e-12 * std::max(1.0, c.m_star);
  return c;
}

std::vector<DiagramCell> regime_diagram(double r, double alpha_lo, double alpha_hi, double beta_lo,
                                        double beta_hi, std::size_t resolution) {
  require_r(r, "regime_diagram");
  if (resolution == 0 || !(alpha_hi > alpha_lo) || !(beta_hi > beta_lo))
    throw InvalidArgument("regime_diagram: empty raster");
  std::vector<DiagramCell> out;
  out.reserve(resolution * resolution);
  const double da = (alpha_hi - alpha_lo) / static_cast<double>(resolution);
  const double db = (beta_hi - beta_lo) / static_cast<double>(resolution);
  for (std::size_t j = 0; j < resolution; ++j) {
    const double beta = beta_lo + (static_cast<double>(j) + 0.5) * db;
    for (std::size_t i = 0; i < resolution; ++i) {
      const double alpha = alpha_lo + (static_cast<double>(i) + 0.5) * da;
      out.push_back({alpha, beta, optimal_targeted(r, alpha, beta)});
    }
  }
  return out;
}

}  // namespace kg
