#pragma once

#include "kg/game.hpp"
#include "kg/moments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kg {

/// Disclosure policies under a common state normalised to mean 0, variance 1.
struct DisclosurePolicy {
  enum class Kind { Targeted, Symmetric, Public };
  Kind kind = Kind::Targeted;
  std::vector<std::size_t> nodes;  // Targeted: informed agents
  double m = 0.0;                  // Symmetric: informativeness in [0,1]
  double z = 0.0;                  // Public: explained variance Var E[theta | x] in [0,1]
};

enum class Regime { T1, T2, T3, Boundary };
std::string to_string(Regime r);

/// T1: no disclosure; T2: partial disclosure to a mass m*; T3: full disclosure;
/// Boundary: alpha = beta <= 0, where no and full disclosure both attain v_star = 0.
struct RegimeReport {
  Regime regime = Regime::T1;
  double m_star = 0.0;
  double v_star = 0.0;
};

/// (alpha m - beta m^2) / (1 - r m)^2. Throws InvalidArgument unless m in [0,1] and r < 1.
double targeted_value(double m, double r, double alpha, double beta);
double targeted_value(double m, double r, const DesignObjective& obj);

/// Closed-form optimum over the informed mass m. Ties are detected with
/// tolerance 1e-12 * max(1, |alpha|, |beta|).
RegimeReport optimal_targeted(double r, double alpha, double beta);
RegimeReport optimal_targeted(double r, const DesignObjective& obj);

/// Brute-force maximum of targeted_value over `points` equally spaced m in [0,1]
/// (both ends included). `first` and `last` index the maximisers.
struct ScanResult {
  double v_max = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t points = 0;
  double step() const { return 1.0 / static_cast<double>(points - 1); }
  double m_first() const { return static_cast<double>(first) * step(); }
  double m_last() const { return static_cast<double>(last) * step(); }
};
ScanResult scan_targeted(double r, double alpha, double beta, std::size_t points);

/// First `count` nodes, whose weight gives the informed mass m.
std::vector<std::size_t> leading_nodes(std::size_t count);
double mass_of(const MeasureGrid& grid, const std::vector<std::size_t>& nodes);

/// Informed agents hold theta exactly: xi = 1{s,t in M}/(1 - r m)^2,
/// zeta = 1{t in M}/(1 - r m), with m the mass of M. Unit state variance.
EquilibriumMoment targeted_equilibrium_moment(const std::vector<std::size_t>& nodes, double r,
                                              const MeasureGrid& grid);

/// Symmetric noisy disclosure x(t) = a theta + b eps(t) with eps i.i.d. standard normal.
struct SymmetricDisclosure {
  double xi_diag = 0.0;     // m / (1 - r m)^2
  double xi_off = 0.0;      // m^2 / (1 - r m)^2
  double zeta = 0.0;        // m / (1 - r m)
  double signal_coef = 0.0; // a = m / (1 - r m)
  double noise_coef = 0.0;  // b = sqrt(m (1 - m)) / (1 - r m)
  EquilibriumMoment moment;
};

/// Two-level moment with the values above on the grid. It is exact for the
/// leave-one-out constant payoff, in which no agent's own action enters its aggregate.
SymmetricDisclosure symmetric_moment(double m, double r, const MeasureGrid& grid);
/// The same disclosure when every agent's own action carries weight w_t in the
/// aggregate (plain constant payoff r on a uniform grid): the diagonal becomes
/// xi_off + (xi_diag - xi_off) / (1 - r w). Requires uniform weights and r w < 1.
EquilibriumMoment symmetric_moment_with_self_weight(double m, double r, const MeasureGrid& grid);
/// Information structure x(t) = a theta + b eps(t) on a unit-variance common-state game.
GaussianInfo symmetric_info(const BasicGame& game, double m, double r);

struct PublicOptimum {
  double z_star = 0.0;
  double v_pub = 0.0;
  bool boundary = false;  // alpha = beta: every z is optimal
};
/// Public disclosure value (alpha - beta) z / (1 - r)^2 maximised over z in [0,1].
PublicOptimum public_optimum(double r, double alpha, double beta);
PublicOptimum public_optimum(double r, const DesignObjective& obj);
/// xi = z / (1 - r)^2, zeta = z / (1 - r): every agent plays E[theta | x] / (1 - r).
EquilibriumMoment public_moment(double z, double r, const MeasureGrid& grid);

/// Moment of a policy under the plain constant payoff r.
EquilibriumMoment policy_moment(const DisclosurePolicy& p, double r, const MeasureGrid& grid);

struct AuditReport {
  double max_excess = 0.0;  // max (V - V*_tg); -inf when no sample was drawn
  double v_star = 0.0;
  std::size_t samples = 0;
  std::size_t worst_index = 0;
  std::string worst_kind;
};

/// Objective of randomly drawn feasible moments against the targeted optimum.
/// Samples cycle through random Gaussian information structures solved under the
/// constant payoff r on uniform_grid(n), random targeted sets, symmetric
/// disclosures and public signals. Sample i uses an RNG seeded by (seed, i).
/// Extra moments (e.g. a known maximiser) can be appended.
AuditReport global_optimality_audit(double r, const DesignObjective& obj, std::size_t samples,
                                    std::uint64_t seed, std::size_t n = 100,
                                    const std::vector<EquilibriumMoment>& extra = {});

/// Differentiated-product Cournot market with consumer-surplus weight lambda and
/// demand slope gamma. Best response a_i = E_i[theta] - gamma E_i[A].
struct CournotPolicy {
  double u = 0.0, v = 0.0, w = 0.0;
  double r = 0.0;
  double alpha = 0.0, beta = 0.0;
  bool full_disclosure = false;  // gamma <= 4 / lambda - 3
  double m_star = 1.0;
  RegimeReport regime;           // from optimal_targeted
  bool consistent = false;       // both routes agree on regime and m*
};
CournotPolicy cournot_policy(double lambda, double gamma);

struct DiagramCell {
  double alpha = 0.0;
  double beta = 0.0;
  RegimeReport report;
};
/// Raster of regimes over cell centres of [alpha_lo, alpha_hi] x [beta_lo, beta_hi].
std::vector<DiagramCell> regime_diagram(double r, double alpha_lo, double alpha_hi, double beta_lo,
                                        double beta_hi, std::size_t resolution);

}  // namespace kg
