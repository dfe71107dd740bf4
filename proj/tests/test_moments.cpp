#include "kg/errors.hpp"
#include "kg/game.hpp"
#include "kg/info_design.hpp"
#include "kg/moments.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace kg;

namespace {

// Moment of a random jointly Gaussian (theta, a) with a common state.
EquilibriumMoment random_gaussian_moment(std::mt19937_64& gen, const MeasureGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const Eigen::MatrixXd b = kgtest::normal(gen, n + 1, 3);
  Eigen::MatrixXd c = b * b.transpose();
  c = (0.5 * (c + c.transpose())).eval();
  return EquilibriumMoment(Kernel(g, c.bottomRightCorner(n, n), true), GridFunction(g, c.col(0).tail(n)), c(0, 0));
}

}  // namespace

TEST_CASE("obedience") {
  const MeasureGrid g = uniform_grid(10);
  const EquilibriumMoment half = targeted_equilibrium_moment(leading_nodes(5), 0.5, g);
  CHECK(half.xi()(0, 0) == doctest::Approx(16.0 / 9.0));
  CHECK(half.zeta()[0] == doctest::Approx(4.0 / 3.0));
  CHECK(check_obedience(half, kernels::constant(g, 0.5)) <= 1e-12);
  CHECK(check_obedience(EquilibriumMoment::zero(g), kernels::constant(g, 0.5)) == 0.0);

  const SymmetricDisclosure s = symmetric_moment(0.5, 0.5, g);
  CHECK(s.xi_diag == doctest::Approx(8.0 / 9.0));
  CHECK(s.xi_off == doctest::Approx(4.0 / 9.0));
  CHECK(s.zeta == doctest::Approx(2.0 / 3.0));
  CHECK(check_obedience(s.moment, kernels::leave_one_out(g, 0.5)) <= 1e-12);
  CHECK(check_obedience(symmetric_moment_with_self_weight(0.5, 0.5, g), kernels::constant(g, 0.5)) <= 1e-12);
  CHECK(check_obedience(half, kernels::constant(g, 0.2)) > 0.1);
}

TEST_CASE("positivity and its Schur form agree") {
  const MeasureGrid g = uniform_grid(10);
  CHECK(check_positivity(targeted_equilibrium_moment(leading_nodes(5), 0.5, g)));
  const EquilibriumMoment broken(kernels::constant(g, 0.0), GridFunction::constant(g, 1.0), 1.0);
  CHECK_FALSE(check_positivity(broken));
  CHECK_FALSE(check_positivity_schur(broken));

  auto gen = kgtest::rng(20);
  int feasible = 0, infeasible = 0;
  for (int i = 0; i < 60; ++i) {
    EquilibriumMoment m = random_gaussian_moment(gen, g);
    CHECK(check_positivity(m));
    if (i % 2 == 1) {
      // Inflate the state-action covariance until the border may fail.
      const double scale = kgtest::uniform(gen, 0.5, 3.0);
      m = EquilibriumMoment(m.xi(), GridFunction(g, scale * m.zeta().values()), m.state_var());
    }
    const bool p = check_positivity(m);
    CHECK(p == check_positivity_schur(m));
    (p ? feasible : infeasible)++;
  }
  CHECK(infeasible > 0);
  CHECK(feasible > 0);
}

TEST_CASE("bounds") {
  const MeasureGrid g = uniform_grid(10);
  const EquilibriumMoment full = targeted_equilibrium_moment(leading_nodes(10), 0.5, g);
  CHECK(double_integral(full.xi()) == doctest::Approx(4.0).epsilon(1e-14));
  BoundsReport b = bounds_check(full, 0.5);
  CHECK(std::abs(b.cap) <= 1e-12);
  CHECK(b.pass);

  const EquilibriumMoment half = targeted_equilibrium_moment(leading_nodes(5), 0.5, g);
  b = bounds_check(half, 0.5);
  CHECK(std::abs(b.cauchy) <= 1e-12);
  CHECK(b.pass);

  b = bounds_check(EquilibriumMoment::zero(g), 0.5);
  CHECK(b.cauchy == 0.0);
  CHECK(b.diag == 0.0);
  CHECK(b.cap == doctest::Approx(4.0));
  CHECK(b.pass);

  const EquilibriumMoment too_big(kernels::constant(g, 5.0), GridFunction::constant(g, 2.0), 1.0);
  CHECK_FALSE(bounds_check(too_big, 0.5).pass);
}

TEST_CASE("objective values") {
  const MeasureGrid g = uniform_grid(10);
  const DesignObjective w{0.0, 0.0, 1.0};
  for (double r : {0.5, -1.0}) {
    const EquilibriumMoment half = targeted_equilibrium_moment(leading_nodes(5), r, g);
    CHECK(objective_value(half, w) == doctest::Approx(0.5 / (1.0 - 0.5 * r)));
  }
  CHECK(objective_value(EquilibriumMoment::zero(g), DesignObjective{1.0, 2.0, 3.0}) == 0.0);
  // Finite grid: off-diagonal 4/9 plus the diagonal excess weighted by 1/n.
  for (std::size_t n : {10, 100, 1000}) {
    const double v = objective_value(symmetric_moment(0.5, 0.5, uniform_grid(n)).moment, DesignObjective{1.0, 0.0, 0.0});
    CHECK(v == doctest::Approx(4.0 / 9.0 + (4.0 / 9.0) / static_cast<double>(n)).epsilon(1e-13));
  }
  const DesignObjective ab = DesignObjective::from_alpha_beta(0.7, 0.3);
  CHECK(ab.alpha() == doctest::Approx(0.7));
  CHECK(ab.beta(0.5) == doctest::Approx(0.3));
}

TEST_CASE("canonical signals reproduce their moment") {
  const MeasureGrid g = uniform_grid(12);
  const BasicGame plain = BasicGame::common_state(kernels::constant(g, 0.5), 0.0, 1.0);
  const EquilibriumMoment tm = targeted_equilibrium_moment(leading_nodes(6), 0.5, g);
  LinearEquilibrium eq = solve_linear_equilibrium(plain, construct_canonical_signals(tm, plain));
  CHECK((eq.induced_action_cov.values() - tm.xi().values()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((eq.induced_action_state_cov.values() - tm.zeta().values()).cwiseAbs().maxCoeff() <= 1e-10);
  const LinearEquilibrium targeted = solve_linear_equilibrium(plain, GaussianInfo::targeted(plain, leading_nodes(6)));
  CHECK((targeted.induced_action_cov.values() - tm.xi().values()).cwiseAbs().maxCoeff() <= 1e-10);

  const BasicGame loo = BasicGame::common_state(kernels::leave_one_out(g, 0.5), 0.0, 1.0);
  const EquilibriumMoment sm = symmetric_moment(0.5, 0.5, g).moment;
  eq = solve_linear_equilibrium(loo, construct_canonical_signals(sm, loo));
  CHECK((eq.induced_action_cov.values() - sm.xi().values()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((eq.stacked_loadings().array() - 1.0).abs().maxCoeff() <= 1e-10);

  const BasicGame shifted = BasicGame::common_state(kernels::constant(g, 0.5), 1.0, 1.0);
  eq = solve_linear_equilibrium(shifted, construct_canonical_signals(EquilibriumMoment::zero(g), shifted));
  CHECK((eq.intercepts.values() - solve_mean(shifted).values()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(eq.induced_action_cov.values().cwiseAbs().maxCoeff() <= 1e-12);

  const EquilibriumMoment broken(kernels::constant(g, 0.0), GridFunction::constant(g, 1.0), 1.0);
  CHECK_THROWS_AS(construct_canonical_signals(broken, plain), InfeasibleMoment);
  const BasicGame other_var = BasicGame::common_state(kernels::constant(g, 0.5), 0.0, 2.0);
  CHECK_THROWS_AS(construct_canonical_signals(tm, other_var), PreconditionViolation);
}

TEST_CASE("necessity: solved equilibria are feasible moments") {
  auto gen = kgtest::rng(21);
  for (int i = 0; i < 25; ++i) {
    const MeasureGrid g = kgtest::random_grid(gen, 4 + static_cast<std::size_t>(i));
    const double r = kgtest::uniform(gen, -2.5, 0.9);
    const BasicGame game = BasicGame::common_state(kernels::constant(g, r), 0.3, kgtest::uniform(gen, 0.5, 2.0));
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd noise = kgtest::normal(gen, n, n);
    noise = (noise * noise.transpose()).eval();
    noise.diagonal().array() += 0.1;
    const GaussianInfo info = GaussianInfo::linear(game, std::vector<std::size_t>(g.size(), 1),
                                                   kgtest::normal(gen, n, n), Eigen::VectorXd::Zero(n), noise);
    const EquilibriumMoment m = moment_of(solve_linear_equilibrium(game, info), game);
    CHECK(check_obedience(m, game.payoff()) <= default_obedience_tol(m));
    CHECK(check_positivity(m));
    CHECK(bounds_check(m, r).pass);
  }
}
