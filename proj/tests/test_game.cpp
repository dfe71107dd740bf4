#include "kg/errors.hpp"
#include "kg/game.hpp"
#include "kg/info_design.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <array>

using namespace kg;

namespace {

// Independent oracle for the symmetric example: iterate the coefficient map
// a = r E[a0 + ax x + ay y | x_i, y] + s E[theta | x_i, y] + k until it settles.
std::array<double, 3> matching_oracle(double mu, double vt, double vx, double vy, double r, double s, double k) {
  const double px = 1.0 / vx, py = 1.0 / vy, p0 = 1.0 / vt, tot = px + py + p0;
  double a0 = 0.0, ax = 0.0, ay = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const double load = r * ax + s;
    const double n0 = r * a0 + load * p0 * mu / tot + k;
    const double nx = load * px / tot;
    const double ny = load * py / tot + r * ay;
    const double step = std::abs(n0 - a0) + std::abs(nx - ax) + std::abs(ny - ay);
    a0 = n0, ax = nx, ay = ny;
    if (step < 1e-15) break;
  }
  return {a0, ax, ay};
}

}  // namespace

TEST_CASE("mean equation") {
  const MeasureGrid g = uniform_grid(12);
  const GridFunction phi = solve_mean(BasicGame::common_state(kernels::constant(g, 0.5), 1.0, 1.0));
  CHECK((phi.values().array() - 2.0).abs().maxCoeff() <= 1e-12);

  auto gen = kgtest::rng(10);
  const Kernel r = kgtest::scaled_kernel(gen, g, 0.8, false);
  CHECK(solve_mean(BasicGame::common_state(r, 0.0, 1.0)).values().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(solve_mean(BasicGame::common_state(kernels::constant(g, 1.0), 1.0, 1.0)), SingularMeanEquation);
}

TEST_CASE("game validation") {
  const MeasureGrid g = uniform_grid(3);
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(BasicGame(kernels::constant(g, 0.5), GridFunction::constant(g, 0.0), Kernel(g, bad, true)),
                  PreconditionViolation);
  CHECK_THROWS_AS(BasicGame::common_state(kernels::constant(g, 0.5), 0.0, -1.0), InvalidArgument);
  const BasicGame game = BasicGame::common_state(kernels::constant(g, 0.5), 0.0, 2.0);
  CHECK(game.has_common_state());
  CHECK(game.common_state_var() == 2.0);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(6, 6);
  asym(0, 5) = 0.3;
  CHECK_THROWS_AS(GaussianInfo(g, {1, 1, 1}, Eigen::VectorXd::Zero(3), asym), InvalidArgument);
}

TEST_CASE("symmetric example: matching coefficients") {
  const MeasureGrid g = uniform_grid(50);
  const BasicGame game = bm_game(g, 0.0, 1.0, 0.5, 0.5, 0.0);
  const GaussianInfo info = bm_info(game, 0.0, 1.0, 1.0, 1.0, 0.5);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
  const auto oracle = matching_oracle(0.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.0);
  CHECK(oracle[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(oracle[2] == doctest::Approx(0.4).epsilon(1e-12));
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(std::abs(eq.intercepts[t]) <= 1e-12);
    CHECK(std::abs(eq.loadings[t](0) - 0.2) <= 1e-12);
    CHECK(std::abs(eq.loadings[t](1) - 0.4) <= 1e-12);
  }
  // Var a_i = 0.2^2 (1 + 1) + 2 * 0.2 * 0.4 + 0.4^2 * 2 = 0.56.
  CHECK(eq.induced_action_cov(0, 0) == doctest::Approx(0.56).epsilon(1e-12));
  const MomentRestrictionReport mr = verify_moment_restrictions(eq, game, 1e-8);
  CHECK(mr.pass);
  CHECK(mr.max_residual <= 1e-8);
  CHECK(std::abs(symmetric_moment_identity(eq, 0.5)) <= 1e-8);

  // Nonzero mean and intercept shift against the oracle.
  const BasicGame shifted = bm_game(g, 1.5, 2.0, 0.3, 0.8, 0.25);
  const LinearEquilibrium eq2 = solve_linear_equilibrium(shifted, bm_info(shifted, 1.5, 2.0, 0.5, 3.0, 0.8));
  const auto o2 = matching_oracle(1.5, 2.0, 0.5, 3.0, 0.3, 0.8, 0.25);
  CHECK(eq2.intercepts[7] == doctest::Approx(o2[0]).epsilon(1e-10));
  CHECK(eq2.loadings[7](0) == doctest::Approx(o2[1]).epsilon(1e-10));
  CHECK(eq2.loadings[7](1) == doctest::Approx(o2[2]).epsilon(1e-10));
}

TEST_CASE("degenerate information structures") {
  const MeasureGrid g = uniform_grid(10);
  const BasicGame game = BasicGame::common_state(kernels::constant(g, 0.4), 1.0, 1.0);
  const LinearEquilibrium none = solve_linear_equilibrium(game, GaussianInfo::no_info(game));
  CHECK((none.intercepts.values() - solve_mean(game).values()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(none.induced_action_cov.values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(verify_moment_restrictions(none, game, 1e-12).max_residual <= 1e-12);
  CHECK(symmetric_moment_identity(none, 0.4) == 0.0);

  const BasicGame centred = BasicGame::common_state(kernels::constant(g, 0.4), 0.0, 1.0);
  const LinearEquilibrium full = solve_linear_equilibrium(centred, GaussianInfo::full_info(centred));
  for (std::size_t t = 0; t < 10; ++t) CHECK(full.loadings[t](0) == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
  CHECK(std::abs(symmetric_moment_identity(full, 0.4)) <= 1e-9);
}

TEST_CASE("perturbed loadings break the moment restrictions") {
  const MeasureGrid g = uniform_grid(20);
  const BasicGame game = bm_game(g, 0.0, 1.0, 0.5, 0.5, 0.0);
  const GaussianInfo info = bm_info(game, 0.0, 1.0, 1.0, 1.0, 0.5);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
  auto loadings = eq.loadings;
  for (auto& c : loadings) c(0) += 0.01;
  const LinearEquilibrium bent = make_profile(game, info, eq.intercepts.values(), loadings);
  const MomentRestrictionReport mr = verify_moment_restrictions(bent, game, 1e-8);
  CHECK_FALSE(mr.pass);
  CHECK(mr.max_residual > 1e-4);
  CHECK(loading_residuals(game, info, bent).maxCoeff() > 1e-3);
  CHECK(loading_residuals(game, info, eq).maxCoeff() <= 1e-12);
}

TEST_CASE("symmetric noisy disclosure satisfies the moment identity") {
  const MeasureGrid g = uniform_grid(40);
  const BasicGame game = BasicGame::common_state(kernels::leave_one_out(g, 0.5), 0.0, 1.0);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, symmetric_info(game, 0.5, 0.5));
  CHECK(eq.induced_action_cov(0, 1) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(eq.induced_action_cov(3, 3) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
  CHECK(eq.induced_action_state_cov[5] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(symmetric_moment_identity(eq, 0.5)) <= 1e-8);
}

TEST_CASE("uniqueness: direct and fixed-point solutions coincide") {
  auto gen = kgtest::rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto setup = kgtest::random_setup(gen, 3 + static_cast<std::size_t>(i));
    SolveOptions direct;
    direct.method = SolveOptions::Method::Direct;
    const LinearEquilibrium a = solve_linear_equilibrium(setup.game, setup.info, direct);
    SolveOptions it;
    it.method = SolveOptions::Method::Iterative;
    it.initial = 5.0 * kgtest::normal(gen, static_cast<Eigen::Index>(setup.info.total_signal_dim()), 1).col(0);
    const LinearEquilibrium b = solve_linear_equilibrium(setup.game, setup.info, it);
    CHECK((a.stacked_loadings() - b.stacked_loadings()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.intercepts.values() - b.intercepts.values()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(verify_moment_restrictions(a, setup.game, 1e-8).pass);
  }
}

TEST_CASE("iteration budget is enforced") {
  auto gen = kgtest::rng(12);
  const auto setup = kgtest::random_setup(gen, 6);
  SolveOptions it;
  it.method = SolveOptions::Method::Iterative;
  it.max_iter = 1;
  it.tol = 1e-15;
  CHECK_THROWS_AS(solve_linear_equilibrium(setup.game, setup.info, it), NoConvergence);
}
