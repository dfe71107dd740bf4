#include "kg/errors.hpp"
#include "kg/game.hpp"
#include "kg/montecarlo.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>

using namespace kg;

TEST_CASE("Gaussian sampling") {
  const ProcessSample id = sample_gaussian(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4), 100000, 1);
  const Eigen::MatrixXd centred = id.draws.rowwise() - id.draws.colwise().mean();
  const Eigen::MatrixXd emp = centred.transpose() * centred / 99999.0;
  CHECK((emp - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.02);

  const Eigen::Vector3d mu(1.0, -2.0, 0.5);
  const ProcessSample zero = sample_gaussian(mu, Eigen::MatrixXd::Zero(3, 3), 100, 2);
  CHECK((zero.draws.rowwise() - mu.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::Vector3d z(1.0, 2.0, -1.0);
  const ProcessSample rank1 = sample_gaussian(Eigen::VectorXd::Zero(3), z * z.transpose(), 5000, 3);
  const Eigen::VectorXd a = rank1.draws.col(0), b = rank1.draws.col(2);
  const double corr = a.dot(b) / (a.norm() * b.norm());
  CHECK(std::abs(corr) >= 0.999);

  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianSampler(Eigen::VectorXd::Zero(2), bad, 1), InvalidArgument);
}

TEST_CASE("sampling is reproducible and independent of the worker count") {
  auto gen = kgtest::rng(40);
  const Eigen::MatrixXd b = kgtest::normal(gen, 6, 3);
  const Eigen::MatrixXd cov = b * b.transpose();
  const ProcessSample s1 = sample_gaussian(Eigen::VectorXd::Zero(6), cov, 20000, 42);
  setenv("KG_THREADS", "1", 1);
  const ProcessSample s2 = sample_gaussian(Eigen::VectorXd::Zero(6), cov, 20000, 42);
  unsetenv("KG_THREADS");
  CHECK(s1.draws == s2.draws);
  const ProcessSample s3 = sample_gaussian(Eigen::VectorXd::Zero(6), cov, 20000, 43);
  CHECK_FALSE(s1.draws == s3.draws);
  CHECK(s1.generator_id == std::string(kGeneratorId));
}

TEST_CASE("aggregate variance") {
  const MeasureGrid g = uniform_grid(8);
  const ProcessSample iid = sample_gaussian(Eigen::VectorXd::Zero(8), Eigen::MatrixXd::Identity(8, 8), 100000, 5);
  const StatCheck v = verify_aggregate_variance(iid, g);
  CHECK(v.target == doctest::Approx(1.0 / 8.0));
  CHECK(v.pass);
  const ProcessSample common = sample_gaussian(Eigen::VectorXd::Zero(8), 2.0 * Eigen::MatrixXd::Ones(8, 8), 100000, 6);
  const StatCheck c = verify_aggregate_variance(common, g);
  CHECK(c.target == doctest::Approx(2.0));
  CHECK(c.pass);
  CHECK(verify_unconditional_fubini(common, g).pass);
}

TEST_CASE("example volatility and dispersion") {
  const BmSolution sol = bm_example_equilibrium(0.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.0);
  CHECK(std::abs(sol.alpha0) <= 1e-15);
  CHECK(sol.alpha_x == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(sol.alpha_y == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(sol.volatility == doctest::Approx(0.52).epsilon(1e-14));
  CHECK(sol.dispersion == doctest::Approx(0.04).epsilon(1e-14));

  const BmSolution flat = bm_example_equilibrium(0.0, 1.0, 1.0, 1.0, 0.5, 0.0, 0.7);
  CHECK(flat.alpha_x == 0.0);
  CHECK(flat.alpha_y == 0.0);
  CHECK(flat.alpha0 == doctest::Approx(1.4));

  // Uninformative private signals leave the public-signal equilibrium: a = (s/2)/(1-r) y.
  const BmSolution pub = bm_example_equilibrium(0.0, 1.0, 1e6, 1.0, 0.5, 0.5, 0.0);
  CHECK(std::abs(pub.alpha_x) <= 1e-6);
  CHECK(std::abs(pub.alpha_y - 0.5) <= 1e-5);

  // Monte Carlo: the equilibrium action process has aggregate variance V + D / n.
  const MeasureGrid g = uniform_grid(10);
  const BasicGame game = bm_game(g, 0.0, 1.0, 0.5, 0.5, 0.0);
  const GaussianInfo info = bm_info(game, 0.0, 1.0, 1.0, 1.0, 0.5);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
  const JointLaw law = profile_joint_law(eq, game, info);
  const ProcessSample s = sample_gaussian(law.mean, law.cov, 100000, 7, law.state_dim);
  const StatCheck agg = verify_aggregate_variance(s, g);
  CHECK(agg.target == doctest::Approx(0.52 + 0.04 / 10.0).epsilon(1e-12));
  CHECK(agg.pass);
}

TEST_CASE("conditional and covariance identities") {
  const MeasureGrid g = uniform_grid(5);
  const ProcessSample common = sample_gaussian(Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Ones(5, 5), 1000, 8);
  CHECK(verify_conditional_fubini(common, g, {2}).max_discrepancy <= 1e-12);
  const ProcessSample iid = sample_gaussian(Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5), 1000, 9);
  CHECK(verify_conditional_fubini(iid, g, {0}).pass);

  auto gen = kgtest::rng(41);
  const Eigen::MatrixXd b = kgtest::normal(gen, 7, 7);
  const Eigen::MatrixXd cov = b * b.transpose();
  CHECK(covariance_exchange_residual(cov, 2, g, kgtest::normal(gen, 7, 1).col(0)) <= 1e-12);

  const MeasureGrid bg = uniform_grid(15);
  const BasicGame game = bm_game(bg, 0.0, 1.0, 0.5, 0.5, 0.0);
  const GaussianInfo info = bm_info(game, 0.0, 1.0, 1.0, 1.0, 0.5);
  const LinearEquilibrium eq = solve_linear_equilibrium(game, info);
  const JointLaw law = profile_joint_law(eq, game, info);
  const ProcessSample s = sample_gaussian(law.mean, law.cov, 5000, 10, law.state_dim);
  // Conditioning on x_0 and the public signal y.
  CHECK(verify_conditional_fubini(s, bg, {15, 16}).max_discrepancy <= 1e-9);
}

TEST_CASE("best-response audit") {
  auto gen = kgtest::rng(42);
  const auto setup = kgtest::random_setup(gen, 5);
  const LinearEquilibrium eq = solve_linear_equilibrium(setup.game, setup.info);
  const BestResponseAudit ok = best_response_audit(eq, setup.game, setup.info, 100000, 11);
  CHECK(ok.pass);
  CHECK(ok.coefficient_residual <= 1e-10);

  auto loadings = eq.loadings;
  loadings[2](0) += 0.05;
  const LinearEquilibrium bent = make_profile(setup.game, setup.info, eq.intercepts.values(), loadings);
  const BestResponseAudit bad = best_response_audit(bent, setup.game, setup.info, 100000, 11);
  CHECK_FALSE(bad.pass);
  CHECK(std::find(bad.failing_nodes.begin(), bad.failing_nodes.end(), 2u) != bad.failing_nodes.end());

  const BasicGame plain = BasicGame::common_state(kernels::constant(uniform_grid(4), 0.5), 1.0, 1.0);
  const GaussianInfo none = GaussianInfo::no_info(plain);
  const BestResponseAudit zero = best_response_audit(solve_linear_equilibrium(plain, none), plain, none, 10000, 12);
  CHECK(zero.pass);
  CHECK(zero.coefficient_residual == 0.0);
}

TEST_CASE("duplicate equilibria when an eigenvalue reaches one") {
  const MeasureGrid two = uniform_grid(2);
  Eigen::Matrix2d swap;
  swap << 0.0, 2.0, 2.0, 0.0;
  const DuplicateReport d = duplicate_equilibria(BasicGame::common_state(Kernel(two, swap), 0.0, 1.0), 100000, 13);
  CHECK(d.lambda == doctest::Approx(1.0));
  CHECK(d.pass);
  CHECK(d.distance > 0.0);
  // Eigenvector (1, 1): the added component is common to both nodes.
  CHECK(d.phi[0] == doctest::Approx(d.phi[1]));
  const DuplicateReport d2 = duplicate_equilibria(BasicGame::common_state(Kernel(two, swap), 0.0, 1.0), 100000, 13, 3.0);
  CHECK(d2.distance == doctest::Approx(3.0 * d.distance));

  const DuplicateReport c = duplicate_equilibria(BasicGame::common_state(kernels::constant(uniform_grid(5), 2.0), 0.0, 1.0),
                                                 100000, 14);
  CHECK(c.lambda == doctest::Approx(2.0));
  CHECK(c.pass);

  CHECK_THROWS_AS(duplicate_equilibria(BasicGame::common_state(kernels::constant(two, 0.5), 0.0, 1.0), 1000, 15),
                  NoRealEigenvalueAtLeastOne);
}
