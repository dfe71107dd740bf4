#include "kg/errors.hpp"
#include "kg/kernel.hpp"
#include "kg/spectral.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>

using namespace kg;

namespace {

std::vector<double> nonzero_eigenvalues(const Kernel& k, double tol = 1e-10) {
  std::vector<double> out;
  for (auto z : eigenvalues(k))
    if (std::abs(z) > tol) out.push_back(z.real());
  return out;
}

}  // namespace

TEST_CASE("operator matrix folds in the weights") {
  const MeasureGrid g = uniform_grid(5);
  CHECK((operator_matrix(kernels::constant(g, 0.7)).array() - 0.7 / 5).abs().maxCoeff() == 0.0);
  const Eigen::MatrixXd id = operator_matrix(kernels::identity(uniform_grid(4)));
  CHECK(id.isApprox(0.25 * Eigen::MatrixXd::Identity(4, 4)));

  // A q = q * sum w q^2 for a separable kernel; the midpoint sum is 1/3 - 1/(12 n^2).
  const MeasureGrid fine = uniform_grid(1000);
  const Eigen::VectorXd q = fine.coords();
  const Eigen::VectorXd aq = operator_matrix(kernels::separable(fine, 1.0, q)) * q;
  CHECK((aq - q / 3.0).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("kernel construction") {
  const MeasureGrid g = uniform_grid(3);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = 1.0;
  CHECK_FALSE(Kernel(g, m).undirected());
  CHECK_THROWS_AS(Kernel(g, m, true), InvalidArgument);
  CHECK_THROWS_AS(Kernel(uniform_grid(2), m), InvalidArgument);
  CHECK(kernels::constant(g, 2.0).undirected());
  const Kernel loo = kernels::leave_one_out(g, 0.6);
  CHECK(loo(0, 0) == 0.0);
  CHECK(loo(0, 1) == doctest::Approx(0.9));
  const Kernel edges = kernels::graph(g, {{0, 1}}, 0.4);
  CHECK(edges(1, 0) == 0.4);
  CHECK(edges(0, 2) == 0.0);
  CHECK(kernels::two_level(g, 1.0, 0.2).hadamard(kernels::constant(g, 2.0))(0, 1) == doctest::Approx(0.4));
}

TEST_CASE("eigenvalues of rank-one kernels") {
  const MeasureGrid g = uniform_grid(30);
  for (double r : {0.5, -1.3, 2.0}) {
    const auto nz = nonzero_eigenvalues(kernels::constant(g, r));
    REQUIRE(nz.size() == 1);
    CHECK(nz[0] == doctest::Approx(r).epsilon(1e-12));
  }
  const auto sep = nonzero_eigenvalues(kernels::separable(g, -2.0, Eigen::VectorXd::Ones(30)));
  REQUIRE(sep.size() == 1);
  CHECK(sep[0] == doctest::Approx(-2.0).epsilon(1e-12));
  const auto pair = leading_real_eigenpair(kernels::constant(g, 0.8));
  REQUIRE(pair.has_value());
  CHECK(pair->value == doctest::Approx(0.8));
  CHECK((pair->vector.values().array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("unidirectional kernel: vanishing spectrum, numerical range sup r(n-1)/(2n)") {
  for (std::size_t n : {100, 200, 400}) {
    const Kernel k = kernels::unidirectional(uniform_grid(n), 5.0);
    double top = 0.0;
    for (auto z : eigenvalues(k)) top = std::max(top, std::abs(z));
    CHECK(top <= 5.0 / static_cast<double>(n));
    const NumericalRange nr = numerical_range_bounds(k);
    const double expected = 5.0 * static_cast<double>(n - 1) / (2.0 * static_cast<double>(n));
    CHECK(nr.sup == doctest::Approx(expected).epsilon(1e-12));
    CHECK(nr.sup > 0.0);
    CHECK(nr.sup < 5.0);
    // The constant function attains the same quotient.
    const auto rq = rayleigh_quotient(k, GridFunction::constant(uniform_grid(n), 1.0));
    CHECK(rq.by_norm_squared == doctest::Approx(expected).epsilon(1e-12));
    CHECK(check_r2(k));
    CHECK_FALSE(check_r1(k));
  }
}

TEST_CASE("numerical range of constant and separable kernels") {
  const MeasureGrid g = uniform_grid(20);
  for (double r : {0.4, -0.7}) {
    const NumericalRange nr = numerical_range_bounds(kernels::constant(g, r));
    CHECK(nr.inf == doctest::Approx(std::min(r, 0.0)));
    CHECK(nr.sup == doctest::Approx(std::max(r, 0.0)));
  }
  auto gen = kgtest::rng(3);
  const Eigen::VectorXd q = kgtest::normal(gen, 20, 1).col(0);
  CHECK(numerical_range_bounds(kernels::separable(g, -1.5, q)).sup <= 1e-12);
}

TEST_CASE("conditions R1 and R2") {
  const MeasureGrid g = uniform_grid(10);
  CHECK(check_r1(kernels::constant(g, 0.5)));
  CHECK_FALSE(check_r1(kernels::constant(g, 1.0)));
  CHECK_FALSE(check_r2(kernels::constant(g, 2.0)));

  auto gen = kgtest::rng(4);
  Eigen::MatrixXd signs = kgtest::normal(gen, 10, 10).array().sign().matrix();
  CHECK(check_r1(Kernel(g, 0.99 * signs)));

  // Undirected kernels: R1 and R2 agree.
  for (int i = 0; i < 30; ++i) {
    const Kernel k = kgtest::scaled_kernel(gen, g, kgtest::uniform(gen, 0.2, 1.8), true);
    CHECK(check_r1(k) == check_r2(k));
  }
  const SpectralReport rep = spectral_report(kernels::constant(g, 0.5));
  CHECK(rep.r1_holds);
  CHECK(rep.r2_holds);
  CHECK(rep.diag_sup == 0.5);
}

TEST_CASE("containment chain and norm bounds") {
  auto gen = kgtest::rng(5);
  for (int i = 0; i < 20; ++i) {
    const MeasureGrid g = kgtest::random_grid(gen, 12);
    const Kernel k(g, kgtest::normal(gen, 12, 12));
    const NumericalRange nr = numerical_range_bounds(k);
    const double op = operator_norm(k);
    CHECK(op <= l2_norm(k) + 1e-12);
    CHECK(nr.sup <= op + 1e-12);
    CHECK(nr.inf >= -op - 1e-12);
    for (auto z : eigenvalues(k)) {
      CHECK(z.real() <= nr.sup + 1e-10);
      CHECK(z.real() >= nr.inf - 1e-10);
    }
  }
}

TEST_CASE("positive semidefiniteness") {
  const MeasureGrid g = uniform_grid(8);
  CHECK(check_psd(kernels::constant(g, 1.0)));
  for (double lambda : {1.0, 2.0, 5.0}) CHECK(check_psd(kernels::two_level(g, 1.0, 1.0 / lambda)));
  CHECK_FALSE(check_psd(kernels::two_level(g, 1.0, 2.0)));
  CHECK_THROWS_AS(check_psd(kernels::unidirectional(g, 1.0)), PreconditionViolation);

  CHECK(cauchy_schwarz_audit(kernels::constant(g, 1.0)) == 0.0);
  auto gen = kgtest::rng(6);
  for (int i = 0; i < 10; ++i) {
    const Kernel c = kgtest::psd_cov(gen, g, 3);
    CHECK(check_psd(c));
    CHECK(cauchy_schwarz_audit(c) <= 1e-10);
  }
}

TEST_CASE("Hadamard bound") {
  const MeasureGrid g = uniform_grid(6);
  const HadamardBound ones = hadamard_eigen_bound(kernels::constant(g, 1.0), kernels::constant(g, 0.5));
  CHECK(ones.max_real_eig == doctest::Approx(0.5));
  CHECK(ones.bound == 1.0);
  CHECK(ones.holds);

  auto gen = kgtest::rng(7);
  const MeasureGrid rg = kgtest::random_grid(gen, 6);
  const Kernel r = kgtest::scaled_kernel(gen, rg, 0.9, false);
  const HadamardBound diag = hadamard_eigen_bound(kernels::identity(rg), r);
  double expected = -HUGE_VAL;
  for (std::size_t i = 0; i < 6; ++i) expected = std::max(expected, rg.weight(i) * r(i, i));
  CHECK(diag.max_real_eig == doctest::Approx(expected).epsilon(1e-12));
  CHECK(diag.holds);

  // Two nodes, K = 1, R = [[0.5, 0.9], [0.9, 0.5]]: operator eigenvalues (0.5 +- 0.9)/2.
  const MeasureGrid two = uniform_grid(2);
  Eigen::Matrix2d rm;
  rm << 0.5, 0.9, 0.9, 0.5;
  REQUIRE(check_r1(Kernel(two, rm)));
  const HadamardBound hb = hadamard_eigen_bound(kernels::constant(two, 1.0), Kernel(two, rm));
  CHECK(hb.max_real_eig == doctest::Approx(0.7));
  CHECK(hb.holds);

  CHECK_THROWS_AS(hadamard_eigen_bound(kernels::two_level(two, 1.0, 2.0), Kernel(two, rm)), PreconditionViolation);
  CHECK_THROWS_AS(hadamard_eigen_bound(kernels::constant(two, 1.0), kernels::constant(two, 1.5)), PreconditionViolation);
}
