#include "kg/spectral.hpp"

#include "kg/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kg {

namespace {

Eigen::VectorXd sqrt_weights(const Kernel& k) { return k.grid().weights().array().sqrt(); }

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("symmetric eigensolver did not converge");
  return es.eigenvalues();
}

}  // namespace

Eigen::MatrixXd operator_matrix(const Kernel& k) {
  return k.values() * k.grid().weights().asDiagonal();
}

Eigen::MatrixXd symmetrized_operator(const Kernel& k) {
  const Eigen::VectorXd s = sqrt_weights(k);
  return s.asDiagonal() * k.values() * s.asDiagonal();
}

std::vector<std::complex<double>> eigenvalues(const Kernel& k) {
  std::vector<std::complex<double>> out;
  if (k.undirected()) {
    Eigen::MatrixXd s = symmetrized_operator(k);
    const Eigen::VectorXd ev = symmetric_eigenvalues(s);
    out.reserve(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.emplace_back(ev(i), 0.0);
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(operator_matrix(k), false);
    if (es.info() != Eigen::Success) throw EigenSolverFailure("general eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    out.reserve(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(ev(i));
  }
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return out;
}

NumericalRange numerical_range_bounds(const Kernel& k) {
  Eigen::MatrixXd s = symmetrized_operator(k);
  Eigen::MatrixXd h = 0.5 * (s + s.transpose());
  const Eigen::VectorXd ev = symmetric_eigenvalues(h);
  return {ev.minCoeff(), ev.maxCoeff()};
}

RayleighQuotient rayleigh_quotient(const Kernel& k, const GridFunction& phi) {
  require_same_grid(k.grid(), phi.grid(), "rayleigh_quotient");
  const Eigen::VectorXd kphi = operator_matrix(k) * phi.values();
  const double num = integrate(k.grid(), phi.values().cwiseProduct(kphi));
  const double sq = inner_product(phi, phi);
  if (sq <= 0.0) throw InvalidArgument("rayleigh_quotient: phi has zero norm");
  return {num / sq, num / std::sqrt(sq)};
}

double operator_norm(const Kernel& k) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(symmetrized_operator(k));
  return svd.singularValues()(0);
}

double l2_norm(const Kernel& k) {
  const Eigen::VectorXd& w = k.grid().weights();
  return std::sqrt((w.asDiagonal() * k.values().cwiseAbs2() * w.asDiagonal()).sum());
}

double diag_sup(const Kernel& k) { return k.values().diagonal().cwiseAbs().maxCoeff(); }

bool check_r1(const Kernel& k, double margin) {
  return numerical_range_bounds(k).sup < 1.0 - margin - kUnitGuard;
}

bool check_r2(const Kernel& k) {
  for (auto z : eigenvalues(k))
    if (is_real_eigenvalue(z) && z.real() >= 1.0 - kUnitGuard) return false;
  return true;
}

SpectralReport spectral_report(const Kernel& k) {
  SpectralReport rep;
  rep.eigenvalues = eigenvalues(k);
  const NumericalRange nr = numerical_range_bounds(k);
  rep.numerical_range_inf = nr.inf;
  rep.numerical_range_sup = nr.sup;
  rep.operator_norm_bound = l2_norm(k);
  rep.diag_sup = diag_sup(k);
  rep.r1_holds = nr.sup < 1.0 - kUnitGuard;
  rep.r2_holds = std::none_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                              [](auto z) { return is_real_eigenvalue(z) && z.real() >= 1.0 - kUnitGuard; });
  return rep;
}

double default_psd_tol(const Kernel& k) {
  return 1e-8 * std::max(1.0, k.values().diagonal().maxCoeff());
}

bool is_psd_matrix(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return symmetric_eigenvalues(sym).minCoeff() >= -tol;
}

bool check_psd(const Kernel& k, std::optional<double> tol) {
  if (!k.undirected()) throw PreconditionViolation("check_psd: kernel is directed");
  return symmetric_eigenvalues(k.values()).minCoeff() >= -tol.value_or(default_psd_tol(k));
}

double cauchy_schwarz_audit(const Kernel& k) {
  const Eigen::MatrixXd& v = k.values();
  const Eigen::VectorXd d = v.diagonal().cwiseMax(0.0).cwiseSqrt();
  return (v - d * d.transpose()).maxCoeff();
}

HadamardBound hadamard_eigen_bound(const Kernel& k, const Kernel& r) {
  require_same_grid(k.grid(), r.grid(), "hadamard_eigen_bound");
  if (!k.undirected() || !check_psd(k)) throw PreconditionViolation("hadamard_eigen_bound: K is not PSD");
  if (!check_r1(r)) throw PreconditionViolation("hadamard_eigen_bound: R violates (R1)");

  HadamardBound out;
  out.bound = k.values().diagonal().maxCoeff();
  out.max_real_eig = -std::numeric_limits<double>::infinity();
  for (auto z : eigenvalues(k.hadamard(r)))
    if (is_real_eigenvalue(z)) out.max_real_eig = std::max(out.max_real_eig, z.real());

  // Strict inequality once K has a positive eigenvalue; otherwise K o R vanishes.
  const bool k_positive = eigenvalues(k).front().real() > default_psd_tol(k);
  out.holds = k_positive ? out.max_real_eig < out.bound : out.max_real_eig <= out.bound + default_psd_tol(k);
  return out;
}

std::optional<RealEigenpair> leading_real_eigenpair(const Kernel& k) {
  const auto ev = eigenvalues(k);
  auto it = std::find_if(ev.begin(), ev.end(), [](auto z) { return is_real_eigenvalue(z); });
  if (it == ev.end()) return std::nullopt;
  const double lambda = it->real();
  const Eigen::Index n = static_cast<Eigen::Index>(k.size());

  Eigen::VectorXd phi;
  if (k.undirected()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized_operator(k));
    if (es.info() != Eigen::Success) throw EigenSolverFailure("symmetric eigensolver did not converge");
    phi = es.eigenvectors().col(n - 1).cwiseQuotient(sqrt_weights(k));
  } else {
    // Null vector of (A - lambda I): right singular vector of the smallest singular value.
    Eigen::MatrixXd shifted = operator_matrix(k) - lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
    phi = svd.matrixV().col(n - 1);
  }
  const double nrm = std::sqrt(k.grid().weights().dot(phi.cwiseAbs2()));
  phi /= nrm;
  Eigen::Index imax;
  phi.cwiseAbs().maxCoeff(&imax);
  if (phi(imax) < 0) phi = -phi;
  return RealEigenpair{lambda, GridFunction(k.grid(), std::move(phi))};
}

}  // namespace kg
