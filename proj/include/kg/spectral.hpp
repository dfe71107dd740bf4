#pragma once

#include "kg/kernel.hpp"
#include "kg/measure_grid.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

namespace kg {

/// Spectral summary of the nu-weighted integral operator of a kernel.
struct SpectralReport {
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  double numerical_range_inf = 0.0;
  double numerical_range_sup = 0.0;
  double operator_norm_bound = 0.0;  // ||K|| in L2(nu x nu)
  double diag_sup = 0.0;             // max_i |K(t_i, t_i)|
  bool r1_holds = false;
  bool r2_holds = false;
};

struct NumericalRange {
  double inf;
  double sup;
};

/// A = K W, so (A phi)_i = sum_j K(t_i, t_j) w_j phi_j discretizes the integral operator.
Eigen::MatrixXd operator_matrix(const Kernel& k);

/// W^{1/2} K W^{1/2}; similar to K W, symmetric when K is.
Eigen::MatrixXd symmetrized_operator(const Kernel& k);

/// Operator eigenvalues, sorted by descending real part. Undirected kernels go
/// through the symmetric solver; the rest through the general one.
std::vector<std::complex<double>> eigenvalues(const Kernel& k);

/// Extreme real Rayleigh quotients <phi, K phi> / ||phi||^2 over L2(nu).
NumericalRange numerical_range_bounds(const Kernel& k);

/// Rayleigh quotient of a particular function under both normalisations
/// (dividing by ||phi||^2 and by ||phi||).
struct RayleighQuotient {
  double by_norm_squared;
  double by_norm;
};
RayleighQuotient rayleigh_quotient(const Kernel& k, const GridFunction& phi);

/// Operator norm on L2(nu): largest singular value of the symmetrized operator.
double operator_norm(const Kernel& k);

/// Hilbert-Schmidt norm ||K||_{L2(nu x nu)}; bounds the operator norm.
double l2_norm(const Kernel& k);
/// max_i |K(t_i, t_i)|.
double diag_sup(const Kernel& k);

/// Default cutoff below which an eigenvalue counts as real.
inline bool is_real_eigenvalue(std::complex<double> z) {
  return std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z));
}

/// Rounding guard for the strict inequalities below: a value within 1e-12 of 1
/// counts as reaching 1.
inline constexpr double kUnitGuard = 1e-12;

/// Numerical range contained in (-inf, 1 - margin).
bool check_r1(const Kernel& k, double margin = 0.0);
/// Every real eigenvalue below 1.
bool check_r2(const Kernel& k);

SpectralReport spectral_report(const Kernel& k);

/// Default PSD tolerance: 1e-8 * max(1, max diagonal).
double default_psd_tol(const Kernel& k);

/// Smallest eigenvalue of the raw (unweighted) value matrix is >= -tol.
/// Throws PreconditionViolation for directed kernels.
bool check_psd(const Kernel& k, std::optional<double> tol = std::nullopt);
bool is_psd_matrix(const Eigen::MatrixXd& m, double tol);

/// max over node pairs of K(s,t) - sqrt(K(s,s) K(t,t)).
double cauchy_schwarz_audit(const Kernel& k);

struct HadamardBound {
  double max_real_eig;  // -inf when the product operator has no real eigenvalue
  double bound;         // max_i K(t_i, t_i)
  bool holds;
};

/// Largest real eigenvalue of the operator with kernel K(s,t) R(s,t), against
/// max diagonal of K. Requires K undirected PSD and R satisfying (R1); violations
/// raise PreconditionViolation.
HadamardBound hadamard_eigen_bound(const Kernel& k, const Kernel& r);

struct RealEigenpair {
  double value;
  GridFunction vector;  // unit L2(nu) norm
};

/// Largest real operator eigenvalue with its eigenvector, if any real eigenvalue exists.
std::optional<RealEigenpair> leading_real_eigenpair(const Kernel& k);

}  // namespace kg
