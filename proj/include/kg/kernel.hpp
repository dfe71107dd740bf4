#pragma once

#include "kg/measure_grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace kg {

/// Bivariate kernel K(t_i, t_j) sampled on a grid. Used for payoff structures,
/// covariance kernels and correlation kernels alike.
///
/// The `undirected` flag, when set, guarantees exact symmetry of the values.
class Kernel {
 public:
  /// Symmetry is detected exactly from the values.
  Kernel(MeasureGrid grid, Eigen::MatrixXd values);
  /// Explicit flag; throws InvalidArgument if `undirected` is claimed for a
  /// non-symmetric matrix.
  Kernel(MeasureGrid grid, Eigen::MatrixXd values, bool undirected);

  const MeasureGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  std::size_t size() const { return grid_.size(); }
  bool undirected() const { return undirected_; }

  /// Entrywise (Hadamard) product; undirected iff both factors are.
  Kernel hadamard(const Kernel& other) const;
  Kernel operator+(const Kernel& other) const;
  Kernel scaled(double c) const;

 private:
  MeasureGrid grid_;
  Eigen::MatrixXd values_;
  bool undirected_;
};

namespace kernels {

/// K(s,t) = r.
Kernel constant(const MeasureGrid& grid, double r);
/// K(s,t) = r for s != t and 0 on the diagonal, rescaled by 1/(1 - w_s) so that
/// every row aggregates to r over the other nodes. This is the finite-population
/// form of a homogeneous interaction in which an agent's own action is not part
/// of its aggregate.
Kernel leave_one_out(const MeasureGrid& grid, double r);
/// K(s,t) = r * 1{s < t} (by node order).
Kernel unidirectional(const MeasureGrid& grid, double r);
/// K(s,t) = r q(s) q(t).
Kernel separable(const MeasureGrid& grid, double r, const Eigen::VectorXd& q);
/// K(s,t) = rbar * 1{(s,t) in G}; each undirected edge is entered both ways.
Kernel graph(const MeasureGrid& grid, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
             double rbar);
/// K(s,t) = 1{s = t}.
Kernel identity(const MeasureGrid& grid);
/// K(s,t) = on_diag if s = t, off_diag otherwise.
Kernel two_level(const MeasureGrid& grid, double on_diag, double off_diag);
/// K(s,t) = fn(coordinate s, coordinate t).
Kernel from_function(const MeasureGrid& grid, const std::function<double(double, double)>& fn);

}  // namespace kernels

}  // namespace kg
