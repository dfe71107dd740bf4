#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

namespace kg {

/// Finite measure space (T, Sigma, nu) as a weighted grid of agent labels.
///
/// Nodes are indices 0..n-1, optionally carrying real coordinates. Weights are
/// strictly positive and sum to one, so every integral over T becomes a
/// weighted sum. Instances are immutable and cheap to copy (shared storage).
class MeasureGrid {
 public:
  /// Validates and stores. Throws InvalidArgument unless every weight is
  /// positive and finite and the total is 1 within 1e-12.
  explicit MeasureGrid(Eigen::VectorXd weights,
                       std::optional<Eigen::VectorXd> coords = std::nullopt);

  /// Rescales arbitrary positive masses to a probability measure.
  static MeasureGrid normalized(const Eigen::VectorXd& masses,
                                std::optional<Eigen::VectorXd> coords = std::nullopt);

  std::size_t size() const { return static_cast<std::size_t>(data_->weights.size()); }
  const Eigen::VectorXd& weights() const { return data_->weights; }
  double weight(std::size_t i) const { return data_->weights(static_cast<Eigen::Index>(i)); }
  bool has_coords() const { return data_->coords.has_value(); }
  /// Node coordinates; falls back to the node index when none were given.
  Eigen::VectorXd coords() const;

  /// Same storage or identical weights and coordinates.
  bool same_as(const MeasureGrid& other) const;

 private:
  struct Data {
    Eigen::VectorXd weights;
    std::optional<Eigen::VectorXd> coords;
  };
  std::shared_ptr<const Data> data_;
};

/// Midpoint rule on [0,1]: nodes (i + 0.5)/n with weight 1/n each.
MeasureGrid uniform_grid(std::size_t n);

/// A real function sampled at the grid nodes.
class GridFunction {
 public:
  GridFunction(MeasureGrid grid, Eigen::VectorXd values);

  static GridFunction constant(const MeasureGrid& grid, double c);
  /// f(t_i) = fn(coordinate of node i).
  template <typename Fn>
  static GridFunction from_coords(const MeasureGrid& grid, Fn&& fn) {
    Eigen::VectorXd x = grid.coords();
    Eigen::VectorXd v(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = fn(x(i));
    return GridFunction(grid, std::move(v));
  }

  const MeasureGrid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

 private:
  MeasureGrid grid_;
  Eigen::VectorXd values_;
};

/// Sum_i w_i f(t_i).
double integrate(const GridFunction& f);
/// Weighted sum of raw values; throws InvalidArgument on length mismatch.
double integrate(const MeasureGrid& grid, const Eigen::VectorXd& values);

/// <f, g> = Sum_i w_i f(t_i) g(t_i). Throws InvalidArgument when the grids differ.
double inner_product(const GridFunction& f, const GridFunction& g);
double norm(const GridFunction& f);

/// Throws InvalidArgument unless both grids describe the same measure.
void require_same_grid(const MeasureGrid& a, const MeasureGrid& b, const char* what);

}  // namespace kg
