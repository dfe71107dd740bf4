#include "kg/measure_grid.hpp"

#include "kg/errors.hpp"

#include <cmath>
#include <string>

namespace kg {

MeasureGrid::MeasureGrid(Eigen::VectorXd weights, std::optional<Eigen::VectorXd> coords) {
  if (weights.size() < 1) throw InvalidArgument("MeasureGrid: at least one node required");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights(i)) || weights(i) <= 0.0)
      throw InvalidArgument("MeasureGrid: weight " + std::to_string(i) + " is not strictly positive");
  }
  double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidArgument("MeasureGrid: weights sum to " + std::to_string(total) + ", expected 1");
  if (coords && coords->size() != weights.size())
    throw InvalidArgument("MeasureGrid: coords and weights differ in length");
  if (coords && !coords->allFinite()) throw InvalidArgument("MeasureGrid: non-finite coordinate");
  data_ = std::make_shared<const Data>(Data{std::move(weights), std::move(coords)});
}

MeasureGrid MeasureGrid::normalized(const Eigen::VectorXd& masses,
                                    std::optional<Eigen::VectorXd> coords) {
  if (masses.size() < 1) throw InvalidArgument("MeasureGrid: at least one node required");
  if ((masses.array() <= 0.0).any() || !masses.allFinite())
    throw InvalidArgument("MeasureGrid: masses must be strictly positive");
  Eigen::VectorXd w = masses / masses.sum();
  // Absorb the last rounding error into the largest entry so the sum is 1 to the ulp.
  Eigen::Index imax;
  w.maxCoeff(&imax);
  w(imax) += 1.0 - w.sum();
  return MeasureGrid(std::move(w), std::move(coords));
}

Eigen::VectorXd MeasureGrid::coords() const {
  if (data_->coords) return *data_->coords;
  return Eigen::VectorXd::LinSpaced(data_->weights.size(), 0.0,
                                    static_cast<double>(data_->weights.size() - 1));
}

bool MeasureGrid::same_as(const MeasureGrid& other) const {
  if (data_ == other.data_) return true;
  if (size() != other.size()) return false;
  if (data_->weights != other.data_->weights) return false;
  if (data_->coords.has_value() != other.data_->coords.has_value()) return false;
  return !data_->coords || *data_->coords == *other.data_->coords;
}

MeasureGrid uniform_grid(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform_grid: n must be positive");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd coords(m);
  for (Eigen::Index i = 0; i < m; ++i) coords(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return MeasureGrid(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(n)), std::move(coords));
}

GridFunction::GridFunction(MeasureGrid grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size())
    throw InvalidArgument("GridFunction: value count does not match node count");
  if (!values_.allFinite()) throw InvalidArgument("GridFunction: non-finite value");
}

GridFunction GridFunction::constant(const MeasureGrid& grid, double c) {
  return GridFunction(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), c));
}

void require_same_grid(const MeasureGrid& a, const MeasureGrid& b, const char* what) {
  if (!a.same_as(b)) throw InvalidArgument(std::string(what) + ": grid mismatch");
}

double integrate(const MeasureGrid& grid, const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != grid.size())
    throw InvalidArgument("integrate: value count does not match node count");
  return grid.weights().dot(values);
}

double integrate(const GridFunction& f) { return integrate(f.grid(), f.values()); }

double inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  return (f.grid().weights().array() * f.values().array() * g.values().array()).sum();
}

double norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

}  // namespace kg
