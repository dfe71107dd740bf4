#include "kg/kernel.hpp"

#include "kg/errors.hpp"

namespace kg {

namespace {

void check_shape(const MeasureGrid& grid, const Eigen::MatrixXd& values) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (values.rows() != n || values.cols() != n)
    throw InvalidArgument("Kernel: value matrix must be n x n for an n-node grid");
  if (!values.allFinite()) throw InvalidArgument("Kernel: non-finite entry");
}

}  // namespace

Kernel::Kernel(MeasureGrid grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  check_shape(grid_, values_);
  undirected_ = values_ == values_.transpose();
}

Kernel::Kernel(MeasureGrid grid, Eigen::MatrixXd values, bool undirected)
    : grid_(std::move(grid)), values_(std::move(values)), undirected_(undirected) {
  check_shape(grid_, values_);
  if (undirected_ && values_ != values_.transpose())
    throw InvalidArgument("Kernel: flagged undirected but values are not symmetric");
}

Kernel Kernel::hadamard(const Kernel& other) const {
  require_same_grid(grid_, other.grid_, "Kernel::hadamard");
  return Kernel(grid_, values_.cwiseProduct(other.values_), undirected_ && other.undirected_);
}

Kernel Kernel::operator+(const Kernel& other) const {
  require_same_grid(grid_, other.grid_, "Kernel::operator+");
  return Kernel(grid_, values_ + other.values_);
}

Kernel Kernel::scaled(double c) const { return Kernel(grid_, values_ * c, undirected_); }

namespace kernels {

namespace {
Eigen::Index dim(const MeasureGrid& grid) { return static_cast<Eigen::Index>(grid.size()); }
}  // namespace

Kernel constant(const MeasureGrid& grid, double r) {
  return Kernel(grid, Eigen::MatrixXd::Constant(dim(grid), dim(grid), r), true);
}

Kernel leave_one_out(const MeasureGrid& grid, double r) {
  const Eigen::Index n = dim(grid);
  if (n < 2) throw InvalidArgument("leave_one_out: needs at least two nodes");
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double row = r / (1.0 - grid.weights()(s));
    for (Eigen::Index t = 0; t < n; ++t) v(s, t) = s == t ? 0.0 : row;
  }
  return Kernel(grid, std::move(v));
}

Kernel unidirectional(const MeasureGrid& grid, double r) {
  const Eigen::Index n = dim(grid);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  v.triangularView<Eigen::StrictlyUpper>().setConstant(r);
  return Kernel(grid, std::move(v));
}

Kernel separable(const MeasureGrid& grid, double r, const Eigen::VectorXd& q) {
  if (q.size() != dim(grid)) throw InvalidArgument("separable: q has wrong length");
  Eigen::MatrixXd v = r * q * q.transpose();
  return Kernel(grid, std::move(v));
}

Kernel graph(const MeasureGrid& grid, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
             double rbar) {
  const Eigen::Index n = dim(grid);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a >= grid.size() || b >= grid.size()) throw InvalidArgument("graph: edge endpoint out of range");
    v(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rbar;
    v(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = rbar;
  }
  return Kernel(grid, std::move(v), true);
}

Kernel identity(const MeasureGrid& grid) {
  return Kernel(grid, Eigen::MatrixXd::Identity(dim(grid), dim(grid)), true);
}

Kernel two_level(const MeasureGrid& grid, double on_diag, double off_diag) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(dim(grid), dim(grid), off_diag);
  v.diagonal().setConstant(on_diag);
  return Kernel(grid, std::move(v), true);
}

Kernel from_function(const MeasureGrid& grid, const std::function<double(double, double)>& fn) {
  const Eigen::VectorXd x = grid.coords();
  const Eigen::Index n = x.size();
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(i, j) = fn(x(i), x(j));
  return Kernel(grid, std::move(v));
}

}  // namespace kernels

}  // namespace kg
