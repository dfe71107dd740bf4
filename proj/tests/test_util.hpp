#pragma once

#include "kg/game.hpp"
#include "kg/kernel.hpp"
#include "kg/measure_grid.hpp"
#include "kg/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace kgtest {

inline std::mt19937_64 rng(std::uint64_t stream) {
  std::seed_seq seq{std::uint64_t{777}, stream};
  return std::mt19937_64(seq);
}

inline Eigen::MatrixXd normal(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(g);
  return m;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline kg::MeasureGrid random_grid(std::mt19937_64& g, std::size_t n) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = uniform(g, 0.2, 1.0);
  return kg::MeasureGrid::normalized(m);
}

// Payoff kernel whose numerical range sup equals `sup` (> 0 when the raw draw allows).
inline kg::Kernel scaled_kernel(std::mt19937_64& g, const kg::MeasureGrid& grid, double sup, bool symmetric) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd m = normal(g, n, n);
  if (symmetric) m = (0.5 * (m + m.transpose())).eval();
  const double s = kg::numerical_range_bounds(kg::Kernel(grid, m)).sup;
  return kg::Kernel(grid, m * (sup / s));
}

inline kg::Kernel psd_cov(std::mt19937_64& g, const kg::MeasureGrid& grid, Eigen::Index rank) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const Eigen::MatrixXd b = normal(g, n, rank);
  Eigen::MatrixXd c = b * b.transpose();
  c = (0.5 * (c + c.transpose())).eval();
  return kg::Kernel(grid, c, true);
}

// Game with a random (R1) payoff, random state law and random linear signals.
struct RandomSetup {
  kg::BasicGame game;
  kg::GaussianInfo info;
};

inline RandomSetup random_setup(std::mt19937_64& g, std::size_t n) {
  const kg::MeasureGrid grid = random_grid(g, n);
  const kg::Kernel payoff = scaled_kernel(g, grid, uniform(g, 0.1, 0.9), false);
  Eigen::MatrixXd c = psd_cov(g, grid, 2).values();
  c.diagonal().array() += 0.2;
  kg::BasicGame game(payoff, kg::GridFunction(grid, normal(g, static_cast<Eigen::Index>(n), 1).col(0)),
                     kg::Kernel(grid, c, true));
  const auto S = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd noise = normal(g, S, 2);
  noise = (noise * noise.transpose()).eval();
  noise.diagonal().array() += 0.5;
  kg::GaussianInfo info = kg::GaussianInfo::linear(game, std::vector<std::size_t>(n, 1), normal(g, S, S),
                                                   Eigen::VectorXd::Zero(S), noise);
  return {std::move(game), std::move(info)};
}

}  // namespace kgtest
