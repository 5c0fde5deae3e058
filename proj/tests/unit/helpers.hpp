#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridplace/fixtures.hpp"
#include "gridplace/grid.hpp"

namespace testing {

inline double rel(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_rel(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), 1e-300);
}

// Random zero-sum shape with entries in [-1, 1].
inline Eigen::VectorXd balanced_shape(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = unit(rng);
  x.array() -= x.mean();
  return x / x.cwiseAbs().maxCoeff();
}

inline gridplace::SwingSystem swing_of(const gridplace::GridModel& grid) {
  return gridplace::linearize(grid, gridplace::solve_power_flow(grid));
}

inline gridplace::FixtureOptions jittered_ring(Eigen::Index n, std::uint64_t seed) {
  gridplace::FixtureOptions o;
  o.topology = gridplace::Topology::Ring;
  o.size = n;
  o.seed = seed;
  o.jitter = 1e-3;
  return o;
}

}  // namespace testing
