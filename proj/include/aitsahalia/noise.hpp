#pragma once

// Brownian and Poisson increments on the finest dyadic grid of [0, T].
// Coarser grids are obtained by summing fine increments, so every stepsize
// of an experiment is driven by the same sample path.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace aitsahalia {

struct GridConfig {
  double T = 1.0;
  int fine_level = 0;
  std::vector<int> coarse_levels;

  bool operator==(const GridConfig&) const = default;
};

void validate(const GridConfig& cfg);

/// Stepsize T * 2^-level.
double step_size(double T, int level);

struct NoiseGrid {
  double T = 1.0;
  int fine_level = 0;
  Eigen::VectorXd dW;  // N(0, h_fine)
  Eigen::VectorXi dN;  // Poisson(lambda h_fine)
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  double h_fine() const { return step_size(T, fine_level); }
  Eigen::Index size() const { return dW.size(); }
};

struct CoarseIncrements {
  Eigen::VectorXd dW;
  Eigen::VectorXi dN;
};

/// Independent substream for (seed, path_index, process). Process 0 drives
/// the Brownian motion, process 1 the Poisson counts.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path_index, std::uint64_t process);

NoiseGrid generate(const GridConfig& cfg, double lambda, std::uint64_t seed,
                   std::uint64_t path_index);

/// Sums blocks of 2^(fine_level - level) fine increments, each block
/// accumulated left to right.
CoarseIncrements coarsen(const NoiseGrid& g, int level);

/// Poisson(mean) draw by sequential-search inversion of the CDF at u in [0, 1).
int poisson_inverse(double mean, double u);

}  // namespace aitsahalia
