#include "aitsahalia/noise.hpp"

#include <cmath>
#include <random>
#include <string>

#include "aitsahalia/errors.hpp"

namespace aitsahalia {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr int kMaxLevel = 30;

}  // namespace

void validate(const GridConfig& cfg) {
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw PreconditionError("grid: T must be > 0");
  if (cfg.fine_level < 0 || cfg.fine_level > kMaxLevel) {
    throw PreconditionError("grid: fine_level must be in [0, " + std::to_string(kMaxLevel) + "]");
  }
  for (int level : cfg.coarse_levels) {
    if (level < 0 || level > cfg.fine_level) {
      throw PreconditionError("grid: coarse level " + std::to_string(level) +
                              " must be in [0, fine_level]");
    }
  }
}

double step_size(double T, int level) { return std::ldexp(T, -level); }

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path_index, std::uint64_t process) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ path_index);
  return splitmix64(s ^ (process * 0xd1b54a32d192ed03ULL));
}

int poisson_inverse(double mean, double u) {
  int k = 0;
  double p = std::exp(-mean);
  double cdf = p;
  while (u > cdf) {
    ++k;
    p *= mean / k;
    cdf += p;
    // cdf saturated below u through rounding
    if (p < 1e-300 && k > mean) break;
  }
  return k;
}

NoiseGrid generate(const GridConfig& cfg, double lambda, std::uint64_t seed,
                   std::uint64_t path_index) {
  validate(cfg);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw PreconditionError("noise: lambda must be >= 0");
  }
  NoiseGrid g;
  g.T = cfg.T;
  g.fine_level = cfg.fine_level;
  g.seed = seed;
  g.path_index = path_index;

  const Eigen::Index n = Eigen::Index(1) << cfg.fine_level;
  const double h = g.h_fine();
  g.dW.resize(n);
  g.dN.resize(n);

  std::mt19937_64 w_engine(stream_seed(seed, path_index, 0));
  std::normal_distribution<double> normal(0.0, std::sqrt(h));
  for (Eigen::Index i = 0; i < n; ++i) g.dW[i] = normal(w_engine);

  if (lambda == 0.0) {
    g.dN.setZero();
    return g;
  }
  std::mt19937_64 n_engine(stream_seed(seed, path_index, 1));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double mean = lambda * h;
  for (Eigen::Index i = 0; i < n; ++i) g.dN[i] = poisson_inverse(mean, uniform(n_engine));
  return g;
}

CoarseIncrements coarsen(const NoiseGrid& g, int level) {
  if (level < 0 || level > g.fine_level) {
    throw PreconditionError("coarsen: level " + std::to_string(level) +
                            " must be in [0, fine_level=" + std::to_string(g.fine_level) + "]");
  }
  if (level == g.fine_level) return {g.dW, g.dN};

  const Eigen::Index block = Eigen::Index(1) << (g.fine_level - level);
  const Eigen::Index n = Eigen::Index(1) << level;
  CoarseIncrements out{Eigen::VectorXd(n), Eigen::VectorXi(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    double w = 0.0;
    int c = 0;
    for (Eigen::Index i = k * block; i < (k + 1) * block; ++i) {
      w += g.dW[i];
      c += g.dN[i];
    }
    out.dW[k] = w;
    out.dN[k] = c;
  }
  return out;
}

}  // namespace aitsahalia
