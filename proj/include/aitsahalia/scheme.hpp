#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aitsahalia/model.hpp"
#include "aitsahalia/noise.hpp"
#include "aitsahalia/rootfind.hpp"

namespace aitsahalia {

enum class SchemeKind { BEM, EM };

const char* scheme_name(SchemeKind kind);

/// Explicit paths are absorbed once |Y| exceeds this.
inline constexpr double kDivergenceThreshold = 1e10;

struct PathResult {
  double terminal = 0.0;
  bool positive = true;
  std::optional<int> first_negative_step;  // 1-based step index n with Y_n <= 0
  bool absorbed = false;
  bool diverged = false;
  std::optional<std::vector<double>> trajectory;  // Y_0, ..., Y_N
};

/// Drift-implicit step: the positive root of
///   Y = y_prev + h mu(Y) + b y_prev^theta dW + phi(y_prev) dN.
double bem_step(const Params& p, const Jump& j, double h, double y_prev, double dW, int dN,
                SolverTolerances tol = {});

/// Explicit step y_prev + h mu(y_prev) + b y_prev^theta dW + phi(y_prev) dN.
/// A non-positive y_prev is an absorbed state and is returned unchanged.
double em_step(const Params& p, const Jump& j, double h, double y_prev, double dW, int dN);

/// Runs the one-step map over the given increments starting from p.x0.
PathResult simulate_increments(const Params& p, const Jump& j, SchemeKind kind, double h,
                               std::span<const double> dW, std::span<const int> dN,
                               bool keep_trajectory);

/// Runs the scheme at grid level `level` on the coarsened increments of g.
PathResult simulate_path(const Params& p, const Jump& j, SchemeKind kind, const NoiseGrid& g,
                         int level, bool keep_trajectory);

}  // namespace aitsahalia
