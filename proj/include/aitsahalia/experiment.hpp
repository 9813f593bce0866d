#pragma once

// Monte Carlo harness: strong errors against a fine reference on the same
// noise, negative-path census, moment probes and the log-log rate fit.
//
// Path i always uses NoiseGrid(base_seed, i). Per-path work may run on any
// number of threads; reductions happen in path-index order, so results are
// bit-identical regardless of the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "aitsahalia/model.hpp"
#include "aitsahalia/noise.hpp"
#include "aitsahalia/scheme.hpp"

namespace aitsahalia {

enum class ErrorMode { Terminal, SupOverGrid };

struct ExperimentSpec {
  Params params = case1_params();
  Jump jump = Jump::linear_scale(-0.2);
  GridConfig grid{1.0, 11, {}};
  int num_paths = 2000;
  std::uint64_t base_seed = 20210301;
  SchemeKind scheme = SchemeKind::BEM;
  std::vector<int> levels_under_test{4, 5, 6, 7, 8};
  int reference_level = 11;

  ErrorMode error_mode = ErrorMode::Terminal;
  double q = kDefaultQ;
  int num_batches = 10;
  // Require every BEM stepsize to satisfy the convergence-rate bound
  // (1/(2L) or 1/(2 a1)); when false only h a1 < 1 is required.
  bool enforce_rate_bound = true;
  // 0 = std::thread::hardware_concurrency().
  unsigned threads = 0;

  bool operator==(const ExperimentSpec&) const = default;
};

void validate(const ExperimentSpec& spec);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log(error) against log(stepsize).
RateFit fit_rate(std::span<const double> stepsizes, std::span<const double> errors);

struct RateReport {
  std::vector<double> stepsizes;
  std::vector<double> rms_errors;
  std::vector<double> batch_stderr;
  // NaN when fewer than two levels or a zero error make the fit undefined.
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int num_paths = 0;
};

RateReport strong_error(const ExperimentSpec& spec);

struct PositivityCensus {
  int level = 0;
  double h = 0.0;
  int total = 0;
  int negative = 0;
  int diverged = 0;
  double fraction_negative = 0.0;
};

/// One census per entry of levels_under_test, all levels driven by the same
/// noise paths (generated at grid.fine_level).
std::vector<PositivityCensus> negative_census(const ExperimentSpec& spec);

/// Admissible exponent range [lo, hi) for the moment probe; hi may be +inf.
struct MomentRange {
  double lo = 2.0;
  double hi = 0.0;
};
MomentRange admissible_moment_range(const Params& p, bool inverse);

/// Per-step Monte Carlo estimates of E|Y_n|^p (or E|Y_n|^-p), n = 0..N, for
/// the scheme run at levels_under_test.front().
std::vector<double> moment_probe(const ExperimentSpec& spec, double p_exponent, bool inverse);

/// Sum in a fixed pairwise tree order.
double pairwise_sum(std::span<const double> values);

}  // namespace aitsahalia
