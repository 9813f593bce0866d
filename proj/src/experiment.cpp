#include "aitsahalia/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "aitsahalia/errors.hpp"

namespace aitsahalia {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

unsigned resolve_threads(unsigned requested, int work) {
  unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::min<unsigned>(t, static_cast<unsigned>(std::max(work, 1)));
}

// Calls fn(i) for every i in [0, n). Output must go to per-index slots. If
// any call throws, the exception of the smallest failing index is rethrown.
template <typename Fn>
void for_each_index(int n, unsigned threads, Fn&& fn) {
  threads = resolve_threads(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  int error_index = n;
  std::exception_ptr error;

  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
  return {m.col(k).data(), static_cast<std::size_t>(m.rows())};
}

double rms(std::span<const double> squares) {
  return std::sqrt(pairwise_sum(squares) / static_cast<double>(squares.size()));
}

// Standard error of the rms estimate from contiguous path batches.
double batch_stderr(std::span<const double> squares, int num_batches) {
  const std::size_t n = squares.size();
  const std::size_t nb = std::min<std::size_t>(std::max(num_batches, 0), n);
  if (nb < 2) return 0.0;
  std::vector<double> batch(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t begin = b * n / nb;
    const std::size_t end = (b + 1) * n / nb;
    batch[b] = rms(squares.subspan(begin, end - begin));
  }
  const double mean = pairwise_sum(batch) / static_cast<double>(nb);
  double ss = 0.0;
  for (double v : batch) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(nb - 1)) / std::sqrt(static_cast<double>(nb));
}

void check_scheme_steps(const ExperimentSpec& spec, std::span<const int> levels) {
  if (spec.scheme != SchemeKind::BEM) return;
  const double bound =
      spec.enforce_rate_bound ? rate_step_bound(spec.params, spec.q) : 1.0 / spec.params.a1;
  for (int level : levels) {
    const double h = step_size(spec.grid.T, level);
    const bool ok = spec.enforce_rate_bound ? h < bound : h * spec.params.a1 < 1.0;
    if (!ok) {
      std::ostringstream os;
      os << "BEM stepsize h=" << h << " at level " << level << " violates the bound "
         << (spec.enforce_rate_bound ? "h < " : "h * a1 < 1, h < ") << bound;
      throw PreconditionError(os.str());
    }
  }
}

// Consumed increments must be exact block sums of the fine noise.
void check_coupling(const NoiseGrid& g, const CoarseIncrements& inc, int level) {
  long fine_jumps = 0;
  double fine_sum = 0.0;
  double fine_abs = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    fine_jumps += g.dN[i];
    fine_sum += g.dW[i];
    fine_abs += std::abs(g.dW[i]);
  }
  long coarse_jumps = 0;
  double coarse_sum = 0.0;
  for (Eigen::Index i = 0; i < inc.dW.size(); ++i) {
    coarse_jumps += inc.dN[i];
    coarse_sum += inc.dW[i];
  }
  const double slack = 4.0 * static_cast<double>(g.size()) *
                       std::numeric_limits<double>::epsilon() * (fine_abs + 1.0);
  if (coarse_jumps != fine_jumps || std::abs(coarse_sum - fine_sum) > slack) {
    throw SimulationAbort("noise coupling checksum mismatch at level " + std::to_string(level) +
                          " for path " + std::to_string(g.path_index));
  }
}

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<const int> span_of(const Eigen::VectorXi& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void validate(const ExperimentSpec& spec) {
  validate(spec.params);
  validate(spec.grid);
  if (spec.num_paths <= 0) throw PreconditionError("experiment: num_paths must be > 0");
  if (spec.levels_under_test.empty()) throw PreconditionError("experiment: no levels under test");
  if (spec.reference_level > spec.grid.fine_level) {
    throw PreconditionError("experiment: reference_level must be <= grid fine_level");
  }
  for (int level : spec.levels_under_test) {
    if (level < 0 || level > spec.reference_level) {
      throw PreconditionError("experiment: level " + std::to_string(level) +
                              " must be in [0, reference_level]");
    }
  }
  if (!(spec.q > 2.0)) throw PreconditionError("experiment: q must be > 2");
}

RateFit fit_rate(std::span<const double> stepsizes, std::span<const double> errors) {
  if (stepsizes.size() != errors.size()) throw PreconditionError("fit_rate: length mismatch");
  if (stepsizes.size() < 2) throw PreconditionError("fit_rate: need at least two points");
  const auto n = static_cast<Eigen::Index>(stepsizes.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(stepsizes[i] > 0.0) || !(errors[i] > 0.0)) {
      throw DomainError("fit_rate: stepsizes and errors must be > 0");
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::log(stepsizes[i]);
    y[i] = std::log(errors[i]);
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd residual = y - design * coef;
  const double ss_res = residual.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return {coef[1], coef[0], r2};
}

RateReport strong_error(const ExperimentSpec& spec) {
  validate(spec);
  const std::vector<int>& levels = spec.levels_under_test;
  check_scheme_steps(spec, levels);
  check_scheme_steps(spec, std::span<const int>(&spec.reference_level, 1));

  const bool sup_mode = spec.error_mode == ErrorMode::SupOverGrid;
  const auto num_levels = static_cast<Eigen::Index>(levels.size());
  Eigen::MatrixXd squares(spec.num_paths, num_levels);

  for_each_index(spec.num_paths, spec.threads, [&](int i) {
    const NoiseGrid g = generate(spec.grid, spec.params.lambda, spec.base_seed,
                                 static_cast<std::uint64_t>(i));
    const double h_ref = step_size(g.T, spec.reference_level);
    const CoarseIncrements ref_inc = coarsen(g, spec.reference_level);
    const PathResult ref = simulate_increments(spec.params, spec.jump, spec.scheme, h_ref,
                                               span_of(ref_inc.dW), span_of(ref_inc.dN), sup_mode);
    for (Eigen::Index k = 0; k < num_levels; ++k) {
      const int level = levels[k];
      const CoarseIncrements inc = coarsen(g, level);
      check_coupling(g, inc, level);
      const PathResult res = simulate_increments(spec.params, spec.jump, spec.scheme,
                                                 step_size(g.T, level), span_of(inc.dW),
                                                 span_of(inc.dN), sup_mode);
      if (!sup_mode) {
        const double d = res.terminal - ref.terminal;
        squares(i, k) = d * d;
        continue;
      }
      const std::size_t stride = std::size_t(1) << (spec.reference_level - level);
      double worst = 0.0;
      for (std::size_t n = 0; n < res.trajectory->size(); ++n) {
        const double d = (*res.trajectory)[n] - (*ref.trajectory)[n * stride];
        worst = std::max(worst, d * d);
      }
      squares(i, k) = worst;
    }
  });

  RateReport report;
  report.num_paths = spec.num_paths;
  for (Eigen::Index k = 0; k < num_levels; ++k) {
    report.stepsizes.push_back(step_size(spec.grid.T, levels[k]));
    report.rms_errors.push_back(rms(column(squares, k)));
    report.batch_stderr.push_back(batch_stderr(column(squares, k), spec.num_batches));
  }

  const bool fittable =
      report.rms_errors.size() >= 2 &&
      std::all_of(report.rms_errors.begin(), report.rms_errors.end(),
                  [](double e) { return e > 0.0 && std::isfinite(e); }) &&
      std::adjacent_find(report.stepsizes.begin(), report.stepsizes.end(),
                         [](double a, double b) { return a != b; }) != report.stepsizes.end();
  if (fittable) {
    const RateFit fit = fit_rate(report.stepsizes, report.rms_errors);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.r_squared = fit.r_squared;
  } else {
    report.slope = report.intercept = report.r_squared = kNaN;
  }
  return report;
}

std::vector<PositivityCensus> negative_census(const ExperimentSpec& spec) {
  validate(spec);
  const std::vector<int>& levels = spec.levels_under_test;
  if (spec.scheme == SchemeKind::BEM) {
    for (int level : levels) {
      if (!(step_size(spec.grid.T, level) * spec.params.a1 < 1.0)) {
        throw PreconditionError("census: BEM requires h * a1 < 1 at level " +
                                std::to_string(level));
      }
    }
  }

  enum : unsigned char { kPositive = 0, kNegative = 1, kDiverged = 2 };
  const std::size_t num_levels = levels.size();
  std::vector<unsigned char> outcome(static_cast<std::size_t>(spec.num_paths) * num_levels);

  for_each_index(spec.num_paths, spec.threads, [&](int i) {
    const NoiseGrid g = generate(spec.grid, spec.params.lambda, spec.base_seed,
                                 static_cast<std::uint64_t>(i));
    for (std::size_t k = 0; k < num_levels; ++k) {
      const PathResult r = simulate_path(spec.params, spec.jump, spec.scheme, g, levels[k], false);
      outcome[i * num_levels + k] = r.diverged ? kDiverged : (r.positive ? kPositive : kNegative);
    }
  });

  std::vector<PositivityCensus> out;
  for (std::size_t k = 0; k < num_levels; ++k) {
    PositivityCensus c;
    c.level = levels[k];
    c.h = step_size(spec.grid.T, levels[k]);
    c.total = spec.num_paths;
    for (int i = 0; i < spec.num_paths; ++i) {
      const unsigned char o = outcome[i * num_levels + k];
      c.negative += o == kNegative;
      c.diverged += o == kDiverged;
    }
    c.fraction_negative = static_cast<double>(c.negative) / c.total;
    out.push_back(c);
  }
  return out;
}

MomentRange admissible_moment_range(const Params& p, bool inverse) {
  const Regime r = classify_regime(p);
  if (r.kind == RegimeCase::Unsupported) {
    throw PreconditionError("moment bounds require gamma + 1 >= 2 theta");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (inverse) return {std::max(1.0, p.gamma - 1.0), inf};
  if (r.kind == RegimeCase::Strict) return {2.0, inf};
  return {2.0, (2.0 * p.a2 + p.b * p.b) / (p.b * p.b)};
}

std::vector<double> moment_probe(const ExperimentSpec& spec, double p_exponent, bool inverse) {
  validate(spec);
  const MomentRange range = admissible_moment_range(spec.params, inverse);
  if (!(p_exponent >= range.lo && p_exponent < range.hi)) {
    std::ostringstream os;
    os << "moment_probe: exponent " << p_exponent << " outside admissible range [" << range.lo
       << ", " << range.hi << ")";
    throw PreconditionError(os.str());
  }
  const int level = spec.levels_under_test.front();
  if (spec.scheme == SchemeKind::BEM && !(step_size(spec.grid.T, level) * spec.params.a1 < 1.0)) {
    throw PreconditionError("moment_probe: BEM requires h * a1 < 1");
  }

  // Fixed-size path chunks keep the summation order independent of threads.
  constexpr int kChunk = 64;
  const int num_chunks = (spec.num_paths + kChunk - 1) / kChunk;
  const std::size_t num_points = (std::size_t(1) << level) + 1;
  const double exponent = inverse ? -p_exponent : p_exponent;
  std::vector<std::vector<double>> partial(num_chunks);

  for_each_index(num_chunks, spec.threads, [&](int c) {
    std::vector<double> acc(num_points, 0.0);
    const int end = std::min(spec.num_paths, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) {
      const NoiseGrid g = generate(spec.grid, spec.params.lambda, spec.base_seed,
                                   static_cast<std::uint64_t>(i));
      const PathResult r = simulate_path(spec.params, spec.jump, spec.scheme, g, level, true);
      for (std::size_t n = 0; n < num_points; ++n) {
        acc[n] += std::pow(std::abs((*r.trajectory)[n]), exponent);
      }
    }
    partial[c] = std::move(acc);
  });

  std::vector<double> estimate(num_points, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t n = 0; n < num_points; ++n) estimate[n] += acc[n];
  }
  for (double& v : estimate) v /= spec.num_paths;
  return estimate;
}

}  // namespace aitsahalia
