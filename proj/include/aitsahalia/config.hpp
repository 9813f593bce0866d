#pragma once

// Run configuration for the experiment driver.
//
// The config is a flat text document with one `key = value` per line;
// `#` starts a comment. Unknown keys are rejected.
//
//   experiment  convergence | positivity | moments      (required)
//   case        1 | 2        preset model constants; explicit keys override
//   a_neg1 a0 a1 a2 b gamma theta lambda x0             (required without case)
//   jump        linear(<c>) | identity | sine            (required)
//   scheme      bem | em                                 (default bem)
//   T           horizon                                  (default 1)
//   levels      comma-separated grid levels, h = T 2^-level  (required)
//   reference_level  level of the reference solution     (required for convergence;
//                                                         default max(levels) otherwise)
//   paths       number of Monte Carlo paths              (default 2000)
//   seed        64-bit base seed                         (default 20210301)
//   q           exponent in the monotonicity constant    (default 3)
//   error_mode  terminal | sup                           (default terminal)
//   batches     batches for the standard error           (default 10)
//   enforce_rate_bound  true | false                     (default true)
//   moment_p    moment exponent                          (default 2)
//   moment_inverse  true | false                         (default false)
//   label       case label written to positivity output  (default: case or "custom")
//   threads     worker threads, 0 = hardware             (default 0)
//   output      output file path                         (required)
//   format      csv | json                               (default csv)

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "aitsahalia/experiment.hpp"

namespace aitsahalia {

enum class ExperimentKind { Convergence, Positivity, Moments };
enum class OutputFormat { Csv, Json };

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::Convergence;
  ExperimentSpec spec;
  std::string label = "custom";
  double moment_p = 2.0;
  bool moment_inverse = false;
  std::string output_path;
  OutputFormat format = OutputFormat::Csv;

  bool operator==(const RunConfig&) const = default;
};

/// Malformed document or failed validation. `key` names the offending key
/// (or invariant) and `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

RunConfig parse_config(const std::string& text);

/// Full validation of a (possibly modified) config; throws ConfigError.
void validate(const RunConfig& cfg);

/// Canonical document: every key explicit, numbers with 17 significant digits.
std::string to_config_text(const RunConfig& cfg);

/// Overrides the long convergence protocol: levels 7..11, reference
/// level 13, 10^4 paths.
void apply_full_protocol(RunConfig& cfg);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kSimulation = 3;
inline constexpr int kIo = 4;
}  // namespace exit_code

struct RunOptions {
  bool quiet = false;
};

/// Executes the experiment and writes the output file atomically.
int run(const RunConfig& cfg, RunOptions options = {});

/// printf("%.17g").
std::string format_number(double v);

}  // namespace aitsahalia
