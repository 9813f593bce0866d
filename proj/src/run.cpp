#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "aitsahalia/config.hpp"
#include "aitsahalia/errors.hpp"

namespace aitsahalia {
namespace {

using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temporary file and renames it over the target.
void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move result into " + path);
  }
}

struct Output {
  std::string body;
  std::string summary;
};

Output convergence_output(const RunConfig& cfg, const RateReport& r) {
  Output out;
  if (cfg.format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "h,rms_error,batch_stderr\n";
    for (std::size_t k = 0; k < r.stepsizes.size(); ++k) {
      os << format_number(r.stepsizes[k]) << ',' << format_number(r.rms_errors[k]) << ','
         << format_number(r.batch_stderr[k]) << '\n';
    }
    os << "#slope=" << format_number(r.slope) << ",r2=" << format_number(r.r_squared) << '\n';
    out.body = os.str();
  } else {
    json j;
    j["experiment"] = "convergence";
    j["num_paths"] = r.num_paths;
    j["h"] = r.stepsizes;
    j["rms_error"] = r.rms_errors;
    j["batch_stderr"] = r.batch_stderr;
    j["slope"] = r.slope;
    j["intercept"] = r.intercept;
    j["r2"] = r.r_squared;
    out.body = j.dump(2) + "\n";
  }
  out.summary = "slope=" + format_number(r.slope) + " r2=" + format_number(r.r_squared);
  return out;
}

Output positivity_output(const RunConfig& cfg, const std::vector<PositivityCensus>& census) {
  const std::string scheme = scheme_name(cfg.spec.scheme);
  const std::string phi = jump_label(cfg.spec.jump);
  Output out;
  long negative = 0;
  long total = 0;
  if (cfg.format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "scheme,case,phi,h,total,negative,diverged,fraction\n";
    for (const auto& c : census) {
      os << scheme << ',' << cfg.label << ',' << phi << ',' << format_number(c.h) << ','
         << c.total << ',' << c.negative << ',' << c.diverged << ','
         << format_number(c.fraction_negative) << '\n';
    }
    out.body = os.str();
  } else {
    json rows = json::array();
    for (const auto& c : census) {
      rows.push_back({{"scheme", scheme},
                      {"case", cfg.label},
                      {"phi", phi},
                      {"h", c.h},
                      {"total", c.total},
                      {"negative", c.negative},
                      {"diverged", c.diverged},
                      {"fraction", c.fraction_negative}});
    }
    out.body = json{{"experiment", "positivity"}, {"rows", rows}}.dump(2) + "\n";
  }
  for (const auto& c : census) {
    negative += c.negative;
    total += c.total;
  }
  out.summary = "negative_fraction=" +
                format_number(total > 0 ? static_cast<double>(negative) / total : 0.0);
  return out;
}

Output moments_output(const RunConfig& cfg, const std::vector<double>& estimate) {
  const int level = cfg.spec.levels_under_test.front();
  const double h = step_size(cfg.spec.grid.T, level);
  Output out;
  double peak = 0.0;
  for (double v : estimate) peak = std::max(peak, v);
  if (cfg.format == OutputFormat::Csv) {
    std::ostringstream os;
    os << "t,estimate\n";
    for (std::size_t n = 0; n < estimate.size(); ++n) {
      os << format_number(static_cast<double>(n) * h) << ',' << format_number(estimate[n]) << '\n';
    }
    out.body = os.str();
  } else {
    std::vector<double> t(estimate.size());
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = static_cast<double>(n) * h;
    out.body = json{{"experiment", "moments"},
                    {"p", cfg.moment_p},
                    {"inverse", cfg.moment_inverse},
                    {"t", t},
                    {"estimate", estimate}}
                   .dump(2) +
               "\n";
  }
  out.summary = "max_estimate=" + format_number(peak);
  return out;
}

std::string error_record(const RunConfig& cfg, const std::string& kind,
                         const std::string& message) {
  if (cfg.format == OutputFormat::Json) {
    return json{{"error", {{"kind", kind}, {"message", message}}}}.dump(2) + "\n";
  }
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == ',') c = ' ';
  }
  return "#error=" + kind + ",message=" + flat + "\n";
}

}  // namespace

int run(const RunConfig& cfg, RunOptions options) {
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }

  Output out;
  try {
    switch (cfg.experiment) {
      case ExperimentKind::Convergence:
        out = convergence_output(cfg, strong_error(cfg.spec));
        break;
      case ExperimentKind::Positivity:
        out = positivity_output(cfg, negative_census(cfg.spec));
        break;
      case ExperimentKind::Moments:
        out = moments_output(cfg, moment_probe(cfg.spec, cfg.moment_p, cfg.moment_inverse));
        break;
    }
  } catch (const PreconditionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "simulation aborted: " << e.what() << '\n';
    try {
      write_atomically(cfg.output_path, error_record(cfg, "simulation_abort", e.what()));
    } catch (const IoError& io) {
      std::cerr << "i/o error: " << io.what() << '\n';
    }
    return exit_code::kSimulation;
  }

  try {
    write_atomically(cfg.output_path, out.body);
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_code::kIo;
  }
  if (!options.quiet) std::cout << out.summary << '\n';
  return exit_code::kOk;
}

}  // namespace aitsahalia
