#include "aitsahalia/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "aitsahalia/errors.hpp"

namespace aitsahalia {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "experiment", "case",      "a_neg1",     "a0",         "a1",
      "a2",         "b",         "gamma",      "theta",      "lambda",
      "x0",         "jump",      "scheme",     "T",          "levels",
      "reference_level", "paths", "seed",      "q",          "error_mode",
      "batches",    "enforce_rate_bound", "moment_p", "moment_inverse", "label",
      "threads",    "output",    "format"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Document {
 public:
  explicit Document(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (content.empty()) continue;
      const auto eq = content.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", "", line);
      }
      const std::string key = trim(content.substr(0, eq));
      const std::string value = trim(content.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key", "", line);
      if (!known_keys().count(key)) {
        throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", key, line);
      }
      if (value.empty()) {
        throw ConfigError("line " + std::to_string(line) + ": empty value for '" + key + "'", key,
                          line);
      }
      if (entries_.count(key)) {
        throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'", key,
                          line);
      }
      entries_[key] = {value, line};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const Entry& require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key);
    return it->second;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const int line = has(key) ? entries_.at(key).line : 0;
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + why, key, line);
  }

  double number(const std::string& key) const {
    const std::string& v = require(key).value;
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || errno == ERANGE) fail(key, "not a number: '" + v + "'");
    return x;
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) const {
    const std::string& v = require(key).value;
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || errno == ERANGE) fail(key, "not an integer: '" + v + "'");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const std::string& v = require(key).value;
    errno = 0;
    char* end = nullptr;
    if (!v.empty() && v.front() == '-') fail(key, "must be non-negative");
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || errno == ERANGE) fail(key, "not an integer: '" + v + "'");
    return x;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = require(key).value;
    if (v == "true") return true;
    if (v == "false") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  const std::string& text(const std::string& key) const { return require(key).value; }

 private:
  std::map<std::string, Entry> entries_;
};

Jump parse_jump(const Document& doc) {
  const std::string& v = doc.text("jump");
  if (v == "identity") return Jump::identity();
  if (v == "sine") return Jump::sine();
  if (v.rfind("linear(", 0) == 0 && v.back() == ')') {
    const std::string inner = v.substr(7, v.size() - 8);
    char* end = nullptr;
    const double c = std::strtod(inner.c_str(), &end);
    if (inner.empty() || end != inner.c_str() + inner.size()) {
      doc.fail("jump", "bad linear coefficient '" + inner + "'");
    }
    try {
      return Jump::linear_scale(c);
    } catch (const PreconditionError& e) {
      doc.fail("jump", e.what());
    }
  }
  doc.fail("jump", "expected linear(<c>), identity or sine, got '" + v + "'");
}

std::vector<int> parse_levels(const Document& doc) {
  std::vector<int> levels;
  std::istringstream in(doc.text("levels"));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    char* end = nullptr;
    const long v = std::strtol(item.c_str(), &end, 10);
    if (item.empty() || end != item.c_str() + item.size() || v < 0 || v > 30) {
      doc.fail("levels", "bad level '" + item + "'");
    }
    levels.push_back(static_cast<int>(v));
  }
  return levels;
}

std::string jump_text(const Jump& j) {
  switch (j.kind) {
    case JumpKind::Identity:
      return "identity";
    case JumpKind::Sine:
      return "sine";
    case JumpKind::LinearScale:
      break;
  }
  return "linear(" + format_number(j.scale) + ")";
}

const char* experiment_text(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Convergence:
      return "convergence";
    case ExperimentKind::Positivity:
      return "positivity";
    case ExperimentKind::Moments:
      return "moments";
  }
  return "";
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig parse_config(const std::string& text) {
  const Document doc(text);
  RunConfig cfg;

  const std::string& exp = doc.text("experiment");
  if (exp == "convergence") cfg.experiment = ExperimentKind::Convergence;
  else if (exp == "positivity") cfg.experiment = ExperimentKind::Positivity;
  else if (exp == "moments") cfg.experiment = ExperimentKind::Moments;
  else doc.fail("experiment", "expected convergence, positivity or moments");

  Params p{};
  bool preset = false;
  if (doc.has("case")) {
    const std::string& c = doc.text("case");
    if (c == "1") p = case1_params();
    else if (c == "2") p = case2_params();
    else doc.fail("case", "expected 1 or 2");
    preset = true;
    cfg.label = c;
  }
  auto field = [&](const char* key, double& slot) {
    if (preset) slot = doc.number_or(key, slot);
    else slot = doc.number(key);
  };
  field("a_neg1", p.a_neg1);
  field("a0", p.a0);
  field("a1", p.a1);
  field("a2", p.a2);
  field("b", p.b);
  field("gamma", p.gamma);
  field("theta", p.theta);
  field("lambda", p.lambda);
  field("x0", p.x0);

  ExperimentSpec& spec = cfg.spec;
  spec.params = p;
  spec.jump = parse_jump(doc);

  if (doc.has("scheme")) {
    const std::string& s = doc.text("scheme");
    if (s == "bem") spec.scheme = SchemeKind::BEM;
    else if (s == "em") spec.scheme = SchemeKind::EM;
    else doc.fail("scheme", "expected bem or em");
  }

  spec.levels_under_test = parse_levels(doc);
  if (spec.levels_under_test.empty()) doc.fail("levels", "no levels given");
  if (doc.has("reference_level") || cfg.experiment == ExperimentKind::Convergence) {
    const long long ref = doc.integer("reference_level");
    if (ref < 0 || ref > 30) doc.fail("reference_level", "must be in [0, 30]");
    spec.reference_level = static_cast<int>(ref);
  } else {
    spec.reference_level =
        *std::max_element(spec.levels_under_test.begin(), spec.levels_under_test.end());
  }
  spec.grid = GridConfig{doc.number_or("T", 1.0), spec.reference_level, spec.levels_under_test};

  if (doc.has("paths")) {
    const long long n = doc.integer("paths");
    if (n <= 0 || n > 100'000'000) doc.fail("paths", "must be in [1, 1e8]");
    spec.num_paths = static_cast<int>(n);
  }
  if (doc.has("seed")) spec.base_seed = doc.unsigned_integer("seed");
  spec.q = doc.number_or("q", kDefaultQ);
  if (doc.has("error_mode")) {
    const std::string& m = doc.text("error_mode");
    if (m == "terminal") spec.error_mode = ErrorMode::Terminal;
    else if (m == "sup") spec.error_mode = ErrorMode::SupOverGrid;
    else doc.fail("error_mode", "expected terminal or sup");
  }
  if (doc.has("batches")) {
    const long long nb = doc.integer("batches");
    if (nb < 1 || nb > 1'000'000) doc.fail("batches", "must be >= 1");
    spec.num_batches = static_cast<int>(nb);
  }
  if (doc.has("enforce_rate_bound")) spec.enforce_rate_bound = doc.boolean("enforce_rate_bound");
  if (doc.has("threads")) {
    const long long t = doc.integer("threads");
    if (t < 0 || t > 4096) doc.fail("threads", "must be in [0, 4096]");
    spec.threads = static_cast<unsigned>(t);
  }

  cfg.moment_p = doc.number_or("moment_p", 2.0);
  if (doc.has("moment_inverse")) cfg.moment_inverse = doc.boolean("moment_inverse");
  if (doc.has("label")) cfg.label = doc.text("label");
  cfg.output_path = doc.text("output");
  if (doc.has("format")) {
    const std::string& f = doc.text("format");
    if (f == "csv") cfg.format = OutputFormat::Csv;
    else if (f == "json") cfg.format = OutputFormat::Json;
    else doc.fail("format", "expected csv or json");
  }

  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  const ExperimentSpec& spec = cfg.spec;
  const std::string bad = first_invalid_field(spec.params);
  if (!bad.empty()) {
    throw ConfigError("invalid model parameter '" + bad + "'" +
                          (bad == "gamma" || bad == "theta" ? ": must be > 1" : ": must be > 0"),
                      bad);
  }
  const Regime regime = classify_regime(spec.params);
  if (regime.kind == RegimeCase::Unsupported) {
    throw ConfigError("regime unsupported: gamma+1 < 2*theta", "gamma");
  }
  if (cfg.output_path.empty()) throw ConfigError("missing required key 'output'", "output");
  if (cfg.label.empty() || cfg.label.find_first_of(",\n") != std::string::npos) {
    throw ConfigError("label must be non-empty and free of commas", "label");
  }
  if (!(spec.grid.T > 0.0) || !std::isfinite(spec.grid.T)) {
    throw ConfigError("T must be > 0", "T");
  }

  try {
    validate(spec);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what(), "levels");
  }

  const double h_max = step_size(
      spec.grid.T,
      *std::min_element(spec.levels_under_test.begin(), spec.levels_under_test.end()));
  if (spec.scheme == SchemeKind::BEM && !(h_max * spec.params.a1 < 1.0)) {
    throw ConfigError("BEM requires h * a1 < 1 at every level", "levels");
  }

  if (cfg.experiment == ExperimentKind::Convergence && spec.scheme == SchemeKind::BEM &&
      spec.enforce_rate_bound) {
    if (regime.kind == RegimeCase::Critical && !regime.critical_ok) {
      throw ConfigError("critical regime requires a2/b^2 > 2*gamma - 3/2", "a2");
    }
    const double bound = rate_step_bound(spec.params, spec.q);
    if (!(h_max < bound)) {
      throw ConfigError("stepsize " + format_number(h_max) + " violates the rate bound h < " +
                            format_number(bound),
                        "levels");
    }
  }

  if (cfg.experiment == ExperimentKind::Moments) {
    const MomentRange r = admissible_moment_range(spec.params, cfg.moment_inverse);
    if (!(cfg.moment_p >= r.lo && cfg.moment_p < r.hi)) {
      throw ConfigError("moment_p " + format_number(cfg.moment_p) +
                            " outside admissible range [" + format_number(r.lo) + ", " +
                            format_number(r.hi) + ")",
                        "moment_p");
    }
  }
}

std::string to_config_text(const RunConfig& cfg) {
  const ExperimentSpec& s = cfg.spec;
  const Params& p = s.params;
  std::ostringstream os;
  os << "experiment = " << experiment_text(cfg.experiment) << '\n'
     << "a_neg1 = " << format_number(p.a_neg1) << '\n'
     << "a0 = " << format_number(p.a0) << '\n'
     << "a1 = " << format_number(p.a1) << '\n'
     << "a2 = " << format_number(p.a2) << '\n'
     << "b = " << format_number(p.b) << '\n'
     << "gamma = " << format_number(p.gamma) << '\n'
     << "theta = " << format_number(p.theta) << '\n'
     << "lambda = " << format_number(p.lambda) << '\n'
     << "x0 = " << format_number(p.x0) << '\n'
     << "jump = " << jump_text(s.jump) << '\n'
     << "scheme = " << (s.scheme == SchemeKind::BEM ? "bem" : "em") << '\n'
     << "T = " << format_number(s.grid.T) << '\n'
     << "levels = ";
  for (std::size_t i = 0; i < s.levels_under_test.size(); ++i) {
    os << (i ? "," : "") << s.levels_under_test[i];
  }
  os << '\n'
     << "reference_level = " << s.reference_level << '\n'
     << "paths = " << s.num_paths << '\n'
     << "seed = " << s.base_seed << '\n'
     << "q = " << format_number(s.q) << '\n'
     << "error_mode = " << (s.error_mode == ErrorMode::Terminal ? "terminal" : "sup") << '\n'
     << "batches = " << s.num_batches << '\n'
     << "enforce_rate_bound = " << (s.enforce_rate_bound ? "true" : "false") << '\n'
     << "moment_p = " << format_number(cfg.moment_p) << '\n'
     << "moment_inverse = " << (cfg.moment_inverse ? "true" : "false") << '\n'
     << "label = " << cfg.label << '\n'
     << "threads = " << s.threads << '\n'
     << "output = " << cfg.output_path << '\n'
     << "format = " << (cfg.format == OutputFormat::Csv ? "csv" : "json") << '\n';
  return os.str();
}

void apply_full_protocol(RunConfig& cfg) {
  cfg.spec.levels_under_test = {7, 8, 9, 10, 11};
  cfg.spec.reference_level = 13;
  cfg.spec.grid.fine_level = 13;
  cfg.spec.grid.coarse_levels = cfg.spec.levels_under_test;
  cfg.spec.num_paths = 10'000;
}

}  // namespace aitsahalia
