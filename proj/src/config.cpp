#include "fgibbs/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fgibbs {
namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::GroundState, "ground_state"},
    {ExperimentKind::GnsVerify, "gns_verify"},
    {ExperimentKind::Covariance, "covariance"},
    {ExperimentKind::PartitionLadder, "partition_ladder"},
    {ExperimentKind::ThresholdScan, "threshold_scan"},
    {ExperimentKind::OuRates, "ou_rates"},
    {ExperimentKind::DriftDivergence, "drift_divergence"},
};

std::string valid_kind_list() {
  std::string out;
  for (const auto& kn : kKindNames) {
    if (!out.empty()) out += ", ";
    out += kn.name;
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool valid_key_chars(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t prev = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t cur = row[j];
      std::size_t sub = prev + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
      prev = cur;
    }
  }
  return row[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<KeySpec>& schema) {
  std::string best;
  std::size_t best_dist = 4;  // suggest only close misses
  for (const auto& ks : schema) {
    std::size_t dist = edit_distance(key, ks.key);
    if (dist < best_dist) {
      best_dist = dist;
      best = ks.key;
    }
  }
  return best;
}

[[noreturn]] void fail_key(const ExperimentConfig& config, const std::string& key,
                           const std::string& what) {
  const ConfigEntry& e = config.entry(key);
  std::string msg = "config key '" + key + "'";
  if (e.line > 0) msg += " (line " + std::to_string(e.line) + ")";
  msg += ": " + what + " (got '" + e.value + "')";
  throw ConfigError(msg);
}

double parse_double_token(const std::string& tok) {
  std::size_t slash = tok.find('/');
  if (slash != std::string::npos) {
    double num = parse_double_token(trim(tok.substr(0, slash)));
    double den = parse_double_token(trim(tok.substr(slash + 1)));
    if (den == 0.0) throw std::invalid_argument("division by zero");
    return num / den;
  }
  if (tok.empty()) throw std::invalid_argument("empty number");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    throw std::invalid_argument("not a number");
  return v;
}

long long parse_int_token(const std::string& tok) {
  if (tok.empty()) throw std::invalid_argument("empty integer");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    throw std::invalid_argument("not an integer");
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = value.find(',', start);
    std::string tok = trim(comma == std::string::npos ? value.substr(start)
                                                      : value.substr(start, comma - start));
    out.push_back(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Key schemas. Every accepted key appears here with its default and a help
// line; anything else in a config file is a hard error.
// ---------------------------------------------------------------------------

std::vector<KeySpec> common_keys() {
  return {
      {"run.seed", "12345", "64-bit seed of the counter-based random streams"},
      {"run.workers", "1", "worker threads for sample loops (results are identical for any count)"},
      {"run.out", "",
       "output directory; empty means $FGIBBS_OUT (or ./runs) plus the experiment name"},
  };
}

void append(std::vector<KeySpec>& dst, std::vector<KeySpec> more) {
  for (auto& ks : more) dst.push_back(std::move(ks));
}

std::vector<KeySpec> schema_ground_state() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > 0"},
                 {"problem.p", "6.0", "nonlinearity power, p > 2 (and p <= 2d/(d-2s) when d > 2s)"},
                 {"solver.box_side", "0", "surrogate box side; 0 picks the per-dimension default"},
                 {"solver.modes", "0", "solver modes per dimension; 0 picks the per-dimension default"},
                 {"solver.flow_step", "0.8", "normalized-flow step size"},
                 {"solver.max_iter", "5000", "iteration cap"},
                 {"solver.grad_tol", "1e-9", "relative preconditioned-gradient stopping tolerance"},
                 {"solver.residual_tol", "1e-6", "required relative elliptic residual at convergence"},
                 {"report.profile_points", "0",
                  "profile sample points per dimension; 0 picks 1024 / 128 / 32 for d = 1 / 2 / 3"},
             });
  return ks;
}

std::vector<KeySpec> schema_gns_verify() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > 0"},
                 {"problem.p", "6.0", "nonlinearity power, p > 2 (and p <= 2d/(d-2s) when d > 2s)"},
                 {"solver.box_side", "0", "reference-solve box side; 0 picks the default"},
                 {"solver.modes", "0", "reference-solve modes per dimension; 0 picks the default"},
                 {"solver.flow_step", "0.8", "normalized-flow step size"},
                 {"solver.max_iter", "5000", "iteration cap"},
                 {"solver.grad_tol", "1e-9", "relative preconditioned-gradient stopping tolerance"},
                 {"solver.residual_tol", "1e-6", "required relative elliptic residual at convergence"},
                 {"trial.count", "1000", "number of random trial fields"},
                 {"trial.modes", "16", "band limit of the trial fields"},
             });
  return ks;
}

std::vector<KeySpec> schema_covariance() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > 0"},
                 {"grid.convention", "twopi", "derivative symbol convention: twopi or plain"},
                 {"field.law", "massless_complex",
                  "sampling law: massless_complex, massless_real, or massive_complex"},
                 {"field.modes", "32", "grid modes per dimension (1..511)"},
                 {"mc.samples", "10000", "sample count"},
                 {"report.max_mode", "8", "per-mode rows cover |n|_inf <= this"},
             });
  return ks;
}

std::vector<KeySpec> schema_partition_ladder() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > 0"},
                 {"problem.p", "4.0", "potential power, p > 2"},
                 {"cutoff.K", "1.0", "mass cutoff of the partition estimate, K > 0"},
                 {"grid.convention", "plain", "derivative symbol convention: twopi or plain"},
                 {"field.law", "massless_complex",
                  "sampling law: massless_complex, massless_real, or massive_complex"},
                 {"ladder.N", "16,32,64,128", "ascending truncation ladder (>= 3 levels)"},
                 {"mc.samples", "100000", "samples per ladder level"},
             });
  return ks;
}

std::vector<KeySpec> schema_threshold_scan() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > 0"},
                 {"problem.p", "6.0", "potential power; must equal the critical power 4s/d + 2"},
                 {"grid.convention", "twopi", "derivative symbol convention: twopi or plain"},
                 {"field.law", "massive_complex",
                  "sampling law: massless_complex, massless_real, or massive_complex"},
                 {"ladder.N", "16,32,64,128", "ascending truncation ladder (>= 3 levels)"},
                 {"scan.k_over_ref", "0.5,0.75,1.0,1.15,1.3,1.4,1.5",
                  "ascending cutoffs as multiples of the reference ground-state mass"},
                 {"mc.samples", "100000", "samples per (cutoff, level) cell"},
             });
  return ks;
}

std::vector<KeySpec> schema_ou_rates() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > d/2"},
                 {"grid.convention", "plain", "derivative symbol convention: twopi or plain"},
                 {"ladder.M", "16,32,64,128,256",
                  "ascending dyadic smoothing bands (>= 4 levels)"},
                 {"field.modes", "0", "grid modes per dimension; 0 means the largest band"},
                 {"mc.samples", "1000", "sample paths (0 = closed-form curves only)"},
                 {"mc.steps", "256", "time-mesh steps per path"},
             });
  return ks;
}

std::vector<KeySpec> schema_drift_divergence() {
  auto ks = common_keys();
  append(ks, {
                 {"problem.d", "1", "spatial dimension (1, 2, or 3)"},
                 {"problem.s", "1.0", "fractional regularity exponent, s > d/2"},
                 {"problem.p", "8.0", "potential power, p >= 4s/d + 2"},
                 {"cutoff.K", "4.0", "mass cutoff the drift must respect, K > 0"},
                 {"grid.convention", "plain", "derivative symbol convention: twopi or plain"},
                 {"field.law", "massive_complex",
                  "path law: massive_complex or massless_complex"},
                 {"field.modes", "256", "torus modes per dimension (1..511)"},
                 {"ladder.rho", "1/8,1/16,1/32,1/64",
                  "descending dyadic concentration scales (>= 4 levels, each <= 1/2)"},
                 {"ladder.M", "",
                  "smoothing band per level; empty means M = 1/rho at each level"},
                 {"drift.alpha", "-1",
                  "drift amplitude; negative picks the regime default (fill at critical, else min(1/2, fill))"},
                 {"drift.eta", "-1", "mass margin in [0, K]; negative picks K/10"},
                 {"drift.delta", "0.05", "cutoff mollification width, in (0, 1/6)"},
                 {"mc.samples", "400", "sample paths per level"},
                 {"mc.steps", "256", "time-mesh steps per path"},
                 {"solver.box_side", "0", "profile-solve box side; 0 picks the default"},
                 {"solver.modes", "0", "profile-solve modes per dimension; 0 picks the default"},
             });
  return ks;
}

// ---------------------------------------------------------------------------
// Validation: every parameter checked against the owning module's
// preconditions before any computation starts.
// ---------------------------------------------------------------------------

void check_common(const ExperimentConfig& c) {
  c.getu("run.seed");
  int workers = c.geti("run.workers");
  if (workers < 1 || workers > 64) fail_key(c, "run.workers", "must be in [1, 64]");
}

void check_dimension(const ExperimentConfig& c) {
  int d = c.geti("problem.d");
  if (d < 1 || d > 3) fail_key(c, "problem.d", "dimension must be 1, 2, or 3");
}

void check_s_positive(const ExperimentConfig& c) {
  double s = c.getd("problem.s");
  if (!std::isfinite(s) || !(s > 0.0)) fail_key(c, "problem.s", "must satisfy s > 0");
}

void check_s_supercritical(const ExperimentConfig& c) {
  double s = c.getd("problem.s");
  int d = c.geti("problem.d");
  if (!std::isfinite(s) || !(s > 0.5 * d))
    fail_key(c, "problem.s", "free evolution requires s > d/2");
}

void check_p_gt2(const ExperimentConfig& c) {
  double p = c.getd("problem.p");
  if (!std::isfinite(p) || !(p > 2.0)) fail_key(c, "problem.p", "must satisfy p > 2");
}

void check_p_admissible(const ExperimentConfig& c) {
  check_p_gt2(c);
  double p = c.getd("problem.p");
  double s = c.getd("problem.s");
  int d = c.geti("problem.d");
  if (d > 2.0 * s && p > 2.0 * d / (d - 2.0 * s) + 1e-12)
    fail_key(c, "problem.p", "must satisfy p <= 2d/(d - 2s) when d > 2s");
}

void check_p_critical(const ExperimentConfig& c) {
  check_p_gt2(c);
  double p = c.getd("problem.p");
  double s = c.getd("problem.s");
  int d = c.geti("problem.d");
  double pc = 4.0 * s / d + 2.0;
  if (std::abs(p - pc) > 1e-9)
    fail_key(c, "problem.p",
             "threshold scan requires the critical power p = 4s/d + 2 (= " + std::to_string(pc) + ")");
}

void check_p_at_least_critical(const ExperimentConfig& c) {
  check_p_gt2(c);
  double p = c.getd("problem.p");
  double s = c.getd("problem.s");
  int d = c.geti("problem.d");
  double pc = 4.0 * s / d + 2.0;
  if (p < pc - 1e-9)
    fail_key(c, "problem.p",
             "requires p >= 4s/d + 2 (= " + std::to_string(pc) + "); below it no divergent drift exists");
}

void check_cutoff(const ExperimentConfig& c) {
  double K = c.getd("cutoff.K");
  if (!std::isfinite(K) || !(K > 0.0)) fail_key(c, "cutoff.K", "mass cutoff must be positive");
}

void check_convention(const ExperimentConfig& c) {
  std::string v = c.gets("grid.convention");
  if (v != "twopi" && v != "plain")
    fail_key(c, "grid.convention", "expected twopi or plain");
}

void check_law(const ExperimentConfig& c, bool complex_only) {
  std::string v = c.gets("field.law");
  bool known = v == "massless_complex" || v == "massless_real" || v == "massive_complex";
  if (!known)
    fail_key(c, "field.law",
             "expected massless_complex, massless_real, or massive_complex");
  if (complex_only && v == "massless_real")
    fail_key(c, "field.law", "path simulation supports the complex laws only");
}

void check_modes(const ExperimentConfig& c, const std::string& key, bool zero_ok) {
  int n = c.geti(key);
  if (zero_ok && n == 0) return;
  if (n < 1 || n > 511) fail_key(c, key, "modes per dimension must be in [1, 511]");
}

void check_samples(const ExperimentConfig& c, std::uint64_t min_count) {
  std::uint64_t s = c.getu("mc.samples");
  if (s < min_count)
    fail_key(c, "mc.samples", "needs at least " + std::to_string(min_count) + " samples");
  if (s > (1ull << 40)) fail_key(c, "mc.samples", "sample count is implausibly large");
}

void check_steps(const ExperimentConfig& c) {
  int steps = c.geti("mc.steps");
  if (steps < 1 || steps > (1 << 20)) fail_key(c, "mc.steps", "mesh steps must be in [1, 2^20]");
}

void check_profile_solver(const ExperimentConfig& c) {
  double side = c.getd("solver.box_side");
  if (!std::isfinite(side) || side < 0.0) fail_key(c, "solver.box_side", "must be >= 0");
  check_modes(c, "solver.modes", /*zero_ok=*/true);
}

void check_solver(const ExperimentConfig& c) {
  check_profile_solver(c);
  double step = c.getd("solver.flow_step");
  if (!(step > 0.0) || step > 2.0) fail_key(c, "solver.flow_step", "must be in (0, 2]");
  if (c.geti("solver.max_iter") < 1) fail_key(c, "solver.max_iter", "must be >= 1");
  if (!(c.getd("solver.grad_tol") > 0.0)) fail_key(c, "solver.grad_tol", "must be positive");
  if (!(c.getd("solver.residual_tol") > 0.0))
    fail_key(c, "solver.residual_tol", "must be positive");
}

bool is_pow2(long v) { return v > 0 && (v & (v - 1)) == 0; }

void check_truncation_ladder(const ExperimentConfig& c) {
  auto ladder = c.get_int_list("ladder.N");
  if (ladder.size() < 3)
    fail_key(c, "ladder.N", "truncation ladder must be ascending with at least 3 levels");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1 || ladder[i] > 511)
      fail_key(c, "ladder.N", "modes per dimension must be in [1, 511]");
    if (i > 0 && ladder[i] <= ladder[i - 1])
      fail_key(c, "ladder.N", "truncation ladder must be strictly increasing");
  }
}

void check_band_ladder(const ExperimentConfig& c) {
  auto ladder = c.get_int_list("ladder.M");
  if (ladder.size() < 4)
    fail_key(c, "ladder.M", "rate regression needs at least 4 ladder levels");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1 || ladder[i] > 511)
      fail_key(c, "ladder.M", "bands must be in [1, 511]");
    if (!is_pow2(ladder[i])) fail_key(c, "ladder.M", "bands must be dyadic");
    if (i > 0 && ladder[i] <= ladder[i - 1])
      fail_key(c, "ladder.M", "band ladder must be strictly increasing");
  }
  int modes = c.geti("field.modes");
  if (modes > 0 && ladder.back() > modes)
    fail_key(c, "ladder.M", "band ladder exceeds field.modes");
}

void check_scale_ladder(const ExperimentConfig& c) {
  auto rho = c.get_double_list("ladder.rho");
  if (rho.size() < 4)
    fail_key(c, "ladder.rho", "divergence fit needs at least 4 ladder levels");
  int modes = c.geti("field.modes");
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0) || rho[i] > 0.5 + 1e-12)
      fail_key(c, "ladder.rho", "scales must lie in (0, 1/2]");
    double k = std::log2(1.0 / rho[i]);
    if (std::abs(k - std::llround(k)) > 1e-12)
      fail_key(c, "ladder.rho", "scales must be dyadic (1/2, 1/4, 1/8, ...)");
    if (i > 0 && rho[i] >= rho[i - 1])
      fail_key(c, "ladder.rho", "scales must strictly decrease");
    if (rho[i] * (2.0 * modes + 1.0) < 8.0 - 1e-12)
      fail_key(c, "ladder.rho",
               "needs at least 8 grid points across the core scale (raise field.modes)");
  }
  auto bands = c.get_int_list("ladder.M");
  if (!bands.empty()) {
    if (bands.size() != rho.size())
      fail_key(c, "ladder.M", "band list must match ladder.rho level for level");
    for (int b : bands) {
      if (b < 1 || b > modes) fail_key(c, "ladder.M", "bands must be in [1, field.modes]");
      if (!is_pow2(b)) fail_key(c, "ladder.M", "bands must be dyadic");
    }
  } else {
    for (double r : rho) {
      long m = std::lround(1.0 / r);
      if (m > modes)
        fail_key(c, "ladder.rho", "default band M = 1/rho exceeds field.modes");
    }
  }
}

void check_drift_shape(const ExperimentConfig& c) {
  double delta = c.getd("drift.delta");
  if (!(delta > 0.0) || !(delta < 1.0 / 6.0))
    fail_key(c, "drift.delta", "mollification width must be in (0, 1/6)");
  double alpha = c.getd("drift.alpha");
  if (alpha >= 0.0 && !std::isfinite(alpha))
    fail_key(c, "drift.alpha", "must be finite");
  double eta = c.getd("drift.eta");
  if (eta >= 0.0) {
    double K = c.getd("cutoff.K");
    if (eta > K) fail_key(c, "drift.eta", "mass margin must lie in [0, K]");
  }
}

void check_scan_grid(const ExperimentConfig& c) {
  auto ks = c.get_double_list("scan.k_over_ref");
  if (ks.empty()) fail_key(c, "scan.k_over_ref", "cutoff grid must be nonempty and ascending");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] > 0.0)) fail_key(c, "scan.k_over_ref", "cutoff multiples must be positive");
    if (i > 0 && ks[i] <= ks[i - 1])
      fail_key(c, "scan.k_over_ref", "cutoff grid must be strictly ascending");
  }
}

void check_report_modes(const ExperimentConfig& c) {
  int max_mode = c.geti("report.max_mode");
  if (max_mode < 0) fail_key(c, "report.max_mode", "must be >= 0");
  if (max_mode > c.geti("field.modes"))
    fail_key(c, "report.max_mode", "exceeds field.modes");
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  throw ConfigError("unknown experiment '" + name + "' (expected one of: " + valid_kind_list() +
                    ")");
}

std::vector<ExperimentKind> all_experiments() {
  std::vector<ExperimentKind> out;
  for (const auto& kn : kKindNames) out.push_back(kn.kind);
  return out;
}

const char* to_string(ConfigEntry::Source source) {
  switch (source) {
    case ConfigEntry::Source::Default: return "default";
    case ConfigEntry::Source::File: return "file";
    case ConfigEntry::Source::Flag: return "flag";
  }
  return "unknown";
}

const std::vector<KeySpec>& config_schema(ExperimentKind kind) {
  static const std::vector<KeySpec> tables[] = {
      schema_ground_state(),     schema_gns_verify(),  schema_covariance(),
      schema_partition_ladder(), schema_threshold_scan(), schema_ou_rates(),
      schema_drift_divergence(),
  };
  return tables[static_cast<int>(kind)];
}

bool ExperimentConfig::has(const std::string& key) const { return entries.count(key) > 0; }

const ConfigEntry& ExperimentConfig::entry(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end())
    throw std::logic_error(std::string("experiment '") + to_string(kind) +
                           "' has no config key '" + key + "'");
  return it->second;
}

std::string ExperimentConfig::gets(const std::string& key) const { return entry(key).value; }

int ExperimentConfig::geti(const std::string& key) const {
  try {
    long long v = parse_int_token(trim(entry(key).value));
    if (v < static_cast<long long>(INT32_MIN) || v > static_cast<long long>(INT32_MAX))
      throw std::invalid_argument("out of range");
    return static_cast<int>(v);
  } catch (const std::invalid_argument& e) {
    fail_key(*this, key, std::string("expected an integer: ") + e.what());
  }
}

std::uint64_t ExperimentConfig::getu(const std::string& key) const {
  std::string v = trim(entry(key).value);
  if (v.empty() || v[0] == '-') fail_key(*this, key, "expected a nonnegative integer");
  errno = 0;
  char* end = nullptr;
  std::uint64_t out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE)
    fail_key(*this, key, "expected a 64-bit unsigned integer");
  return out;
}

double ExperimentConfig::getd(const std::string& key) const {
  try {
    return parse_double_token(trim(entry(key).value));
  } catch (const std::invalid_argument& e) {
    fail_key(*this, key, std::string("expected a number: ") + e.what());
  }
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& tok : split_list(entry(key).value)) {
    try {
      long long v = parse_int_token(tok);
      if (v < static_cast<long long>(INT32_MIN) || v > static_cast<long long>(INT32_MAX))
        throw std::invalid_argument("out of range");
      out.push_back(static_cast<int>(v));
    } catch (const std::invalid_argument& e) {
      fail_key(*this, key, "expected a comma-separated integer list: " + std::string(e.what()));
    }
  }
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& tok : split_list(entry(key).value)) {
    try {
      out.push_back(parse_double_token(tok));
    } catch (const std::invalid_argument& e) {
      fail_key(*this, key, "expected a comma-separated number list: " + std::string(e.what()));
    }
  }
  return out;
}

std::string ExperimentConfig::canonical_text() const {
  std::string out = std::string("experiment = ") + to_string(kind) + "\n";
  for (const auto& [key, e] : entries) out += key + " = " + e.value + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  for (const KeySpec& ks : config_schema(kind))
    cfg.entries[ks.key] = ConfigEntry{ks.fallback, 0, ConfigEntry::Source::Default};
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& path,
                                   const ExperimentKind* expected_kind) {
  struct RawEntry {
    std::string value;
    int line;
  };
  std::vector<std::pair<std::string, RawEntry>> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (!valid_key_chars(key))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed key '" + key +
                        "' (letters, digits, '.', '_')");
    for (const auto& [k, e] : raw)
      if (k == key)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                          "' (first set at line " + std::to_string(e.line) + ")");
    raw.emplace_back(key, RawEntry{value, lineno});
  }

  // Resolve the experiment kind: from the file, checked against the caller.
  ExperimentKind kind{};
  bool kind_known = false;
  for (const auto& [key, e] : raw) {
    if (key != "experiment") continue;
    try {
      kind = experiment_from_string(e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(path + ":" + std::to_string(e.line) + ": " + err.what());
    }
    kind_known = true;
    if (expected_kind && kind != *expected_kind)
      throw ConfigError(path + ":" + std::to_string(e.line) + ": config names experiment '" +
                        to_string(kind) + "' but the subcommand is '" +
                        to_string(*expected_kind) + "'");
  }
  if (!kind_known) {
    if (!expected_kind)
      throw ConfigError(path + ": config must name the experiment with 'experiment = <kind>' " +
                        ("(one of: " + valid_kind_list() + ")"));
    kind = *expected_kind;
  }

  ExperimentConfig cfg = default_config(kind);
  const auto& schema = config_schema(kind);
  for (const auto& [key, e] : raw) {
    if (key == "experiment") continue;
    auto it = cfg.entries.find(key);
    if (it == cfg.entries.end()) {
      std::string msg = path + ":" + std::to_string(e.line) + ": unknown key '" + key +
                        "' for experiment '" + to_string(kind) + "'";
      std::string near = nearest_key(key, schema);
      if (!near.empty()) msg += " (did you mean '" + near + "'?)";
      throw ConfigError(msg);
    }
    it->second = ConfigEntry{e.value, e.line, ConfigEntry::Source::File};
  }

  validate_config(cfg);
  return cfg;
}

namespace {
ExperimentConfig load_config_impl(const std::string& path, const ExperimentKind* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path, kind);
}
}  // namespace

ExperimentConfig load_config(const std::string& path) { return load_config_impl(path, nullptr); }

ExperimentConfig load_config(const std::string& path, ExperimentKind kind) {
  return load_config_impl(path, &kind);
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "experiment")
    throw ConfigError("the experiment kind is fixed by the subcommand and cannot be overridden");
  auto it = config.entries.find(key);
  if (it == config.entries.end()) {
    std::string msg = "unknown key '" + key + "' for experiment '" +
                      std::string(to_string(config.kind)) + "'";
    std::string near = nearest_key(key, config_schema(config.kind));
    if (!near.empty()) msg += " (did you mean '" + near + "'?)";
    throw ConfigError(msg);
  }
  // No validation here: overrides arrive one at a time and intermediate
  // states may be inconsistent. Callers validate the assembled config.
  it->second = ConfigEntry{value, 0, ConfigEntry::Source::Flag};
}

void validate_config(const ExperimentConfig& c) {
  check_common(c);
  switch (c.kind) {
    case ExperimentKind::GroundState:
      check_dimension(c);
      check_s_positive(c);
      check_p_admissible(c);
      check_solver(c);
      if (int pp = c.geti("report.profile_points"); pp != 0 && (pp < 2 || pp > 4096))
        fail_key(c, "report.profile_points", "must be 0 (auto) or in [2, 4096]");
      break;
    case ExperimentKind::GnsVerify:
      check_dimension(c);
      check_s_positive(c);
      check_p_admissible(c);
      check_solver(c);
      if (c.geti("trial.count") < 1) fail_key(c, "trial.count", "must be >= 1");
      check_modes(c, "trial.modes", /*zero_ok=*/false);
      break;
    case ExperimentKind::Covariance:
      check_dimension(c);
      check_s_positive(c);
      check_convention(c);
      check_law(c, /*complex_only=*/false);
      check_modes(c, "field.modes", /*zero_ok=*/false);
      check_samples(c, 2);
      check_report_modes(c);
      break;
    case ExperimentKind::PartitionLadder:
      check_dimension(c);
      check_s_positive(c);
      check_p_gt2(c);
      check_cutoff(c);
      check_convention(c);
      check_law(c, /*complex_only=*/false);
      check_truncation_ladder(c);
      check_samples(c, 2);
      break;
    case ExperimentKind::ThresholdScan:
      check_dimension(c);
      check_s_positive(c);
      check_p_critical(c);
      check_convention(c);
      check_law(c, /*complex_only=*/false);
      check_truncation_ladder(c);
      check_scan_grid(c);
      check_samples(c, 2);
      break;
    case ExperimentKind::OuRates:
      check_dimension(c);
      check_s_supercritical(c);
      check_convention(c);
      check_band_ladder(c);
      check_modes(c, "field.modes", /*zero_ok=*/true);
      c.getu("mc.samples");  // 0 is allowed: closed-form curves only
      check_steps(c);
      break;
    case ExperimentKind::DriftDivergence:
      check_dimension(c);
      check_s_supercritical(c);
      check_p_at_least_critical(c);
      check_cutoff(c);
      check_convention(c);
      check_law(c, /*complex_only=*/true);
      check_modes(c, "field.modes", /*zero_ok=*/false);
      check_scale_ladder(c);
      check_drift_shape(c);
      check_samples(c, 2);
      check_steps(c);
      check_profile_solver(c);
      break;
  }
}

}  // namespace fgibbs
