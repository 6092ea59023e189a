#include "fgibbs/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "fgibbs/gaussian_field.hpp"
#include "fgibbs/ground_state.hpp"
#include "fgibbs/partition.hpp"
#include "fgibbs/rng.hpp"
#include "fgibbs/thread_pool.hpp"
#include "fgibbs/variational.hpp"

namespace fgibbs {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kArtifactVersion = "0.1.0";

// Fixed random-stream ids, one per experiment, so distinct experiments under
// one seed never share draws.
constexpr std::uint32_t kStreamCovariance = 2;
constexpr std::uint32_t kStreamPartition = 3;
constexpr std::uint32_t kStreamScan = 4;
constexpr std::uint32_t kStreamRates = 5;
constexpr std::uint32_t kStreamDrift = 6;
constexpr std::uint32_t kStreamGns = 7;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// CSV table with a one-line typed header (name:type per column); doubles
/// carry 17 significant digits for a lossless round trip. Cell types and
/// row arity are enforced while building.
class Csv {
 public:
  explicit Csv(std::vector<std::pair<std::string, std::string>> columns)
      : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += columns_[i].first + ':' + columns_[i].second;
    }
    buf_ += '\n';
  }
  Csv(std::initializer_list<std::pair<std::string, std::string>> columns)
      : Csv(std::vector<std::pair<std::string, std::string>>(columns)) {}

  Csv& cell(int v) { return put("int", std::to_string(v)); }
  Csv& cell(std::uint64_t v) { return put("u64", std::to_string(v)); }
  Csv& cell(double v) { return put("f64", fmt_double(v)); }
  Csv& cell(const std::string& v) {
    if (v.find_first_of(",\"\n") != std::string::npos)
      throw std::logic_error("csv string cells must not need quoting");
    return put("str", v);
  }

  Csv& end_row() {
    if (col_ != columns_.size())
      throw std::logic_error("csv row ended at column " + std::to_string(col_) + " of " +
                             std::to_string(columns_.size()));
    buf_ += '\n';
    col_ = 0;
    return *this;
  }

  const std::string& text() const {
    if (col_ != 0) throw std::logic_error("csv ends mid-row");
    return buf_;
  }

 private:
  Csv& put(const char* type, const std::string& text) {
    if (col_ >= columns_.size()) throw std::logic_error("csv row overflow");
    if (columns_[col_].second != type)
      throw std::logic_error("csv column '" + columns_[col_].first + "' expects " +
                             columns_[col_].second + ", got " + type);
    if (col_) buf_ += ',';
    buf_ += text;
    ++col_;
    return *this;
  }

  std::vector<std::pair<std::string, std::string>> columns_;
  std::string buf_;
  std::size_t col_ = 0;
};

/// Collects every file the run writes; all writes happen on the calling
/// (orchestration) thread and never leave the output directory.
struct RunContext {
  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  std::vector<OutputFile> files;

  void write(const std::string& name, const std::string& content) {
    if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
      throw std::logic_error("output file names must stay inside the output directory");
    std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + p.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
    files.push_back(OutputFile{name, content.size(), checksum_hex(fnv1a64(content))});
  }

  void write_json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }
};

LawKind law_from_string(const std::string& v) {
  if (v == "massless_complex") return LawKind::MasslessComplex;
  if (v == "massless_real") return LawKind::MasslessReal;
  if (v == "massive_complex") return LawKind::MassiveComplex;
  throw std::invalid_argument("unknown field law '" + v + "'");
}

SpectralGrid profile_solver_grid(const ExperimentConfig& cfg) {
  int d = cfg.geti("problem.d");
  SpectralGrid def = default_ground_state_grid(d);
  double side = cfg.getd("solver.box_side");
  int modes = cfg.geti("solver.modes");
  return SpectralGrid(d, modes > 0 ? modes : def.modes(), side > 0 ? side : def.box_side(),
                      Convention::TwoPi);
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
  SolverOptions so;
  so.flow_step = cfg.getd("solver.flow_step");
  so.max_iter = cfg.geti("solver.max_iter");
  so.grad_tol = cfg.getd("solver.grad_tol");
  so.residual_tol = cfg.getd("solver.residual_tol");
  return so;
}

// ---------------------------------------------------------------------------
// ground_state: minimize the interpolation quotient, emit the constants
// table and the sampled profile.
// ---------------------------------------------------------------------------
RunStatus run_ground_state(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  GnsParameters gp{cfg.geti("problem.d"), cfg.getd("problem.s"), cfg.getd("problem.p")};
  GroundStateProfile q = solve_ground_state(gp, solver_options(cfg), profile_solver_grid(cfg));

  Csv constants({{"d", "int"},
                 {"s", "f64"},
                 {"p", "f64"},
                 {"box_side", "f64"},
                 {"modes", "int"},
                 {"l2", "f64"},
                 {"hs", "f64"},
                 {"lp_pow", "f64"},
                 {"j_value", "f64"},
                 {"c_gns", "f64"},
                 {"residual", "f64"},
                 {"iterations", "int"},
                 {"converged", "int"}});
  constants.cell(gp.d)
      .cell(gp.s)
      .cell(gp.p)
      .cell(q.field.grid().box_side())
      .cell(q.field.grid().modes())
      .cell(q.l2)
      .cell(q.hs)
      .cell(q.lp)
      .cell(q.j_value)
      .cell(q.c_gns)
      .cell(q.residual)
      .cell(q.iterations)
      .cell(q.converged ? 1 : 0)
      .end_row();
  ctx.write("constants.csv", constants.text());

  int G = cfg.geti("report.profile_points");
  if (G == 0) G = gp.d == 1 ? 1024 : (gp.d == 2 ? 128 : 32);
  std::vector<std::pair<std::string, std::string>> cols;
  for (int j = 0; j < gp.d; ++j)
    cols.emplace_back(gp.d == 1 ? "x" : ("x" + std::to_string(j + 1)), "f64");
  cols.emplace_back("q", "f64");
  Csv profile(cols);
  // Synthesis must resolve every mode, but the report grid may be coarser:
  // evaluate on a fine multiple of G and take every m-th sample, which lands
  // exactly on x = L k / G.
  int P = q.field.grid().points_per_dim();
  int m = G >= P ? 1 : (P + G - 1) / G;
  int Gf = m * G;
  std::vector<std::complex<double>> fine = values_on_grid(q.field, Gf);
  double L = q.field.grid().box_side();
  std::size_t count = 1;
  for (int j = 0; j < gp.d; ++j) count *= static_cast<std::size_t>(G);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rem = idx, flat = 0, stride = 1;
    std::array<std::size_t, 3> c{0, 0, 0};
    for (int j = gp.d - 1; j >= 0; --j) {
      c[j] = rem % static_cast<std::size_t>(G);
      rem /= static_cast<std::size_t>(G);
      flat += c[j] * static_cast<std::size_t>(m) * stride;
      stride *= static_cast<std::size_t>(Gf);
    }
    for (int j = 0; j < gp.d; ++j) profile.cell(L * static_cast<double>(c[j]) / G);
    profile.cell(fine[flat].real()).end_row();
  }
  ctx.write("profile.csv", profile.text());

  note = (q.converged ? "converged in " : "did not converge within ") +
         std::to_string(q.iterations) + " iterations; residual " + fmt_short(q.residual) +
         ", mass " + fmt_short(q.l2) + ", sharp constant " + fmt_short(q.c_gns);
  return q.converged ? RunStatus::Success : RunStatus::Error;
}

// ---------------------------------------------------------------------------
// gns_verify: the sharp-constant identity at the minimizer plus the
// inequality on random band-limited trial fields.
// ---------------------------------------------------------------------------
RunStatus run_gns_verify(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  GnsParameters gp{cfg.geti("problem.d"), cfg.getd("problem.s"), cfg.getd("problem.p")};
  SpectralGrid sgrid = profile_solver_grid(cfg);
  GroundStateProfile q = solve_ground_state(gp, solver_options(cfg), sgrid);

  int count = cfg.geti("trial.count");
  SpectralGrid tgrid(gp.d, cfg.geti("trial.modes"), sgrid.box_side(), Convention::TwoPi);
  FieldLaw law{LawKind::MasslessComplex, gp.s};
  GaussianStream stream(cfg.getu("run.seed"), kStreamGns);
  std::vector<double> jv(static_cast<std::size_t>(count));
  parallel_for(
      jv.size(), cfg.geti("run.workers"),
      [&](std::size_t i) {
        SpectralField u = sample_field(tgrid, law, stream, i);
        jv[i] = weinstein_functional(u, gp);
      },
      1);

  Csv table({{"trial", "int"}, {"j_value", "f64"}, {"c_times_j", "f64"}});
  double min_ratio = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (std::size_t i = 0; i < jv.size(); ++i) {
    double ratio = q.c_gns * jv[i];
    min_ratio = std::min(min_ratio, ratio);
    if (ratio < 1.0 - 1e-6) ++violations;
    table.cell(static_cast<int>(i)).cell(jv[i]).cell(ratio).end_row();
  }
  ctx.write("gns_samples.csv", table.text());

  double identity = q.c_gns * q.j_value;
  ordered_json j;
  j["d"] = gp.d;
  j["s"] = gp.s;
  j["p"] = gp.p;
  j["c_gns"] = q.c_gns;
  j["j_at_minimizer"] = q.j_value;
  j["c_times_j_at_minimizer"] = identity;
  j["identity_abs_error"] = std::abs(identity - 1.0);
  j["reference_converged"] = q.converged;
  j["reference_residual"] = q.residual;
  j["trials"] = count;
  j["trial_modes"] = cfg.geti("trial.modes");
  j["trial_box_side"] = sgrid.box_side();
  j["trial_law"] = "massless_complex";
  j["min_c_times_j"] = min_ratio;
  j["violations"] = violations;
  ctx.write_json("gns_report.json", j);

  note = "C*J(Q) = 1 " + std::string(std::abs(identity - 1.0) < 1e-8 ? "within" : "OUTSIDE") +
         " 1e-8 (error " + fmt_short(std::abs(identity - 1.0)) + "); min C*J(u) = " +
         fmt_short(min_ratio) + " over " + std::to_string(count) + " trials, " +
         std::to_string(violations) + " violations";
  return (q.converged && violations == 0) ? RunStatus::Success : RunStatus::Error;
}

// ---------------------------------------------------------------------------
// covariance: per-mode second moments of the sampled laws against their
// targets.
// ---------------------------------------------------------------------------
RunStatus run_covariance(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  int d = cfg.geti("problem.d");
  SpectralGrid grid(d, cfg.geti("field.modes"), 1.0,
                    convention_from_string(cfg.gets("grid.convention")));
  FieldLaw law{law_from_string(cfg.gets("field.law")), cfg.getd("problem.s")};
  GaussianStream stream(cfg.getu("run.seed"), kStreamCovariance);
  CovarianceReport rep =
      covariance_check(grid, law, cfg.getu("mc.samples"), stream, cfg.geti("report.max_mode"));

  Csv table({{"n1", "int"},
             {"n2", "int"},
             {"n3", "int"},
             {"target_variance", "f64"},
             {"empirical_variance", "f64"},
             {"variance_z", "f64"},
             {"mean_re", "f64"},
             {"mean_im", "f64"},
             {"mean_z", "f64"}});
  for (const ModeStat& ms : rep.modes) {
    table.cell(ms.n[0])
        .cell(ms.n[1])
        .cell(ms.n[2])
        .cell(ms.target_variance)
        .cell(ms.empirical_variance)
        .cell(ms.variance_z)
        .cell(ms.empirical_mean.real())
        .cell(ms.empirical_mean.imag())
        .cell(ms.mean_z)
        .end_row();
  }
  ctx.write("covariance.csv", table.text());

  ordered_json j;
  j["d"] = d;
  j["s"] = cfg.getd("problem.s");
  j["law"] = cfg.gets("field.law");
  j["convention"] = cfg.gets("grid.convention");
  j["modes"] = cfg.geti("field.modes");
  j["max_mode"] = cfg.geti("report.max_mode");
  j["samples"] = rep.samples;
  j["mode_rows"] = rep.modes.size();
  j["max_abs_variance_z"] = rep.max_abs_variance_z;
  j["max_abs_mean_z"] = rep.max_abs_mean_z;
  ctx.write_json("covariance_report.json", j);

  note = "max |variance z| = " + fmt_short(rep.max_abs_variance_z) + ", max |mean z| = " +
         fmt_short(rep.max_abs_mean_z) + " over " + std::to_string(rep.modes.size()) +
         " modes, " + std::to_string(rep.samples) + " samples";
  return RunStatus::Success;
}

// ---------------------------------------------------------------------------
// partition_ladder: the normalizability diagnostic over a truncation ladder.
// ---------------------------------------------------------------------------
void ladder_rows(Csv& table, const std::vector<PartitionEstimate>& levels) {
  for (const PartitionEstimate& e : levels) {
    table.cell(e.modes)
        .cell(e.samples)
        .cell(e.log_estimate)
        .cell(e.jackknife_se)
        .cell(e.acceptance_rate)
        .cell(e.max_weight_share)
        .cell(e.block_max_weight_share)
        .end_row();
  }
}

ordered_json ladder_json(const std::vector<PartitionEstimate>& levels) {
  ordered_json out = ordered_json::array();
  for (const PartitionEstimate& e : levels) {
    ordered_json row;
    row["N"] = e.modes;
    row["log_estimate"] = std::isfinite(e.log_estimate) ? ordered_json(e.log_estimate)
                                                        : ordered_json(nullptr);
    row["jackknife_se"] = std::isfinite(e.jackknife_se) ? ordered_json(e.jackknife_se)
                                                        : ordered_json(nullptr);
    row["acceptance_rate"] = e.acceptance_rate;
    row["max_weight_share"] = e.max_weight_share;
    row["block_max_weight_share"] = e.block_max_weight_share;
    out.push_back(row);
  }
  return out;
}

RunStatus run_partition_ladder(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  int d = cfg.geti("problem.d");
  double p = cfg.getd("problem.p");
  double K = cfg.getd("cutoff.K");
  FieldLaw law{law_from_string(cfg.gets("field.law")), cfg.getd("problem.s")};
  Convention conv = convention_from_string(cfg.gets("grid.convention"));
  GaussianStream stream(cfg.getu("run.seed"), kStreamPartition);

  std::vector<PartitionEstimate> levels;
  for (int N : cfg.get_int_list("ladder.N")) {
    SpectralGrid grid(d, N, 1.0, conv);
    levels.push_back(estimate_partition(grid, law, p, K, cfg.getu("mc.samples"), stream,
                                        cfg.geti("run.workers")));
  }
  Verdict verdict = divergence_diagnostic(levels);

  Csv table({{"N", "int"},
             {"samples", "u64"},
             {"log_estimate", "f64"},
             {"jackknife_se", "f64"},
             {"acceptance_rate", "f64"},
             {"max_weight_share", "f64"},
             {"block_max_weight_share", "f64"}});
  ladder_rows(table, levels);
  ctx.write("ladder.csv", table.text());

  ordered_json j;
  j["d"] = d;
  j["s"] = cfg.getd("problem.s");
  j["p"] = p;
  j["K"] = K;
  j["law"] = cfg.gets("field.law");
  j["convention"] = cfg.gets("grid.convention");
  j["samples_per_level"] = cfg.getu("mc.samples");
  j["levels"] = ladder_json(levels);
  j["verdict"] = to_string(verdict);
  ctx.write_json("verdict.json", j);

  note = std::string("verdict: ") + to_string(verdict);
  return verdict == Verdict::Inconclusive ? RunStatus::Inconclusive : RunStatus::Success;
}

// ---------------------------------------------------------------------------
// threshold_scan: bracket the convergent/divergent transition in the mass
// cutoff at the critical power.
// ---------------------------------------------------------------------------
RunStatus run_threshold_scan(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  ThresholdScanSpec spec;
  spec.d = cfg.geti("problem.d");
  spec.s = cfg.getd("problem.s");
  spec.p = cfg.getd("problem.p");
  spec.law = law_from_string(cfg.gets("field.law"));
  spec.convention = convention_from_string(cfg.gets("grid.convention"));
  spec.ladder = cfg.get_int_list("ladder.N");
  spec.samples = cfg.getu("mc.samples");
  spec.workers = cfg.geti("run.workers");

  // Cutoffs are configured as multiples of the reference ground-state mass,
  // expressed in the sampling convention (the Plain tag rescales it by
  // (2 pi)^{-d/2}); the report's reference_mass must agree.
  double ref = ground_state_mass(GnsParameters{spec.d, spec.s, spec.p});
  if (spec.convention == Convention::Plain) ref *= std::pow(2.0 * M_PI, -0.5 * spec.d);
  std::vector<double> multiples = cfg.get_double_list("scan.k_over_ref");
  for (double m : multiples) spec.k_values.push_back(m * ref);

  GaussianStream stream(cfg.getu("run.seed"), kStreamScan);
  TransitionReport rep = threshold_scan(spec, stream);
  if (std::abs(rep.reference_mass - ref) > 1e-9 * ref)
    throw std::runtime_error("reference mass disagrees with the scan report");

  Csv table({{"k_over_ref", "f64"},
             {"K", "f64"},
             {"N", "int"},
             {"log_estimate", "f64"},
             {"jackknife_se", "f64"},
             {"acceptance_rate", "f64"},
             {"max_weight_share", "f64"},
             {"block_max_weight_share", "f64"},
             {"verdict", "str"}});
  for (std::size_t k = 0; k < rep.k_values.size(); ++k) {
    for (const PartitionEstimate& e : rep.ladders[k]) {
      table.cell(multiples[k])
          .cell(rep.k_values[k])
          .cell(e.modes)
          .cell(e.log_estimate)
          .cell(e.jackknife_se)
          .cell(e.acceptance_rate)
          .cell(e.max_weight_share)
          .cell(e.block_max_weight_share)
          .cell(std::string(to_string(rep.verdicts[k])))
          .end_row();
    }
  }
  ctx.write("scan.csv", table.text());

  // Plot data: cutoff against the log-estimate, one file per ladder level.
  for (std::size_t lvl = 0; lvl < spec.ladder.size(); ++lvl) {
    Csv plot({{"K", "f64"}, {"log_estimate", "f64"}});
    for (std::size_t k = 0; k < rep.k_values.size(); ++k)
      plot.cell(rep.k_values[k]).cell(rep.ladders[k][lvl].log_estimate).end_row();
    ctx.write("plot_logZ_N" + std::to_string(spec.ladder[lvl]) + ".csv", plot.text());
  }

  ordered_json j;
  j["d"] = spec.d;
  j["s"] = spec.s;
  j["p"] = spec.p;
  j["law"] = cfg.gets("field.law");
  j["convention"] = cfg.gets("grid.convention");
  j["ladder"] = spec.ladder;
  j["samples_per_cell"] = spec.samples;
  j["reference_mass"] = rep.reference_mass;
  j["k_over_ref"] = multiples;
  j["k_values"] = rep.k_values;
  ordered_json verdicts = ordered_json::array();
  for (Verdict v : rep.verdicts) verdicts.push_back(to_string(v));
  j["verdicts"] = verdicts;
  j["threshold_lower"] = std::isfinite(rep.threshold_lower)
                             ? ordered_json(rep.threshold_lower)
                             : ordered_json(nullptr);
  j["threshold_upper"] = std::isfinite(rep.threshold_upper)
                             ? ordered_json(rep.threshold_upper)
                             : ordered_json(nullptr);
  j["bracket_note"] = rep.bracket_note;
  ordered_json lads = ordered_json::array();
  for (const auto& lad : rep.ladders) lads.push_back(ladder_json(lad));
  j["ladders"] = lads;
  ctx.write_json("transition.json", j);

  bool bracketed =
      std::isfinite(rep.threshold_lower) && std::isfinite(rep.threshold_upper);
  if (bracketed) {
    note = "transition bracketed in [" + fmt_short(rep.threshold_lower) + ", " +
           fmt_short(rep.threshold_upper) + "] = [" +
           fmt_short(rep.threshold_lower / rep.reference_mass) + ", " +
           fmt_short(rep.threshold_upper / rep.reference_mass) + "] of the reference mass";
    return RunStatus::Success;
  }
  note = "no bracket located";
  if (!rep.bracket_note.empty()) note += " (" + rep.bracket_note + ")";
  return RunStatus::Inconclusive;
}

// ---------------------------------------------------------------------------
// ou_rates: smoother approximation error and derivative cost against the
// band, sampled and in closed form.
// ---------------------------------------------------------------------------
RunStatus run_ou_rates(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  RateScanSpec spec;
  spec.d = cfg.geti("problem.d");
  spec.s = cfg.getd("problem.s");
  spec.m_ladder = cfg.get_int_list("ladder.M");
  spec.samples = cfg.getu("mc.samples");
  spec.steps = cfg.geti("mc.steps");
  spec.modes = cfg.geti("field.modes");
  spec.convention = convention_from_string(cfg.gets("grid.convention"));
  spec.workers = cfg.geti("run.workers");
  GaussianStream stream(cfg.getu("run.seed"), kStreamRates);
  RateReport rep = verify_approx_rates(spec, stream);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Csv table({{"M", "int"},
             {"l2_error_exact", "f64"},
             {"l2_error_mc", "f64"},
             {"l2_error_se", "f64"},
             {"drift_cost_exact", "f64"},
             {"drift_cost_mc", "f64"},
             {"drift_cost_se", "f64"}});
  for (std::size_t i = 0; i < rep.m_values.size(); ++i) {
    bool mc = i < rep.l2_error.size();
    table.cell(rep.m_values[i])
        .cell(rep.l2_error_exact[i])
        .cell(mc ? rep.l2_error[i] : nan)
        .cell(mc ? rep.l2_error_se[i] : nan)
        .cell(rep.drift_cost_exact[i])
        .cell(mc ? rep.drift_cost[i] : nan)
        .cell(mc ? rep.drift_cost_se[i] : nan)
        .end_row();
  }
  ctx.write("rates.csv", table.text());

  bool mc = !rep.l2_error.empty();
  ordered_json j;
  j["d"] = spec.d;
  j["s"] = spec.s;
  j["convention"] = cfg.gets("grid.convention");
  j["m_ladder"] = rep.m_values;
  j["modes"] = spec.modes > 0 ? spec.modes : spec.m_ladder.back();
  j["samples"] = rep.samples;
  j["steps"] = rep.steps;
  j["l2_slope_exact"] = rep.l2_slope_exact;
  j["l2_slope_mc"] = mc ? ordered_json(rep.l2_slope) : ordered_json(nullptr);
  j["l2_target"] = rep.l2_target;
  j["drift_slope_exact"] = rep.drift_slope_exact;
  j["drift_slope_mc"] = mc ? ordered_json(rep.drift_slope) : ordered_json(nullptr);
  j["drift_target"] = rep.drift_target;
  ctx.write_json("rate_fits.json", j);

  note = "L2-error slope " + fmt_short(rep.l2_slope_exact) + " (target " +
         fmt_short(rep.l2_target) + "), cost slope " + fmt_short(rep.drift_slope_exact) +
         " (target " + fmt_short(rep.drift_target) + ") in closed form";
  if (mc)
    note += "; sampled " + fmt_short(rep.l2_slope) + " / " + fmt_short(rep.drift_slope);
  return RunStatus::Success;
}

// ---------------------------------------------------------------------------
// drift_divergence: the rescaled-soliton drift objective over a ladder of
// concentration scales, with the divergence-rate fit.
// ---------------------------------------------------------------------------
RunStatus run_drift_divergence(RunContext& ctx, std::string& note) {
  const ExperimentConfig& cfg = ctx.cfg;
  GnsParameters gp{cfg.geti("problem.d"), cfg.getd("problem.s"), cfg.getd("problem.p")};
  GroundStateProfile q = solve_ground_state(gp, SolverOptions{}, profile_solver_grid(cfg));
  if (!q.converged) {
    note = "profile solve did not converge";
    return RunStatus::Error;
  }

  SpectralGrid torus(gp.d, cfg.geti("field.modes"), 1.0,
                     convention_from_string(cfg.gets("grid.convention")));
  LawKind kind = law_from_string(cfg.gets("field.law"));
  std::vector<double> rho = cfg.get_double_list("ladder.rho");
  std::vector<int> bands = cfg.get_int_list("ladder.M");
  GaussianStream stream(cfg.getu("run.seed"), kStreamDrift);

  Csv wtable({{"rho", "f64"},
              {"M", "int"},
              {"alpha", "f64"},
              {"eta", "f64"},
              {"l2_mass", "f64"},
              {"mean_abs", "f64"},
              {"h_value", "f64"},
              {"h_scaled", "f64"},
              {"lp_pow", "f64"},
              {"lp_scaled", "f64"}});
  Csv otable({{"rho", "f64"},        {"M", "int"},
              {"a_term", "f64"},     {"b_term", "f64"},
              {"c_term", "f64"},     {"c_se", "f64"},
              {"d_term", "f64"},     {"d_se", "f64"},
              {"e_quadratic", "f64"}, {"e_quadratic_se", "f64"},
              {"e_quadratic_exact", "f64"},
              {"e_cross", "f64"},    {"e_cross_se", "f64"},
              {"total", "f64"},      {"total_se", "f64"},
              {"control_side", "f64"}, {"control_side_se", "f64"},
              {"worst_energy_margin", "f64"}, {"d_event_probability", "f64"}});

  std::vector<DriftObjectiveBreakdown> levels;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    DriftParameters dp;
    dp.d = gp.d;
    dp.s = gp.s;
    dp.p = gp.p;
    dp.K = cfg.getd("cutoff.K");
    dp.rho = rho[i];
    dp.delta = cfg.getd("drift.delta");
    dp.alpha = cfg.getd("drift.alpha");
    dp.eta = cfg.getd("drift.eta");
    SolitonDrift drift = build_soliton_drift(dp, q, torus);
    int M = bands.empty() ? static_cast<int>(std::lround(1.0 / rho[i])) : bands[i];
    DriftObjectiveBreakdown bd =
        objective_breakdown(drift, M, cfg.getu("mc.samples"), stream, cfg.geti("mc.steps"),
                            cfg.geti("run.workers"), kind);
    wtable.cell(drift.params.rho)
        .cell(M)
        .cell(drift.params.alpha)
        .cell(drift.params.eta)
        .cell(drift.l2_mass)
        .cell(drift.mean_abs)
        .cell(drift.h_value)
        .cell(drift.h_scaled)
        .cell(drift.lp_pow)
        .cell(drift.lp_scaled)
        .end_row();
    otable.cell(bd.rho)
        .cell(bd.m_band)
        .cell(bd.a_term)
        .cell(bd.b_term)
        .cell(bd.c_term)
        .cell(bd.c_se)
        .cell(bd.d_term)
        .cell(bd.d_se)
        .cell(bd.e_quadratic)
        .cell(bd.e_quadratic_se)
        .cell(bd.e_quadratic_exact)
        .cell(bd.e_cross)
        .cell(bd.e_cross_se)
        .cell(bd.total)
        .cell(bd.total_se)
        .cell(bd.control_side)
        .cell(bd.control_side_se)
        .cell(bd.worst_energy_margin)
        .cell(bd.d_event_probability)
        .end_row();
    levels.push_back(bd);
  }
  ctx.write("drift.csv", wtable.text());
  ctx.write("objective.csv", otable.text());

  ordered_json j;
  j["d"] = gp.d;
  j["s"] = gp.s;
  j["p"] = gp.p;
  j["K"] = cfg.getd("cutoff.K");
  j["law"] = cfg.gets("field.law");
  j["convention"] = cfg.gets("grid.convention");
  j["modes"] = cfg.geti("field.modes");
  j["samples"] = cfg.getu("mc.samples");
  j["steps"] = cfg.geti("mc.steps");
  try {
    DivergenceRateFit fit = divergence_rate_fit(levels, gp.d, gp.p);
    j["fitted"] = true;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["target"] = fit.target;
    j["residual_max"] = fit.residual_max;
    j["rho"] = fit.rho;
    j["neg_total"] = fit.neg_total;
    ctx.write_json("divergence_fit.json", j);
    note = "log(-total) slope " + fmt_short(fit.slope) + " against log(1/rho), target " +
           fmt_short(fit.target) + " (max residual " + fmt_short(fit.residual_max) + ")";
    return RunStatus::Success;
  } catch (const std::runtime_error& e) {
    j["fitted"] = false;
    j["reason"] = e.what();
    ctx.write_json("divergence_fit.json", j);
    note = std::string("no divergence fit: ") + e.what();
    return RunStatus::Inconclusive;
  }
}

RunStatus dispatch(RunContext& ctx, std::string& note) {
  switch (ctx.cfg.kind) {
    case ExperimentKind::GroundState: return run_ground_state(ctx, note);
    case ExperimentKind::GnsVerify: return run_gns_verify(ctx, note);
    case ExperimentKind::Covariance: return run_covariance(ctx, note);
    case ExperimentKind::PartitionLadder: return run_partition_ladder(ctx, note);
    case ExperimentKind::ThresholdScan: return run_threshold_scan(ctx, note);
    case ExperimentKind::OuRates: return run_ou_rates(ctx, note);
    case ExperimentKind::DriftDivergence: return run_drift_divergence(ctx, note);
  }
  throw std::logic_error("unknown experiment kind");
}

}  // namespace

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Success: return "success";
    case RunStatus::Inconclusive: return "inconclusive";
    case RunStatus::Error: return "error";
  }
  return "unknown";
}

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Success: return 0;
    case RunStatus::Inconclusive: return 2;
    case RunStatus::Error: return 1;
  }
  return 1;
}

std::string resolve_out_dir(const ExperimentConfig& config) {
  std::string out = config.gets("run.out");
  if (!out.empty()) return out;
  const char* env = std::getenv("FGIBBS_OUT");
  std::filesystem::path root = (env && *env) ? env : "runs";
  return (root / to_string(config.kind)).string();
}

RunManifest run_experiment(const ExperimentConfig& config) {
  validate_config(config);

  RunManifest manifest;
  manifest.kind = config.kind;
  manifest.config_hash = config.hash();
  std::filesystem::path dir = resolve_out_dir(config);
  std::filesystem::create_directories(dir);
  manifest.out_dir = dir.string();

  std::string started = utc_now();
  RunContext ctx{config, dir, {}};
  std::string note;
  RunStatus status;
  try {
    status = dispatch(ctx, note);
  } catch (const std::exception& e) {
    status = RunStatus::Error;
    note = std::string(to_string(config.kind)) + ": " + e.what();
  }
  manifest.status = status;
  manifest.note = note;
  manifest.files = ctx.files;

  ordered_json j;
  j["artifact"] = "fgibbs";
  j["artifact_version"] = kArtifactVersion;
  j["experiment"] = to_string(config.kind);
  j["config_hash"] = manifest.config_hash;
  j["status"] = to_string(status);
  j["complete"] = status != RunStatus::Error;
  j["note"] = note;
  j["started_utc"] = started;
  j["finished_utc"] = utc_now();
  ordered_json rc = ordered_json::object();
  for (const auto& [key, e] : config.entries) {
    ordered_json je;
    je["value"] = e.value;
    je["source"] = to_string(e.source);
    if (e.line > 0) je["line"] = e.line;
    rc[key] = je;
  }
  j["resolved_config"] = rc;
  ordered_json outs = ordered_json::array();
  for (const OutputFile& f : manifest.files) {
    ordered_json fo;
    fo["file"] = f.name;
    fo["bytes"] = f.bytes;
    fo["fnv1a64"] = f.checksum;
    outs.push_back(fo);
  }
  j["outputs"] = outs;

  std::filesystem::path mpath = dir / "manifest.json";
  std::ofstream mout(mpath, std::ios::binary | std::ios::trunc);
  if (!mout) throw std::runtime_error("cannot write manifest '" + mpath.string() + "'");
  std::string mtext = j.dump(2) + "\n";
  mout.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  mout.close();
  if (!mout) throw std::runtime_error("manifest write failed for '" + mpath.string() + "'");
  manifest.manifest_path = mpath.string();
  return manifest;
}

}  // namespace fgibbs
