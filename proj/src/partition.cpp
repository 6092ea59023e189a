#include "fgibbs/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fgibbs/ground_state.hpp"
#include "fgibbs/thread_pool.hpp"

namespace fgibbs {

double potential_energy(const SpectralField& u, double p) {
  if (!(p > 2.0)) throw std::invalid_argument("potential exponent must satisfy p > 2");
  return std::pow(lp_norm(u, p), p) / p;
}

SampleTable build_sample_table(const SpectralGrid& grid, const FieldLaw& law, double p,
                               std::uint64_t samples, const GaussianStream& stream, int workers) {
  if (!(p > 2.0)) throw std::invalid_argument("potential exponent must satisfy p > 2");
  if (samples == 0) throw std::invalid_argument("need at least one sample");
  SampleTable table;
  table.modes = grid.modes();
  table.p = p;
  table.mass.resize(samples);
  table.potential.resize(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    SpectralField u = sample_field(grid, law, stream, i);
    table.mass[i] = l2_norm(u);
    table.potential[i] = potential_energy(u, p);
  });
  return table;
}

namespace {

// A block's share is only meaningful when the block holds enough accepted
// samples that near-equal light weights cannot mimic domination by count
// alone (n accepted near-equal weights give a share of about 1/n), so the
// block count adapts: ~32 accepted samples per block, at most 50 blocks.
// Many blocks also keep independent giant weights from sharing a block,
// which would cap the worst share below the domination threshold.
constexpr std::size_t kTargetBlockAccepted = 32;
constexpr std::size_t kMaxShareBlocks = 50;
constexpr std::size_t kMinBlockAccepted = 16;

/// Worst single-weight share over contiguous sample blocks. Falls back to
/// the full-table share when no block is sufficiently occupied.
double block_max_share(const std::vector<double>& logw, double full_share) {
  std::size_t n = logw.size();
  std::size_t accepted_total = 0;
  for (double w : logw)
    if (w != kLogZero) ++accepted_total;
  std::size_t blocks =
      std::clamp<std::size_t>(accepted_total / kTargetBlockAccepted, 1, kMaxShareBlocks);
  double worst = -1.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t begin = n * b / blocks;
    std::size_t end = n * (b + 1) / blocks;
    if (begin >= end) continue;
    std::size_t accepted = 0;
    double top = kLogZero;
    for (std::size_t i = begin; i < end; ++i) {
      if (logw[i] != kLogZero) ++accepted;
      top = std::max(top, logw[i]);
    }
    if (accepted < kMinBlockAccepted) continue;
    std::vector<double> slice(logw.begin() + static_cast<std::ptrdiff_t>(begin),
                              logw.begin() + static_cast<std::ptrdiff_t>(end));
    double total = log_sum_exp(slice);
    worst = std::max(worst, std::exp(top - total));
  }
  return worst >= 0.0 ? worst : full_share;
}

}  // namespace

PartitionEstimate estimate_partition(const SampleTable& table, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("mass cutoff must be positive");
  std::vector<double> logw(table.mass.size());
  for (std::size_t i = 0; i < logw.size(); ++i)
    logw[i] = (table.mass[i] <= K) ? table.potential[i] : kLogZero;
  LogMeanExp lme = log_mean_exp(logw);
  PartitionEstimate est;
  est.modes = table.modes;
  est.p = table.p;
  est.K = K;
  est.samples = logw.size();
  est.log_estimate = lme.log_mean;
  est.jackknife_se = lme.se;
  est.acceptance_rate = static_cast<double>(lme.accepted) / static_cast<double>(lme.total);
  est.max_weight_share = lme.max_share;
  est.block_max_weight_share = block_max_share(logw, lme.max_share);
  return est;
}

PartitionEstimate estimate_partition(const SpectralGrid& grid, const FieldLaw& law, double p,
                                     double K, std::uint64_t samples, const GaussianStream& stream,
                                     int workers) {
  return estimate_partition(build_sample_table(grid, law, p, samples, stream, workers), K);
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Convergent: return "convergent";
    case Verdict::Divergent: return "divergent";
    default: return "inconclusive";
  }
}

namespace {

/// difference that treats a shared -inf sentinel as a plateau
double log_gap(double hi, double lo) {
  if (std::isinf(hi) && std::isinf(lo) && hi == lo) return 0.0;
  return hi - lo;
}

double tail_share(const PartitionEstimate& e) {
  return std::max(e.max_weight_share, e.block_max_weight_share);
}

/// With only a handful of accepted samples the top-weight share is large by
/// count alone (n near-equal weights each hold ~1/n), so it carries no
/// evidence about tail domination either way.
bool share_is_evidential(const PartitionEstimate& e) {
  double accepted = e.acceptance_rate * static_cast<double>(e.samples);
  return accepted >= static_cast<double>(kMinBlockAccepted);
}

}  // namespace

Verdict divergence_diagnostic(const std::vector<PartitionEstimate>& ladder) {
  if (ladder.size() < 3) throw std::invalid_argument("ladder needs at least 3 levels");
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
    if (ladder[i].p != ladder[i + 1].p || ladder[i].K != ladder[i + 1].K)
      throw std::invalid_argument("ladder levels disagree on (p, K)");
    if (ladder[i].modes >= ladder[i + 1].modes)
      throw std::invalid_argument("ladder truncations must be strictly increasing");
  }
  const PartitionEstimate& top = ladder[ladder.size() - 1];
  const PartitionEstimate& mid = ladder[ladder.size() - 2];
  const PartitionEstimate& low = ladder[ladder.size() - 3];

  for (const PartitionEstimate& level : ladder)
    if (share_is_evidential(level) && tail_share(level) > 0.9) return Verdict::Divergent;

  double plateau_gap = std::abs(log_gap(top.log_estimate, mid.log_estimate));
  double plateau_se = std::hypot(top.jackknife_se, mid.jackknife_se);
  bool tail_ok = !share_is_evidential(top) || tail_share(top) < 0.5;
  if (plateau_gap <= 2.0 * plateau_se && tail_ok) return Verdict::Convergent;

  bool rising = low.log_estimate < mid.log_estimate && mid.log_estimate < top.log_estimate;
  double rise = log_gap(top.log_estimate, low.log_estimate);
  double rise_se = std::hypot(top.jackknife_se, low.jackknife_se);
  if (rising && rise > 4.0 * rise_se) return Verdict::Divergent;
  return Verdict::Inconclusive;
}

TransitionReport threshold_scan(const ThresholdScanSpec& spec, const GaussianStream& stream) {
  double critical_p = 4.0 * spec.s / spec.d + 2.0;
  if (std::abs(spec.p - critical_p) > 1e-9)
    throw std::invalid_argument("threshold scan requires the critical exponent p = 4s/d + 2");
  if (spec.k_values.empty() || !std::is_sorted(spec.k_values.begin(), spec.k_values.end()))
    throw std::invalid_argument("cutoff grid must be nonempty and ascending");
  if (spec.ladder.size() < 3 || !std::is_sorted(spec.ladder.begin(), spec.ladder.end()))
    throw std::invalid_argument("truncation ladder must be ascending with at least 3 levels");

  TransitionReport rep;
  rep.k_values = spec.k_values;
  rep.ladders.assign(spec.k_values.size(), {});
  FieldLaw law{spec.law, spec.s};
  for (int N : spec.ladder) {
    SpectralGrid grid(spec.d, N, 1.0, spec.convention);
    SampleTable table = build_sample_table(grid, law, spec.p, spec.samples, stream, spec.workers);
    for (std::size_t j = 0; j < spec.k_values.size(); ++j)
      rep.ladders[j].push_back(estimate_partition(table, spec.k_values[j]));
  }
  for (const auto& ladder : rep.ladders) rep.verdicts.push_back(divergence_diagnostic(ladder));

  double canonical = ground_state_mass({spec.d, spec.s, spec.p});
  rep.reference_mass = (spec.convention == Convention::Plain)
                           ? canonical * std::pow(2.0 * M_PI, -spec.d / 2.0)
                           : canonical;

  double nan = std::numeric_limits<double>::quiet_NaN();
  rep.threshold_lower = nan;
  rep.threshold_upper = nan;
  for (std::size_t j = 0; j < rep.verdicts.size(); ++j) {
    if (rep.verdicts[j] == Verdict::Convergent) rep.threshold_lower = rep.k_values[j];
    if (rep.verdicts[j] == Verdict::Divergent && std::isnan(rep.threshold_upper))
      rep.threshold_upper = rep.k_values[j];
  }
  if (std::isnan(rep.threshold_upper))
    rep.bracket_note = "above grid";
  else if (std::isnan(rep.threshold_lower))
    rep.bracket_note = "below grid";
  else if (rep.threshold_lower > rep.threshold_upper)
    rep.bracket_note = "non-monotone";
  return rep;
}

}  // namespace fgibbs
