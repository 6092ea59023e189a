#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "fgibbs/gaussian_field.hpp"
#include "fgibbs/stats.hpp"

namespace fgibbs {

/// (1/p) |u|_{L^p}^p
double potential_energy(const SpectralField& u, double p);

/// Per-sample mass and potential at one truncation level. Ladders reuse the
/// mode-keyed random stream (common random numbers across truncations) and K
/// scans reuse the table itself (common random numbers across cutoffs).
struct SampleTable {
  int modes = 0;
  double p = 0;
  std::vector<double> mass;       // |u_i|_{L^2}
  std::vector<double> potential;  // R_p(u_i)
};

SampleTable build_sample_table(const SpectralGrid& grid, const FieldLaw& law, double p,
                               std::uint64_t samples, const GaussianStream& stream,
                               int workers = 1);

struct PartitionEstimate {
  int modes = 0;
  double p = 0;
  double K = 0;
  std::uint64_t samples = 0;
  double log_estimate = kLogZero;  // log (1/S) sum exp(R_p) 1{mass <= K}
  double jackknife_se = 0;         // leave-one-out, on the log scale
  double acceptance_rate = 0;      // fraction passing the mass cutoff
  double max_weight_share = 0;     // largest single weight / total weight
  // Same share measured inside contiguous sample blocks (sized for ~32
  // accepted samples each, at most 50 blocks), worst block reported. A giant
  // weight always dominates its own block, so this de-randomizes the
  // heavy-tail flag: the plain share compares the top sample against other
  // near-top samples, whose count is luck of the draw.
  double block_max_weight_share = 0;
};

/// log E[exp(R_p) 1{mass <= K}], estimated from a prebuilt table. Accumulation
/// is log-sum-exp throughout: the result is finite or the -inf sentinel, never
/// an overflow. All samples rejected leaves the sentinel with infinite se.
PartitionEstimate estimate_partition(const SampleTable& table, double K);

/// Convenience form that draws the table and estimates in one step.
PartitionEstimate estimate_partition(const SpectralGrid& grid, const FieldLaw& law, double p,
                                     double K, std::uint64_t samples, const GaussianStream& stream,
                                     int workers = 1);

enum class Verdict { Convergent, Divergent, Inconclusive };
const char* to_string(Verdict v);

/// Classifies a truncation ladder (ascending N, shared p and K, >= 3 levels):
/// convergent when the top two log-estimates agree within 2 combined standard
/// errors and the top level is not tail-dominated (tail share < 0.5);
/// divergent when the top three log-estimates rise monotonically by more than
/// 4 combined standard errors, or any level is tail-dominated (tail share
/// > 0.9); otherwise inconclusive. The tail share of a level is
/// max(max_weight_share, block_max_weight_share): the blockwise share is what
/// makes the flag reproducible, since the plain share depends on how many
/// near-top weights happened to be drawn (an O(1)-spaced order statistic),
/// while a dominant weight always swamps its own block. Shares are consulted
/// only on levels with enough accepted samples to be informative (>= 16);
/// below that, n near-equal weights each hold ~1/n of the total and the
/// share says nothing about the tail.
Verdict divergence_diagnostic(const std::vector<PartitionEstimate>& ladder);

struct ThresholdScanSpec {
  int d = 1;
  double s = 1.0;
  double p = 6.0;  // must equal the critical exponent 4s/d + 2
  LawKind law = LawKind::MassiveComplex;
  Convention convention = Convention::TwoPi;
  std::vector<double> k_values;          // absolute mass cutoffs, ascending
  std::vector<int> ladder = {16, 32, 64, 128};
  std::uint64_t samples = 100000;
  int workers = 1;
};

struct TransitionReport {
  std::vector<double> k_values;
  std::vector<Verdict> verdicts;                        // one per K
  std::vector<std::vector<PartitionEstimate>> ladders;  // [K][level]
  double reference_mass = 0;    // |Q|_{L^2} expressed in the sampling convention
  double threshold_lower = 0;   // largest convergent K (NaN if none)
  double threshold_upper = 0;   // smallest divergent K (NaN if none)
  std::string bracket_note;     // "", "above grid", "below grid", "non-monotone"
};

/// Runs a truncation ladder per cutoff K on the unit torus at the critical
/// exponent and brackets the convergent/divergent transition. The reference
/// mass is the canonical ground-state mass, rescaled by (2 pi)^{-d/2} under
/// the Plain tag (the sampling convention moves the threshold).
TransitionReport threshold_scan(const ThresholdScanSpec& spec, const GaussianStream& stream);

}  // namespace fgibbs
