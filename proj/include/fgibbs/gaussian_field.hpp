#pragma once
#include <complex>
#include <cstdint>
#include <vector>

#include "fgibbs/field.hpp"
#include "fgibbs/rng.hpp"

namespace fgibbs {

enum class LawKind { MasslessComplex, MasslessReal, MassiveComplex };

/// Free-field law: mode n is drawn as g_n / sigma(n) with E|g_n|^2 = 1.
/// Massless laws use sigma(n) = m(n)^s under the grid convention and leave
/// the zero mode at 0; the massive law uses sigma(n) = (1 + (2 pi |n|/L)^2)^(s/2)
/// and samples the zero mode too. MasslessReal adds g_{-n} = conj g_n.
struct FieldLaw {
  LawKind kind = LawKind::MasslessComplex;
  double s = 1.0;
};

double law_sigma(const SpectralGrid& grid, const FieldLaw& law, const std::array<int, 3>& n);

SpectralField sample_field(const SpectralGrid& grid, const FieldLaw& law,
                           const GaussianStream& stream, std::uint64_t sample_index);

struct MomentStatistics {
  double mean = 0;
  double variance = 0;
  double se = 0;  // standard error of mean
  double max = 0;
  std::uint64_t samples = 0;
  bool divergent_regime = false;  // s <= d/2: sup-norm moments expected to blow up in N
};

/// Empirical moments of ||u||_{L^q}^p; q may be infinity (sup norm), p = 0
/// degenerates to the constant 1.
MomentStatistics moment_statistics(const SpectralGrid& grid, const FieldLaw& law, double p,
                                   double q, std::uint64_t samples, const GaussianStream& stream,
                                   int workers = 1);

struct StabilityCheck {
  MomentStatistics coarse, fine;  // at N and 2N
  bool stable = false;            // |difference| < 2 combined standard errors
};
StabilityCheck moment_stability(const SpectralGrid& grid, const FieldLaw& law, double p, double q,
                                std::uint64_t samples, const GaussianStream& stream, int workers = 1);

struct CutoffProbability {
  double probability = 0;
  double se = 0;
  std::uint64_t samples = 0;
};
CutoffProbability mass_cutoff_probability(const SpectralGrid& grid, const FieldLaw& law, double K,
                                          std::uint64_t samples, const GaussianStream& stream,
                                          int workers = 1);

struct ModeStat {
  std::array<int, 3> n;
  double target_variance = 0;
  double empirical_variance = 0;
  double variance_z = 0;  // (empirical - target) / se
  std::complex<double> empirical_mean;
  double mean_z = 0;
};

struct CovarianceReport {
  std::vector<ModeStat> modes;
  double max_abs_variance_z = 0;
  double max_abs_mean_z = 0;
  std::uint64_t samples = 0;
};

/// Per-mode second-moment check against the law, for all |n|_inf <= nmax.
CovarianceReport covariance_check(const SpectralGrid& grid, const FieldLaw& law,
                                  std::uint64_t samples, const GaussianStream& stream, int nmax);

}  // namespace fgibbs
