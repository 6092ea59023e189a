#include "fgibbs/gaussian_field.hpp"

#include <cmath>
#include <stdexcept>

#include "fgibbs/thread_pool.hpp"

namespace fgibbs {

double law_sigma(const SpectralGrid& grid, const FieldLaw& law, const std::array<int, 3>& n) {
  if (!(law.s > 0)) throw std::invalid_argument("field law requires s > 0");
  if (law.kind == LawKind::MassiveComplex) {
    double w = 2.0 * M_PI * grid.mode_abs(n) / grid.box_side();
    return std::pow(1.0 + w * w, law.s / 2.0);
  }
  double m = grid.multiplier(n);
  return std::pow(m, law.s);  // callers skip n = 0 for massless laws
}

SpectralField sample_field(const SpectralGrid& grid, const FieldLaw& law,
                           const GaussianStream& stream, std::uint64_t sample_index) {
  const bool massless = law.kind != LawKind::MassiveComplex;
  SpectralField u(grid, law.kind == LawKind::MasslessReal);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    if (massless && grid.mode_abs(n) == 0.0) continue;  // zero mode pinned at 0
    double sigma = law_sigma(grid, law, n);
    if (law.kind == LawKind::MasslessReal) {
      // one draw per +/- pair, keyed by the representative with positive
      // leading component
      int lead = 0;
      for (int j = 0; j < grid.dim(); ++j)
        if (n[j] != 0) {
          lead = n[j];
          break;
        }
      if (lead > 0) {
        u[i] = stream.complex_gaussian(sample_index, grid.mode_code(n), 0) / sigma;
      } else {
        std::array<int, 3> m{-n[0], -n[1], -n[2]};
        u[i] = std::conj(stream.complex_gaussian(sample_index, grid.mode_code(m), 0)) / sigma;
      }
    } else {
      u[i] = stream.complex_gaussian(sample_index, grid.mode_code(n), 0) / sigma;
    }
  }
  return u;
}

MomentStatistics moment_statistics(const SpectralGrid& grid, const FieldLaw& law, double p,
                                   double q, std::uint64_t samples, const GaussianStream& stream,
                                   int workers) {
  if (p < 0) throw std::invalid_argument("moment exponent p must be >= 0");
  if (!(q >= 1.0)) throw std::invalid_argument("norm exponent q must be >= 1 (or infinity)");
  if (samples == 0) throw std::invalid_argument("need at least one sample");
  MomentStatistics r;
  r.samples = samples;
  r.divergent_regime = (law.s <= grid.dim() / 2.0);
  std::vector<double> vals(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    SpectralField u = sample_field(grid, law, stream, i);
    double norm = std::isinf(q) ? sup_norm(u) : lp_norm(u, q);
    vals[i] = (p == 0.0) ? 1.0 : std::pow(norm, p);
  });
  double mx = 0;
  double sum = 0;
  for (double v : vals) {
    sum += v;
    mx = std::max(mx, v);
  }
  r.mean = sum / static_cast<double>(samples);
  double q2 = 0;
  for (double v : vals) q2 += (v - r.mean) * (v - r.mean);
  r.variance = samples > 1 ? q2 / static_cast<double>(samples - 1) : 0.0;
  r.se = std::sqrt(r.variance / static_cast<double>(samples));
  r.max = mx;
  return r;
}

StabilityCheck moment_stability(const SpectralGrid& grid, const FieldLaw& law, double p, double q,
                                std::uint64_t samples, const GaussianStream& stream, int workers) {
  StabilityCheck c;
  c.coarse = moment_statistics(grid, law, p, q, samples, stream, workers);
  SpectralGrid fine(grid.dim(), 2 * grid.modes(), grid.box_side(), grid.convention());
  c.fine = moment_statistics(fine, law, p, q, samples, stream, workers);
  double tol = 2.0 * std::sqrt(c.coarse.se * c.coarse.se + c.fine.se * c.fine.se);
  c.stable = std::abs(c.coarse.mean - c.fine.mean) < tol;
  return c;
}

CutoffProbability mass_cutoff_probability(const SpectralGrid& grid, const FieldLaw& law, double K,
                                          std::uint64_t samples, const GaussianStream& stream,
                                          int workers) {
  if (!(K > 0)) throw std::invalid_argument("mass cutoff K must be positive");
  if (samples == 0) throw std::invalid_argument("need at least one sample");
  std::vector<unsigned char> inside(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    SpectralField u = sample_field(grid, law, stream, i);
    inside[i] = l2_norm(u) <= K ? 1 : 0;
  });
  std::size_t hits = 0;
  for (auto b : inside) hits += b;
  CutoffProbability r;
  r.samples = samples;
  r.probability = static_cast<double>(hits) / static_cast<double>(samples);
  r.se = std::sqrt(r.probability * (1.0 - r.probability) / static_cast<double>(samples));
  return r;
}

CovarianceReport covariance_check(const SpectralGrid& grid, const FieldLaw& law,
                                  std::uint64_t samples, const GaussianStream& stream, int nmax) {
  if (nmax < 0 || nmax > grid.modes()) throw std::invalid_argument("covariance range outside grid");
  CovarianceReport rep;
  rep.samples = samples;
  const bool massless = law.kind != LawKind::MassiveComplex;
  // Draw only the modes under test; counter-based streams make these the very
  // numbers a full field sample would contain.
  std::vector<std::array<int, 3>> modes;
  SpectralGrid window(grid.dim(), std::max(1, nmax), grid.box_side(), grid.convention());
  for (std::size_t i = 0; i < window.size(); ++i) {
    auto n = window.mode(i);
    if (massless && window.mode_abs(n) == 0.0) continue;
    modes.push_back(n);
  }
  for (const auto& n : modes) {
    double sigma = law_sigma(grid, law, n);
    std::complex<double> mean_acc = 0;
    double var_acc = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
      std::complex<double> c;
      if (law.kind == LawKind::MasslessReal) {
        int lead = 0;
        for (int j = 0; j < grid.dim(); ++j)
          if (n[j] != 0) {
            lead = n[j];
            break;
          }
        std::array<int, 3> rep_n = n;
        if (lead < 0) rep_n = {-n[0], -n[1], -n[2]};
        c = stream.complex_gaussian(i, grid.mode_code(rep_n), 0);
        if (lead < 0) c = std::conj(c);
        c /= sigma;
      } else {
        c = stream.complex_gaussian(i, grid.mode_code(n), 0) / sigma;
      }
      mean_acc += c;
      var_acc += std::norm(c);
    }
    ModeStat ms;
    ms.n = n;
    ms.target_variance = 1.0 / (sigma * sigma);
    ms.empirical_variance = var_acc / static_cast<double>(samples);
    ms.empirical_mean = mean_acc / static_cast<double>(samples);
    // |g|^2 is Exp(1) scaled, so the variance estimator's sd is the target
    // itself over sqrt(S); the mean's per-component sd is sigma^{-1}/sqrt(2S).
    double se_var = ms.target_variance / std::sqrt(static_cast<double>(samples));
    ms.variance_z = (ms.empirical_variance - ms.target_variance) / se_var;
    double se_mean = 1.0 / (sigma * std::sqrt(2.0 * static_cast<double>(samples)));
    ms.mean_z = std::abs(ms.empirical_mean) / se_mean;
    rep.max_abs_variance_z = std::max(rep.max_abs_variance_z, std::abs(ms.variance_z));
    rep.max_abs_mean_z = std::max(rep.max_abs_mean_z, ms.mean_z);
    rep.modes.push_back(ms);
  }
  return rep;
}

}  // namespace fgibbs
