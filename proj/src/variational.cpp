#include "fgibbs/variational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fgibbs/stats.hpp"
#include "fgibbs/thread_pool.hpp"

namespace fgibbs {

namespace {

bool is_pow2(long v) { return v >= 1 && (v & (v - 1)) == 0; }

bool keeps_zero_mode(LawKind kind) { return kind == LawKind::MassiveComplex; }

/// Amplitude of mode n under the law: sqrt(E |u_n|^2). Massless laws have no
/// zero mode; callers skip it there.
double mode_amplitude(const SpectralGrid& grid, double s, LawKind kind,
                      const std::array<int, 3>& n) {
  return 1.0 / law_sigma(grid, FieldLaw{kind, s}, n);
}

std::vector<std::size_t> tracked_modes(const SpectralGrid& grid, int M, LawKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    double r = grid.mode_abs(n);
    if (r == 0.0 && !keeps_zero_mode(kind)) continue;
    if (r <= double(M) + 1e-12) out.push_back(i);
  }
  return out;
}

/// Relaxation rate of one mode: amplitude * M^{d/2} (massless: m^{-s} M^{d/2}).
double relaxation_rate(const SpectralGrid& grid, const std::array<int, 3>& n, double s,
                       int M, LawKind kind) {
  return mode_amplitude(grid, s, kind, n) * std::pow(double(M), grid.dim() / 2.0);
}

}  // namespace

std::vector<std::complex<double>> WienerPath::mode_path(std::size_t idx) const {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(steps) + 1,
                                        std::complex<double>(0.0, 0.0));
  std::complex<double> acc(0.0, 0.0);
  for (int j = 0; j < steps; ++j) {
    acc += increments[static_cast<std::size_t>(j) * grid.size() + idx];
    out[static_cast<std::size_t>(j) + 1] = acc;
  }
  return out;
}

SpectralField WienerPath::endpoint() const {
  SpectralField y(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    if (n[0] == 0 && n[1] == 0 && n[2] == 0 && !keeps_zero_mode(kind)) continue;
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < steps; ++j)
      acc += increments[static_cast<std::size_t>(j) * grid.size() + i];
    y[i] = mode_amplitude(grid, s, kind, n) * acc;
  }
  return y;
}

WienerPath simulate_Y(const SpectralGrid& grid, double s, int steps,
                      const GaussianStream& stream, std::uint64_t sample_index,
                      LawKind kind) {
  if (!(s > grid.dim() / 2.0))
    throw std::invalid_argument("free evolution requires s > d/2");
  if (steps < 1 || steps > (1 << 20))
    throw std::invalid_argument("mesh steps must be in [1, 2^20]");
  if (kind == LawKind::MasslessReal)
    throw std::invalid_argument("path simulation supports the complex laws");
  WienerPath p;
  p.grid = grid;
  p.s = s;
  p.kind = kind;
  p.steps = steps;
  p.increments.assign(static_cast<std::size_t>(steps) * grid.size(),
                      std::complex<double>(0.0, 0.0));
  const double root_h = std::sqrt(1.0 / steps);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    if (n[0] == 0 && n[1] == 0 && n[2] == 0 && !keeps_zero_mode(kind)) continue;
    std::uint32_t code = grid.mode_code(n);
    for (int j = 0; j < steps; ++j) {
      p.increments[static_cast<std::size_t>(j) * grid.size() + i] =
          root_h * stream.complex_gaussian(sample_index, code,
                                           static_cast<std::uint32_t>(j) + 1);
    }
  }
  return p;
}

std::complex<double> SmootherPath::value_at(int step, std::size_t grid_idx) const {
  for (std::size_t i = 0; i < tracked.size(); ++i)
    if (tracked[i] == grid_idx)
      return z[static_cast<std::size_t>(step) * tracked.size() + i];
  return {0.0, 0.0};
}

SpectralField SmootherPath::endpoint() const {
  SpectralField out(grid);
  const std::size_t base = static_cast<std::size_t>(steps) * tracked.size();
  for (std::size_t i = 0; i < tracked.size(); ++i) out[tracked[i]] = z[base + i];
  return out;
}

double SmootherPath::drift_cost() const {
  const double h = 1.0 / steps;
  double acc = 0.0;
  for (int j = 0; j < steps; ++j) {
    const std::size_t a = static_cast<std::size_t>(j) * tracked.size();
    const std::size_t b = a + tracked.size();
    for (std::size_t i = 0; i < tracked.size(); ++i)
      acc += msq[i] * std::norm(z[b + i] - z[a + i]);
  }
  return acc / h;  // sum_j h |dz/h|^2 = sum_j |dz|^2 / h
}

SmootherPath simulate_ZM(const WienerPath& path, int M) {
  const SpectralGrid& grid = path.grid;
  if (M < 1 || M > grid.modes())
    throw std::invalid_argument("smoother band M must satisfy 1 <= M <= N");
  if (!is_pow2(M)) throw std::invalid_argument("smoother band M must be dyadic");
  SmootherPath zm;
  zm.grid = grid;
  zm.s = path.s;
  zm.kind = path.kind;
  zm.m_band = M;
  zm.steps = path.steps;
  zm.tracked = tracked_modes(grid, M, path.kind);
  const std::size_t T = zm.tracked.size();
  zm.msq.resize(T);
  zm.z.assign((static_cast<std::size_t>(path.steps) + 1) * T,
              std::complex<double>(0.0, 0.0));

  const double h = 1.0 / path.steps;
  std::vector<double> decay(T), feed(T), bridge(T), sigma(T);
  for (std::size_t i = 0; i < T; ++i) {
    auto n = grid.mode(zm.tracked[i]);
    sigma[i] = mode_amplitude(grid, path.s, path.kind, n);
    zm.msq[i] = 1.0 / (sigma[i] * sigma[i]);
    double gamma = relaxation_rate(grid, n, path.s, M, path.kind);
    double x = gamma * h;
    double one_m_a = -std::expm1(-x);  // 1 - e^{-gamma h}, full precision
    decay[i] = 1.0 - one_m_a;
    feed[i] = one_m_a;
    // conditional mean of gamma int e^{-gamma(h-u)} (B(u)-B(0)) du given the
    // step increment: the Brownian-bridge average (1 - (1-a)/(gamma h))
    bridge[i] = sigma[i] * (1.0 - one_m_a / x);
  }

  std::vector<std::complex<double>> y(T, std::complex<double>(0.0, 0.0));
  for (int j = 0; j < path.steps; ++j) {
    const std::size_t a = static_cast<std::size_t>(j) * T;
    const std::size_t b = a + T;
    const std::size_t off = static_cast<std::size_t>(j) * grid.size();
    for (std::size_t i = 0; i < T; ++i) {
      std::complex<double> db = path.increments[off + zm.tracked[i]];
      zm.z[b + i] = decay[i] * zm.z[a + i] + feed[i] * y[i] + bridge[i] * db;
      y[i] += sigma[i] * db;
    }
  }
  return zm;
}

double smoother_l2_error_sq(const WienerPath& path, const SmootherPath& zm) {
  const SpectralGrid& grid = path.grid;
  SpectralField y = path.endpoint();
  double full = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) full += std::norm(y[i]);
  double acc = full;
  const std::size_t base = static_cast<std::size_t>(zm.steps) * zm.tracked.size();
  for (std::size_t i = 0; i < zm.tracked.size(); ++i) {
    std::size_t idx = zm.tracked[i];
    acc -= std::norm(y[idx]);
    acc += std::norm(y[idx] - zm.z[base + i]);
  }
  double vol = std::pow(grid.box_side(), grid.dim());
  return acc * vol;
}

double ou_difference_variance(double sigma2, double gamma, double t) {
  if (gamma * t < 1e-12) return sigma2 * t;
  return sigma2 * (-std::expm1(-2.0 * gamma * t)) / (2.0 * gamma);
}

double closed_form_l2_error(const SpectralGrid& grid, double s, int M, LawKind kind) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    double r = grid.mode_abs(n);
    if (r == 0.0 && !keeps_zero_mode(kind)) continue;
    double amp = mode_amplitude(grid, s, kind, n);
    double sigma2 = amp * amp;
    if (r <= double(M) + 1e-12) {
      double gamma = relaxation_rate(grid, n, s, M, kind);
      acc += ou_difference_variance(sigma2, gamma, 1.0);
    } else {
      acc += sigma2;
    }
  }
  return acc * std::pow(grid.box_side(), grid.dim());
}

double closed_form_drift_cost(const SpectralGrid& grid, double s, int M, LawKind kind) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    double r = grid.mode_abs(n);
    if (r == 0.0 && !keeps_zero_mode(kind)) continue;
    if (r > double(M) + 1e-12) continue;
    double gamma = relaxation_rate(grid, n, s, M, kind);
    // int_0^1 E |D^s dZ/dt|^2 dt = gamma/2 (1 - (1 - e^{-2 gamma})/(2 gamma))
    acc += 0.5 * gamma * (1.0 - (-std::expm1(-2.0 * gamma)) / (2.0 * gamma));
  }
  return acc * std::pow(grid.box_side(), grid.dim());
}

RateReport verify_approx_rates(const RateScanSpec& spec, const GaussianStream& stream) {
  if (spec.m_ladder.size() < 4)
    throw std::invalid_argument("rate regression needs at least 4 ladder levels");
  for (std::size_t k = 0; k < spec.m_ladder.size(); ++k) {
    if (!is_pow2(spec.m_ladder[k]))
      throw std::invalid_argument("rate ladder entries must be dyadic, got " +
                                  std::to_string(spec.m_ladder[k]));
    if (k > 0 && spec.m_ladder[k] <= spec.m_ladder[k - 1])
      throw std::invalid_argument("rate ladder must be strictly increasing");
  }
  int N = spec.modes > 0 ? spec.modes : spec.m_ladder.back();
  if (spec.m_ladder.back() > N)
    throw std::invalid_argument("rate ladder exceeds the grid mode count");
  if (spec.steps < 1) throw std::invalid_argument("mesh steps must be positive");
  SpectralGrid grid(spec.d, N, 1.0, spec.convention);
  if (!(spec.s > spec.d / 2.0))
    throw std::invalid_argument("free evolution requires s > d/2");

  RateReport rep;
  rep.m_values = spec.m_ladder;
  rep.samples = spec.samples;
  rep.steps = spec.steps;
  rep.l2_target = -std::min(spec.s - spec.d / 2.0, spec.d / 2.0);
  rep.drift_target = std::max(1.5 * spec.d - spec.s, spec.d / 2.0);

  const std::size_t L = spec.m_ladder.size();
  std::vector<double> logm(L);
  for (std::size_t k = 0; k < L; ++k) {
    rep.l2_error_exact.push_back(closed_form_l2_error(grid, spec.s, spec.m_ladder[k]));
    rep.drift_cost_exact.push_back(
        closed_form_drift_cost(grid, spec.s, spec.m_ladder[k]));
    logm[k] = std::log(double(spec.m_ladder[k]));
  }
  std::vector<double> ly(L), dy(L);
  for (std::size_t k = 0; k < L; ++k) {
    ly[k] = std::log(rep.l2_error_exact[k]);
    dy[k] = std::log(rep.drift_cost_exact[k]);
  }
  rep.l2_slope_exact = fit_line(logm, ly).slope;
  rep.drift_slope_exact = fit_line(logm, dy).slope;

  if (spec.samples == 0) return rep;

  // One shared path per sample: every ladder level sees the same noise.
  const std::size_t S = spec.samples;
  std::vector<double> l2s(S * L), dcs(S * L);
  const double vol = std::pow(grid.box_side(), grid.dim());
  parallel_for(S, spec.workers, [&](std::size_t i) {
    WienerPath path = simulate_Y(grid, spec.s, spec.steps, stream, i);
    SpectralField y = path.endpoint();
    double full = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) full += std::norm(y[j]);
    for (std::size_t k = 0; k < L; ++k) {
      SmootherPath zm = simulate_ZM(path, spec.m_ladder[k]);
      double err = full;
      const std::size_t base = static_cast<std::size_t>(zm.steps) * zm.tracked.size();
      for (std::size_t t = 0; t < zm.tracked.size(); ++t) {
        std::size_t idx = zm.tracked[t];
        err -= std::norm(y[idx]);
        err += std::norm(y[idx] - zm.z[base + t]);
      }
      l2s[i * L + k] = err * vol;
      dcs[i * L + k] = zm.drift_cost() * vol;
    }
  });

  for (std::size_t k = 0; k < L; ++k) {
    std::vector<double> a(S), b(S);
    for (std::size_t i = 0; i < S; ++i) {
      a[i] = l2s[i * L + k];
      b[i] = dcs[i * L + k];
    }
    MeanVar ma = mean_var(a), mb = mean_var(b);
    rep.l2_error.push_back(ma.mean);
    rep.l2_error_se.push_back(std::sqrt(ma.variance / double(S)));
    rep.drift_cost.push_back(mb.mean);
    rep.drift_cost_se.push_back(std::sqrt(mb.variance / double(S)));
  }
  for (std::size_t k = 0; k < L; ++k) {
    ly[k] = std::log(rep.l2_error[k]);
    dy[k] = std::log(rep.drift_cost[k]);
  }
  rep.l2_slope = fit_line(logm, ly).slope;
  rep.drift_slope = fit_line(logm, dy).slope;
  return rep;
}

// ---------------------------------------------------------------------------
// Mollified indicator: a C^infty bump psi(u) = c exp(-1/(1-4u^2)) on
// (-1/2, 1/2), normalized to integrate to 1, with its antiderivative held in
// a Simpson prefix table refined by cubic Hermite interpolation (the bump
// itself supplies exact endpoint derivatives).

namespace {

constexpr int kBumpCells = 8192;

struct BumpTable {
  std::array<double, kBumpCells + 1> cdf{};
  std::array<double, kBumpCells + 1> pdf{};
};

double raw_bump(double u) {
  double q = 1.0 - 4.0 * u * u;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

const BumpTable& bump_table() {
  static const BumpTable table = [] {
    BumpTable t;
    const double h = 1.0 / kBumpCells;
    for (int i = 0; i <= kBumpCells; ++i) t.pdf[i] = raw_bump(-0.5 + i * h);
    t.cdf[0] = 0.0;
    for (int i = 0; i < kBumpCells; ++i) {
      double mid = raw_bump(-0.5 + (i + 0.5) * h);
      t.cdf[i + 1] = t.cdf[i] + h / 6.0 * (t.pdf[i] + 4.0 * mid + t.pdf[i + 1]);
    }
    const double total = t.cdf[kBumpCells];
    for (int i = 0; i <= kBumpCells; ++i) {
      t.cdf[i] /= total;
      t.pdf[i] /= total;
    }
    return t;
  }();
  return table;
}

/// Antiderivative of the normalized bump: 0 at -1/2, 1 at +1/2.
double bump_cdf(double v) {
  if (v <= -0.5) return 0.0;
  if (v >= 0.5) return 1.0;
  const BumpTable& t = bump_table();
  const double h = 1.0 / kBumpCells;
  double pos = (v + 0.5) / h;
  int cell = std::min(int(pos), kBumpCells - 1);
  double u = pos - cell;
  double u2 = u * u, u3 = u2 * u;
  double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * t.cdf[cell] + h10 * h * t.pdf[cell] + h01 * t.cdf[cell + 1] +
         h11 * h * t.pdf[cell + 1];
}

}  // namespace

double mollified_indicator_axis(double x, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 6.0))
    throw std::invalid_argument("mollification width must be in (0, 1/6)");
  double up = bump_cdf((x + 0.5 - 2.0 * delta) / delta);
  double dn = bump_cdf((x - 0.5 + 2.0 * delta) / delta);
  return up - dn;
}

// ---------------------------------------------------------------------------
// Soliton drift

SolitonDrift build_soliton_drift(const DriftParameters& params,
                                 const GroundStateProfile& profile,
                                 const SpectralGrid& torus) {
  if (torus.dim() != params.d)
    throw std::invalid_argument("torus dimension does not match the drift parameters");
  if (profile.field.grid().dim() != params.d)
    throw std::invalid_argument("profile dimension does not match the drift parameters");
  if (std::abs(torus.box_side() - 1.0) > 1e-12)
    throw std::invalid_argument("drift construction expects the unit torus");
  if (!(params.p > 2.0)) throw std::invalid_argument("drift requires p > 2");
  if (!(params.s > 0.0)) throw std::invalid_argument("drift requires s > 0");
  if (!(params.rho > 0.0 && params.rho <= 0.5))
    throw std::invalid_argument("drift scale rho must be in (0, 1/2]");
  if (!(params.K >= 0.0)) throw std::invalid_argument("mass cutoff K must be >= 0");

  const double p_crit = 4.0 * params.s / params.d + 2.0;
  if (params.p < p_crit - 1e-9)
    throw std::invalid_argument(
        "drift construction requires p >= 4s/d + 2; below the critical power the "
        "measure is normalizable for every cutoff and no divergent drift exists");
  const bool critical = std::abs(params.p - p_crit) <= 1e-9;

  DriftParameters r = params;
  if (r.eta < 0.0) r.eta = r.K / 10.0;
  if (!(r.eta >= 0.0 && r.eta <= r.K))
    throw std::invalid_argument("mass margin eta must lie in [0, K]");
  if (r.alpha < 0.0) {
    // Default amplitude by regime. At the critical power the measure only
    // loses normalizability once the cutoff clears the ground-state mass, so
    // the default fills the allowance; refuse to build below the threshold.
    if (critical && !(r.K > profile.l2))
      throw std::invalid_argument(
          "critical drift requires the mass cutoff K to exceed the ground-state mass");
    double fill = (r.K - r.eta) / profile.l2;
    r.alpha = critical ? fill : std::min(0.5, fill);
  }

  const double per_dim = torus.points_per_dim() * r.rho;
  if (per_dim < 8.0 - 1e-12)
    throw std::invalid_argument(
        "drift scale rho is under-resolved: fewer than 8 grid points across the "
        "core ((2N+1) rho = " +
        std::to_string(per_dim) + ")");

  // Sample W on the torus quadrature grid. The canonical profile peaks at the
  // box centre, so the core is evaluated at y = L/2 + x/rho with x the signed
  // torus coordinate in [-1/2, 1/2). When G L rho is an even integer those
  // points sit exactly on a uniform box grid and one inverse transform serves
  // every torus point; otherwise the band-limited field is summed directly
  // (still exact, the profile IS its Fourier series).
  const SpectralGrid& box = profile.field.grid();
  const int G = quadrature_points(torus, std::max(params.p, 2.0));
  const int d = params.d;
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(G);

  const double gbd = double(G) * box.box_side() * r.rho;
  const long Gb = std::lround(gbd);
  const bool exact_resample = std::abs(gbd - double(Gb)) < 1e-9 && Gb % 2 == 0 &&
                              Gb >= box.points_per_dim() && d == 1;
  std::vector<std::complex<double>> boxvals;
  if (exact_resample) boxvals = values_on_grid(profile.field, static_cast<int>(Gb));

  // Dense coefficient line for the one-dimensional direct sum.
  const int Nb = box.modes();
  std::vector<std::complex<double>> cline;
  if (!exact_resample && d == 1) {
    cline.resize(2 * static_cast<std::size_t>(Nb) + 1);
    for (int n = -Nb; n <= Nb; ++n) cline[n + Nb] = profile.field.at({n, 0, 0});
  }

  const double amp = r.alpha * std::pow(r.rho, -0.5 * d);
  std::vector<std::complex<double>> vals(total, std::complex<double>(0.0, 0.0));
  if (r.alpha > 0.0) {
    for (std::size_t k = 0; k < total; ++k) {
      std::array<double, 3> xw{0, 0, 0};
      std::size_t rem = k;
      for (int j = d - 1; j >= 0; --j) {
        double x = double(rem % G) / G;
        rem /= G;
        xw[j] = x - std::floor(x + 0.5);  // wrap to [-1/2, 1/2)
      }
      double phi = 1.0;
      for (int j = 0; j < d; ++j) phi *= mollified_indicator_axis(xw[j], r.delta);
      if (phi == 0.0) continue;
      // The stored profile is periodic on its box; the true core decays, so
      // beyond the half box (where it has already fallen to rounding level)
      // it is extended by zero rather than wrapped. Without this, scales with
      // rho L_box < 1 would see spurious translated copies of the core.
      bool outside = false;
      for (int j = 0; j < d; ++j)
        if (std::abs(xw[j]) > 0.5 * box.box_side() * r.rho) outside = true;
      if (outside) continue;
      double qv;
      if (exact_resample) {
        long ib = static_cast<long>(std::llround(xw[0] * G)) + Gb / 2;
        ib = ((ib % Gb) + Gb) % Gb;
        qv = boxvals[static_cast<std::size_t>(ib)].real();
      } else if (d == 1) {
        // geometric recurrence over the coefficient line at y = L/2 + x/rho
        double base = 2.0 * M_PI * (0.5 + xw[0] / (r.rho * box.box_side()));
        std::complex<double> step(std::cos(base), std::sin(base));
        std::complex<double> e(std::cos(-Nb * base), std::sin(-Nb * base));
        std::complex<double> acc(0.0, 0.0);
        for (int n = 0; n <= 2 * Nb; ++n) {
          acc += cline[n] * e;
          e *= step;
        }
        qv = acc.real();
      } else {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t i = 0; i < box.size(); ++i) {
          auto n = box.mode(i);
          double phase = 0.0;
          for (int j = 0; j < d; ++j)
            phase += 2.0 * M_PI * n[j] * (0.5 + xw[j] / (r.rho * box.box_side()));
          acc += profile.field[i] *
                 std::complex<double>(std::cos(phase), std::sin(phase));
        }
        qv = acc.real();
      }
      vals[k] = amp * phi * qv;
    }
  }

  SolitonDrift out;
  out.params = r;
  out.grid = torus;
  out.w = field_from_values(torus, vals, G);
  out.w.set_real_symmetric(true);
  out.l2_mass = l2_norm(out.w);
  out.mean_abs = std::abs(out.w.mean());
  double hs = sobolev_norm(out.w, params.s);
  out.lp_pow = std::pow(lp_norm(out.w, params.p), params.p);
  out.h_value = 0.5 * hs * hs - out.lp_pow / params.p;
  const double scale = std::pow(r.rho, 0.5 * params.d * params.p - params.d);
  out.h_scaled = out.h_value * scale;
  out.lp_scaled = out.lp_pow * scale;

  if (out.l2_mass > r.K - r.eta + 1e-9)
    throw std::invalid_argument(
        "drift mass exceeds the cutoff margin: ||W|| = " + std::to_string(out.l2_mass) +
        " > K - eta = " + std::to_string(r.K - r.eta));
  return out;
}

// ---------------------------------------------------------------------------
// Objective breakdown

DriftObjectiveBreakdown objective_breakdown(const SolitonDrift& drift, int M,
                                            std::uint64_t samples,
                                            const GaussianStream& stream, int steps,
                                            int workers, LawKind kind) {
  if (samples < 2) throw std::invalid_argument("breakdown needs at least 2 samples");
  const SpectralGrid& grid = drift.grid;
  const double s = drift.params.s;
  const double p = drift.params.p;
  const double K = drift.params.K;

  DriftObjectiveBreakdown out;
  out.rho = drift.params.rho;
  out.m_band = M;
  out.alpha = drift.params.alpha;
  out.k_cutoff = K;
  out.samples = samples;
  out.steps = steps;

  // Deterministic pieces. Under the massless law the drift loses its zero
  // mode to the projection (the B line); the massive law shifts the whole
  // drift and pays the heavier quadratic weight (1 + (2 pi |n| / L)^2)^s.
  const double rp_w = drift.lp_pow / p;
  double hs2_w;
  SpectralField wshift(grid);
  double rp_shift;
  if (keeps_zero_mode(kind)) {
    hs2_w = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double ls = law_sigma(grid, FieldLaw{kind, s}, grid.mode(i));
      hs2_w += ls * ls * std::norm(drift.w[i]);
    }
    hs2_w *= std::pow(grid.box_side(), grid.dim());
    wshift = drift.w;
    rp_shift = rp_w;
    out.b_term = 0.0;
  } else {
    const double hs_w = sobolev_norm(drift.w, s);
    hs2_w = hs_w * hs_w;
    wshift = project(drift.w, Projection::nonzero_modes());
    rp_shift = std::pow(lp_norm(wshift, p), p) / p;
    out.b_term = rp_w - rp_shift;
  }
  out.a_term = 0.5 * hs2_w - rp_w;
  out.e_quadratic_exact = 0.5 * closed_form_drift_cost(grid, s, M, kind);

  const std::vector<std::size_t> tracked = tracked_modes(grid, M, kind);
  const std::size_t T = tracked.size();
  std::vector<double> msq(T);
  std::vector<std::complex<double>> w_tr(T);
  double hs_w_tracked = 0.0;
  const double vol = std::pow(grid.box_side(), grid.dim());
  for (std::size_t i = 0; i < T; ++i) {
    auto n = grid.mode(tracked[i]);
    double ls = law_sigma(grid, FieldLaw{kind, s}, n);
    msq[i] = ls * ls;
    w_tr[i] = drift.w[tracked[i]];
    hs_w_tracked += msq[i] * std::norm(w_tr[i]);
  }
  hs_w_tracked *= vol;
  const double hs_w_untracked = hs2_w - hs_w_tracked;

  const std::size_t S = samples;
  std::vector<double> cs(S), ds(S), eqs(S), ecs(S), ctrls(S), margins(S), gates(S);
  parallel_for(S, workers, [&](std::size_t i) {
    WienerPath path = simulate_Y(grid, s, steps, stream, i, kind);
    SmootherPath zm = simulate_ZM(path, M);
    SpectralField v = path.endpoint();
    const std::size_t base = static_cast<std::size_t>(steps) * T;
    for (std::size_t t = 0; t < T; ++t)
      v[tracked[t]] += wshift[tracked[t]] - zm.z[base + t];
    // W modes beyond the band still enter V.
    for (std::size_t j = 0; j < grid.size(); ++j) {
      auto n = grid.mode(j);
      if (grid.mode_abs(n) > double(M) + 1e-12) v[j] += wshift[j];
    }
    const double mass = l2_norm(v);
    const bool inside = mass <= K;
    const double rp_v = std::pow(lp_norm(v, p), p) / p;

    cs[i] = inside ? rp_shift - rp_v : 0.0;
    ds[i] = inside ? 0.0 : rp_shift;
    gates[i] = inside ? 0.0 : 1.0;

    const double h = 1.0 / steps;
    double quad = 0.0, quad_ctrl = 0.0;
    std::complex<double> zend_dot_w(0.0, 0.0);
    for (int j = 0; j < steps; ++j) {
      const std::size_t a = static_cast<std::size_t>(j) * T;
      const std::size_t b = a + T;
      for (std::size_t t = 0; t < T; ++t) {
        std::complex<double> dz = zm.z[b + t] - zm.z[a + t];
        quad += msq[t] * std::norm(dz);
        quad_ctrl += msq[t] * std::norm(dz / h - w_tr[t]);
      }
    }
    quad = quad / h * vol;            // sum_j h |dz/h|^2
    quad_ctrl = quad_ctrl * h * vol;  // sum_j h |dz/h - w|^2
    double zend_hs = 0.0;
    const std::size_t last = static_cast<std::size_t>(steps) * T;
    for (std::size_t t = 0; t < T; ++t) {
      zend_dot_w += msq[t] * zm.z[last + t] * std::conj(w_tr[t]);
      zend_hs += msq[t] * std::norm(zm.z[last + t]);
    }
    zend_hs *= vol;

    eqs[i] = 0.5 * quad;
    ecs[i] = -zend_dot_w.real() * vol;
    ctrls[i] = -(inside ? rp_v : 0.0) + 0.5 * (quad_ctrl + hs_w_untracked);
    margins[i] = quad > 0.0 ? (quad - zend_hs) / quad : 0.0;
  });

  MeanVar mc = mean_var(cs), md = mean_var(ds), meq = mean_var(eqs), mec = mean_var(ecs),
          mctrl = mean_var(ctrls), mg = mean_var(gates);
  auto se = [&](const MeanVar& m) { return std::sqrt(m.variance / double(S)); };
  out.c_term = mc.mean;
  out.c_se = se(mc);
  out.d_term = md.mean;
  out.d_se = se(md);
  out.e_quadratic = meq.mean;
  out.e_quadratic_se = se(meq);
  out.e_cross = mec.mean;
  out.e_cross_se = se(mec);
  out.control_side = mctrl.mean;
  out.control_side_se = se(mctrl);
  out.d_event_probability = mg.mean;
  out.total = out.a_term + out.b_term + out.c_term + out.d_term + out.e_quadratic +
              out.e_cross;
  std::vector<double> totals(S);
  for (std::size_t i = 0; i < S; ++i)
    totals[i] = out.a_term + out.b_term + cs[i] + ds[i] + eqs[i] + ecs[i];
  out.total_se = se(mean_var(totals));
  out.worst_energy_margin = *std::min_element(margins.begin(), margins.end());
  return out;
}

DivergenceRateFit divergence_rate_fit(const std::vector<DriftObjectiveBreakdown>& ladder,
                                      int d, double p) {
  if (ladder.size() < 4)
    throw std::invalid_argument("divergence fit needs at least 4 ladder levels");
  std::vector<double> x, y;
  DivergenceRateFit fit;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    double rho = ladder[k].rho;
    if (!(rho > 0.0 && rho <= 0.5))
      throw std::invalid_argument("divergence fit: rho out of range");
    double inv = 1.0 / rho;
    long w = std::lround(std::log2(inv));
    if (std::abs(inv - std::pow(2.0, double(w))) > 1e-9 * inv)
      throw std::invalid_argument("divergence fit: rho ladder must be dyadic");
    if (k > 0 && !(rho < ladder[k - 1].rho))
      throw std::invalid_argument("divergence fit: rho must strictly decrease");
    if (!(ladder[k].total < 0.0))
      throw std::runtime_error(
          "divergence fit refused: non-negative objective total " +
          std::to_string(ladder[k].total) + " at rho = " + std::to_string(rho) +
          " (no divergence to fit; the drift is too weak at this scale)");
    x.push_back(std::log(inv));
    y.push_back(std::log(-ladder[k].total));
    fit.rho.push_back(rho);
    fit.neg_total.push_back(-ladder[k].total);
  }
  LineFit lf = fit_line(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.residual_max = lf.max_abs_residual;
  fit.levels = ladder.size();
  fit.target = 0.5 * d * p - d;
  return fit;
}

}  // namespace fgibbs
