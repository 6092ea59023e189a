#pragma once
#include <complex>
#include <cstdint>
#include <vector>

#include "fgibbs/field.hpp"
#include "fgibbs/gaussian_field.hpp"
#include "fgibbs/grid.hpp"
#include "fgibbs/ground_state.hpp"
#include "fgibbs/rng.hpp"

namespace fgibbs {

/// One sampled Brownian driving path on the mode lattice: independent complex
/// Brownian motions B_n on a uniform mesh of [0,1], E|B_n(1)|^2 = 1 for every
/// n != 0, zero mode silent. The free field at time t is derived on demand:
/// hat Y(n,t) = m(n)^{-s} B_n(t) with m the grid's multiplier.
struct WienerPath {
  SpectralGrid grid{1, 1, 1.0, Convention::Plain};
  double s = 1.0;
  LawKind kind = LawKind::MasslessComplex;
  int steps = 0;
  /// increments[j * grid.size() + idx] = B_n(t_{j+1}) - B_n(t_j)
  std::vector<std::complex<double>> increments;

  std::complex<double> increment(int step, std::size_t idx) const {
    return increments[static_cast<std::size_t>(step) * grid.size() + idx];
  }
  /// B_n at all mesh times (steps + 1 entries, starting at 0).
  std::vector<std::complex<double>> mode_path(std::size_t idx) const;
  /// Y_s(1) as a spectral field.
  SpectralField endpoint() const;
};

/// Draws the Brownian driving path for one sample index. Requires s > d/2 so
/// that the derived free field is a function. Draw j + 1 of each mode feeds
/// mesh step j; draw 0 stays reserved for one-shot field sampling, so paths
/// and static samples from the same stream never share randomness.
WienerPath simulate_Y(const SpectralGrid& grid, double s, int steps,
                      const GaussianStream& stream, std::uint64_t sample_index,
                      LawKind kind = LawKind::MasslessComplex);

/// The band-limited smoother driven by a Wiener path: for 0 < |n| <= M
/// (Euclidean), dZ(n,t) = gamma_n (Y(n,t) - Z(n,t)) dt with
/// gamma_n = m(n)^{-s} M^{d/2}, Z(0) = 0; all other modes stay 0. The mesh
/// update is the exact conditional step given the increments: Brownian-bridge
/// averaging of Y inside each step, so no extra time-discretization bias
/// enters beyond the bridge approximation of order (gamma h)^2.
struct SmootherPath {
  SpectralGrid grid{1, 1, 1.0, Convention::Plain};
  double s = 1.0;
  LawKind kind = LawKind::MasslessComplex;
  int m_band = 0;
  int steps = 0;
  std::vector<std::size_t> tracked;  // grid indices with 0 < |n| <= M
  std::vector<double> msq;           // m(n)^{2s} per tracked mode
  /// z[j * tracked.size() + i] = hat Z(tracked[i], t_j), j = 0..steps
  std::vector<std::complex<double>> z;

  std::complex<double> value_at(int step, std::size_t grid_idx) const;
  SpectralField endpoint() const;
  /// Mesh integral sum_j h || (Z_{j+1} - Z_j)/h ||_{Hdot s}^2.
  double drift_cost() const;
};

SmootherPath simulate_ZM(const WienerPath& path, int M);

/// || Z_M(1) - Y_s(1) ||_{L^2}^2, including the modes the smoother holds at 0.
double smoother_l2_error_sq(const WienerPath& path, const SmootherPath& zm);

/// E |Y_n(t) - Z_n(t)|^2 for one mode: the relaxation process variance
/// sigma2 (1 - e^{-2 gamma t}) / (2 gamma).
double ou_difference_variance(double sigma2, double gamma, double t);

/// Exact expectation curves on a grid: sum over modes of the relaxation
/// variance at t = 1 (plus the untouched tail), and the time-integrated
/// derivative cost sum_n gamma/2 (1 - (1 - e^{-2 gamma})/(2 gamma)).
double closed_form_l2_error(const SpectralGrid& grid, double s, int M,
                            LawKind kind = LawKind::MasslessComplex);
double closed_form_drift_cost(const SpectralGrid& grid, double s, int M,
                              LawKind kind = LawKind::MasslessComplex);

/// Regression harness for the smoother's approximation rates.
struct RateScanSpec {
  int d = 1;
  double s = 1.0;
  std::vector<int> m_ladder{16, 32, 64, 128, 256};
  std::uint64_t samples = 1000;
  int steps = 256;
  int modes = 0;  // grid size N; 0 means the largest ladder entry
  Convention convention = Convention::Plain;
  int workers = 1;
};

struct RateReport {
  std::vector<int> m_values;
  // Monte Carlo curves (empty when samples = 0) and their standard errors.
  std::vector<double> l2_error, l2_error_se;
  std::vector<double> drift_cost, drift_cost_se;
  // Closed-form expectation curves over the same modes, always present.
  std::vector<double> l2_error_exact, drift_cost_exact;
  double l2_slope = 0, drift_slope = 0;              // fits of the MC curves
  double l2_slope_exact = 0, drift_slope_exact = 0;  // fits of the exact curves
  double l2_target = 0;     // -min(s - d/2, d/2)
  double drift_target = 0;  // +max(3d/2 - s, d/2)
  std::uint64_t samples = 0;
  int steps = 0;
};

/// Runs the ladder with one Wiener path per sample shared across all M
/// (common random numbers), reporting both the sampled and the closed-form
/// expectation curves with least-squares slopes in log-log coordinates.
RateReport verify_approx_rates(const RateScanSpec& spec, const GaussianStream& stream);

/// Smooth cutoff of [-1/2, 1/2]: 1 on [-1/2 + 3 delta, 1/2 - 3 delta], 0
/// outside (-1/2 + delta, 1/2 - delta), monotone mollified ramp between
/// (an indicator shrunk by 2 delta, convolved with a bump of width delta).
double mollified_indicator_axis(double x, double delta);

/// Parameters of the rescaled-soliton drift W_rho(x) =
/// alpha rho^{-d/2} phi_delta(x) Q(x / rho) on the unit torus.
struct DriftParameters {
  int d = 1;
  double s = 1.0;
  double p = 8.0;
  double K = 1.0;        // mass cutoff the drift must respect
  double rho = 0.125;    // concentration scale
  double delta = 0.05;   // cutoff mollification width
  double alpha = -1.0;   // amplitude; negative resolves the regime default
  double eta = -1.0;     // mass margin; negative resolves to K / 10
};

struct SolitonDrift {
  DriftParameters params;  // with alpha and eta resolved
  SpectralGrid grid;       // the torus desk the drift lives on
  SpectralField w;         // band-limited W_rho
  double l2_mass = 0;      // ||W||_{L^2}
  double mean_abs = 0;     // |P_0 W|
  double h_value = 0;      // 1/2 ||W||_{Hdot s}^2 - ||W||_p^p / p (desk norms)
  double h_scaled = 0;     // h_value * rho^{d p / 2 - d}
  double lp_pow = 0;       // ||W||_p^p
  double lp_scaled = 0;    // lp_pow * rho^{d p / 2 - d}

  SolitonDrift() : grid(1, 1, 1.0, Convention::Plain), w(grid) {}
};

/// Builds the drift on the given torus grid from a canonical ground-state
/// profile. Requires p at or above the critical power 4s/d + 2 (below it no
/// divergent drift exists), at least 8 grid points across the core scale rho,
/// and the built drift to satisfy ||W||_{L^2} <= K - eta.
SolitonDrift build_soliton_drift(const DriftParameters& params,
                                 const GroundStateProfile& profile,
                                 const SpectralGrid& torus);

/// The variational objective split along the telescoping decomposition, for
/// V = Y_s(1) - Z_M(1) + P_{!=0} W:
///   A = 1/2 ||W||_{Hdot s}^2 - R_p(W)              (deterministic energy)
///   B = R_p(W) - R_p(P_{!=0} W)                    (deterministic mean shift)
///   C = E[(R_p(P_{!=0} W) - R_p(V)) 1{||V|| <= K}] (fluctuation correction)
///   D = E[R_p(P_{!=0} W) 1{||V|| > K}]             (mass-gate remainder)
///   E = E[1/2 int ||dZ/dt||^2 - <Z(1), W>_{Hdot s}] (smoothing cost)
/// with R_p(u) = ||u||_p^p / p. The five sum, sample by sample, to the
/// control-side objective E[-R_p(V) 1{||V|| <= K} + 1/2 int ||dZ/dt - W||^2],
/// reported alongside as an exactness check.
struct DriftObjectiveBreakdown {
  double rho = 0;
  int m_band = 0;
  double alpha = 0;
  double k_cutoff = 0;
  std::uint64_t samples = 0;
  int steps = 0;
  double a_term = 0;
  double b_term = 0;
  double c_term = 0, c_se = 0;
  double d_term = 0, d_se = 0;
  double e_quadratic = 0, e_quadratic_se = 0;
  double e_quadratic_exact = 0;  // closed-form 1/2 int E ||dZ/dt||^2
  double e_cross = 0, e_cross_se = 0;
  double total = 0, total_se = 0;
  double control_side = 0, control_side_se = 0;
  /// min over samples of (int ||dZ/dt||^2 - ||Z(1)||^2) / int ||dZ/dt||^2:
  /// the pathwise energy bound, nonnegative up to round-off.
  double worst_energy_margin = 0;
  double d_event_probability = 0;
};

DriftObjectiveBreakdown objective_breakdown(const SolitonDrift& drift, int M,
                                            std::uint64_t samples,
                                            const GaussianStream& stream,
                                            int steps = 256, int workers = 1,
                                            LawKind kind = LawKind::MasslessComplex);

/// Least-squares fit of log(-total) against log(1/rho) over a ladder of
/// breakdowns, against the divergence target d p / 2 - d. Refuses ladders
/// shorter than 4, non-dyadic or non-decreasing scales, and any level whose
/// total is non-negative (no divergence to fit).
struct DivergenceRateFit {
  double slope = 0;
  double intercept = 0;
  double target = 0;
  double residual_max = 0;
  std::size_t levels = 0;
  std::vector<double> rho;
  std::vector<double> neg_total;
};

DivergenceRateFit divergence_rate_fit(const std::vector<DriftObjectiveBreakdown>& ladder,
                                      int d, double p);

}  // namespace fgibbs
