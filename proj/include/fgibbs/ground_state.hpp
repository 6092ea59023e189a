#pragma once
#include <optional>

#include "fgibbs/field.hpp"

namespace fgibbs {

/// Parameters of the sharp interpolation inequality
///   ||u||_{L^p}^p <= C ||u||_{Hdot^s}^{(p-2)d/(2s)} ||u||_{L^2}^{2+(p-2)(2s-d)/(2s)}.
struct GnsParameters {
  int d = 1;
  double s = 1.0;
  double p = 6.0;

  /// p > 2 when d < 2s; otherwise 2 < p <= 2d/(d - 2s).
  bool admissible() const;

  // exponents of the two norms in the inequality's right-hand side
  double hs_exponent() const { return (p - 2.0) * d / (2.0 * s); }
  double l2_exponent() const { return 2.0 + (p - 2.0) * (2.0 * s - d) / (2.0 * s); }
};

struct SolverOptions {
  double flow_step = 0.8;
  int max_iter = 5000;
  double grad_tol = 1e-9;      // stop when |precond grad| / |u| < grad_tol * J
  double residual_tol = 1e-6;  // converged additionally requires this residual
};

struct GroundStateProfile {
  GnsParameters params;
  SpectralField field;  // normalized: |Q|_{L^2} = |Q|_{Hdot^s}, |Q|^2_{Hdot^s} = (2/p)|Q|^p_{L^p}
  double l2 = 0;
  double hs = 0;
  double lp = 0;
  double j_value = 0;    // the quotient at the minimizer
  double c_gns = 0;      // sharp constant (p/2) l2^{2-p}
  double residual = 0;   // elliptic equation residual, relative to l2
  int iterations = 0;
  bool converged = false;
};

/// The scale- and amplitude-invariant quotient whose minimum is 1/C.
double weinstein_functional(const SpectralField& u, const GnsParameters& params);

/// Minimizes the quotient by mass-constrained preconditioned gradient descent
/// on its logarithm, then rescales to the normalization above. The grid is the
/// whole-space surrogate box and must carry the TwoPi convention.
GroundStateProfile solve_ground_state(const GnsParameters& params, const SolverOptions& solver,
                                      const SpectralGrid& grid,
                                      const std::optional<SpectralField>& initial = std::nullopt);

/// Box grid with defaults tuned for the solver (d = 1: side 40, 256 modes).
SpectralGrid default_ground_state_grid(int d);

/// L2 norm of (p-2) d D^{2s} Q + (4s + (p-2)(2s-d)) Q - 4s |Q|^{p-2} Q, over
/// |Q|_{L^2}; rejects profiles that are not in the normalization above.
double elliptic_residual(const GroundStateProfile& profile);

/// (p/2) |Q|_{L^2}^{2-p}; equals 1/J(Q) at the minimizer.
double sharp_constant(const GroundStateProfile& profile);

/// Cached sharp constant for (d, s, p), solving on the default grid on first
/// use. Thread-safe.
double sharp_constant(const GnsParameters& params);

/// Cached canonical mass |Q|_{L^2}(d, s, p) from the same solve.
double ground_state_mass(const GnsParameters& params);

}  // namespace fgibbs
