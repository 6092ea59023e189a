#pragma once
#include <array>
#include <string>
#include <vector>

#include "fgibbs/field.hpp"
#include "fgibbs/ground_state.hpp"

namespace fgibbs {

/// k-th forward difference with displacement y (absolute units on the box):
/// Fourier action c(n) -> (exp(2 pi i n.y / L) - 1)^k c(n).
SpectralField forward_difference(const SpectralField& u, const std::array<double, 3>& y, int k);

/// Quadrature controls for the radial improper integral underlying c_k.
struct CkQuadrature {
  double outer_radius = 1e4;  // quadrature stops here; the tail is added analytically
  int order = 32;             // Gauss-Legendre order per radial panel
  double inner_cutoff = 1e-5; // below this the closed-form small-radius term is used
};

struct CkDetail {
  double value = 0;       // stub + quadrature + tail_mean
  double stub = 0;        // analytic [0, inner_cutoff) contribution
  double quadrature = 0;  // [inner_cutoff, outer_radius]
  double tail_mean = 0;   // closed-form mean of the integrand beyond outer_radius
  double tail_bound = 0;  // bound on the oscillatory remainder left out of value
};

/// c_k(d, s) = int_{R^d} |exp(2 pi i x_1) - 1|^{2k} / |x|^{d + 2s} dx, 0 < s < k.
CkDetail c_k_detail(int d, double s, int k, const CkQuadrature& quad = {});
double c_k_constant(int d, double s, int k, const CkQuadrature& quad = {});  // cached

struct DifferenceNormSpec {
  int k = 1;                  // difference order, must exceed s
  double ball_radius = 1e3;   // outer radius R of the displacement integral
  double inner_cutoff = 1e-6; // radial quadrature starts here (analytic stub below)
  int order = 32;             // Gauss-Legendre order per radial subpanel
};

struct DifferenceNormDetail {
  double value = 0;       // the squared Sobolev norm estimate (quadrature + stub + mean tail)
  double stub = 0;
  double quadrature = 0;
  double tail_mean = 0;
  double tail_bound = 0;  // 4^k (sum |c(n)|^2) surface(d) R^{-2s} / (2s), times c_k^{-1} L^d
  double c_k = 0;         // normalizing constant used
};

/// Difference-quotient form of the squared homogeneous Sobolev norm,
///   c_k^{-1} int_{|y| <= R} int |Delta_y^k u|^2_{L^2} / |y|^{d+2s} dy,
/// expressed in the grid's own multiplier convention so that it estimates
/// sobolev_norm(u, s)^2. Requires spec.k > s.
DifferenceNormDetail difference_norm_detail(const SpectralField& u, double s,
                                            const DifferenceNormSpec& spec);
double difference_norm(const SpectralField& u, double s, const DifferenceNormSpec& spec);

struct TorusGnsReport {
  std::string field_id;
  double lhs = 0;      // |u|_{L^p}^p
  double rhs = 0;      // (C + delta) |u|_{Hdot^s}^A |u|_{L^2}^B + C(delta) |u|_{L^2}^p
  double delta = 0;
  double c_delta = 0;
  double c_gns = 0;    // constant used, in the grid's own convention
  double margin = 0;   // rhs - lhs; negative values are findings, not errors
};

/// Checks the torus interpolation inequality on one field. c_gns must be the
/// sharp constant in u's own multiplier convention.
TorusGnsReport verify_torus_gns(const SpectralField& u, double s, double p, double delta,
                                double c_delta, double c_gns, const std::string& field_id = "");

/// Same, with the constant taken from the cached ground-state solve and
/// converted to u's convention.
TorusGnsReport verify_torus_gns(const SpectralField& u, double s, double p, double delta,
                                double c_delta, const std::string& field_id = "");

/// Sharp constant converted between multiplier conventions: the canonical
/// solve uses TwoPi; under Plain the constant grows by (2 pi)^{(p-2)d/2}.
double convention_sharp_constant(const GnsParameters& params, Convention conv);

/// Smallest C(delta) (floored at 1) making every corpus field satisfy the
/// inequality: max over u of (lhs - (C + delta) middle) / |u|_{L^2}^p.
double fit_c_delta(const std::vector<SpectralField>& corpus, double s, double p, double delta,
                   double c_gns);

struct RestrictionComparison {
  double torus_norm = 0;  // Hdot^s of the unit-cell periodization
  double line_norm = 0;   // Hdot^s on the full box
  bool torus_leq_line = false;
};

/// Periodizes a box field (integer box side) to the unit torus and compares
/// homogeneous Sobolev norms under the same convention tag.
RestrictionComparison restriction_comparison(const SpectralField& u, double s);

}  // namespace fgibbs
