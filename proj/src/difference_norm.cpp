#include "fgibbs/difference_norm.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "fgibbs/quadrature.hpp"

namespace fgibbs {

namespace {

double binom(int n, int r) {
  double v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

double surface_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: throw std::invalid_argument("dimension must be 1, 2, or 3");
  }
}

/// int_{S^{d-1}} omega_1^{2k} dsigma
double first_component_moment(int d, int k) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI * binom(2 * k, k) / std::pow(4.0, k);
    case 3: return 4.0 * M_PI / (2 * k + 1);
    default: throw std::invalid_argument("dimension must be 1, 2, or 3");
  }
}

double int_pow(double x, int k) {
  double v = 1;
  for (int i = 0; i < k; ++i) v *= x;
  return v;
}

/// int_{S^{d-1}} (2 - 2 cos(2 pi t omega_1))^k dsigma(omega).
/// Direct angular quadrature of (4 sin^2)^k at small t (perfectly conditioned
/// where the value is a tiny power of t); for t >= 2 the cosine power-reduction
///   (2 - 2 cos u)^k = C(2k,k) + 2 sum_m (-1)^m C(2k,k+m) cos(m u)
/// with the closed-form sphere averages of cos (2 cos, 2 pi J_0, 4 pi sinc).
double sphere_mean_power(int d, int k, double t) {
  if (d == 1) return 2.0 * int_pow(4.0 * std::pow(std::sin(M_PI * t), 2), k);
  if (t < 2.0) {
    if (d == 2)
      return 4.0 * gauss_panel(
                       [&](double th) {
                         double s = std::sin(M_PI * t * std::cos(th));
                         return int_pow(4.0 * s * s, k);
                       },
                       0.0, M_PI / 2.0, 64);
    return 4.0 * M_PI *
           gauss_panel(
               [&](double mu) {
                 double s = std::sin(M_PI * t * mu);
                 return int_pow(4.0 * s * s, k);
               },
               0.0, 1.0, 64);
  }
  double acc = binom(2 * k, k) * surface_area(d);
  double sign = -1;
  for (int m = 1; m <= k; ++m, sign = -sign) {
    double x = 2.0 * M_PI * m * t;
    double avg = (d == 2) ? 2.0 * M_PI * std::cyl_bessel_j(0, x) : 4.0 * M_PI * std::sin(x) / x;
    acc += 2.0 * sign * binom(2 * k, k + m) * avg;
  }
  return acc;
}

/// int_eps^R r^{-1-2s} sum_i w_i sphere_mean_power(d, k, r nu_i) dr.
/// Octave panels; each splits into subpanels sized so Gauss-Legendre resolves
/// the fastest mode's oscillation.
double radial_quadrature(int d, double s, int k,
                         const std::vector<std::pair<double, double>>& modes, double eps, double R,
                         int order) {
  double nu_max = 0;
  for (const auto& m : modes) nu_max = std::max(nu_max, m.first);
  auto integrand = [&](double r) {
    double acc = 0;
    for (const auto& m : modes) acc += m.second * sphere_mean_power(d, k, r * m.first);
    return acc * std::pow(r, -1.0 - 2.0 * s);
  };
  double total = 0;
  for (double a = eps; a < R; a *= 2) {
    double b = std::min(2.0 * a, R);
    // fastest oscillation in the group is at frequency k * nu_max
    int sub = std::max(1, static_cast<int>(std::ceil((b - a) * nu_max * k / 8.0)));
    double w = (b - a) / sub;
    for (int j = 0; j < sub; ++j) total += gauss_panel(integrand, a + j * w, a + (j + 1) * w, order);
  }
  return total;
}

double small_radius_stub(int d, double s, int k,
                         const std::vector<std::pair<double, double>>& modes, double eps) {
  double acc = 0;
  for (const auto& m : modes) acc += m.second * int_pow(2.0 * M_PI * m.first, 2 * k);
  return acc * first_component_moment(d, k) * std::pow(eps, 2.0 * (k - s)) / (2.0 * (k - s));
}

std::mutex ck_mutex;
std::map<std::tuple<int, double, int, double, int, double>, double> ck_cache;

}  // namespace

SpectralField forward_difference(const SpectralField& u, const std::array<double, 3>& y, int k) {
  if (k < 1) throw std::invalid_argument("difference order must be at least 1");
  const SpectralGrid& g = u.grid();
  SpectralField v(g, false);  // differences of real fields need not be real
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    double phase = 0;
    for (int j = 0; j < g.dim(); ++j) phase += n[j] * y[j];
    phase *= 2.0 * M_PI / g.box_side();
    std::complex<double> base = std::polar(1.0, phase) - 1.0;
    std::complex<double> f = 1;
    for (int j = 0; j < k; ++j) f *= base;
    v[i] = f * u[i];
  }
  return v;
}

CkDetail c_k_detail(int d, double s, int k, const CkQuadrature& quad) {
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2, or 3");
  if (k < 1) throw std::invalid_argument("difference order must be at least 1");
  if (!(s > 0) || !(s < k)) throw std::invalid_argument("need 0 < s < k for integrability");
  if (!(quad.outer_radius > quad.inner_cutoff) || !(quad.inner_cutoff > 0) || quad.order < 2)
    throw std::invalid_argument("bad quadrature controls");
  std::vector<std::pair<double, double>> one = {{1.0, 1.0}};
  CkDetail det;
  det.stub = small_radius_stub(d, s, k, one, quad.inner_cutoff);
  det.quadrature = radial_quadrature(d, s, k, one, quad.inner_cutoff, quad.outer_radius, quad.order);
  double tail_scale = surface_area(d) * std::pow(quad.outer_radius, -2.0 * s) / (2.0 * s);
  det.tail_mean = binom(2 * k, k) * tail_scale;
  det.tail_bound = (std::pow(4.0, k) - binom(2 * k, k)) * tail_scale;
  det.value = det.stub + det.quadrature + det.tail_mean;
  return det;
}

double c_k_constant(int d, double s, int k, const CkQuadrature& quad) {
  std::scoped_lock lock(ck_mutex);
  auto key = std::make_tuple(d, s, k, quad.outer_radius, quad.order, quad.inner_cutoff);
  auto it = ck_cache.find(key);
  if (it == ck_cache.end()) it = ck_cache.emplace(key, c_k_detail(d, s, k, quad).value).first;
  return it->second;
}

DifferenceNormDetail difference_norm_detail(const SpectralField& u, double s,
                                            const DifferenceNormSpec& spec) {
  if (spec.k < 1 || !(spec.k > s)) throw std::invalid_argument("difference order must exceed s");
  if (!(s > 0)) throw std::invalid_argument("need s > 0");
  if (!(spec.ball_radius > spec.inner_cutoff) || !(spec.inner_cutoff > 0))
    throw std::invalid_argument("bad displacement-ball radii");
  const SpectralGrid& g = u.grid();
  int d = g.dim();

  // group coefficient mass by |n| (the displacement integral only sees it)
  std::map<long, double> by_n2;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    long n2 = 0;
    for (int j = 0; j < d; ++j) n2 += static_cast<long>(n[j]) * n[j];
    if (n2 == 0) continue;
    by_n2[n2] += std::norm(u[i]);
  }
  DifferenceNormDetail det;
  det.c_k = c_k_constant(d, s, spec.k);
  if (by_n2.empty()) return det;

  std::vector<std::pair<double, double>> modes;
  double wsum = 0;
  for (const auto& [n2, w] : by_n2) {
    modes.push_back({std::sqrt(static_cast<double>(n2)) / g.box_side(), w});
    wsum += w;
  }
  double vol = std::pow(g.box_side(), d);
  double conv = (g.convention() == Convention::TwoPi) ? std::pow(2.0 * M_PI, 2.0 * s) : 1.0;
  double scale = vol * conv / det.c_k;
  det.stub = scale * small_radius_stub(d, s, spec.k, modes, spec.inner_cutoff);
  det.quadrature = scale * radial_quadrature(d, s, spec.k, modes, spec.inner_cutoff,
                                             spec.ball_radius, spec.order);
  double tail_scale = surface_area(d) * std::pow(spec.ball_radius, -2.0 * s) / (2.0 * s);
  det.tail_mean = scale * wsum * binom(2 * spec.k, spec.k) * tail_scale;
  det.tail_bound = scale * wsum * std::pow(4.0, spec.k) * tail_scale;
  det.value = det.stub + det.quadrature + det.tail_mean;
  return det;
}

double difference_norm(const SpectralField& u, double s, const DifferenceNormSpec& spec) {
  return difference_norm_detail(u, s, spec).value;
}

TorusGnsReport verify_torus_gns(const SpectralField& u, double s, double p, double delta,
                                double c_delta, double c_gns, const std::string& field_id) {
  GnsParameters prm{u.grid().dim(), s, p};
  if (!prm.admissible()) throw std::invalid_argument("inadmissible (d, s, p)");
  if (delta < 0 || c_delta < 0 || !(c_gns > 0)) throw std::invalid_argument("bad constants");
  TorusGnsReport rep;
  rep.field_id = field_id;
  rep.delta = delta;
  rep.c_delta = c_delta;
  rep.c_gns = c_gns;
  double hs = sobolev_norm(u, s), l2 = l2_norm(u);
  rep.lhs = std::pow(lp_norm(u, p), p);
  double mid = std::pow(hs, prm.hs_exponent()) * std::pow(l2, prm.l2_exponent());
  rep.rhs = (c_gns + delta) * mid + c_delta * std::pow(l2, p);
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

TorusGnsReport verify_torus_gns(const SpectralField& u, double s, double p, double delta,
                                double c_delta, const std::string& field_id) {
  GnsParameters prm{u.grid().dim(), s, p};
  return verify_torus_gns(u, s, p, delta, c_delta,
                          convention_sharp_constant(prm, u.grid().convention()), field_id);
}

double convention_sharp_constant(const GnsParameters& params, Convention conv) {
  double base = sharp_constant(params);
  if (conv == Convention::TwoPi) return base;
  return base * std::pow(2.0 * M_PI, (params.p - 2.0) * params.d / 2.0);
}

double fit_c_delta(const std::vector<SpectralField>& corpus, double s, double p, double delta,
                   double c_gns) {
  if (!(c_gns > 0) || delta < 0) throw std::invalid_argument("bad constants");
  double c = 1.0;
  for (const SpectralField& u : corpus) {
    double l2 = l2_norm(u);
    if (l2 == 0) continue;
    GnsParameters prm{u.grid().dim(), s, p};
    if (!prm.admissible()) throw std::invalid_argument("inadmissible (d, s, p)");
    double mid = std::pow(sobolev_norm(u, s), prm.hs_exponent()) * std::pow(l2, prm.l2_exponent());
    double need = (std::pow(lp_norm(u, p), p) - (c_gns + delta) * mid) / std::pow(l2, p);
    c = std::max(c, need);
  }
  return c;
}

RestrictionComparison restriction_comparison(const SpectralField& u, double s) {
  const SpectralGrid& g = u.grid();
  long L = std::lround(g.box_side());
  if (L < 1 || std::abs(g.box_side() - static_cast<double>(L)) > 1e-9 * std::max(1.0, g.box_side()))
    throw std::invalid_argument("periodization to the unit torus needs an integer box side");
  RestrictionComparison r;
  r.line_norm = sobolev_norm(u, s);

  // unit-torus coefficients of the periodization: p^(m) = L^d c(L m)
  double scale = (g.convention() == Convention::TwoPi) ? 2.0 * M_PI : 1.0;
  double vol = std::pow(static_cast<double>(L), g.dim());
  int M = static_cast<int>(g.modes() / L);
  double acc = 0;
  SpectralGrid lattice(g.dim(), std::max(1, M), 1.0, g.convention());
  for (std::size_t i = 0; M >= 1 && i < lattice.size(); ++i) {
    auto m = lattice.mode(i);
    if (m[0] == 0 && m[1] == 0 && m[2] == 0) continue;
    std::array<int, 3> n = {static_cast<int>(m[0] * L), static_cast<int>(m[1] * L),
                            static_cast<int>(m[2] * L)};
    double mult = scale * lattice.mode_abs(m);  // unit torus
    acc += std::pow(mult, 2.0 * s) * std::norm(vol * u.at(n));
  }
  r.torus_norm = std::sqrt(acc);
  r.torus_leq_line = r.torus_norm <= r.line_norm * (1.0 + 1e-12);
  return r;
}

}  // namespace fgibbs
