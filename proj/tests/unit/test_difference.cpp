#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "fgibbs/difference_norm.hpp"
#include "fgibbs/rng.hpp"
#include "oracles.hpp"

using namespace fgibbs;

namespace {

double binom_d(int n, int r) {
  double v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

std::complex<double> eval_at(const SpectralField& u, double x) {
  const SpectralGrid& g = u.grid();
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    acc += u[i] * std::polar(1.0, 2.0 * M_PI * g.mode(i)[0] * x / g.box_side());
  return acc;
}

/// Oscillatory remainder bound of the k = 1 radial tail beyond R = 1e4.
double c1_tail_slack(int d, double s) {
  double surf = (d == 1) ? 2.0 : (d == 2) ? 2.0 * M_PI : 4.0 * M_PI;
  return 2.0 * surf * std::pow(1e4, -2.0 * s) / (2.0 * s);
}

SpectralField gaussian_bump(const SpectralGrid& g, double center, double sigma) {
  int G = g.points_per_dim();
  std::vector<std::complex<double>> vals(G);
  for (int j = 0; j < G; ++j) {
    double x = j * g.box_side() / G;
    vals[j] = std::exp(-std::pow((x - center) / sigma, 2) / 2.0);
  }
  SpectralField u = field_from_values(g, vals, G);
  u.set_real_symmetric(true);
  return u;
}

/// rho^{-1/2} Q((x - 1/2) / rho) on the unit torus, Q the sextic soliton.
SpectralField periodized_soliton(const SpectralGrid& g, double rho) {
  int G = g.points_per_dim();
  std::vector<std::complex<double>> vals(G);
  for (int j = 0; j < G; ++j) {
    double x = static_cast<double>(j) / G;
    vals[j] = oracles::soliton_sextic((x - 0.5) / rho) / std::sqrt(rho);
  }
  SpectralField u = field_from_values(g, vals, G);
  u.set_real_symmetric(true);
  return u;
}

}  // namespace

TEST_CASE("forward difference: single-mode action") {
  SpectralGrid g(1, 2, 1.0, Convention::TwoPi);
  SpectralField u(g);
  u.at({1, 0, 0}) = 1.0;
  SpectralField v = forward_difference(u, {0.5, 0.0, 0.0}, 1);
  CHECK(std::abs(v.at({1, 0, 0}) - std::complex<double>(-2.0, 0.0)) < 1e-14);
  SpectralField v2 = forward_difference(u, {0.5, 0.0, 0.0}, 2);
  CHECK(std::abs(v2.at({1, 0, 0}) - std::complex<double>(4.0, 0.0)) < 1e-14);

  SpectralField w(g);
  w.at({2, 0, 0}) = 3.0;  // displacement is a full period of this mode
  CHECK(l2_norm(forward_difference(w, {0.5, 0.0, 0.0}, 1)) < 1e-14);
}

TEST_CASE("forward difference: constants are annihilated") {
  SpectralGrid g(2, 3, 2.0, Convention::TwoPi);
  SpectralField u(g);
  u.at({0, 0, 0}) = 5.0;
  for (int k = 1; k <= 3; ++k)
    CHECK(l2_norm(forward_difference(u, {0.3, 0.7, 0.0}, k)) == 0.0);
}

TEST_CASE("forward difference: spectral action matches the real-space stencil") {
  SpectralGrid g(1, 6, 2.5, Convention::TwoPi);
  SpectralField u(g);
  GaussianStream gs(2024, 7);
  for (std::size_t i = 0; i < g.size(); ++i)
    u[i] = gs.complex_gaussian(0, g.mode_code(g.mode(i)), 0);

  double y = 0.3;
  for (int k = 1; k <= 3; ++k) {
    SpectralField v = forward_difference(u, {y, 0.0, 0.0}, k);
    for (double x : {0.0, 0.41, 1.17, 1.9, 2.3}) {
      std::complex<double> stencil = 0;
      for (int j = 0; j <= k; ++j)
        stencil += std::pow(-1.0, k - j) * binom_d(k, j) * eval_at(u, x + j * y);
      CHECK(std::abs(eval_at(v, x) - stencil) < 1e-10);
    }
  }
}

TEST_CASE("c_k: closed-form values of c_1") {
  // c_1(1, 1/2) = int 4 sin^2(pi x) / x^2 dx = 4 pi^2
  double four_pi_sq = 4.0 * M_PI * M_PI;
  CHECK(c_k_constant(1, 0.5, 1) == doctest::Approx(four_pi_sq).epsilon(1e-4));

  // Gamma-function evaluations of the same integral at other (d, s)
  struct Pin { int d; double s; double value; };
  for (const Pin& pin : {Pin{1, 0.4, 30.859491907793217},
                         Pin{1, 0.5, 39.47841760435743},
                         Pin{1, 0.6, 54.410865601086236},
                         Pin{1, 0.75, 105.27578027828646},
                         Pin{2, 0.7, 146.75720326173104},
                         Pin{2, 0.5, 78.95683520871485},
                         Pin{3, 0.6, 155.39706877075818}}) {
    double got = c_k_constant(pin.d, pin.s, 1);
    CHECK(std::abs(got - pin.value) < c1_tail_slack(pin.d, pin.s) + 1e-7 * pin.value);
  }
}

TEST_CASE("c_k: c_1(1, s) increases with s") {
  double a = c_k_constant(1, 0.4, 1);
  double b = c_k_constant(1, 0.5, 1);
  double c = c_k_constant(1, 0.6, 1);
  CHECK(a < b);
  CHECK(b < c);
}

TEST_CASE("c_k: detail decomposition and tail accounting") {
  CkDetail det = c_k_detail(1, 0.75, 1);
  CHECK(det.value == doctest::Approx(det.stub + det.quadrature + det.tail_mean).epsilon(1e-14));
  CHECK(det.stub > 0);
  CHECK(det.quadrature > 0);
  CHECK(det.tail_mean > 0);
  CHECK(det.tail_bound > 0);
  CHECK(det.tail_bound < 1e-5 * det.value);  // R = 1e4 leaves a tiny remainder
}

TEST_CASE("c_k: self-convergence under quadrature refinement") {
  CkQuadrature coarse{1e4, 32, 1e-5};
  CkQuadrature fine{1e4, 64, 1e-5};
  double a = c_k_detail(1, 1.5, 2, coarse).value;
  double b = c_k_detail(1, 1.5, 2, fine).value;
  CHECK(std::abs(a - b) < 1e-5 * std::abs(b));
}

TEST_CASE("c_k: rejects non-integrable exponents") {
  CHECK_THROWS_AS(c_k_constant(1, 1.0, 1), std::invalid_argument);   // s >= k
  CHECK_THROWS_AS(c_k_constant(1, 2.7, 2), std::invalid_argument);   // s >= k
  CHECK_THROWS_AS(c_k_constant(1, 0.0, 1), std::invalid_argument);   // s <= 0
  CHECK_THROWS_AS(c_k_constant(1, -0.3, 2), std::invalid_argument);  // s <= 0
  CHECK_THROWS_AS(c_k_constant(4, 0.5, 1), std::invalid_argument);   // dimension
  CHECK_THROWS_AS(c_k_constant(1, 0.5, 0), std::invalid_argument);   // order
}

TEST_CASE("difference norm: single mode reproduces the multiplier") {
  SpectralGrid g(1, 4, 1.0, Convention::Plain);
  SpectralField u(g);
  u.at({1, 0, 0}) = 1.0;
  DifferenceNormSpec spec;  // k = 1, R = 1e3
  DifferenceNormDetail det = difference_norm_detail(u, 0.75, spec);
  CHECK(det.value == doctest::Approx(1.0).epsilon(1e-3));  // |n|^{2s} |c|^2 = 1
  CHECK(det.c_k == doctest::Approx(c_k_constant(1, 0.75, 1)).epsilon(1e-14));
  CHECK(det.tail_bound > 0);
  CHECK(det.value == doctest::Approx(det.stub + det.quadrature + det.tail_mean).epsilon(1e-14));
}

TEST_CASE("difference norm: constant field gives zero") {
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  SpectralField u(g);
  u.at({0, 0, 0}) = 7.0;
  CHECK(difference_norm(u, 0.5, {}) == 0.0);
}

TEST_CASE("difference norm: convention tag scales the estimate") {
  SpectralGrid gp(1, 4, 1.0, Convention::Plain);
  SpectralGrid gt(1, 4, 1.0, Convention::TwoPi);
  SpectralField up(gp), ut(gt);
  up.at({1, 0, 0}) = 1.0;
  ut.at({1, 0, 0}) = 1.0;
  double s = 0.75;
  double vp = difference_norm(up, s, {});
  double vt = difference_norm(ut, s, {});
  CHECK(vt == doctest::Approx(vp * std::pow(2.0 * M_PI, 2.0 * s)).epsilon(1e-13));
  CHECK(vt == doctest::Approx(std::pow(sobolev_norm(ut, s), 2)).epsilon(1e-3));
}

TEST_CASE("difference norm: random band-limited field matches the Fourier norm") {
  SpectralGrid g(1, 8, 1.0, Convention::TwoPi);
  SpectralField u(g);
  GaussianStream gs(99, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    u[i] = gs.complex_gaussian(1, g.mode_code(n), 0) / (1.0 + g.mode_abs(n));
  }
  double s = 1.2;
  DifferenceNormSpec spec{2, 1e3, 1e-6, 32};
  double direct = std::pow(sobolev_norm(u, s), 2);
  CHECK(difference_norm(u, s, spec) == doctest::Approx(direct).epsilon(1e-2));
}

TEST_CASE("difference norm: refinement gaps shrink (three-level check)") {
  SpectralGrid g(1, 8, 1.0, Convention::TwoPi);
  SpectralField u(g);
  GaussianStream gs(99, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    u[i] = gs.complex_gaussian(1, g.mode_code(n), 0) / (1.0 + g.mode_abs(n));
  }
  double s = 1.2;
  double v30 = difference_norm(u, s, {2, 30.0, 1e-6, 32});
  double v300 = difference_norm(u, s, {2, 300.0, 1e-6, 48});
  double v3000 = difference_norm(u, s, {2, 3000.0, 1e-6, 64});
  CHECK(std::abs(v3000 - v300) < std::abs(v300 - v30));
  CHECK(v3000 == doctest::Approx(std::pow(sobolev_norm(u, s), 2)).epsilon(1e-3));
}

TEST_CASE("difference norm: higher dimensions match the Fourier norm") {
  SpectralGrid g2(2, 3, 1.0, Convention::TwoPi);
  SpectralField u2(g2);
  u2.at({1, 0, 0}) = 0.8;
  u2.at({2, 1, 0}) = std::complex<double>(0.3, -0.4);
  u2.at({-1, 2, 0}) = std::complex<double>(0.0, 0.5);
  CHECK(difference_norm(u2, 0.8, {}) ==
        doctest::Approx(std::pow(sobolev_norm(u2, 0.8), 2)).epsilon(1e-3));

  SpectralGrid g3(3, 2, 1.0, Convention::TwoPi);
  SpectralField u3(g3);
  u3.at({1, 0, 0}) = 1.0;
  u3.at({1, 1, -1}) = std::complex<double>(0.2, 0.6);
  CHECK(difference_norm(u3, 0.9, {}) ==
        doctest::Approx(std::pow(sobolev_norm(u3, 0.9), 2)).epsilon(1e-3));
}

TEST_CASE("difference norm: rejects k <= s and bad radii") {
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  SpectralField u(g);
  u.at({1, 0, 0}) = 1.0;
  CHECK_THROWS_AS(difference_norm(u, 1.0, {1, 1e3, 1e-6, 32}), std::invalid_argument);
  CHECK_THROWS_AS(difference_norm(u, 0.5, {0, 1e3, 1e-6, 32}), std::invalid_argument);
  CHECK_THROWS_AS(difference_norm(u, -0.5, {1, 1e3, 1e-6, 32}), std::invalid_argument);
  CHECK_THROWS_AS(difference_norm(u, 0.5, {1, 1e-9, 1e-6, 32}), std::invalid_argument);
}

TEST_CASE("torus interpolation: constant field needs only the mass term") {
  SpectralGrid g(1, 4, 1.0, Convention::Plain);
  SpectralField u(g);
  u.at({0, 0, 0}) = 3.0;
  TorusGnsReport rep = verify_torus_gns(u, 1.0, 6.0, 0.05, 1.0, 16.0, "const");
  CHECK(rep.lhs == doctest::Approx(729.0).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(729.0).epsilon(1e-12));
  CHECK(std::abs(rep.margin) < 1e-9);
}

TEST_CASE("torus interpolation: narrow soliton nearly saturates it") {
  SpectralGrid g(1, 192, 1.0, Convention::Plain);
  SpectralField u = periodized_soliton(g, 0.05);

  // mass and L^6 integral survive the periodization
  double mass_sq = oracles::soliton_sextic_mass_sq();
  CHECK(std::pow(l2_norm(u), 2) == doctest::Approx(mass_sq).epsilon(1e-6));
  double lhs_expected = 3.0 * mass_sq / (0.05 * 0.05);  // |Q|_6^6 = 3 |Q|_2^2, scaled
  TorusGnsReport rep = verify_torus_gns(u, 1.0, 6.0, 0.05, 1.0, "soliton");
  CHECK(rep.lhs == doctest::Approx(lhs_expected).epsilon(1e-3));
  CHECK(rep.margin > 0.0);
  CHECK(rep.margin < 0.10 * rep.lhs);
}

TEST_CASE("torus interpolation: margin invariant under phase and translation") {
  SpectralGrid g(1, 192, 1.0, Convention::Plain);
  SpectralField u = periodized_soliton(g, 0.05);
  TorusGnsReport base = verify_torus_gns(u, 1.0, 6.0, 0.05, 1.0);

  SpectralField rotated(g), shifted(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    rotated[i] = u[i] * std::polar(1.0, 0.7);
    shifted[i] = u[i] * std::polar(1.0, 2.0 * M_PI * g.mode(i)[0] * 0.3);
  }
  TorusGnsReport rot = verify_torus_gns(rotated, 1.0, 6.0, 0.05, 1.0);
  TorusGnsReport shf = verify_torus_gns(shifted, 1.0, 6.0, 0.05, 1.0);
  double scale = 1.0 + std::abs(base.lhs);
  CHECK(std::abs(rot.margin - base.margin) < 1e-10 * scale);
  CHECK(std::abs(shf.margin - base.margin) < 1e-10 * scale);
}

TEST_CASE("torus interpolation: fitted mass constant clears a random corpus") {
  SpectralGrid g(1, 16, 1.0, Convention::TwoPi);
  GaussianStream gs(512, 11);
  std::vector<SpectralField> corpus;
  for (int f = 0; f < 1000; ++f) {
    SpectralField u(g);
    double alpha = 0.5 * (f % 4);  // spectra from flat to smooth
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto n = g.mode(i);
      u[i] = gs.complex_gaussian(f, g.mode_code(n), 0) / std::pow(1.0 + g.mode_abs(n), alpha);
    }
    corpus.push_back(std::move(u));
  }
  double s = 1.0, p = 6.0, delta = 0.1;
  double c_gns = convention_sharp_constant({1, s, p}, Convention::TwoPi);
  double c_delta = fit_c_delta(corpus, s, p, delta, c_gns);
  CHECK(c_delta >= 1.0);
  int negatives = 0;
  for (const SpectralField& u : corpus) {
    TorusGnsReport rep = verify_torus_gns(u, s, p, delta, c_delta, c_gns);
    if (rep.margin < -1e-9 * (1.0 + std::abs(rep.lhs))) ++negatives;
  }
  CHECK(negatives == 0);
}

TEST_CASE("restriction comparison: overlapping bump is strictly smaller on the torus") {
  SpectralGrid g(1, 128, 4.0, Convention::TwoPi);
  SpectralField u = gaussian_bump(g, 2.0, 0.2);
  RestrictionComparison rc = restriction_comparison(u, 1.0);
  CHECK(rc.torus_leq_line);
  CHECK(rc.torus_norm < 0.99 * rc.line_norm);
  CHECK(rc.torus_norm > 0.90 * rc.line_norm);
}

TEST_CASE("restriction comparison: cell-supported bump is lossless at s = 1") {
  SpectralGrid g(1, 160, 4.0, Convention::TwoPi);
  SpectralField u = gaussian_bump(g, 2.0, 0.03);
  RestrictionComparison rc = restriction_comparison(u, 1.0);
  CHECK(rc.torus_leq_line);
  CHECK(rc.torus_norm == doctest::Approx(rc.line_norm).epsilon(1e-6));

  RestrictionComparison frac = restriction_comparison(u, 0.6);
  CHECK(frac.torus_leq_line);
  CHECK(frac.torus_norm < frac.line_norm * (1.0 - 1e-6));
}

TEST_CASE("restriction comparison: zero field and unit box identity") {
  SpectralGrid g(1, 16, 4.0, Convention::TwoPi);
  SpectralField z(g);
  RestrictionComparison rc = restriction_comparison(z, 0.8);
  CHECK(rc.torus_norm == 0.0);
  CHECK(rc.line_norm == 0.0);
  CHECK(rc.torus_leq_line);

  SpectralGrid unit(1, 6, 1.0, Convention::TwoPi);
  SpectralField u(unit);
  u.at({1, 0, 0}) = std::complex<double>(0.3, 0.4);
  u.at({-2, 0, 0}) = 0.7;
  RestrictionComparison same = restriction_comparison(u, 0.8);
  CHECK(same.torus_norm == doctest::Approx(sobolev_norm(u, 0.8)).epsilon(1e-12));
}

TEST_CASE("restriction comparison: rejects non-integer box sides") {
  SpectralGrid g(1, 16, 2.5, Convention::TwoPi);
  SpectralField u(g);
  u.at({1, 0, 0}) = 1.0;
  CHECK_THROWS_AS(restriction_comparison(u, 1.0), std::invalid_argument);
}
