#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "fgibbs/ground_state.hpp"
#include "oracles.hpp"

using namespace fgibbs;

namespace {

SpectralField field_from_profile(const SpectralGrid& g, double (*f)(double)) {
  int G = quadrature_points(g, 2.0);
  std::vector<std::complex<double>> vals(G);
  double L = g.box_side();
  for (int j = 0; j < G; ++j) vals[j] = f(j * L / G - L / 2);
  SpectralField u = field_from_values(g, vals, G);
  u.set_real_symmetric(true);
  return u;
}

double sech_half(double x) { return 1.0 / std::sqrt(std::cosh(2.0 * x)); }

}  // namespace

TEST_CASE("admissibility window") {
  CHECK(GnsParameters{1, 1.0, 6.0}.admissible());
  CHECK(GnsParameters{1, 1.0, 100.0}.admissible());   // d < 2s: any p > 2
  CHECK(GnsParameters{2, 1.0, 11.0}.admissible());    // d = 2s: any p > 2
  CHECK(!GnsParameters{1, 1.0, 2.0}.admissible());    // p must exceed 2
  CHECK(GnsParameters{1, 0.25, 4.0}.admissible());    // endpoint 2d/(d-2s) = 4 included
  CHECK(GnsParameters{1, 0.25, 3.9}.admissible());
  CHECK(!GnsParameters{1, 0.25, 4.1}.admissible());   // beyond the endpoint
  CHECK(!GnsParameters{1, -1.0, 4.0}.admissible());
}

TEST_CASE("quotient is invariant under amplitude and dilation") {
  SpectralGrid g(1, 64, 20.0, Convention::TwoPi);
  SpectralField u = field_from_profile(g, [](double x) { return std::exp(-x * x / 2); });
  GnsParameters prm{1, 1.0, 6.0};
  double J = weinstein_functional(u, prm);
  for (double c : {0.5, 2.0}) {
    SpectralField v = u;
    v *= c;
    CHECK(weinstein_functional(v, prm) == doctest::Approx(J).epsilon(1e-10));
  }
  for (double b : {0.5, 2.0}) {
    SpectralField v = u;
    v.dilate_box(b);
    CHECK(weinstein_functional(v, prm) == doctest::Approx(J).epsilon(1e-6));
  }
  SpectralField zero(g);
  CHECK_THROWS(weinstein_functional(zero, prm));
  CHECK_THROWS(weinstein_functional(u, GnsParameters{1, 1.0, 2.0}));
}

TEST_CASE("quotient of the closed-form profile matches adaptive quadrature") {
  SpectralGrid g(1, 256, 40.0, Convention::TwoPi);
  SpectralField u = field_from_profile(g, sech_half);
  GnsParameters prm{1, 1.0, 6.0};
  double mass = oracles::integrate([](double x) { return sech_half(x) * sech_half(x); }, -20, 20);
  double grad = oracles::integrate(
      [](double x) {
        double d = -std::tanh(2.0 * x) * sech_half(x);  // d/dx sech^{1/2}(2x)
        return d * d;
      },
      -20, 20);
  double pot = oracles::integrate([](double x) { return std::pow(sech_half(x), 6.0); }, -20, 20);
  double J_ref = std::pow(std::sqrt(grad), prm.hs_exponent()) *
                 std::pow(std::sqrt(mass), prm.l2_exponent()) / pot;
  CHECK(weinstein_functional(u, prm) == doctest::Approx(J_ref).epsilon(1e-6));
}

TEST_CASE("sextic ground state reproduces the closed form") {
  GnsParameters prm{1, 1.0, 6.0};
  SpectralGrid grid = default_ground_state_grid(1);
  GroundStateProfile prof = solve_ground_state(prm, SolverOptions{}, grid);
  REQUIRE(prof.converged);
  CHECK(prof.residual < 1e-6);

  // canonical normalization identities
  CHECK(std::abs(prof.hs - prof.l2) <= 1e-8 * prof.l2);
  double T = prof.hs * prof.hs, P = std::pow(prof.lp, prm.p);
  CHECK(std::abs(T - (2.0 / prm.p) * P) <= 1e-8 * T);
  // zero energy: (1/2) |Q|^2_{Hdot^s} = (1/p) |Q|^p_{L^p}
  CHECK(std::abs(0.5 * T - P / prm.p) <= 1e-8 * T);

  // closed-form mass and sharp constant
  CHECK(prof.l2 == doctest::Approx(std::sqrt(oracles::soliton_sextic_mass_sq())).epsilon(1e-3));
  CHECK(prof.c_gns == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-3));
  CHECK(prof.c_gns * prof.j_value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sharp_constant(prof) == doctest::Approx(prof.c_gns).epsilon(1e-12));

  // pointwise agreement with the closed-form profile, centered in the box
  const SpectralGrid& g = prof.field.grid();
  int G = 1024;
  auto vals = values_on_grid(prof.field, G);
  double L = g.box_side(), err2 = 0, ref2 = 0, min_val = 0, max_val = 0;
  for (int j = 0; j < G; ++j) {
    double ref = oracles::soliton_sextic(j * L / G - L / 2);
    err2 += std::norm(vals[j] - ref) * L / G;
    ref2 += ref * ref * L / G;
    min_val = std::min(min_val, vals[j].real());
    max_val = std::max(max_val, vals[j].real());
  }
  CHECK(std::sqrt(err2 / ref2) < 1e-3);
  CHECK(min_val > -1e-8 * max_val);  // positivity after sign alignment
}

TEST_CASE("quartic ground state reproduces the closed form") {
  GnsParameters prm{1, 1.0, 4.0};
  GroundStateProfile prof = solve_ground_state(prm, SolverOptions{}, default_ground_state_grid(1));
  REQUIRE(prof.converged);
  CHECK(prof.l2 == doctest::Approx(std::sqrt(oracles::soliton_quartic_mass_sq())).epsilon(1e-3));
  // C = (p/2) |Q|^{2-p} = 2 / (2 sqrt 3) = 1/sqrt(3)
  CHECK(prof.c_gns == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-3));
  const SpectralGrid& g = prof.field.grid();
  int G = 1024;
  auto vals = values_on_grid(prof.field, G);
  double L = g.box_side(), err2 = 0, ref2 = 0;
  for (int j = 0; j < G; ++j) {
    double ref = oracles::soliton_quartic(j * L / G - L / 2);
    err2 += std::norm(vals[j] - ref) * L / G;
    ref2 += ref * ref * L / G;
  }
  CHECK(std::sqrt(err2 / ref2) < 1e-3);
}

TEST_CASE("restarting from the solution is a fixed point") {
  GnsParameters prm{1, 1.0, 6.0};
  SpectralGrid grid = default_ground_state_grid(1);
  GroundStateProfile first = solve_ground_state(prm, SolverOptions{}, grid);
  REQUIRE(first.converged);
  GroundStateProfile again =
      solve_ground_state(prm, SolverOptions{}, first.field.grid(), first.field);
  CHECK(again.iterations <= 2);
  CHECK(again.l2 == doctest::Approx(first.l2).epsilon(1e-10));
  CHECK(again.hs == doctest::Approx(first.hs).epsilon(1e-10));
  CHECK(again.lp == doctest::Approx(first.lp).epsilon(1e-10));
}

TEST_CASE("elliptic residual detects non-solutions and ignores translations") {
  GnsParameters prm{1, 1.0, 6.0};
  GroundStateProfile prof = solve_ground_state(prm, SolverOptions{}, default_ground_state_grid(1));
  REQUIRE(prof.converged);

  // translation: phase shift in Fourier space
  GroundStateProfile shifted = prof;
  const SpectralGrid& g = prof.field.grid();
  double a = 0.37 * g.box_side();
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    shifted.field[i] *= std::exp(std::complex<double>(0, -2 * M_PI * n[0] * a / g.box_side()));
  }
  CHECK(elliptic_residual(shifted) == doctest::Approx(prof.residual).epsilon(1e-10));

  // perturbation: add a bump, then restore the canonical normalization so the
  // residual is measured on an admissible profile
  GroundStateProfile bad = prof;
  SpectralField bump = field_from_profile(g, [](double x) { return std::exp(-(x - 3) * (x - 3)); });
  bump *= 0.1 * prof.l2 / l2_norm(bump);
  bad.field += bump;
  double hs = sobolev_norm(bad.field, prm.s), l2 = l2_norm(bad.field);
  bad.field.dilate_box(std::pow(l2 * l2 / (hs * hs), 1.0 / (2.0 * prm.s)));
  double m = std::pow(l2_norm(bad.field), 2.0);
  double P = std::pow(lp_norm(bad.field, prm.p), prm.p);
  bad.field *= std::pow((prm.p / 2.0) * m / P, 1.0 / (prm.p - 2.0));
  CHECK(elliptic_residual(bad) > 1e-2);

  // unnormalized profiles are rejected outright
  GroundStateProfile off = prof;
  off.field *= 2.0;
  CHECK_THROWS(elliptic_residual(off));
  CHECK_THROWS(sharp_constant(off));
}

TEST_CASE("no random field beats the computed sharp constant") {
  GnsParameters prm{1, 1.0, 6.0};
  double c = sharp_constant(prm);  // cached solve
  CHECK(c == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-3));
  CHECK(ground_state_mass(prm) ==
        doctest::Approx(std::sqrt(oracles::soliton_sextic_mass_sq())).epsilon(1e-3));

  SpectralGrid g(1, 64, 40.0, Convention::TwoPi);
  std::mt19937 rng(2718);
  std::normal_distribution<double> nd;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    SpectralField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto n = g.mode(i);
      double decay = 1.0 / (1.0 + g.mode_abs(n));
      u[i] = std::complex<double>(nd(rng), nd(rng)) * decay;
    }
    double J = weinstein_functional(u, prm);
    if (J < (1.0 / c) * (1.0 - 1e-6)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("ground state is box-size independent once resolved") {
  GnsParameters prm{1, 1.0, 6.0};
  GroundStateProfile a =
      solve_ground_state(prm, SolverOptions{}, SpectralGrid(1, 255, 40.0, Convention::TwoPi));
  GroundStateProfile b =
      solve_ground_state(prm, SolverOptions{}, SpectralGrid(1, 511, 80.0, Convention::TwoPi));
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(a.l2 == doctest::Approx(b.l2).epsilon(1e-6));
}
