#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "fgibbs/gaussian_field.hpp"

using namespace fgibbs;

static constexpr double kInf = std::numeric_limits<double>::infinity();

TEST_CASE("law sigma matches the hand formulas") {
  SpectralGrid tp(1, 8, 1.0, Convention::TwoPi);
  SpectralGrid pl(1, 8, 2.0, Convention::Plain);
  SpectralGrid g2(2, 8, 2.0, Convention::Plain);

  CHECK(law_sigma(tp, {LawKind::MasslessComplex, 1.0}, {3, 0, 0}) ==
        doctest::Approx(2.0 * M_PI * 3.0).epsilon(1e-15));
  CHECK(law_sigma(pl, {LawKind::MasslessComplex, 0.8}, {3, 0, 0}) ==
        doctest::Approx(std::pow(1.5, 0.8)).epsilon(1e-15));
  // the massive law always carries the 2 pi |n| / L frequency, whatever the tag
  CHECK(law_sigma(g2, {LawKind::MassiveComplex, 1.0}, {3, 4, 0}) ==
        doctest::Approx(std::sqrt(1.0 + 25.0 * M_PI * M_PI)).epsilon(1e-14));
  CHECK(law_sigma(g2, {LawKind::MassiveComplex, 0.6}, {0, 0, 0}) == doctest::Approx(1.0));
  CHECK_THROWS(law_sigma(tp, {LawKind::MasslessComplex, 0.0}, {1, 0, 0}));
}

TEST_CASE("field samples are pure functions of (seed, stream, sample)") {
  SpectralGrid g(2, 4, 1.0, Convention::TwoPi);
  FieldLaw law{LawKind::MasslessComplex, 1.0};
  GaussianStream s1(99, 0), s1b(99, 0), s2(99, 1);
  SpectralField a = sample_field(g, law, s1, 7);
  SpectralField b = sample_field(g, law, s1b, 7);
  SpectralField c = sample_field(g, law, s1, 8);
  SpectralField d = sample_field(g, law, s2, 7);
  bool same = true, differs_sample = false, differs_stream = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    same = same && (a[i] == b[i]);
    differs_sample = differs_sample || (a[i] != c[i]);
    differs_stream = differs_stream || (a[i] != d[i]);
  }
  CHECK(same);
  CHECK(differs_sample);
  CHECK(differs_stream);
}

TEST_CASE("samples on nested grids agree on shared modes") {
  // Counter-based draws are keyed by the lattice vector, so refining the
  // cutoff extends a sample without redrawing the modes already present.
  FieldLaw law{LawKind::MasslessComplex, 0.9};
  GaussianStream s(5, 2);
  SpectralGrid coarse(2, 4, 1.0, Convention::TwoPi);
  SpectralGrid fine(2, 8, 1.0, Convention::TwoPi);
  SpectralField uc = sample_field(coarse, law, s, 3);
  SpectralField uf = sample_field(fine, law, s, 3);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto n = coarse.mode(i);
    CHECK(uc[i] == uf.at(n));
  }
}

TEST_CASE("massless laws pin the zero mode, the massive law samples it") {
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  GaussianStream s(11, 0);
  CHECK(sample_field(g, {LawKind::MasslessComplex, 1.0}, s, 0).mean() ==
        std::complex<double>(0, 0));
  CHECK(sample_field(g, {LawKind::MasslessReal, 1.0}, s, 0).mean() == std::complex<double>(0, 0));

  // massive zero mode has unit variance
  double acc = 0;
  const int S = 20000;
  for (int i = 0; i < S; ++i)
    acc += std::norm(sample_field(g, {LawKind::MassiveComplex, 1.0}, s, i).mean());
  CHECK(acc / S == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("real law fields are conjugate symmetric with real values") {
  SpectralGrid g(2, 3, 1.0, Convention::TwoPi);
  GaussianStream s(13, 4);
  SpectralField u = sample_field(g, {LawKind::MasslessReal, 1.1}, s, 5);
  CHECK(u.real_symmetric());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    std::array<int, 3> m = {-n[0], -n[1], -n[2]};
    CHECK(std::abs(u[i] - std::conj(u.at(m))) < 1e-15);
  }
  for (auto v : values_on_grid(u, 8)) CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("plus and minus modes of the complex law are independent") {
  SpectralGrid g(1, 2, 1.0, Convention::TwoPi);
  GaussianStream s(17, 0);
  const int S = 30000;
  std::complex<double> cross1 = 0, cross2 = 0;
  for (int i = 0; i < S; ++i) {
    SpectralField u = sample_field(g, {LawKind::MasslessComplex, 1.0}, s, i);
    std::complex<double> a = u.at({1, 0, 0}) * (2 * M_PI), b = u.at({-1, 0, 0}) * (2 * M_PI);
    cross1 += a * b;
    cross2 += a * std::conj(b);
  }
  CHECK(std::abs(cross1) / S < 5.0 / std::sqrt(double(S)));
  CHECK(std::abs(cross2) / S < 5.0 / std::sqrt(double(S)));
}

TEST_CASE("mean squared mass matches the covariance sum") {
  // E ||u||_2^2 = L^d sum_{n != 0} sigma(n)^{-2}, here = 2 sum_{n=1}^{4} (2 pi n)^{-2}.
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  FieldLaw law{LawKind::MasslessComplex, 1.0};
  double expect = 0;
  for (int n = 1; n <= 4; ++n) expect += 2.0 / std::pow(2.0 * M_PI * n, 2.0);
  GaussianStream s(21, 0);
  MomentStatistics m = moment_statistics(g, law, 2.0, 2.0, 20000, s);
  CHECK(std::abs(m.mean - expect) < 5.0 * m.se);
  CHECK(m.se < 0.01 * expect);  // sanity: the check above has teeth
  CHECK(!m.divergent_regime);
}

TEST_CASE("per-mode covariance check stays within its z bounds") {
  SpectralGrid g(1, 5, 1.0, Convention::TwoPi);
  GaussianStream s(23, 1);
  CovarianceReport rep = covariance_check(g, {LawKind::MassiveComplex, 0.7}, 3000, s, 3);
  CHECK(rep.modes.size() == 7);  // |n| <= 3, zero mode included for the massive law
  CHECK(rep.max_abs_variance_z < 4.0);
  CHECK(rep.max_abs_mean_z < 4.0);
  for (const auto& ms : rep.modes) {
    double w = 2.0 * M_PI * g.mode_abs(ms.n);
    CHECK(ms.target_variance == doctest::Approx(std::pow(1.0 + w * w, -0.7)).epsilon(1e-13));
    CHECK(ms.empirical_variance == doctest::Approx(ms.target_variance).epsilon(0.12));
  }
}

TEST_CASE("moment statistics handles the degenerate and sup-norm exponents") {
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  GaussianStream s(29, 0);
  FieldLaw law{LawKind::MasslessComplex, 1.0};
  MomentStatistics one = moment_statistics(g, law, 0.0, 2.0, 50, s);
  CHECK(one.mean == 1.0);
  CHECK(one.se == 0.0);
  MomentStatistics sup = moment_statistics(g, law, 1.0, kInf, 200, s);
  CHECK(sup.mean > 0.0);
  CHECK(sup.max >= sup.mean);
  CHECK_THROWS(moment_statistics(g, law, -1.0, 2.0, 10, s));
  CHECK_THROWS(moment_statistics(g, law, 2.0, 0.5, 10, s));
  CHECK_THROWS(moment_statistics(g, law, 2.0, 2.0, 0, s));
}

TEST_CASE("divergent regime flag trips at s <= d/2") {
  GaussianStream s(31, 0);
  SpectralGrid g1(1, 2, 1.0, Convention::TwoPi);
  SpectralGrid g2(2, 2, 1.0, Convention::TwoPi);
  CHECK(moment_statistics(g1, {LawKind::MasslessComplex, 0.4}, 2, 2, 10, s).divergent_regime);
  CHECK(moment_statistics(g1, {LawKind::MasslessComplex, 0.5}, 2, 2, 10, s).divergent_regime);
  CHECK(!moment_statistics(g1, {LawKind::MasslessComplex, 0.51}, 2, 2, 10, s).divergent_regime);
  CHECK(moment_statistics(g2, {LawKind::MasslessComplex, 1.0}, 2, 2, 10, s).divergent_regime);
}

TEST_CASE("moment stability separates saturated from growing moments") {
  GaussianStream s(37, 0);
  // s = 1, d = 1: the squared mass converges; at N = 32 the remaining tail is
  // below the Monte Carlo resolution of 400 samples.
  SpectralGrid g(1, 32, 1.0, Convention::TwoPi);
  StabilityCheck ok = moment_stability(g, {LawKind::MasslessComplex, 1.0}, 2, 2, 400, s);
  CHECK(ok.stable);
  CHECK(ok.fine.mean > ok.coarse.mean);  // shared draws make the tail visible
  // s = 0.4 < d/2: the same moment grows like a power of the cutoff.
  SpectralGrid h(1, 16, 1.0, Convention::TwoPi);
  StabilityCheck bad = moment_stability(h, {LawKind::MasslessComplex, 0.4}, 2, 2, 2000, s);
  CHECK(!bad.stable);
}

TEST_CASE("mass cutoff probability is monotone in K and saturates") {
  SpectralGrid g(1, 4, 1.0, Convention::TwoPi);
  FieldLaw law{LawKind::MassiveComplex, 1.0};
  GaussianStream s(41, 0);
  const std::uint64_t S = 2000;
  double prev = -1;
  for (double K : {0.05, 0.3, 1.0, 10.0}) {
    CutoffProbability c = mass_cutoff_probability(g, law, K, S, s);
    CHECK(c.probability >= prev);  // shared samples make this exact
    prev = c.probability;
  }
  CHECK(mass_cutoff_probability(g, law, 10.0, S, s).probability == doctest::Approx(1.0));
  CHECK(mass_cutoff_probability(g, law, 0.05, S, s).probability < 0.1);
  CHECK_THROWS(mass_cutoff_probability(g, law, 0.0, S, s));
}

TEST_CASE("worker count cannot change any estimate") {
  SpectralGrid g(1, 6, 1.0, Convention::TwoPi);
  FieldLaw law{LawKind::MasslessComplex, 1.0};
  GaussianStream s(43, 0);
  MomentStatistics a = moment_statistics(g, law, 2.0, 4.0, 500, s, 1);
  MomentStatistics b = moment_statistics(g, law, 2.0, 4.0, 500, s, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK(a.max == b.max);
  CutoffProbability pa = mass_cutoff_probability(g, law, 0.2, 500, s, 1);
  CutoffProbability pb = mass_cutoff_probability(g, law, 0.2, 500, s, 4);
  CHECK(pa.probability == pb.probability);
}
