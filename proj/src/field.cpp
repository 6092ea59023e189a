#include "fgibbs/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fgibbs/fft.hpp"

namespace fgibbs {

namespace {

void require_same_layout(const SpectralField& a, const SpectralField& b) {
  if (!a.grid().same_layout(b.grid()))
    throw std::invalid_argument("fields live on different grids");
}

int next_pow2(int v) {
  int g = 1;
  while (g < v) g *= 2;
  return g;
}

}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_layout(*this, o);
  for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] += o.coeff_[i];
  real_symmetric_ = real_symmetric_ && o.real_symmetric_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_layout(*this, o);
  for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] -= o.coeff_[i];
  real_symmetric_ = real_symmetric_ && o.real_symmetric_;
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  for (auto& c : coeff_) c *= a;
  return *this;
}

void SpectralField::dilate_box(double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("dilation factor must be positive");
  grid_ = SpectralGrid(grid_.dim(), grid_.modes(), grid_.box_side() / lambda, grid_.convention());
}

SpectralField project(const SpectralField& u, const Projection& P) {
  const SpectralGrid& g = u.grid();
  SpectralField out(g, u.real_symmetric());
  if ((P.kind == ProjectionKind::LowPass || P.kind == ProjectionKind::HighPass) &&
      (P.cutoff < 0 || P.cutoff > g.modes()))
    throw std::invalid_argument("projection cutoff outside grid range");
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    int ninf = 0;
    for (int j = 0; j < g.dim(); ++j) ninf = std::max(ninf, std::abs(n[j]));
    bool keep = false;
    switch (P.kind) {
      case ProjectionKind::ZeroMode: keep = (ninf == 0); break;
      case ProjectionKind::NonZeroModes: keep = (ninf != 0); break;
      case ProjectionKind::LowPass: keep = (ninf <= P.cutoff); break;
      case ProjectionKind::HighPass: keep = (ninf >= P.cutoff); break;
    }
    if (keep) out[i] = u[i];
  }
  return out;
}

SpectralField apply_fractional_derivative(const SpectralField& u, double s) {
  const SpectralGrid& g = u.grid();
  SpectralField out(g, u.real_symmetric());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    if (g.mode_abs(n) == 0.0) {
      out[i] = (s == 0.0) ? u[i] : 0.0;
    } else {
      out[i] = (s == 0.0) ? u[i] : u[i] * std::pow(g.multiplier(n), s);
    }
  }
  return out;
}

double sobolev_norm(const SpectralField& u, double s) {
  const SpectralGrid& g = u.grid();
  double acc = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto n = g.mode(i);
    if (g.mode_abs(n) == 0.0) continue;
    double m = g.multiplier(n);
    acc += std::pow(m, 2.0 * s) * std::norm(u[i]);
  }
  return std::sqrt(acc * std::pow(g.box_side(), g.dim()));
}

double l2_norm(const SpectralField& u) {
  double acc = 0;
  for (std::size_t i = 0; i < u.grid().size(); ++i) acc += std::norm(u[i]);
  return std::sqrt(acc * std::pow(u.grid().box_side(), u.grid().dim()));
}

int quadrature_points(const SpectralGrid& grid, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("quadrature exponent must be >= 1");
  int P = grid.points_per_dim();
  int base = std::max(2 * grid.modes() + 2,
                      static_cast<int>(std::ceil(p / 2.0)) * P);
  return next_pow2(base);
}

std::vector<std::complex<double>> values_on_grid(const SpectralField& u, int G) {
  const SpectralGrid& g = u.grid();
  if (G < g.points_per_dim())
    throw std::invalid_argument("evaluation grid must resolve all modes");
  const int d = g.dim();
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(G);
  std::vector<std::complex<double>> vals(total);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u[i] == std::complex<double>(0.0, 0.0)) continue;
    auto n = g.mode(i);
    std::size_t idx = 0;
    for (int j = 0; j < d; ++j) idx = idx * G + static_cast<std::size_t>((n[j] % G + G) % G);
    vals[idx] += u[i];
  }
  std::vector<int> dims(static_cast<std::size_t>(d), G);
  dft_inplace(vals.data(), dims, +1);
  return vals;
}

SpectralField field_from_values(const SpectralGrid& grid, const std::vector<std::complex<double>>& vals, int G) {
  const int d = grid.dim();
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(G);
  if (vals.size() != total) throw std::invalid_argument("value array does not match grid size");
  std::vector<std::complex<double>> work(vals);
  std::vector<int> dims(static_cast<std::size_t>(d), G);
  dft_inplace(work.data(), dims, -1);
  const double scale = 1.0 / static_cast<double>(total);
  SpectralField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto n = grid.mode(i);
    std::size_t idx = 0;
    for (int j = 0; j < d; ++j) idx = idx * G + static_cast<std::size_t>((n[j] % G + G) % G);
    out[i] = work[idx] * scale;
  }
  return out;
}

double lp_norm(const SpectralField& u, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  const SpectralGrid& g = u.grid();
  int G = quadrature_points(g, p);
  auto vals = values_on_grid(u, G);
  double acc = 0;
  for (const auto& v : vals) acc += std::pow(std::norm(v), p / 2.0);
  double cell = std::pow(g.box_side() / G, g.dim());
  return std::pow(acc * cell, 1.0 / p);
}

double sup_norm(const SpectralField& u) {
  const SpectralGrid& g = u.grid();
  int G = next_pow2(2 * g.points_per_dim());
  auto vals = values_on_grid(u, G);
  double m = 0;
  for (const auto& v : vals) m = std::max(m, std::norm(v));
  return std::sqrt(m);
}

SpectralField nonlinear_power(const SpectralField& u, double p) {
  if (!(p > 2.0)) throw std::invalid_argument("nonlinear_power requires p > 2");
  const SpectralGrid& g = u.grid();
  int G = quadrature_points(g, p);
  auto vals = values_on_grid(u, G);
  for (auto& v : vals) {
    double a2 = std::norm(v);
    v = (a2 == 0.0) ? 0.0 : v * std::pow(a2, (p - 2.0) / 2.0);
  }
  SpectralField out = field_from_values(g, vals, G);
  out.set_real_symmetric(u.real_symmetric());
  return out;
}

}  // namespace fgibbs
