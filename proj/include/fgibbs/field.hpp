#pragma once
#include <complex>
#include <vector>

#include "fgibbs/grid.hpp"

namespace fgibbs {

/// Band-limited function on the grid's box, stored as Fourier coefficients
/// u(x) = sum_n c(n) exp(2 pi i n.x / L). real_symmetric marks fields kept
/// conjugate symmetric (c(-n) = conj c(n)).
class SpectralField {
 public:
  explicit SpectralField(const SpectralGrid& grid, bool real_symmetric = false)
      : grid_(grid), real_symmetric_(real_symmetric), coeff_(grid.size()) {}

  const SpectralGrid& grid() const { return grid_; }
  bool real_symmetric() const { return real_symmetric_; }
  void set_real_symmetric(bool v) { real_symmetric_ = v; }

  std::complex<double>& operator[](std::size_t i) { return coeff_[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return coeff_[i]; }
  std::complex<double>& at(const std::array<int, 3>& n) { return coeff_[grid_.index(n)]; }
  const std::complex<double>& at(const std::array<int, 3>& n) const { return coeff_[grid_.index(n)]; }
  const std::vector<std::complex<double>>& coefficients() const { return coeff_; }
  std::vector<std::complex<double>>& coefficients() { return coeff_; }

  std::complex<double> mean() const { return coeff_[grid_.index({0, 0, 0})]; }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);

  /// Replaces the field with one whose box side is L/lambda, keeping the
  /// coefficient array: exactly the dilation u(x) -> u(lambda x).
  void dilate_box(double lambda);

 private:
  SpectralGrid grid_;
  bool real_symmetric_;
  std::vector<std::complex<double>> coeff_;
};

enum class ProjectionKind { ZeroMode, NonZeroModes, LowPass, HighPass };

struct Projection {
  ProjectionKind kind;
  int cutoff = 0;  // LowPass keeps |n|_inf <= cutoff, HighPass keeps |n|_inf >= cutoff
  static Projection zero_mode() { return {ProjectionKind::ZeroMode, 0}; }
  static Projection nonzero_modes() { return {ProjectionKind::NonZeroModes, 0}; }
  static Projection low_pass(int c) { return {ProjectionKind::LowPass, c}; }
  static Projection high_pass(int c) { return {ProjectionKind::HighPass, c}; }
};

SpectralField project(const SpectralField& u, const Projection& P);

/// |D|^s via the grid multiplier; the n = 0 coefficient is zeroed for any
/// s != 0 (for s < 0 this is the inverse derivative on mean-free fields).
SpectralField apply_fractional_derivative(const SpectralField& u, double s);

/// sqrt( L^d sum_{n != 0} m(n)^{2s} |c(n)|^2 ); s = 0 gives the mean-free L2 norm.
double sobolev_norm(const SpectralField& u, double s);

/// L2 norm by Parseval (zero mode included).
double l2_norm(const SpectralField& u);

/// Number of quadrature points per dimension for integrating |u|^p without
/// aliasing: max(2N+2, ceil(p/2)(2N+1)) rounded up to a power of two.
int quadrature_points(const SpectralGrid& grid, double p);

/// Values of u on the uniform G^d grid x_j = j L / G (row major).
std::vector<std::complex<double>> values_on_grid(const SpectralField& u, int G);

/// Inverse of values_on_grid: band-limit the grid function to |n_j| <= N.
SpectralField field_from_values(const SpectralGrid& grid, const std::vector<std::complex<double>>& vals, int G);

/// (integral |u|^p dx)^(1/p) by oversampled uniform quadrature; exact for even
/// integer p, spectrally accurate otherwise.
double lp_norm(const SpectralField& u, double p);

/// max |u| over the 2x-oversampled evaluation grid.
double sup_norm(const SpectralField& u);

/// Band-limited projection of |u|^(p-2) u, computed on a grid fine enough
/// that modes |n_j| <= N carry no aliasing error for even integer p.
SpectralField nonlinear_power(const SpectralField& u, double p);

}  // namespace fgibbs
