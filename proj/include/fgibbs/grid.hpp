#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgibbs {

/// Fourier multiplier convention carried by every grid. TwoPi means the
/// symbol of |D| on mode n is 2*pi*|n|/L, Plain means |n|/L. Mixing
/// conventions in one expression is a bug, so the tag travels with the data.
enum class Convention { TwoPi, Plain };

inline const char* to_string(Convention c) {
  return c == Convention::TwoPi ? "twopi" : "plain";
}

inline Convention convention_from_string(const std::string& s) {
  if (s == "twopi") return Convention::TwoPi;
  if (s == "plain") return Convention::Plain;
  throw std::invalid_argument("unknown convention '" + s + "' (expected twopi or plain)");
}

/// Truncated Fourier lattice on a periodic box [0,L)^d with modes |n_j| <= N
/// per dimension. L = 1 is the torus; larger boxes serve as the whole-space
/// surrogate for ground-state work.
class SpectralGrid {
 public:
  SpectralGrid(int dim, int modes, double box_side, Convention conv)
      : d_(dim), N_(modes), L_(box_side), conv_(conv) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2, or 3");
    if (modes < 1 || modes > 511) throw std::invalid_argument("modes per dimension must be in [1,511]");
    if (!(box_side > 0.0)) throw std::invalid_argument("box side must be positive");
    size_ = 1;
    for (int j = 0; j < d_; ++j) size_ *= static_cast<std::size_t>(2 * N_ + 1);
  }

  int dim() const { return d_; }
  int modes() const { return N_; }
  double box_side() const { return L_; }
  Convention convention() const { return conv_; }
  std::size_t size() const { return size_; }
  int points_per_dim() const { return 2 * N_ + 1; }

  /// Lattice vector of the flattened index (row major, last dimension fastest).
  std::array<int, 3> mode(std::size_t idx) const {
    std::array<int, 3> n{0, 0, 0};
    int P = points_per_dim();
    for (int j = d_ - 1; j >= 0; --j) {
      n[j] = static_cast<int>(idx % P) - N_;
      idx /= P;
    }
    return n;
  }

  std::size_t index(const std::array<int, 3>& n) const {
    std::size_t idx = 0;
    int P = points_per_dim();
    for (int j = 0; j < d_; ++j) idx = idx * P + static_cast<std::size_t>(n[j] + N_);
    return idx;
  }

  bool in_range(const std::array<int, 3>& n) const {
    for (int j = 0; j < d_; ++j)
      if (n[j] < -N_ || n[j] > N_) return false;
    return true;
  }

  double mode_abs(const std::array<int, 3>& n) const {
    double r2 = 0;
    for (int j = 0; j < d_; ++j) r2 += double(n[j]) * n[j];
    return std::sqrt(r2);
  }

  /// Symbol of |D| on mode n under this grid's convention.
  double multiplier(const std::array<int, 3>& n) const {
    double scale = (conv_ == Convention::TwoPi) ? 2.0 * M_PI : 1.0;
    return scale * mode_abs(n) / L_;
  }

  /// Packs the lattice vector into 30 bits, independent of N, so counter-based
  /// random streams assign the same draw to the same mode on every grid size.
  std::uint32_t mode_code(const std::array<int, 3>& n) const {
    std::uint32_t code = 0;
    for (int j = 0; j < 3; ++j) {
      int c = (j < d_) ? n[j] : 0;
      code |= static_cast<std::uint32_t>(c + 512) << (10 * j);
    }
    return code;
  }

  bool same_layout(const SpectralGrid& o) const {
    return d_ == o.d_ && N_ == o.N_ && L_ == o.L_ && conv_ == o.conv_;
  }

 private:
  int d_;
  int N_;
  double L_;
  Convention conv_;
  std::size_t size_;
};

}  // namespace fgibbs
