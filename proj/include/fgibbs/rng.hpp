#pragma once
#include <array>
#include <complex>
#include <cstdint>

namespace fgibbs {

/// Philox 4x32-10 block cipher. Counter-based: the draw for (sample, mode,
/// step) is a pure function of those indices, so parallel evaluation order
/// and worker count cannot change any sampled number.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// One independent stream per (seed, stream id); experiments use distinct ids.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint32_t stream_id);

  /// Standard complex gaussian, E|g|^2 = 1 (real and imaginary parts are
  /// independent N(0, 1/2)). draw distinguishes multiple uses of one mode,
  /// e.g. Brownian increments per time step.
  std::complex<double> complex_gaussian(std::uint64_t sample, std::uint32_t mode_code,
                                        std::uint32_t draw) const;

  /// Standard real gaussian, N(0,1).
  double real_gaussian(std::uint64_t sample, std::uint32_t mode_code, std::uint32_t draw) const;

  /// Uniform in [0,1).
  double uniform(std::uint64_t sample, std::uint32_t mode_code, std::uint32_t draw) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint32_t, 4> raw(std::uint64_t sample, std::uint32_t mode_code,
                                   std::uint32_t draw) const;
  std::uint64_t seed_;
  std::uint32_t stream_id_;
  std::array<std::uint32_t, 2> key_;
};

}  // namespace fgibbs
