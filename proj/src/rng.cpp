#include "fgibbs/rng.hpp"

#include <cmath>

namespace fgibbs {

namespace {

constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kMult0, ctr[0], hi0, lo0);
    mul_hi_lo(kMult1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint32_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t k = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream_id) + 1));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<std::uint32_t, 4> GaussianStream::raw(std::uint64_t sample, std::uint32_t mode_code,
                                                 std::uint32_t draw) const {
  std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(sample),
                                      static_cast<std::uint32_t>(sample >> 32), mode_code, draw};
  return philox4x32(ctr, key_);
}

double GaussianStream::uniform(std::uint64_t sample, std::uint32_t mode_code,
                               std::uint32_t draw) const {
  auto r = raw(sample, mode_code, draw);
  std::uint64_t x = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

std::complex<double> GaussianStream::complex_gaussian(std::uint64_t sample,
                                                      std::uint32_t mode_code,
                                                      std::uint32_t draw) const {
  auto r = raw(sample, mode_code, draw);
  std::uint64_t x = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  std::uint64_t y = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  double u1 = static_cast<double>(x >> 11) * 0x1.0p-53;  // in [0,1)
  double u2 = static_cast<double>(y >> 11) * 0x1.0p-53;
  // Box-Muller with |g|^2 = -log(1-u1) ~ Exp(1), so E|g|^2 = 1.
  double radius = std::sqrt(-std::log1p(-u1));
  double angle = 2.0 * M_PI * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double GaussianStream::real_gaussian(std::uint64_t sample, std::uint32_t mode_code,
                                     std::uint32_t draw) const {
  return complex_gaussian(sample, mode_code, draw).real() * M_SQRT2;
}

}  // namespace fgibbs
