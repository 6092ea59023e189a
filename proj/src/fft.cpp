#include "fgibbs/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace fgibbs {
namespace {

// fftw plan creation is not thread safe; execution via fftw_execute_dft is.
// Plans are cached per (dims, sign) and created FFTW_ESTIMATE | FFTW_UNALIGNED
// so they can run on any caller buffer.
std::mutex plan_mutex;
std::map<std::pair<std::vector<int>, int>, fftw_plan>& plan_cache() {
  static std::map<std::pair<std::vector<int>, int>, fftw_plan> cache;
  return cache;
}

fftw_plan get_plan(const std::vector<int>& dims, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_pair(dims, sign);
  auto it = plan_cache().find(key);
  if (it != plan_cache().end()) return it->second;
  std::size_t total = 1;
  for (int g : dims) total *= static_cast<std::size_t>(g);
  std::vector<std::complex<double>> scratch(total);
  fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                              reinterpret_cast<fftw_complex*>(scratch.data()),
                              reinterpret_cast<fftw_complex*>(scratch.data()),
                              sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_cache().emplace(key, p);
  return p;
}

}  // namespace

void dft_inplace(std::complex<double>* data, const std::vector<int>& dims, int sign) {
  fftw_plan p = get_plan(dims, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

}  // namespace fgibbs
