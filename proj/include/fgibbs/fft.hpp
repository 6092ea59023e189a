#pragma once
#include <complex>
#include <vector>

namespace fgibbs {

/// In-place complex DFT, unnormalized, dims row major (last index fastest).
/// sign -1 is the forward transform sum f(j) e^{-2 pi i n.j/G}, sign +1 the
/// inverse sum. Plans are FFTW_ESTIMATE only, so repeated runs are bit exact.
void dft_inplace(std::complex<double>* data, const std::vector<int>& dims, int sign);

}  // namespace fgibbs
