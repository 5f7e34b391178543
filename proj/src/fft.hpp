#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace wavesal::detail {

using ComplexVector = std::vector<std::complex<double>>;

// Unnormalized in-place transforms backed by FFTW. Planning is serialized
// internally, execution is not, so both are safe to call from many threads.
void fft_1d(ComplexVector& data, bool inverse);

// Rows of length nx stacked ny times (x fastest).
void fft_2d(ComplexVector& data, std::size_t nx, std::size_t ny);

}  // namespace wavesal::detail
