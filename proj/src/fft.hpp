#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ticksync::detail {

/// In-place iterative radix-2 FFT; a.size() must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse);

/// Linear convolution of two real sequences via a single packed complex FFT
/// (a in the real plane, b in the imaginary plane). Result length is
/// a.size() + b.size() - 1; values are unrounded doubles so the caller can
/// check the integer-rounding residual.
std::vector<double> convolve_real(const std::vector<double>& a, const std::vector<double>& b);

} // namespace ticksync::detail
