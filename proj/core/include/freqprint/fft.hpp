#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace freqprint {

std::size_t next_pow2(std::size_t n) noexcept;

/// In-place iterative radix-2 Cooley-Tukey transform, forward sign
/// convention X[k] = sum x[n] exp(-2 pi i k n / N). Size must be a power of
/// two.
void fft_inplace(std::span<std::complex<double>> data);

/// |X[k]| for k = 0..N/2 of the signal zero-padded to N = fft_size.
std::vector<double> magnitude_spectrum(std::span<const double> signal, std::size_t fft_size);

}  // namespace freqprint
