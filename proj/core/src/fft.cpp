#include "freqprint/fft.hpp"

#include <cmath>
#include <numbers>

#include "freqprint/error.hpp"

namespace freqprint {

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument, "FFT size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    // Twiddles are computed directly rather than by repeated multiplication
    // so rounding error does not accumulate along a stage.
    for (std::size_t k = 0; k < half; ++k) {
      const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
      for (std::size_t start = 0; start < n; start += len) {
        const auto u = data[start + k];
        const auto v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

std::vector<double> magnitude_spectrum(std::span<const double> signal, std::size_t fft_size) {
  if (signal.size() > fft_size) {
    throw Error(ErrorCode::InvalidArgument, "signal longer than FFT size");
  }
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t i = 0; i < signal.size(); ++i) buf[i] = signal[i];
  fft_inplace(buf);
  std::vector<double> mag(fft_size / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

}  // namespace freqprint
