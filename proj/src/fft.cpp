#include "flocklab/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace flocklab {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<Complex>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * M_PI / static_cast<double>(len);
    const Complex step(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex a = data[i + k];
        const Complex b = data[i + k + len / 2] * w;
        data[i + k] = a + b;
        data[i + k + len / 2] = a - b;
        w *= step;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& z : data) z *= inv_n;
  }
}

std::vector<Complex> fft_forward(const Eigen::ArrayXd& values) {
  std::vector<Complex> data(static_cast<std::size_t>(values.size()));
  for (Eigen::Index j = 0; j < values.size(); ++j) data[static_cast<std::size_t>(j)] = Complex(values[j], 0.0);
  fft_inplace(data, false);
  return data;
}

Eigen::ArrayXd fft_inverse_real(std::vector<Complex> spectrum) {
  fft_inplace(spectrum, true);
  Eigen::ArrayXd out(static_cast<Eigen::Index>(spectrum.size()));
  for (std::size_t j = 0; j < spectrum.size(); ++j) out[static_cast<Eigen::Index>(j)] = spectrum[j].real();
  return out;
}

Eigen::ArrayXd spectral_derivative(const Eigen::ArrayXd& values) {
  const std::size_t n = static_cast<std::size_t>(values.size());
  auto spec = fft_forward(values);
  for (std::size_t q = 0; q < n; ++q) {
    if (q == n / 2) {
      spec[q] = Complex(0.0, 0.0);
      continue;
    }
    const double k = 2.0 * M_PI * static_cast<double>(signed_frequency(q, n));
    spec[q] *= Complex(0.0, k);
  }
  return fft_inverse_real(std::move(spec));
}

Eigen::ArrayXd dealias_two_thirds(const Eigen::ArrayXd& values) {
  const std::size_t n = static_cast<std::size_t>(values.size());
  auto spec = fft_forward(values);
  const long cutoff = static_cast<long>(n) / 3;
  for (std::size_t q = 0; q < n; ++q) {
    if (std::labs(signed_frequency(q, n)) > cutoff) spec[q] = Complex(0.0, 0.0);
  }
  return fft_inverse_real(std::move(spec));
}

}  // namespace flocklab
