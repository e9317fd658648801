#pragma once

// Radix-2 FFT helpers for periodic grids. Grid sizes are restricted to
// powers of two by the core config validator, so no general-length plan
// machinery is needed. All transforms are unnormalized forward
// (X_q = sum_j x_j exp(-2*pi*i*j*q/n)); the inverse carries the 1/n.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace flocklab {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);

// In-place iterative Cooley-Tukey, n must be a power of two.
void fft_inplace(std::vector<Complex>& data, bool inverse);

// Forward transform of a real grid function.
std::vector<Complex> fft_forward(const Eigen::ArrayXd& values);

// Inverse transform, real part only (imaginary parts are discarded; callers
// transform spectra with Hermitian symmetry).
Eigen::ArrayXd fft_inverse_real(std::vector<Complex> spectrum);

// Signed integer frequency s_q for bin q of an n-point transform:
// q for q <= n/2, q - n otherwise.
inline long signed_frequency(std::size_t q, std::size_t n) {
  return q <= n / 2 ? static_cast<long>(q) : static_cast<long>(q) - static_cast<long>(n);
}

// Spectral derivative d/dx on the unit torus. The Nyquist mode has no
// well-defined odd derivative and is zeroed.
Eigen::ArrayXd spectral_derivative(const Eigen::ArrayXd& values);

// Zero all modes with |s_q| > n/3 (2/3-rule dealiasing filter).
Eigen::ArrayXd dealias_two_thirds(const Eigen::ArrayXd& values);

}  // namespace flocklab
