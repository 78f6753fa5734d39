#pragma once

// Thin FFTW wrapper. Plans are cached per (size, direction) and shared across threads;
// execution on caller-owned buffers is thread-safe.

#include <cstddef>
#include <span>
#include <vector>

#include "dronerad/array.hpp"

namespace dronerad {

/// Unnormalized forward DFT: out[k] = sum_n in[n] exp(-j 2 pi k n / N). Sizes must match.
void fft_forward(std::span<const cdouble> in, std::span<cdouble> out);
/// Unnormalized inverse DFT (positive exponent). Sizes must match.
void fft_inverse(std::span<const cdouble> in, std::span<cdouble> out);

/// Periodic Hann window of length n: 0.5 - 0.5 cos(2 pi i / n).
std::vector<double> hann_window(std::size_t n);

}  // namespace dronerad
