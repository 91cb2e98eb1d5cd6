#pragma once

#include <complex>
#include <vector>

#include "qpf/prational.hpp"

namespace qpf {

/// In-place DFT along every axis of an N-dimensional cube with side p^s:
///   out[u] = sum_m in[m] * omega^(m . u),  omega = exp(+2 pi i / p^s).
/// Radix-p Cooley-Tukey per axis; no normalization.
void fft_cube_pow_p(std::complex<double>* data, int p, int s, int ndim);

/// Direct O(M^2) evaluation of the same sum (test oracle).
std::vector<std::complex<double>> dft_cube_direct(const std::vector<std::complex<double>>& in,
                                                  int p, int s, int ndim);

} // namespace qpf
