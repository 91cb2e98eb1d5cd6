#include "qpf/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "qpf/parallel.hpp"

namespace qpf {

namespace {

std::vector<std::complex<double>> root_table(i64 n) {
    std::vector<std::complex<double>> w(static_cast<size_t>(n));
    for (i64 t = 0; t < n; ++t) {
        double a = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(n);
        w[static_cast<size_t>(t)] = {std::cos(a), std::sin(a)};
    }
    return w;
}

// Base-p digit reversal of idx with s digits.
i64 digit_reverse(i64 idx, int p, int s) {
    i64 r = 0;
    for (int d = 0; d < s; ++d) {
        r = r * p + idx % p;
        idx /= p;
    }
    return r;
}

// In-place decimation-in-time FFT of one contiguous line of length p^s.
// Twiddles w are the p^s-th roots with positive sign.
void fft_line(std::complex<double>* a, int p, int s, i64 n,
              const std::vector<std::complex<double>>& w,
              std::complex<double>* scratch) {
    for (i64 i = 0; i < n; ++i) {
        i64 r = digit_reverse(i, p, s);
        if (r > i) std::swap(a[i], a[r]);
    }
    for (i64 len = p; len <= n; len *= p) {
        i64 sub = len / p;         // length of the already-transformed blocks
        i64 tw_step = n / len;     // root stride for this stage
        i64 sub_step = n / p;      // (sub * tw_step) mod n
        for (i64 start = 0; start < n; start += len) {
            for (i64 q = 0; q < sub; ++q) {
                // radix-p butterfly: out_r = sum_b a_b * omega_len^(b (q + r sub));
                // root indices accumulate mod n instead of multiplying
                i64 base = q * tw_step;
                for (int r = 0; r < p; ++r) {
                    std::complex<double> acc = a[start + q];
                    i64 idx = 0;
                    for (int b = 1; b < p; ++b) {
                        idx += base;
                        if (idx >= n) idx -= n;
                        acc += a[start + q + b * sub] * w[static_cast<size_t>(idx)];
                    }
                    scratch[r] = acc;
                    base += sub_step;
                    if (base >= n) base -= n;
                }
                for (int r = 0; r < p; ++r) a[start + q + r * sub] = scratch[r];
            }
        }
    }
}

} // namespace

void fft_cube_pow_p(std::complex<double>* data, int p, int s, int ndim) {
    if (s == 0) return;
    i64 n = 1;
    for (int i = 0; i < s; ++i) n *= p;
    i64 total = 1;
    for (int d = 0; d < ndim; ++d) total = checked_mul(total, n);
    auto w = root_table(n);

    // axis `ax` has stride n^(ndim-1-ax) in row-major order
    for (int ax = 0; ax < ndim; ++ax) {
        i64 stride = 1;
        for (int d = ax + 1; d < ndim; ++d) stride *= n;
        i64 lines = total / n;
        parallel_for(0, lines, 64, [&](i64 lo, i64 hi) {
            std::vector<std::complex<double>> line(static_cast<size_t>(n));
            std::vector<std::complex<double>> scratch(static_cast<size_t>(p));
            for (i64 li = lo; li < hi; ++li) {
                // decompose line index into (outer, inner) around the axis
                i64 outer = li / stride;
                i64 inner = li % stride;
                i64 base = outer * n * stride + inner;
                if (stride == 1) {
                    fft_line(data + base, p, s, n, w, scratch.data());
                } else {
                    for (i64 t = 0; t < n; ++t) line[static_cast<size_t>(t)] = data[base + t * stride];
                    fft_line(line.data(), p, s, n, w, scratch.data());
                    for (i64 t = 0; t < n; ++t) data[base + t * stride] = line[static_cast<size_t>(t)];
                }
            }
        });
    }
}

std::vector<std::complex<double>> dft_cube_direct(const std::vector<std::complex<double>>& in,
                                                  int p, int s, int ndim) {
    i64 n = 1;
    for (int i = 0; i < s; ++i) n *= p;
    i64 total = 1;
    for (int d = 0; d < ndim; ++d) total = checked_mul(total, n);
    if (static_cast<i64>(in.size()) != total) throw std::invalid_argument("dft_cube_direct: size mismatch");
    auto w = root_table(n);

    std::vector<i64> mu(static_cast<size_t>(ndim)), mm(static_cast<size_t>(ndim));
    std::vector<std::complex<double>> out(in.size());
    for (i64 u = 0; u < total; ++u) {
        i64 t = u;
        for (int d = ndim - 1; d >= 0; --d) { mu[static_cast<size_t>(d)] = t % n; t /= n; }
        std::complex<double> acc = 0.0;
        for (i64 m = 0; m < total; ++m) {
            i64 t2 = m;
            i128 dot = 0;
            for (int d = ndim - 1; d >= 0; --d) { mm[static_cast<size_t>(d)] = t2 % n; t2 /= n; }
            for (int d = 0; d < ndim; ++d) dot += static_cast<i128>(mm[static_cast<size_t>(d)]) * mu[static_cast<size_t>(d)];
            acc += in[static_cast<size_t>(m)] * w[static_cast<size_t>(dot % n)];
        }
        out[static_cast<size_t>(u)] = acc;
    }
    return out;
}

} // namespace qpf
