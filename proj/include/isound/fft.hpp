#pragma once

#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "isound/errors.hpp"

namespace isound {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Direct evaluation of S_k = sum_n x(n) exp(-i 2 pi k n / N). Quadratic; kept
// as the independent reference the FFT is checked against. The roots are
// tabulated once per call (exp(-i 2 pi (k n mod N) / N)), which changes the
// cost, not the arithmetic.
inline std::vector<std::complex<double>> dft_naive(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) throw data_error("dft: empty input");
    std::vector<double> cosines(n), sines(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) /
                             static_cast<double>(n);
        cosines[r] = std::cos(angle);
        sines[r] = std::sin(angle);
    }
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t r = (k * j) % n;
            re += x[j] * cosines[r];
            im += x[j] * sines[r];
        }
        out[k] = {re, im};
    }
    return out;
}

// Iterative radix-2 FFT. The input is zero-padded to the next power of two;
// twiddles come straight from cos/sin (no recurrence drift).
inline std::vector<std::complex<double>> fft(std::span<const double> x) {
    if (x.empty()) throw data_error("fft: empty input");
    const std::size_t n = next_pow2(x.size());
    std::vector<std::complex<double>> a(n, {0.0, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) /
                             static_cast<double>(n);
        w[j] = {std::cos(angle), std::sin(angle)};
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> t = w[j * step] * a[start + len / 2 + j];
                const std::complex<double> u = a[start + j];
                a[start + j] = u + t;
                a[start + len / 2 + j] = u - t;
            }
        }
    }
    return a;
}

} // namespace isound
