#ifndef ORSEQ_FFT_HPP
#define ORSEQ_FFT_HPP

#include <cstdint>
#include <vector>

#include "orseq/common.hpp"

namespace orseq {

// In-place iterative radix-2 FFT.  n must be a power of two.
inline void fft_inplace(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        Real ang = 2.0 * kPi / Real(len) * (inverse ? -1.0 : 1.0);
        Complex wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                // reseed periodically: the recurrence drifts by O(k eps)
                if ((k & 63u) == 0 && k != 0)
                    w = Complex(std::cos(ang * Real(k)), std::sin(ang * Real(k)));
                Complex u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= Real(n);
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Linear convolution of real sequences a (length na) and b (length nb),
// truncated to the first out_len entries.
inline std::vector<Real> conv_real(const Real* a, std::size_t na, const Real* b,
                                   std::size_t nb, std::size_t out_len) {
    std::size_t full = na + nb - 1;
    if (out_len > full) out_len = full;
    if (na == 0 || nb == 0) return std::vector<Real>(out_len, 0.0);
    if (na * nb <= 4096) {
        std::vector<Real> out(out_len, 0.0);
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb && i + j < out_len; ++j) out[i + j] += a[i] * b[j];
        return out;
    }
    std::size_t L = next_pow2(full);
    std::vector<Complex> fa(L), fb(L);
    for (std::size_t i = 0; i < na; ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < nb; ++i) fb[i] = b[i];
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t i = 0; i < L; ++i) fa[i] *= fb[i];
    fft_inplace(fa, true);
    std::vector<Real> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
    return out;
}

}  // namespace orseq

#endif
