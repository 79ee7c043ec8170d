#ifndef ORSEQ_SCALAR_HPP
#define ORSEQ_SCALAR_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/fft.hpp"

namespace orseq {

// ---------------------------------------------------------------------------
// Scalar renewal sequences u_0 = 1, u_n = sum_{j=1}^n f_j u_{n-j}
// ---------------------------------------------------------------------------

enum class RenewalMethod { direct, fft };

namespace detail {

// Adds conv(a[0..la), b[0..lb)) into dst[off ..], restricted to global
// indices in [dst_lo, dst_len).  Long convolutions are tiled to bound FFT
// memory.
inline void conv_accumulate(std::vector<Real>& dst, std::vector<Real>& carry,
                            std::int64_t off, const Real* a, std::int64_t la,
                            const Real* b, std::int64_t lb, std::int64_t dst_lo,
                            std::int64_t dst_len) {
    const std::int64_t tile = 1 << 21;
    for (std::int64_t a0 = 0; a0 < la; a0 += tile) {
        std::int64_t ta = std::min<std::int64_t>(tile, la - a0);
        for (std::int64_t b0 = 0; b0 < lb; b0 += tile) {
            std::int64_t tb = std::min<std::int64_t>(tile, lb - b0);
            std::int64_t base = off + a0 + b0;
            if (base >= dst_len) continue;
            if (base + ta + tb - 2 < dst_lo) continue;
            auto part = conv_real(a + a0, static_cast<std::size_t>(ta), b + b0,
                                  static_cast<std::size_t>(tb),
                                  static_cast<std::size_t>(std::min<std::int64_t>(
                                      ta + tb - 1, dst_len - base)));
            for (std::size_t t = 0; t < part.size(); ++t) {
                std::int64_t n = base + static_cast<std::int64_t>(t);
                if (n < dst_lo) continue;
                // compensated accumulation
                Real y = part[t] - carry[n];
                Real s = dst[n] + y;
                carry[n] = (s - dst[n]) - y;
                dst[n] = s;
            }
        }
    }
}

// CDQ divide and conquer for u = delta_0 + f * u on the index range [lo, hi],
// assuming contributions from indices < lo are already accumulated in u.
inline void renewal_cdq(std::vector<Real>& u, std::vector<Real>& carry,
                        const std::vector<Real>& f, std::int64_t lo, std::int64_t hi) {
    if (hi - lo <= 256) {
        for (std::int64_t n = std::max<std::int64_t>(lo, 1); n <= hi; ++n) {
            Real s = u[n] - carry[n];
            std::int64_t jmax = n - lo;
            for (std::int64_t j = 1; j <= jmax; ++j) s += f[j] * u[n - j];
            u[n] = s;
            carry[n] = 0.0;
        }
        return;
    }
    std::int64_t mid = lo + (hi - lo) / 2;
    renewal_cdq(u, carry, f, lo, mid);
    // push u[lo..mid] forward through f[1..hi-lo], landing only in (mid, hi]
    std::int64_t lb = std::min<std::int64_t>(hi - lo, static_cast<std::int64_t>(f.size()) - 1);
    if (lb >= 1)
        conv_accumulate(u, carry, lo + 1, &u[lo], mid - lo + 1, &f[1], lb, mid + 1,
                        hi + 1);
    renewal_cdq(u, carry, f, mid + 1, hi);
}

}  // namespace detail

// f holds first-return probabilities f_1..f_N in f[1..N] (f[0] ignored).
inline std::vector<Real> renewal_sequence(const std::vector<Real>& f, std::int64_t N,
                                          RenewalMethod method = RenewalMethod::direct) {
    std::vector<Real> u(N + 1, 0.0);
    u[0] = 1.0;
    if (method == RenewalMethod::direct) {
        for (std::int64_t n = 1; n <= N; ++n) {
            Kahan acc;
            std::int64_t jmax = std::min<std::int64_t>(n, static_cast<std::int64_t>(f.size()) - 1);
            for (std::int64_t j = 1; j <= jmax; ++j) acc.add(f[j] * u[n - j]);
            u[n] = acc.value();
        }
        return u;
    }
    std::vector<Real> carry(N + 1, 0.0);
    detail::renewal_cdq(u, carry, f, 0, N);
    return u;
}

// Synthetic first-return laws with exactly regularly varying tails.
// tail(n) = n^{-beta} for n >= 1, tail(0) = 1 (so f_1 = 0, aperiodic).
inline std::vector<Real> synthetic_pareto_f(Real beta, std::int64_t N) {
    std::vector<Real> f(N + 1, 0.0);
    Real prev = 1.0;
    for (std::int64_t n = 1; n <= N; ++n) {
        Real t = std::pow(Real(n), -beta);
        f[n] = prev - t;
        prev = t;
    }
    return f;
}

// tail(n) = log(e + n) n^{-beta} normalized to tail(0) = 1: a genuinely
// non-constant slowly varying part.
inline std::vector<Real> synthetic_pareto_log_f(Real beta, std::int64_t N) {
    std::vector<Real> f(N + 1, 0.0);
    auto tail = [beta](Real n) {
        return std::log(std::exp(1.0) + n) * std::pow(n, -beta);
    };
    Real norm = tail(1.0);
    Real prev = 1.0;
    for (std::int64_t n = 1; n <= N; ++n) {
        Real t = tail(Real(n)) / norm;
        f[n] = prev - t;
        prev = t;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Karamata sum diagnostics: sum_{j<=n} l(j) j^p  vs  l(n) n^{p+1}/(p+1)
// ---------------------------------------------------------------------------

struct KaramataReport {
    std::vector<std::int64_t> checkpoints;
    std::vector<Real> ratio;  // LHS / RHS at each checkpoint
};

template <typename Ell>
KaramataReport karamata_sum(Ell&& ell, Real p, const std::vector<std::int64_t>& checkpoints) {
    KaramataReport rep;
    rep.checkpoints = checkpoints;
    std::int64_t n_max = 0;
    for (auto c : checkpoints) n_max = std::max(n_max, c);
    Kahan acc;
    std::size_t next = 0;
    for (std::int64_t j = 1; j <= n_max; ++j) {
        acc.add(ell(Real(j)) * std::pow(Real(j), p));
        if (next < checkpoints.size() && j == checkpoints[next]) {
            Real rhs = ell(Real(j)) * std::pow(Real(j), p + 1.0) / (p + 1.0);
            rep.ratio.push_back(acc.value() / rhs);
            ++next;
        }
    }
    return rep;
}

// tilde l(n) = sum_{j<=n} l(j)/j at the given checkpoints, plus l/tilde l.
struct TildeEllReport {
    std::vector<std::int64_t> checkpoints;
    std::vector<Real> tilde_ell;
    std::vector<Real> ell_over_tilde;
};

template <typename Ell>
TildeEllReport tilde_ell(Ell&& ell, const std::vector<std::int64_t>& checkpoints) {
    TildeEllReport rep;
    rep.checkpoints = checkpoints;
    std::int64_t n_max = 0;
    for (auto c : checkpoints) n_max = std::max(n_max, c);
    Kahan acc;
    std::size_t next = 0;
    for (std::int64_t j = 1; j <= n_max; ++j) {
        acc.add(ell(Real(j)) / Real(j));
        if (next < checkpoints.size() && j == checkpoints[next]) {
            rep.tilde_ell.push_back(acc.value());
            rep.ell_over_tilde.push_back(ell(Real(j)) / acc.value());
            ++next;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Zero-density / liminf demonstration for beta <= 1/2
// ---------------------------------------------------------------------------

struct ZeroDensityReport {
    Real beta = 0.0;
    Real d_beta = 0.0;
    std::vector<std::int64_t> checkpoints;
    // exceptional-set densities |E_eps(N)|/N at each checkpoint, for each eps
    std::vector<Real> eps_bands;
    std::vector<std::vector<Real>> density;  // density[band][checkpoint]
    std::vector<Real> liminf;                // running inf of l(n) n^{1-beta} u_n over [N/10, N]
    std::vector<Real> cesaro;                // l(n) n^{-beta} sum_{j<=n} u_j at checkpoints
    std::vector<Real> envelope_sup;          // sup of l(n)^{-1} n^beta u_n over dyadic windows
};

// ell(n) must be the slowly varying part of the tail used to build f.
template <typename Ell>
ZeroDensityReport zero_density_demo(const std::vector<Real>& u, Real beta, Ell&& ell,
                                    const std::vector<std::int64_t>& checkpoints,
                                    const std::vector<Real>& eps_bands = {0.1, 0.05}) {
    ZeroDensityReport rep;
    rep.beta = beta;
    rep.d_beta = std::sin(beta * kPi) / kPi;
    rep.checkpoints = checkpoints;
    rep.eps_bands = eps_bands;
    rep.density.assign(eps_bands.size(), {});
    std::int64_t N = static_cast<std::int64_t>(u.size()) - 1;

    std::vector<std::int64_t> exceed(eps_bands.size(), 0);
    Kahan cesaro;
    std::size_t next = 0;
    for (std::int64_t n = 1; n <= N && next < checkpoints.size(); ++n) {
        Real g = ell(Real(n)) * std::pow(Real(n), 1.0 - beta) * u[n];
        cesaro.add(u[n]);
        for (std::size_t b = 0; b < eps_bands.size(); ++b)
            if (std::fabs(g - rep.d_beta) > eps_bands[b]) ++exceed[b];
        if (n == checkpoints[next]) {
            for (std::size_t b = 0; b < eps_bands.size(); ++b)
                rep.density[b].push_back(Real(exceed[b]) / Real(n));
            rep.cesaro.push_back(ell(Real(n)) * std::pow(Real(n), -beta) * cesaro.value());
            // running inf over [n/10, n]
            Real lim = std::numeric_limits<Real>::infinity();
            for (std::int64_t k = std::max<std::int64_t>(1, n / 10); k <= n; ++k)
                lim = std::min(lim,
                               ell(Real(k)) * std::pow(Real(k), 1.0 - beta) * u[k]);
            rep.liminf.push_back(lim);
            ++next;
        }
    }
    // dyadic-window sups of the bounded-envelope quantity n^beta u_n / l(n)
    for (std::int64_t lo = 256; lo < N; lo *= 2) {
        std::int64_t hi = std::min(N, 2 * lo);
        Real sup = 0.0;
        for (std::int64_t n = lo; n <= hi; ++n)
            sup = std::max(sup, std::pow(Real(n), beta) * u[n] / ell(Real(n)));
        rep.envelope_sup.push_back(sup);
    }
    return rep;
}

}  // namespace orseq

#endif
