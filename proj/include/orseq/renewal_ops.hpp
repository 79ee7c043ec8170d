#ifndef ORSEQ_RENEWAL_OPS_HPP
#define ORSEQ_RENEWAL_OPS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/density.hpp"
#include "orseq/fft.hpp"
#include "orseq/induced.hpp"

namespace orseq {

// ---------------------------------------------------------------------------
// OperatorSeq: mu-weighted Ulam discretizations of the first-return graded
// operators R_n, plus renewal convolutions T_n.
//
// Matrices are stored in action form: (R_n v)_i = sum_s A[n](i,s) v_s with
// A(i,s) = mu(cell_s & cyl_n & F^{-1} cell_i) / mu(cell_i).  With the Ulam
// fixed-point density this gives R(1) 1 = 1 exactly up to tail truncation.
// The spec's source-normalized matrix is the diagonal conjugate
// D R D^{-1} with D = diag(mu).
// ---------------------------------------------------------------------------

struct OperatorSeq {
    int m = 0;
    int N = 0;
    Real y_lo = 0.5;
    Real cell_w = 0.0;
    Real alpha = 0.0;
    Real beta = 0.0;
    std::vector<Real> h;   // per-cell density on Y
    std::vector<Real> mu;  // per-cell invariant mass, sums to 1
    std::vector<std::vector<SrcCol>> R;  // R[n-1], action form, n = 1..N

    // deep tail n in (N, n_deep]: rank-one surrogates mass * profile
    struct Deep {
        int n;
        int src;
        Real mass;  // mu(cell_src & cyl_n)
    };
    std::vector<Deep> deep;
    std::vector<Real> mu_profile;  // image profile (mu masses, sums to 1)
    int n_deep = 0;
    Real tail_c = 0.0;  // fitted mu(phi>n) ~ tail_c n^{-beta} beyond n_deep

    std::vector<Real> f;     // mu(phi = n), n = 1..n_deep (f[0] unused)
    std::vector<Real> tail;  // mu(phi > n), n = 0..n_deep

    // (R_n v) added into out
    void apply_Rn(int n, const Real* v, Real* out) const {
        for (const auto& sc : R[n - 1]) {
            const Real vs = v[sc.src];
            if (vs == 0.0) continue;
            const Real* c = sc.col.data();
            for (int i = 0; i < m; ++i) out[i] += c[i] * vs;
        }
    }

    Real integrate(const Real* v) const {
        Real s = 0.0;
        for (int i = 0; i < m; ++i) s += mu[i] * v[i];
        return s;
    }
};

// Builds R_1..R_N from the geometric kernel and the induced density.
inline OperatorSeq assemble_Rn(const ReturnStructure& rs, const DensityEstimate& de,
                               int m, int N, const GeoKernel* pre = nullptr) {
    GeoKernel local;
    if (!pre) {
        local = build_geo_kernel(rs, m, N);
        pre = &local;
    }
    const GeoKernel& gk = *pre;
    if (gk.m != m || gk.N < N) throw HorizonTooLarge("kernel horizon mismatch");
    if (de.m != m) throw InvalidInducingSet("density resolution mismatch");

    OperatorSeq seq;
    seq.m = m;
    seq.N = N;
    seq.y_lo = gk.y_lo;
    seq.cell_w = gk.cell_w;
    seq.alpha = rs.alpha;
    seq.beta = rs.beta;
    seq.h = de.h_y;
    seq.mu.resize(m);
    for (int i = 0; i < m; ++i) seq.mu[i] = de.h_y[i] * gk.cell_w;

    seq.R.resize(N);
    for (int n = 1; n <= N; ++n) {
        seq.R[n - 1].reserve(gk.K[n - 1].size());
        for (const auto& sc : gk.K[n - 1]) {
            SrcCol out;
            out.src = sc.src;
            out.col.resize(m);
            const Real hs = de.h_y[sc.src];
            for (int i = 0; i < m; ++i)
                out.col[i] = sc.col[i] * hs / (de.h_y[i] * gk.cell_w);
            seq.R[n - 1].push_back(std::move(out));
        }
    }

    // mu-weighted deep tail and image profile
    seq.n_deep = gk.n_deep;
    seq.deep.reserve(gk.deep.size());
    for (const auto& d : gk.deep)
        seq.deep.push_back({d.n, d.src, d.leb * de.h_y[d.src]});
    seq.mu_profile.assign(m, 0.0);
    Real psum = 0.0;
    for (int n = std::max(1, N / 2); n <= N; ++n)
        for (const auto& sc : gk.K[n - 1]) {
            const Real hs = de.h_y[sc.src];
            for (int i = 0; i < m; ++i) {
                seq.mu_profile[i] += sc.col[i] * hs;
                psum += sc.col[i] * hs;
            }
        }
    for (Real& v : seq.mu_profile) v /= psum;

    // scalar masses f_n = mu(phi = n) and tails
    auto tm = tail_model_invariant(rs, de.h_y, gk.n_deep);
    seq.tail = tm.tail;
    seq.f.assign(gk.n_deep + 1, 0.0);
    for (int n = 1; n <= gk.n_deep; ++n) seq.f[n] = tm.tail[n - 1] - tm.tail[n];
    seq.tail_c = tm.c_fit;
    if (seq.beta <= 0.0) seq.beta = tm.beta;
    return seq;
}

// ---------------------------------------------------------------------------
// Renewal convolution, vector mode: u_n = T_n v via u_n = sum_j R_j u_{n-j}
// ---------------------------------------------------------------------------

// Stacked convolution of several observables in one pass over the R data.
// Returns U with U[n] holding s blocks of m entries: U[n][q*m + i] = (T_n v_q)_i.
inline std::vector<std::vector<Real>> convolve_T_multi(
    const OperatorSeq& seq, const std::vector<std::vector<Real>>& vs) {
    const int m = seq.m, N = seq.N;
    const int s = static_cast<int>(vs.size());
    std::vector<std::vector<Real>> U(N + 1, std::vector<Real>(static_cast<size_t>(s) * m, 0.0));
    for (int q = 0; q < s; ++q)
        std::copy(vs[q].begin(), vs[q].end(), U[0].begin() + static_cast<size_t>(q) * m);
    const std::int64_t chunk = 64;
    std::vector<std::vector<Real>> partials;
    for (int n = 1; n <= N; ++n) {
        std::int64_t nchunks = (n + chunk - 1) / chunk;
        if (partials.size() < static_cast<size_t>(nchunks))
            partials.resize(nchunks, std::vector<Real>(static_cast<size_t>(s) * m));
        parallel_for(
            nchunks,
            [&](std::int64_t c) {
                std::int64_t jlo = 1 + c * chunk,
                             jhi = std::min<std::int64_t>(n, jlo + chunk - 1);
                auto& acc = partials[c];
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::int64_t j = jlo; j <= jhi; ++j) {
                    const Real* prev = U[n - j].data();
                    for (const auto& sc : seq.R[j - 1]) {
                        const Real* col = sc.col.data();
                        for (int q = 0; q < s; ++q) {
                            const Real vq = prev[static_cast<size_t>(q) * m + sc.src];
                            if (vq == 0.0) continue;
                            Real* out = acc.data() + static_cast<size_t>(q) * m;
                            for (int i = 0; i < m; ++i) out[i] += col[i] * vq;
                        }
                    }
                }
            },
            1);
        auto& out = U[n];
        for (std::int64_t c = 0; c < nchunks; ++c)
            for (size_t i = 0; i < out.size(); ++i) out[i] += partials[c][i];
    }
    return U;
}

// Returns U with U[n] = T_n v, n = 0..N, each an m-vector.
inline std::vector<std::vector<Real>> convolve_T_vector(const OperatorSeq& seq,
                                                        const std::vector<Real>& v) {
    return convolve_T_multi(seq, {v});
}

// ---------------------------------------------------------------------------
// Matrix mode (small m): full T_0..T_N
// ---------------------------------------------------------------------------

using DenseMat = std::vector<Real>;  // m*m, row-major: M[i*m + s]

inline DenseMat rn_dense(const OperatorSeq& seq, int n) {
    DenseMat M(static_cast<size_t>(seq.m) * seq.m, 0.0);
    for (const auto& sc : seq.R[n - 1])
        for (int i = 0; i < seq.m; ++i) M[static_cast<size_t>(i) * seq.m + sc.src] = sc.col[i];
    return M;
}

// T_n = sum_{j=1}^n R_j T_{n-j}  (full matrices, m <= 128)
inline std::vector<DenseMat> convolve_T_matrix(const OperatorSeq& seq, int N_small) {
    const int m = seq.m;
    if (m > 128) throw HorizonTooLarge("matrix mode is limited to m <= 128");
    N_small = std::min(N_small, seq.N);
    std::vector<DenseMat> T(N_small + 1, DenseMat(static_cast<size_t>(m) * m, 0.0));
    for (int i = 0; i < m; ++i) T[0][static_cast<size_t>(i) * m + i] = 1.0;
    for (int n = 1; n <= N_small; ++n) {
        auto& out = T[n];
        for (int j = 1; j <= n; ++j) {
            const auto& Tp = T[n - j];
            for (const auto& sc : seq.R[j - 1]) {
                const Real* trow = &Tp[static_cast<size_t>(sc.src) * m];
                for (int i = 0; i < m; ++i) {
                    const Real a = sc.col[i];
                    if (a == 0.0) continue;
                    Real* orow = &out[static_cast<size_t>(i) * m];
                    for (int s = 0; s < m; ++s) orow[s] += a * trow[s];
                }
            }
        }
    }
    return T;
}

// FFT (CDQ) variant of the vector-mode convolution; identical results within
// 1e-10.  Intended for small m and the scalar shadow.
namespace detail {

inline void cdq_vec(const OperatorSeq& seq, std::vector<std::vector<Real>>& U, int lo,
                    int hi) {
    const int m = seq.m;
    if (hi - lo <= 32) {
        for (int n = std::max(lo, 1); n <= hi; ++n)
            for (int j = 1; j <= n - lo; ++j)
                seq.apply_Rn(j, U[n - j].data(), U[n].data());
        return;
    }
    int mid = lo + (hi - lo) / 2;
    cdq_vec(seq, U, lo, mid);
    // cross contribution of U[lo..mid] into (mid, hi] via entrywise FFT
    int la = mid - lo + 1, lj = std::min(hi - lo, seq.N);
    std::size_t L = next_pow2(static_cast<std::size_t>(la + lj));
    // FFT of the R entry sequences: for each (i,s) present anywhere in R[1..lj]
    // build the frequency table lazily per source cell
    std::vector<std::vector<Complex>> FU(m, std::vector<Complex>(L, Complex(0, 0)));
    for (int s = 0; s < m; ++s) {
        for (int k = 0; k < la; ++k) FU[s][k] = U[lo + k][s];
        fft_inplace(FU[s], false);
    }
    std::vector<std::vector<Complex>> acc(m, std::vector<Complex>(L, Complex(0, 0)));
    std::vector<Complex> FR(L);
    for (int i = 0; i < m; ++i) {
        for (int s = 0; s < m; ++s) {
            // gather the (i,s) entry across n = 1..lj
            bool any = false;
            std::fill(FR.begin(), FR.end(), Complex(0, 0));
            for (int n = 1; n <= lj; ++n)
                for (const auto& sc : seq.R[n - 1])
                    if (sc.src == s && sc.col[i] != 0.0) {
                        FR[n] = sc.col[i];
                        any = true;
                    }
            if (!any) continue;
            fft_inplace(FR, false);
            for (std::size_t k = 0; k < L; ++k) acc[i][k] += FR[k] * FU[s][k];
        }
        fft_inplace(acc[i], true);
        for (int n = mid + 1; n <= hi; ++n) U[n][i] += acc[i][n - lo].real();
    }
    cdq_vec(seq, U, mid + 1, hi);
}

}  // namespace detail

inline std::vector<std::vector<Real>> convolve_T_vector_fft(const OperatorSeq& seq,
                                                            const std::vector<Real>& v) {
    std::vector<std::vector<Real>> U(seq.N + 1, std::vector<Real>(seq.m, 0.0));
    U[0] = v;
    detail::cdq_vec(seq, U, 0, seq.N);
    return U;
}

// Scalar shadow: a 1x1 OperatorSeq driven by the masses f_n, running the
// very same convolution code paths.
inline OperatorSeq scalar_shadow_seq(const std::vector<Real>& f, int N) {
    OperatorSeq seq;
    seq.m = 1;
    seq.N = N;
    seq.cell_w = 1.0;
    seq.h = {1.0};
    seq.mu = {1.0};
    seq.R.resize(N);
    for (int n = 1; n <= N; ++n) {
        SrcCol sc;
        sc.src = 0;
        sc.col = {n < static_cast<int>(f.size()) ? f[n] : 0.0};
        seq.R[n - 1].push_back(std::move(sc));
    }
    seq.n_deep = N;
    seq.mu_profile = {1.0};
    seq.f.assign(N + 1, 0.0);
    for (int n = 1; n <= N; ++n) seq.f[n] = n < static_cast<int>(f.size()) ? f[n] : 0.0;
    seq.tail.assign(N + 1, 0.0);
    Real t = 1.0;
    seq.tail[0] = 1.0;
    for (int n = 1; n <= N; ++n) {
        t -= seq.f[n];
        seq.tail[n] = t;
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Observables on X and the lift 1_Y L^n v = sum_k T_{n-k} (L^k v_k)
// ---------------------------------------------------------------------------

struct ObservableOnX {
    std::function<Real(Real)> values;  // pointwise values on (0,1]
    Real support_lo = 0.0;             // v vanishes below this point
};

// L^k v_k evaluated on the Y grid (cell midpoints), for k = 0..K.
// v_k = v restricted to the k-th first-entry set X_k; L is the mu-transfer
// operator, so L^k v_k (w) = v(z) h(z) / (h(w) |(f^k)'(z)|) with z the
// laminar preimage chain endpoint in X_k.
inline std::vector<std::vector<Real>> lift_terms(const ReturnStructure& rs,
                                                 const DensityEstimate& de,
                                                 const ObservableOnX& v, int K) {
    if (!(v.support_lo > 0.0))
        throw SupportViolation("observable support must stay away from 0");
    if (de.h_x.empty() || de.eps_x > v.support_lo)
        throw SupportViolation("density on X not resolved down to the support");
    const int m = de.m;
    const Branch& left = rs.map->branches.front();
    auto h_at = [&](Real x) -> Real {
        if (x >= rs.y_lo) return interp_h_y(de, x);
        Real wx = (1.0 - de.eps_x) / de.m_x;
        int i = std::min(de.m_x - 1,
                         std::max(0, static_cast<int>((x - de.eps_x) / wx)));
        return de.h_x[i];
    };

    std::vector<std::vector<Real>> terms;
    std::vector<Real> w(m), z(m), dprod(m, 1.0);
    for (int i = 0; i < m; ++i) w[i] = rs.y_lo + (i + 0.5) * de.cell_w;
    // k = 0: v restricted to Y
    std::vector<Real> t0(m);
    for (int i = 0; i < m; ++i) t0[i] = w[i] >= v.support_lo ? v.values(w[i]) : 0.0;
    terms.push_back(t0);
    z = w;
    for (int k = 1; k <= K; ++k) {
        for (int i = 0; i < m; ++i) {
            Real zn = newton_bisect(left.forward, left.derivative, z[i], 0.0,
                                    std::min(rs.y_lo, z[i]), 0.9 * std::min(rs.y_lo, z[i]));
            dprod[i] *= left.derivative(zn);
            z[i] = zn;
        }
        // z = k-fold laminar pullback of the Y midpoints, i.e. X_k points
        std::vector<Real> tk(m, 0.0);
        bool any = false;
        for (int i = 0; i < m; ++i) {
            if (z[i] < v.support_lo) continue;
            Real val = v.values(z[i]);
            if (val == 0.0) continue;
            tk[i] = val * h_at(z[i]) / (h_at(w[i]) * dprod[i]);
            any = true;
        }
        terms.push_back(tk);
        if (!any && z[0] < v.support_lo) break;  // deeper sets are below the support
    }
    return terms;
}

// 1_Y L^n v for each n = 0..N, evaluated on the Y grid.
// Also returns the decomposition integrals int v_k dmu.
struct LiftResult {
    std::vector<std::vector<Real>> Ln_on_Y;  // [n][cell]
    std::vector<Real> int_vk;                // mu-integral of each v_k
    Real int_v = 0.0;                        // sum of the above
};

inline LiftResult lift_Ln(const OperatorSeq& seq, const ReturnStructure& rs,
                          const DensityEstimate& de, const ObservableOnX& v, int K) {
    auto terms = lift_terms(rs, de, v, K);
    const int m = seq.m, N = seq.N;
    LiftResult lr;
    lr.Ln_on_Y.assign(N + 1, std::vector<Real>(m, 0.0));
    auto U = convolve_T_multi(seq, terms);
    for (size_t k = 0; k < terms.size(); ++k) {
        for (int n = static_cast<int>(k); n <= N; ++n)
            for (int i = 0; i < m; ++i)
                lr.Ln_on_Y[n][i] += U[n - k][k * m + i];
        // int v_k dmu = int_Y (L^k v_k) dmu
        lr.int_vk.push_back(seq.integrate(terms[k].data()));
        lr.int_v += lr.int_vk.back();
    }
    return lr;
}

}  // namespace orseq

#endif
