#ifndef ORSEQ_DENSITY_HPP
#define ORSEQ_DENSITY_HPP

#include <cmath>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/induced.hpp"

namespace orseq {

// ---------------------------------------------------------------------------
// Geometric Ulam kernel of the first return map F on m equal cells of Y.
//
// For every return time n and image cell i, the kernel records the Lebesgue
// length of {y in cell s : phi(y) = n, F(y) in cell i}.  Cell boundary
// preimages come from exact branch inverses pulled back through the
// indifferent branch, never from sampling.
// ---------------------------------------------------------------------------

struct SrcCol {
    int src = 0;
    std::vector<Real> col;  // length m, indexed by image cell
};

struct DeepTerm {
    int n = 0;
    int src = 0;
    Real leb = 0.0;  // Lebesgue mass of the piece
};

struct GeoKernel {
    int m = 0;
    int N = 0;       // fully assembled horizon
    int n_deep = 0;  // deep terms resolved up to here
    Real y_lo = 0.5;
    Real cell_w = 0.0;
    std::vector<std::vector<SrcCol>> K;  // K[n-1], n = 1..N; Lebesgue masses
    std::vector<DeepTerm> deep;          // n = N+1..n_deep, masses only
    std::vector<Real> leb_profile;       // image profile of deep cylinders, sums to 1
};

namespace detail {

// Splits the source interval [a,b) over grid cells, adding its length into
// per-source columns at image index j.
template <typename Emit>
void split_interval(Real a, Real b, Real y_lo, Real cell_w, int m, Emit&& emit) {
    if (!(b > a)) return;
    int ca = std::min(m - 1, std::max(0, static_cast<int>((a - y_lo) / cell_w)));
    int cb = std::min(m - 1, std::max(0, static_cast<int>((b - y_lo) / cell_w)));
    for (int c = ca; c <= cb; ++c) {
        Real lo = std::max(a, y_lo + c * cell_w);
        Real hi = std::min(b, y_lo + (c + 1) * cell_w);
        if (hi > lo) emit(c, hi - lo);
    }
}

}  // namespace detail

inline GeoKernel build_geo_kernel(const ReturnStructure& rs, int m, int N) {
    GeoKernel gk;
    gk.m = m;
    gk.N = N;
    gk.y_lo = rs.y_lo;
    gk.cell_w = rs.leb_y() / m;
    gk.n_deep = rs.n_x();
    if (N > rs.n_x() - 2) throw HorizonTooLarge("N exceeds resolved boundary sequence");
    gk.K.resize(N);
    gk.leb_profile.assign(m, 0.0);

    const Branch& left = rs.map->branches.front();
    std::vector<Real> grid(m + 1), W(m + 1), src(m + 1);
    for (int j = 0; j <= m; ++j) grid[j] = rs.y_lo + gk.cell_w * j;
    grid[m] = rs.y_lo + rs.leb_y();
    W = grid;

    for (int n = 1; n <= N; ++n) {
        // W currently holds the (n-1)-fold indifferent-branch pullback of grid
        std::vector<SrcCol>& cols = gk.K[n - 1];
        auto col_of = [&](int s) -> std::vector<Real>& {
            for (auto& sc : cols)
                if (sc.src == s) return sc.col;
            cols.push_back({s, std::vector<Real>(m, 0.0)});
            return cols.back().col;
        };
        for (size_t kb = 0; kb < rs.y_branch.size(); ++kb) {
            const int b = static_cast<int>(kb);
            for (int j = 0; j <= m; ++j) src[j] = rs.binv(b, W[j]);
            for (int j = 0; j < m; ++j) {
                detail::split_interval(src[j], src[j + 1], rs.y_lo, gk.cell_w, m,
                                       [&](int c, Real len) { col_of(c)[j] += len; });
            }
        }
        if (n > N / 2) {
            for (const auto& sc : cols)
                for (int i = 0; i < m; ++i) gk.leb_profile[i] += sc.col[i];
        }
        // advance the pullback: W <- g0(W), Newton seeded by the previous level
        for (int j = 0; j <= m; ++j)
            W[j] = newton_bisect(left.forward, left.derivative, W[j], 0.0,
                                 std::min(rs.y_lo, W[j]), 0.9 * std::min(rs.y_lo, W[j]));
    }
    Real psum = 0.0;
    for (Real v : gk.leb_profile) psum += v;
    for (Real& v : gk.leb_profile) v /= psum;

    // deep cylinders: masses and source cells only
    for (int n = N + 1; n <= gk.n_deep; ++n) {
        for (size_t kb = 0; kb < rs.y_branch.size(); ++kb) {
            const int b = static_cast<int>(kb);
            Real a = rs.binv(b, rs.x_seq[n - 1]);
            Real c = rs.binv(b, rs.x_seq[n - 2]);
            detail::split_interval(a, c, rs.y_lo, gk.cell_w, m, [&](int cell, Real len) {
                gk.deep.push_back({n, cell, len});
            });
        }
    }
    return gk;
}

// ---------------------------------------------------------------------------
// Invariant density of the induced map (Ulam fixed point)
// ---------------------------------------------------------------------------

struct DensityEstimate {
    int m = 0;
    Real y_lo = 0.5;
    Real cell_w = 0.0;
    std::vector<Real> h_y;  // per-cell density on Y; integrates to 1 over Y
    Real gap = 0.0;         // modulus of the second Ulam eigenvalue
    // spread to X (optional, see spread_density)
    Real eps_x = 0.0;
    int m_x = 0;
    std::vector<Real> h_x;  // per-cell values on [eps_x, 1]
};

// Row-stochastic Ulam transition matrix of F w.r.t. Lebesgue; rows are source
// cells.  Unresolved tail mass is closed with the deep-cylinder image profile.
inline std::vector<Real> ulam_transition(const GeoKernel& gk) {
    const int m = gk.m;
    std::vector<Real> P(static_cast<size_t>(m) * m, 0.0);
    for (const auto& cols : gk.K)
        for (const auto& sc : cols)
            for (int i = 0; i < m; ++i) P[static_cast<size_t>(sc.src) * m + i] += sc.col[i];
    for (const auto& d : gk.deep)
        for (int i = 0; i < m; ++i)
            P[static_cast<size_t>(d.src) * m + i] += d.leb * gk.leb_profile[i];
    for (int s = 0; s < m; ++s) {
        Real rowsum = 0.0;
        for (int i = 0; i < m; ++i) rowsum += P[static_cast<size_t>(s) * m + i];
        Real resid = gk.cell_w - rowsum;
        if (resid > 0.0)
            for (int i = 0; i < m; ++i)
                P[static_cast<size_t>(s) * m + i] += resid * gk.leb_profile[i];
        // normalize to exact row-stochasticity
        rowsum = 0.0;
        for (int i = 0; i < m; ++i) rowsum += P[static_cast<size_t>(s) * m + i];
        for (int i = 0; i < m; ++i) P[static_cast<size_t>(s) * m + i] /= rowsum;
    }
    return P;
}

// Leading left eigenvector of the transition matrix by power iteration.
inline DensityEstimate induced_density(const ReturnStructure& rs, int m,
                                       const GeoKernel* pre = nullptr) {
    GeoKernel local;
    if (!pre) {
        local = build_geo_kernel(rs, m, rs.n_max);
        pre = &local;
    }
    const GeoKernel& gk = *pre;
    std::vector<Real> P = ulam_transition(gk);

    std::vector<Real> pi(m, 1.0 / m), nxt(m);
    Real resid = 1.0;
    int it = 0;
    for (; it < 5000; ++it) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (int s = 0; s < m; ++s) {
            const Real ps = pi[s];
            const Real* row = &P[static_cast<size_t>(s) * m];
            for (int i = 0; i < m; ++i) nxt[i] += ps * row[i];
        }
        Real sum = 0.0;
        for (Real v : nxt) sum += v;
        for (Real& v : nxt) v /= sum;
        resid = 0.0;
        for (int i = 0; i < m; ++i) resid = std::max(resid, std::fabs(nxt[i] - pi[i]));
        pi.swap(nxt);
        if (resid <= 1e-13) break;
    }
    if (resid > 1e-12) throw NoConvergence("power iteration stalled on the Ulam matrix");

    DensityEstimate de;
    de.m = m;
    de.y_lo = gk.y_lo;
    de.cell_w = gk.cell_w;
    de.h_y.resize(m);
    for (int i = 0; i < m; ++i) de.h_y[i] = pi[i] / gk.cell_w;

    // second eigenvalue modulus via deflated power iteration (norm growth)
    std::vector<Real> v(m), w(m);
    for (int i = 0; i < m; ++i) v[i] = (i % 2 == 0 ? 1.0 : -1.0) + Real(i) / m;
    auto deflate = [&](std::vector<Real>& x) {
        // left action below: remove the leading pair (pi, dual = constants)
        Real s = 0.0;
        for (int i = 0; i < m; ++i) s += x[i];
        for (int i = 0; i < m; ++i) x[i] -= s * pi[i];
    };
    deflate(v);
    Real norm_prev = 0.0, lam2 = 0.0;
    for (int k = 0; k < 200; ++k) {
        std::fill(w.begin(), w.end(), 0.0);
        for (int s = 0; s < m; ++s) {
            const Real* row = &P[static_cast<size_t>(s) * m];
            const Real vs = v[s];
            for (int i = 0; i < m; ++i) w[i] += row[i] * vs;  // left action: (v^T P)
        }
        deflate(w);
        Real norm = 0.0;
        for (Real x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        if (k > 20) lam2 = norm / norm_prev;
        norm_prev = 1.0;
        for (Real& x : w) x /= norm;
        v.swap(w);
    }
    de.gap = lam2;
    return de;
}

// ---------------------------------------------------------------------------
// Spreading the induced density over X through the tower projection
// ---------------------------------------------------------------------------

inline Real interp_h_y(const DensityEstimate& de, Real y) {
    int k = std::min(de.m - 1, std::max(0, static_cast<int>((y - de.y_lo) / de.cell_w)));
    return de.h_y[k];
}

// One-sided value h(y_lo+) by quadratic extrapolation through the first
// three cell midpoints.
inline Real h_at_half(const DensityEstimate& de) {
    if (de.m < 3) return de.h_y.front();
    Real x0 = de.y_lo + 0.5 * de.cell_w;
    Real y0 = de.h_y[0], y1 = de.h_y[1], y2 = de.h_y[2];
    // Newton form on equally spaced midpoints, evaluated at y_lo
    Real d1 = y1 - y0, d2 = y2 - 2.0 * y1 + y0;
    Real t = (de.y_lo - x0) / de.cell_w;  // = -1/2
    return y0 + d1 * t + 0.5 * d2 * t * (t - 1.0);
}

// h(x) on an m_x grid of [eps, 1]:
//   h(x) = h_Y(x) 1_Y(x) + sum_{k>=1} sum_b h_Y(y_kb) / |(f^k)'(y_kb)|,
// where y_kb is the Y-branch-b preimage of the (k-1)-fold indifferent-branch
// pullback of x.  The k-sum is truncated once its contribution and the tail
// mass both drop below 1e-3 of the window mass.
inline void spread_density(const ReturnStructure& rs, DensityEstimate& de, Real eps,
                           int m_x) {
    if (!(eps > 0.0)) throw TruncationTooCoarse("eps must be positive");
    de.eps_x = eps;
    de.m_x = m_x;
    de.h_x.assign(m_x, 0.0);
    const Real wx = (1.0 - eps) / m_x;
    const Branch& left = rs.map->branches.front();

    // points inside Y carry only the level-0 tower contribution h_Y;
    // the laminar k-sum applies to the cells below y_lo
    std::vector<int> idx;
    for (int i = 0; i < m_x; ++i) {
        Real x = eps + (i + 0.5) * wx;
        if (x >= rs.y_lo)
            de.h_x[i] = interp_h_y(de, x);
        else
            idx.push_back(i);
    }
    std::vector<Real> z(idx.size()), dprod(idx.size(), 1.0);
    for (size_t t = 0; t < idx.size(); ++t) z[t] = eps + (idx[t] + 0.5) * wx;

    // mu(phi > k) from the induced density (for the truncation criterion)
    std::vector<Real> mu_pref(de.m + 1, 0.0);
    for (int i = 0; i < de.m; ++i) mu_pref[i + 1] = mu_pref[i] + de.h_y[i] * de.cell_w;
    auto mu_tail = [&](int k) {
        Real s = 0.0;
        for (size_t kb = 0; kb < rs.y_branch.size(); ++kb) {
            Real hi = rs.binv(static_cast<int>(kb), rs.x_seq[k - 1]);
            Real lo = rs.branch(static_cast<int>(kb)).lo;
            auto at = [&](Real t) {
                int c = std::min(de.m - 1,
                                 std::max(0, static_cast<int>((t - de.y_lo) / de.cell_w)));
                return mu_pref[c] + de.h_y[c] * (t - (de.y_lo + c * de.cell_w));
            };
            s += at(hi) - at(lo);
        }
        return s;
    };

    int K = 0;
    const int K_cap = rs.n_x() - 2;
    bool converged = idx.empty();
    for (int k = 1; k <= K_cap && !converged; ++k) {
        // z currently holds the (k-1)-fold pullback of the off-Y midpoints
        for (size_t t = 0; t < idx.size(); ++t) {
            Real contrib = 0.0;
            for (size_t kb = 0; kb < rs.y_branch.size(); ++kb) {
                const Branch& b = rs.branch(static_cast<int>(kb));
                Real y = b.invert(z[t]);
                contrib += interp_h_y(de, y) / (std::fabs(b.derivative(y)) * dprod[t]);
            }
            de.h_x[idx[t]] += contrib;
        }
        // pull z back one laminar step and extend the derivative product
        for (size_t t = 0; t < idx.size(); ++t) {
            Real zn = newton_bisect(left.forward, left.derivative, z[t], 0.0,
                                    std::min(rs.y_lo, z[t]), 0.9 * std::min(rs.y_lo, z[t]));
            dprod[t] *= left.derivative(zn);
            z[t] = zn;
        }
        K = k;
        Real window_mass = 0.0;
        for (int i = 0; i < m_x; ++i) window_mass += de.h_x[i] * wx;
        if (k >= 4 && mu_tail(k) <= 1e-3 * window_mass) converged = true;
    }
    if (!converged)
        throw TruncationTooCoarse("K-tail bound not reachable within the boundary sequence");
    (void)K;
}

}  // namespace orseq

#endif
