#ifndef ORSEQ_STOCHASTIC_HPP
#define ORSEQ_STOCHASTIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/induced.hpp"
#include "orseq/renewal_ops.hpp"
#include "orseq/rng.hpp"
#include "orseq/special.hpp"

namespace orseq {

// ---------------------------------------------------------------------------
// Renewal-jump sampler on the Ulam chain of the induced map.
//
// State is a grid cell of Y.  One jump samples (phi, next cell) from the
// mu-weighted cylinder kernel of the current cell: a single induced-map step
// plus cylinder lookup, never a pointwise walk through the laminar phase.
// Return times beyond the resolved horizon fall back to the fitted
// Pareto-type tail via inverse CDF.
// ---------------------------------------------------------------------------

class RenewalSampler {
  public:
    RenewalSampler(const OperatorSeq& seq, std::uint64_t seed)
        : m_(seq.m), beta_(seq.beta), seed_(seed) {
        // per-source flattened CDF over (n, dst) pairs
        cdf_.resize(m_);
        phi_.resize(m_);
        dst_.resize(m_);
        std::vector<std::vector<Real>> colmass(m_);
        for (int s = 0; s < m_; ++s) colmass[s].reserve(64);
        for (int n = 1; n <= seq.N; ++n) {
            for (const auto& sc : seq.R[n - 1]) {
                // mass of (cell_s -> cell_i, phi = n) = A(i,s) mu_i
                for (int i = 0; i < m_; ++i) {
                    Real mass = sc.col[i] * seq.mu[i];
                    if (mass <= 0.0) continue;
                    cdf_[sc.src].push_back(mass);
                    phi_[sc.src].push_back(n);
                    dst_[sc.src].push_back(i);
                }
            }
        }
        // deep resolved cylinders: image profile
        for (const auto& d : seq.deep) {
            cdf_[d.src].push_back(d.mass);
            phi_[d.src].push_back(d.n);
            dst_[d.src].push_back(-1);  // sample destination from the profile
        }
        // normalize to conditional CDFs; remaining mass = fitted tail
        tail_frac_.assign(m_, 0.0);
        for (int s = 0; s < m_; ++s) {
            Real tot = 0.0;
            for (Real x : cdf_[s]) tot += x;
            Real mu_s = seq.mu[s];
            tail_frac_[s] = std::max(0.0, 1.0 - tot / mu_s);
            Real acc = 0.0;
            for (Real& x : cdf_[s]) {
                acc += x / mu_s;
                x = acc;
            }
        }
        // mu-profile CDF for deep/fitted destinations and the stationary law
        prof_cdf_.resize(m_);
        mu_cdf_.resize(m_);
        Real pa = 0.0, ma = 0.0;
        for (int i = 0; i < m_; ++i) {
            pa += seq.mu_profile[i];
            ma += seq.mu[i];
            prof_cdf_[i] = pa;
            mu_cdf_[i] = ma;
        }
        n_deep_ = seq.n_deep;
    }

    int sample_initial_cell(StreamRng& rng) const {
        return pick(mu_cdf_, rng.next_real());
    }

    // One renewal jump from cell s: returns (phi, next cell).
    std::pair<std::int64_t, int> jump(int s, StreamRng& rng) const {
        Real u = rng.next_real();
        Real resolved = 1.0 - tail_frac_[s];
        if (!cdf_[s].empty() && u < resolved) {
            const auto& c = cdf_[s];
            size_t k = std::lower_bound(c.begin(), c.end(), std::min(u, c.back())) -
                       c.begin();
            if (k >= c.size()) k = c.size() - 1;
            int d = dst_[s][k];
            if (d < 0) d = pick(prof_cdf_, rng.next_real());
            return {phi_[s][k], d};
        }
        // fitted Pareto tail: P(phi > n | phi > n_deep) = (n / n_deep)^{-beta}
        Real w = (u - resolved) / std::max(tail_frac_[s], 1e-300);  // uniform (0,1)
        Real n = Real(n_deep_) * std::pow(1.0 - w, -1.0 / beta_);
        std::int64_t phi = static_cast<std::int64_t>(n) + 1;
        return {phi, pick(prof_cdf_, rng.next_real())};
    }

    std::uint64_t seed() const { return seed_; }
    Real beta() const { return beta_; }

  private:
    static int pick(const std::vector<Real>& cdf, Real u) {
        size_t k = std::lower_bound(cdf.begin(), cdf.end(), u * cdf.back()) - cdf.begin();
        return static_cast<int>(std::min(k, cdf.size() - 1));
    }

    int m_;
    Real beta_;
    std::uint64_t seed_;
    std::vector<std::vector<Real>> cdf_;
    std::vector<std::vector<std::int64_t>> phi_;
    std::vector<std::vector<int>> dst_;
    std::vector<Real> tail_frac_;
    std::vector<Real> prof_cdf_, mu_cdf_;
    std::int64_t n_deep_ = 0;
};

// ---------------------------------------------------------------------------
// Empirical law containers
// ---------------------------------------------------------------------------

struct EmpiricalLaw {
    std::vector<Real> samples;      // sorted
    std::string reference_id;
    Real ks = 0.0;
    std::vector<Real> moments;      // first and second raw moments

    void finalize() {
        std::sort(samples.begin(), samples.end());
        Real m1 = 0.0, m2 = 0.0;
        for (Real x : samples) {
            m1 += x;
            m2 += x * x;
        }
        moments = {m1 / samples.size(), m2 / samples.size()};
    }

    template <typename Cdf>
    Real ks_against(Cdf&& cdf) {
        Real worst = 0.0;
        const Real n = Real(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            Real F = cdf(samples[i]);
            worst = std::max(worst, std::fabs((i + 1) / n - F));
            worst = std::max(worst, std::fabs(F - i / n));
        }
        ks = worst;
        return worst;
    }
};

// ---------------------------------------------------------------------------
// Occupation times (Darling-Kac): S_n = #{1 <= j <= n : f^j x in Y}, sampled
// by renewal jumps and normalized by the dual-ergodic return sequence
// a_n = beta^{-1} d_beta n^beta / m(n), so the limit law is the
// mean-one Mittag-Leffler law M_beta.
// ---------------------------------------------------------------------------

inline EmpiricalLaw sample_occupation(const RenewalSampler& sampler, Real m_at_n,
                                      std::int64_t n, int n_samples) {
    const Real beta = sampler.beta();
    Real a_n = (d_beta_const(beta) / beta) * std::pow(Real(n), beta) / m_at_n;
    EmpiricalLaw law;
    law.reference_id = "mittag-leffler";
    law.samples.resize(n_samples);
    parallel_for(n_samples, [&](std::int64_t k) {
        StreamRng rng(sampler.seed(), static_cast<std::uint64_t>(k));
        int cell = sampler.sample_initial_cell(rng);
        std::int64_t t = 0, count = 0;
        while (true) {
            auto [phi, nxt] = sampler.jump(cell, rng);
            t += phi;
            if (t > n) break;
            ++count;
            cell = nxt;
        }
        law.samples[k] = Real(count) / a_n;
    });
    law.finalize();
    return law;
}

// Last visit time Z_n = max{0 <= j <= n : f^j x in Y}, normalized by n.
inline EmpiricalLaw sample_arcsine(const RenewalSampler& sampler, std::int64_t n,
                                   int n_samples) {
    EmpiricalLaw law;
    law.reference_id = "arcsine";
    law.samples.resize(n_samples);
    parallel_for(n_samples, [&](std::int64_t k) {
        StreamRng rng(sampler.seed(), static_cast<std::uint64_t>(k));
        int cell = sampler.sample_initial_cell(rng);
        std::int64_t t = 0;
        while (true) {
            auto [phi, nxt] = sampler.jump(cell, rng);
            if (t + phi > n) break;
            t += phi;
            cell = nxt;
        }
        law.samples[k] = Real(t) / Real(n);
    });
    law.finalize();
    return law;
}

// Direct-orbit cross-check sampler (pointwise iteration of the map).
// Initial points are mu-distributed on Y (the g = 1 law) via rejection
// against the induced density.
inline EmpiricalLaw sample_arcsine_orbit(const PiecewiseMap& map, Real y_lo,
                                         const std::vector<Real>& h_y, std::int64_t n,
                                         int n_samples, std::uint64_t seed) {
    Real h_max = 0.0;
    for (Real h : h_y) h_max = std::max(h_max, h);
    EmpiricalLaw law;
    law.reference_id = "arcsine-orbit";
    law.samples.resize(n_samples);
    const int m = static_cast<int>(h_y.size());
    parallel_for(n_samples, [&](std::int64_t k) {
        StreamRng rng(seed, static_cast<std::uint64_t>(k) + (1ULL << 32));
        Real x;
        for (;;) {
            x = y_lo + (1.0 - y_lo) * rng.next_real();
            int c = std::min(m - 1, static_cast<int>((x - y_lo) / (1.0 - y_lo) * m));
            if (rng.next_real() * h_max <= h_y[c]) break;
        }
        std::int64_t last = 0;
        for (std::int64_t j = 1; j <= n; ++j) {
            x = map.apply(x);
            x = std::min(std::max(x, kOrbitLo), kOrbitHi);
            if (x >= y_lo) last = j;
        }
        law.samples[k] = Real(last) / Real(n);
    });
    law.finalize();
    return law;
}

// ---------------------------------------------------------------------------
// Mittag-Leffler reference law (normalized to mean one)
// ---------------------------------------------------------------------------

struct MittagLefflerCdf {
    Real beta;
    mutable bool series_ok = true;

    // density of the mean-one law: f(x) = (1/(b pi G)) sum_k (-1)^{k+1}/k!
    //   Gamma(1+k b) sin(pi k b) (x/G)^{k-1}, G = Gamma(1+beta)
    Real density(Real x) const {
        if (x <= 0.0) return 0.0;
        const Real G = std::tgamma(1.0 + beta);
        const Real xp = x / G;
        const Real lxp = std::log(xp);
        Real sum = 0.0;
        Real maxterm = 0.0;
        int tiny_run = 0;
        for (int k = 1; k <= 400; ++k) {
            // log-space magnitude avoids the factorial overflow at k ~ 170
            Real lt = std::lgamma(1.0 + k * beta) - std::lgamma(Real(k) + 1.0) +
                      (k - 1) * lxp;
            Real s = std::sin(kPi * k * beta);
            Real t = (k % 2 == 1 ? 1.0 : -1.0) * s * std::exp(lt);
            sum += t;
            maxterm = std::max(maxterm, std::fabs(t));
            // terms with sin ~ 0 must not trigger early termination
            if (std::fabs(t) < 1e-17 * std::max(1.0, std::fabs(sum)) && lt < 0.0) {
                if (++tiny_run >= 3) break;
            } else {
                tiny_run = 0;
            }
        }
        // cancellation guard: the density is O(1), so a huge largest term
        // means the double-precision budget is spent
        if (maxterm > 1e10 || !std::isfinite(sum)) return saddle_density(x);
        return std::max(0.0, sum / (beta * kPi * G));
    }

    Real cdf(Real x) const {
        if (x <= 0.0) return 0.0;
        const Real G = std::tgamma(1.0 + beta);
        const Real xp = x / G;
        const Real lxp = std::log(xp);
        Real sum = 0.0;
        Real maxterm = 0.0;
        int tiny_run = 0;
        for (int k = 1; k <= 400; ++k) {
            Real lt = std::lgamma(1.0 + k * beta) - std::lgamma(Real(k) + 1.0) -
                      std::log(Real(k)) + k * lxp;
            Real s = std::sin(kPi * k * beta);
            Real t = (k % 2 == 1 ? 1.0 : -1.0) * s * std::exp(lt);
            sum += t;
            maxterm = std::max(maxterm, std::fabs(t));
            if (std::fabs(t) < 1e-17 * std::max(1.0, std::fabs(sum)) && lt < 0.0) {
                if (++tiny_run >= 3) break;
            } else {
                tiny_run = 0;
            }
        }
        if (maxterm > 1e10 || !std::isfinite(sum)) return saddle_cdf(x);
        return std::min(1.0, std::max(0.0, sum / (beta * kPi)));
    }

  private:
    // leading-order stretched-exponential tail, used only as the flagged
    // fallback when the series loses too many digits
    Real saddle_cdf(Real x) const {
        series_ok = false;
        Real G = std::tgamma(1.0 + beta);
        Real A = (1.0 - beta) * std::pow(beta, beta / (1.0 - beta));
        return 1.0 - std::exp(-A * std::pow(x / G, 1.0 / (1.0 - beta)));
    }
    Real saddle_density(Real x) const {
        series_ok = false;
        Real h = 1e-5;
        return (saddle_cdf(x + h) - saddle_cdf(x - h)) / (2.0 * h);
    }
};

// Two-sample Kolmogorov-Smirnov distance; ties are advanced jointly.
inline Real two_sample_ks(const std::vector<Real>& a_sorted,
                          const std::vector<Real>& b_sorted) {
    size_t i = 0, j = 0;
    const Real na = Real(a_sorted.size()), nb = Real(b_sorted.size());
    Real worst = 0.0;
    while (i < a_sorted.size() && j < b_sorted.size()) {
        Real t = std::min(a_sorted[i], b_sorted[j]);
        while (i < a_sorted.size() && a_sorted[i] <= t) ++i;
        while (j < b_sorted.size() && b_sorted[j] <= t) ++j;
        worst = std::max(worst, std::fabs(Real(i) / na - Real(j) / nb));
    }
    return worst;
}

// p-th raw moment of the mean-one Mittag-Leffler law: p! G(1+b)^p / G(1+p b).
inline Real mittag_leffler_moment(Real beta, int p) {
    Real fac = 1.0;
    for (int k = 2; k <= p; ++k) fac *= k;
    return fac * std::pow(std::tgamma(1.0 + beta), p) / std::tgamma(1.0 + p * beta);
}

// Arcsine (generalized) reference: P(zeta_beta <= t) = I_t(beta, 1 - beta).
inline Real arcsine_cdf(Real beta, Real t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return beta_inc(beta, 1.0 - beta, t);
}

// Chi-square goodness of fit of sampled phi against the model masses f_n,
// pooling atoms beyond the given count; returns the p-value.
inline Real phi_chi2_pvalue(const RenewalSampler& sampler, const std::vector<Real>& f,
                            int atoms, int draws, std::uint64_t seed) {
    std::vector<std::int64_t> count(atoms + 1, 0);
    StreamRng rng(seed, 424242);
    // draw from stationarity: independent initial cells
    for (int k = 0; k < draws; ++k) {
        int cell = sampler.sample_initial_cell(rng);
        auto [phi, nxt] = sampler.jump(cell, rng);
        (void)nxt;
        if (phi <= atoms)
            ++count[phi];
        else
            ++count[0];  // pooled overflow
    }
    Real chi2 = 0.0;
    int dof = 0;
    Real pooled_p = 1.0;
    for (int n = 1; n <= atoms; ++n) {
        Real p = f[n];
        pooled_p -= p;
        Real expect = p * draws;
        if (expect < 5.0) continue;
        Real d = count[n] - expect;
        chi2 += d * d / expect;
        ++dof;
    }
    if (pooled_p * draws >= 5.0) {
        Real d = count[0] - pooled_p * draws;
        chi2 += d * d / (pooled_p * draws);
        ++dof;
    }
    return chi2_pvalue(chi2, std::max(1, dof - 1));
}

}  // namespace orseq

#endif
