#ifndef ORSEQ_SPECTRAL_HPP
#define ORSEQ_SPECTRAL_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/induced.hpp"
#include "orseq/renewal_ops.hpp"
#include "orseq/special.hpp"

namespace orseq {

// ---------------------------------------------------------------------------
// Closed-form limit constants
// ---------------------------------------------------------------------------

struct ConstantSet {
    Real beta = 0.0;
    Real d_beta = 0.0;       // sin(beta pi)/pi, d_1 = 1
    Complex c_beta;          // -i xi^+_beta
    Real c = 1.0;            // tail constant mu(phi>n) = c(n^{-beta} + H(n))
    Real c_H = 0.0;          // integral of H_1
    Complex e_0;             // i c_H / c_beta
    Real gamma = 0.0;        // min(1-beta, beta-1/2)

    Complex xi_plus(Real p) const { return xi_closed(p, +1); }
    Complex xi_minus(Real p) const { return xi_closed(p, -1); }

    Complex d_prime(int j) const {
        Real p = (j + 1) * beta - j;
        Complex e0j = 1.0;
        for (int t = 0; t < j; ++t) e0j *= e_0;
        return e0j * xi_minus(p) / c_beta;
    }
    Real d_beta_j(int j) const { return std::real(d_prime(j)) / kPi; }
};

// c_H = int_0^infty H_1 with H_1(x) = [x]^{-beta} - x^{-beta} + H([x]) for
// x >= 1 and H_1 = 1/c - x^{-beta} on [0,1).  Evaluated as
//   lim_N (1/c) sum_{n<N} tail(n) - N^{1-beta}/(1-beta),
// with the staircase remainder N^{-beta}/2 and the fitted O(n^{-2 beta})
// remainder extrapolated analytically.
inline Real compute_c_H(const TailModel& tm) {
    const Real beta = tm.beta;
    if (!(beta > 0.0 && beta < 1.0)) throw BetaOutOfRange("c_H needs beta in (0,1)");
    const std::int64_t N = static_cast<std::int64_t>(tm.tail.size()) - 1;
    Kahan acc;
    for (std::int64_t n = 0; n < N; ++n) acc.add(tm.tail[n] / tm.c_fit);
    Real cH = acc.value() - std::pow(Real(N), 1.0 - beta) / (1.0 - beta);
    cH += 0.5 * std::pow(Real(N), -beta);
    if (2.0 * beta > 1.0)
        cH += tm.aH * std::pow(Real(N), 1.0 - 2.0 * beta) / (2.0 * beta - 1.0);
    return cH;
}

inline ConstantSet constants(Real beta, const TailModel& tm) {
    if (!(beta > 0.0 && beta < 1.0))
        throw BetaOutOfRange("constants are defined for beta in (0,1)");
    ConstantSet cs;
    cs.beta = beta;
    cs.d_beta = d_beta_const(beta);
    cs.c_beta = Complex(0.0, -1.0) * xi_closed(beta, +1);
    cs.c = tm.c_fit;
    cs.c_H = compute_c_H(tm);
    cs.e_0 = Complex(0.0, 1.0) * cs.c_H / cs.c_beta;
    cs.gamma = std::min(1.0 - beta, beta - 0.5);
    return cs;
}

// Synthetic-tail convenience: tail(n) = n^{-beta} exactly.
inline TailModel synthetic_tail_model(Real beta, int N) {
    TailModel tm;
    tm.beta = beta;
    tm.measure = TailMeasure::invariant;
    tm.tail.resize(N + 1);
    tm.tail[0] = 1.0;
    for (int n = 1; n <= N; ++n) tm.tail[n] = std::pow(Real(n), -beta);
    tm.c_fit = 1.0;
    tm.remainder_bound = 0.0;
    tm.aH = 0.0;
    return tm;
}

// ---------------------------------------------------------------------------
// R(theta) = sum_n R_n e^{i n theta} with optional deep-tail completion
// ---------------------------------------------------------------------------

using CMat = std::vector<Complex>;  // m*m row-major

namespace detail {

// int_a^infty sigma^{-p} e^{i sigma} d sigma for p > 1, a > 0: dyadic panels
// below 1, unit panels to 40 pi, then the integration-by-parts expansion.
inline Complex osc_upper_integral(Real p, Real a) {
    const Complex iu(0.0, 1.0);
    Complex res(0, 0);
    Real b = std::max(a, 1.0);
    if (a < 1.0) {
        // sigma^{-p} (e^{i sigma} - 1) is integrable; the -1 part is explicit
        res += (std::pow(a, 1.0 - p) - 1.0) / (p - 1.0);
        Real lo = a;
        while (lo < 1.0) {
            Real hi = std::min(1.0, 2.0 * lo);
            res += gauss16_c(
                [&](Real s) { return std::pow(s, -p) * (std::exp(iu * s) - Complex(1, 0)); },
                lo, hi);
            lo = hi;
        }
    }
    const Real A = 40.0 * kPi;
    for (Real lo = b; lo < A; lo += kPi)
        res += gauss16_c([&](Real s) { return std::pow(s, -p) * std::exp(iu * s); }, lo,
                         std::min(A, lo + kPi));
    Complex tail(0, 0), coeff = 1.0;
    for (int k = 0; k < 12; ++k) {
        tail += -std::exp(iu * A) * std::pow(A, -p - k) * coeff / iu;
        coeff *= (p + k) / iu;
        if (std::abs(coeff) * std::pow(A, -p - k - 1) < 1e-17) break;
    }
    return res + tail;
}

// sum_{n > n0} c beta n^{-beta-1} e^{i n theta} via the Euler-Maclaurin
// midpoint form of the oscillatory integral.
inline Complex fitted_tail_sum(Real c, Real beta, Real n0, Real theta) {
    if (theta < 0.0) return std::conj(fitted_tail_sum(c, beta, n0, -theta));
    if (theta < 1e-13) return Complex(c * std::pow(n0 + 0.5, -beta), 0.0);
    Real a = (n0 + 0.5) * theta;
    return c * beta * std::pow(theta, beta) * osc_upper_integral(beta + 1.0, a);
}

}  // namespace detail

inline CMat R_of_theta(const OperatorSeq& seq, Real theta, bool tail_completion = true) {
    const int m = seq.m;
    CMat R(static_cast<size_t>(m) * m, Complex(0, 0));
    for (int n = 1; n <= seq.N; ++n) {
        Complex z = std::polar(1.0, theta * n);
        for (const auto& sc : seq.R[n - 1])
            for (int i = 0; i < m; ++i)
                R[static_cast<size_t>(i) * m + sc.src] += z * sc.col[i];
    }
    if (tail_completion) {
        // resolved deep cylinders as rank-one surrogates
        std::vector<Complex> src_mass(m, Complex(0, 0));
        for (const auto& d : seq.deep)
            src_mass[d.src] += std::polar(1.0, theta * d.n) * d.mass;
        // fitted law beyond the resolved range, aggregated into the sliver
        // cell; the shape is rescaled so the theta = 0 mass is exactly the
        // remaining tail mass (keeps lambda(0) = 1 to iteration precision)
        Complex shape = detail::fitted_tail_sum(seq.tail_c, seq.beta, Real(seq.n_deep),
                                                theta);
        Real shape0 = seq.tail_c * std::pow(Real(seq.n_deep) + 0.5, -seq.beta);
        src_mass[0] += shape * (seq.tail[seq.n_deep] / shape0);
        for (int s = 0; s < m; ++s) {
            if (src_mass[s] == Complex(0, 0)) continue;
            for (int i = 0; i < m; ++i)
                R[static_cast<size_t>(i) * m + s] +=
                    src_mass[s] * seq.mu_profile[i] / seq.mu[i];
        }
    }
    return R;
}

// ---------------------------------------------------------------------------
// Leading eigenvalue by power iteration with the mu-weighted normalization
// int_Y v dmu = 1
// ---------------------------------------------------------------------------

struct EigenResult {
    Complex lambda;
    std::vector<Complex> eigvec;
    Real gap = 0.0;  // |second| / |leading| estimate
};

inline EigenResult leading_eigen(const CMat& R, const std::vector<Real>& mu) {
    const int m = static_cast<int>(mu.size());
    std::vector<Complex> v(m, Complex(1, 0)), w(m);
    Complex lambda(1, 0);
    Real gap = 0.0;
    Complex lam_prev(0, 0);
    int it = 0;
    for (; it < 2000; ++it) {
        for (int i = 0; i < m; ++i) {
            Complex s(0, 0);
            const Complex* row = &R[static_cast<size_t>(i) * m];
            for (int s2 = 0; s2 < m; ++s2) s += row[s2] * v[s2];
            w[i] = s;
        }
        // normalize: mu-weighted mean = 1
        Complex mean(0, 0);
        for (int i = 0; i < m; ++i) mean += mu[i] * w[i];
        lambda = mean;  // since v was normalized to mu-mean 1
        Real dev = 0.0;
        for (int i = 0; i < m; ++i) {
            Complex ratio = w[i] / mean;
            dev = std::max(dev, std::abs(ratio - v[i]));
            v[i] = ratio;
        }
        if (std::abs(lambda - lam_prev) < 1e-14 && dev < 1e-12) break;
        lam_prev = lambda;
    }
    // crude second-mode estimate from the residual contraction rate
    {
        std::vector<Complex> r(m);
        for (int i = 0; i < m; ++i) {
            Complex s(0, 0);
            const Complex* row = &R[static_cast<size_t>(i) * m];
            for (int s2 = 0; s2 < m; ++s2) s += row[s2] * v[s2];
            r[i] = s - lambda * v[i];
        }
        Real n1 = 0.0;
        for (auto& x : r) n1 = std::max(n1, std::abs(x));
        std::vector<Complex> r2(m);
        for (int i = 0; i < m; ++i) {
            Complex s(0, 0);
            const Complex* row = &R[static_cast<size_t>(i) * m];
            for (int s2 = 0; s2 < m; ++s2) s += row[s2] * r[s2];
            r2[i] = s;
        }
        Real n2 = 0.0;
        for (auto& x : r2) n2 = std::max(n2, std::abs(x));
        gap = n1 > 1e-300 ? std::min(1.0, n2 / (n1 * std::abs(lambda))) : 0.0;
    }
    EigenResult er{lambda, v, gap};
    if (gap > 0.99)
        throw NoDominantEigenvalue("second mode within 1% of the leading eigenvalue");
    return er;
}

// ---------------------------------------------------------------------------
// Fourier-coefficient oracle: T_n = (1/pi) Re int_0^pi (I - R(theta))^{-1}
// e^{-i n theta} d theta; for beta = 1 the real-part form
// T_n = (2/pi) int_0^pi cos(n theta) Re T(theta) d theta (n >= 1).
// ---------------------------------------------------------------------------

namespace detail {

// In-place LU solve of (I - R) X = B for all m columns; partial pivoting.
inline CMat resolvent_dense(const CMat& R, int m) {
    CMat A(static_cast<size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            A[static_cast<size_t>(i) * m + j] =
                (i == j ? Complex(1, 0) : Complex(0, 0)) - R[static_cast<size_t>(i) * m + j];
    CMat X(static_cast<size_t>(m) * m, Complex(0, 0));
    for (int i = 0; i < m; ++i) X[static_cast<size_t>(i) * m + i] = 1.0;
    std::vector<int> piv(m);
    for (int c = 0; c < m; ++c) {
        int p = c;
        Real best = std::abs(A[static_cast<size_t>(c) * m + c]);
        for (int r = c + 1; r < m; ++r) {
            Real mag = std::abs(A[static_cast<size_t>(r) * m + c]);
            if (mag > best) {
                best = mag;
                p = r;
            }
        }
        if (best < 1e-300) throw SingularResolvent("I - R(theta) is numerically singular");
        if (p != c) {
            for (int j = 0; j < m; ++j) {
                std::swap(A[static_cast<size_t>(p) * m + j], A[static_cast<size_t>(c) * m + j]);
                std::swap(X[static_cast<size_t>(p) * m + j], X[static_cast<size_t>(c) * m + j]);
            }
        }
        Complex inv = Complex(1, 0) / A[static_cast<size_t>(c) * m + c];
        for (int r = c + 1; r < m; ++r) {
            Complex fac = A[static_cast<size_t>(r) * m + c] * inv;
            if (fac == Complex(0, 0)) continue;
            for (int j = c; j < m; ++j)
                A[static_cast<size_t>(r) * m + j] -= fac * A[static_cast<size_t>(c) * m + j];
            for (int j = 0; j < m; ++j)
                X[static_cast<size_t>(r) * m + j] -= fac * X[static_cast<size_t>(c) * m + j];
        }
    }
    for (int c = m - 1; c >= 0; --c) {
        Complex inv = Complex(1, 0) / A[static_cast<size_t>(c) * m + c];
        for (int j = 0; j < m; ++j) X[static_cast<size_t>(c) * m + j] *= inv;
        for (int r = 0; r < c; ++r) {
            Complex fac = A[static_cast<size_t>(r) * m + c];
            if (fac == Complex(0, 0)) continue;
            for (int j = 0; j < m; ++j)
                X[static_cast<size_t>(r) * m + j] -= fac * X[static_cast<size_t>(c) * m + j];
        }
    }
    return X;
}

}  // namespace detail

struct OracleOptions {
    bool tail_completion = true;
    Real theta_min = 1e-8;   // geometric panel floor
    int nodes_per_period = 8;
};

// Dense real matrix, row-major m*m.
inline std::vector<Real> fourier_oracle_Tn(const OperatorSeq& seq, int n,
                                           OracleOptions opt = {}) {
    const int m = seq.m;
    if (m > 64) throw HorizonTooLarge("oracle quadrature is limited to m <= 64");
    const bool beta_one = std::fabs(seq.beta - 1.0) < 1e-12;
    std::vector<Real> acc(static_cast<size_t>(m) * m, 0.0);

    auto add_panel = [&](Real a, Real b) {
        const auto& xs = gl16_nodes();
        const auto& ws = gl16_weights();
        Real mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (size_t q = 0; q < xs.size(); ++q) {
            Real theta = mid + half * xs[q];
            CMat R = R_of_theta(seq, theta, opt.tail_completion);
            CMat T = detail::resolvent_dense(R, m);
            Real wq = ws[q] * half;
            if (beta_one && n >= 1) {
                Real cosn = std::cos(n * theta);
                for (int e = 0; e < m * m; ++e)
                    acc[e] += wq * (2.0 / kPi) * cosn * T[e].real();
            } else {
                Complex ph = std::polar(1.0, -n * theta);
                for (int e = 0; e < m * m; ++e)
                    acc[e] += wq * (1.0 / kPi) * (T[e] * ph).real();
            }
        }
    };

    // geometric panels toward 0, each split to resolve the e^{-in theta}
    // oscillation with >= nodes_per_period nodes per period
    Real hi = kPi;
    while (hi > opt.theta_min) {
        Real lo = std::max(opt.theta_min, 0.5 * hi);
        int parts = 1;
        if (n > 0) {
            Real periods = (hi - lo) * n / (2.0 * kPi);
            parts = std::max(1, static_cast<int>(periods * opt.nodes_per_period / 16.0) + 1);
        }
        for (int p = 0; p < parts; ++p)
            add_panel(lo + (hi - lo) * p / parts, lo + (hi - lo) * (p + 1) / parts);
        hi = lo;
    }

    // analytic remainder of the [0, theta_min) singular head for the
    // completed family; negligible for the truncated family
    if (opt.tail_completion && seq.tail_c > 0.0) {
        Real head;
        if (beta_one) {
            head = (2.0 / kPi) * (kPi / 2.0) /
                   (seq.tail_c * std::log(1.0 / opt.theta_min));
        } else {
            Complex c_beta = Complex(0.0, -1.0) * xi_closed(seq.beta, +1);
            Complex val = std::pow(opt.theta_min, 1.0 - seq.beta) /
                          ((1.0 - seq.beta) * seq.tail_c * c_beta);
            head = (1.0 / kPi) * val.real();
        }
        for (int i = 0; i < m; ++i)
            for (int s = 0; s < m; ++s) acc[static_cast<size_t>(i) * m + s] += head * seq.mu[s];
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Spectral sampling of lambda(theta)
// ---------------------------------------------------------------------------

struct SpectralSample {
    std::vector<Real> theta;
    std::vector<Complex> lambda;
    std::vector<Real> gap;
    std::vector<Real> eigvec_dev;  // max |v(theta) - 1| over cells
};

inline SpectralSample sample_lambda(const OperatorSeq& seq, const std::vector<Real>& thetas,
                                    bool tail_completion = true) {
    SpectralSample out;
    for (Real th : thetas) {
        CMat R = R_of_theta(seq, th, tail_completion);
        EigenResult er;
        try {
            er = leading_eigen(R, seq.mu);
        } catch (const NoDominantEigenvalue&) {
            continue;  // reported via the omitted theta; the verifier skips it
        }
        out.theta.push_back(th);
        out.lambda.push_back(er.lambda);
        out.gap.push_back(er.gap);
        Real dev = 0.0;
        for (const auto& c : er.eigvec) dev = std::max(dev, std::abs(c - Complex(1, 0)));
        out.eigvec_dev.push_back(dev);
    }
    return out;
}

}  // namespace orseq

#endif
