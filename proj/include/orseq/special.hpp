#ifndef ORSEQ_SPECIAL_HPP
#define ORSEQ_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "orseq/common.hpp"

namespace orseq {

// Regularized lower incomplete gamma P(a,x), series for x < a+1, continued
// fraction otherwise (Lentz).  Good to ~1e-14 for the ranges used here.
inline Real gamma_p(Real a, Real x) {
    if (x <= 0.0) return 0.0;
    const Real lg = std::lgamma(a);
    if (x < a + 1.0) {
        Real ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Upper CF: Q(a,x) = exp(-x+a ln x - lg) * 1/(x+1-a- 1(1-a)/(x+3-a- ...))
    const Real tiny = 1e-300;
    Real b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        Real an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        Real del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline Real gamma_q(Real a, Real x) { return 1.0 - gamma_p(a, x); }

// Chi-square upper tail p-value with k degrees of freedom.
inline Real chi2_pvalue(Real stat, int k) { return gamma_q(0.5 * k, 0.5 * stat); }

// Regularized incomplete beta I_x(a,b) by Lentz continued fraction.
inline Real beta_inc(Real a, Real b, Real x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    auto cf = [](Real a_, Real b_, Real x_) {
        const Real tiny = 1e-300;
        Real qab = a_ + b_, qap = a_ + 1.0, qam = a_ - 1.0;
        Real c = 1.0, d = 1.0 - qab * x_ / qap;
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        Real h = d;
        for (int m = 1; m <= 500; ++m) {
            int m2 = 2 * m;
            Real aa = m * (b_ - m) * x_ / ((qam + m2) * (a_ + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a_ + m) * (qab + m) * x_ / ((a_ + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            Real del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < 1e-15) break;
        }
        return h;
    };
    Real lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    Real front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * cf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - lbeta) * cf(b, a, 1.0 - x) / b;
}

// 16-point Gauss-Legendre nodes/weights on [-1,1].
inline const std::vector<Real>& gl16_nodes() {
    static const std::vector<Real> n = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
        -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
        0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
    return n;
}

inline const std::vector<Real>& gl16_weights() {
    static const std::vector<Real> w = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
        0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    return w;
}

template <typename F>
Real gauss16(F&& f, Real a, Real b) {
    const auto& xs = gl16_nodes();
    const auto& ws = gl16_weights();
    Real mid = 0.5 * (a + b), half = 0.5 * (b - a), s = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) s += ws[i] * f(mid + half * xs[i]);
    return s * half;
}

template <typename F>
Complex gauss16_c(F&& f, Real a, Real b) {
    const auto& xs = gl16_nodes();
    const auto& ws = gl16_weights();
    Real mid = 0.5 * (a + b), half = 0.5 * (b - a);
    Complex s = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) s += ws[i] * f(mid + half * xs[i]);
    return s * half;
}

// d_beta = sin(beta pi)/pi for beta in (0,1); d_1 = 1.
inline Real d_beta_const(Real beta) {
    return beta >= 1.0 ? 1.0 : std::sin(beta * kPi) / kPi;
}

// Oscillatory integral xi^{+-}_p = int_0^inf e^{+-i s} s^{-p} ds, 0<p<1.
// Closed form by contour rotation.
inline Complex xi_closed(Real p, int sign) {
    Real mod = std::tgamma(1.0 - p);
    Real arg = sign * kPi * (1.0 - p) / 2.0;
    return Complex(mod * std::cos(arg), mod * std::sin(arg));
}

// Direct quadrature oracle for xi^{+-}_p: singular head via substitution
// s = t^{1/(1-p)}, oscillatory body on [1, A] in half-period panels, and the
// asymptotic tail by repeated integration by parts.
inline Complex xi_quadrature(Real p, int sign) {
    const Complex i_unit(0.0, sign * 1.0);
    // head [0,1]: s = t^{1/(1-p)}, ds = ... -> (1/(1-p)) int_0^1 e^{i s(t)} dt
    Real q = 1.0 / (1.0 - p);
    Complex head = 0.0;
    int hp = 8;
    for (int k = 0; k < hp; ++k) {
        Real a = Real(k) / hp, b = Real(k + 1) / hp;
        head += gauss16_c([&](Real t) { return std::exp(i_unit * std::pow(t, q)); }, a, b);
    }
    head *= q;
    // body [1, A]
    Real A = 40.0 * kPi;
    Complex body = 0.0;
    int panels = 160;
    for (int k = 0; k < panels; ++k) {
        Real a = 1.0 + (A - 1.0) * k / panels, b = 1.0 + (A - 1.0) * (k + 1) / panels;
        body += gauss16_c([&](Real s) { return std::exp(i_unit * s) * std::pow(s, -p); }, a, b);
    }
    // tail by IBP: int_A^inf e^{is}s^{-p-k} = -e^{iA}A^{-p-k}/i + ((p+k)/i) int ... s^{-p-k-1}
    Complex tail = 0.0, pref = std::exp(i_unit * A);
    Complex coeff = 1.0;
    for (int k = 0; k < 12; ++k) {
        tail += -pref * std::pow(A, -p - k) * coeff / i_unit;
        coeff *= (p + k) / i_unit;
        if (std::abs(coeff) * std::pow(A, -p - k - 1) < 1e-17) break;
    }
    return head + body + tail;
}

}  // namespace orseq

#endif
