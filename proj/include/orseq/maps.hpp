#ifndef ORSEQ_MAPS_HPP
#define ORSEQ_MAPS_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "orseq/common.hpp"

namespace orseq {

// Clamping window for orbits; keeps iterates away from the absorbing
// floating-point fixed points at 0 and 1.
inline constexpr Real kOrbitLo = 1e-300;
inline constexpr Real kOrbitHi = 1.0 - 1e-16;

// Guarded Newton solve of g(x) = target on [lo, hi] for increasing C^2 g.
// Falls back to bisection whenever a Newton step leaves the bracket.
template <typename F, typename DF>
Real newton_bisect(F&& g, DF&& dg, Real target, Real lo, Real hi, Real x0,
                   Real tol = 1e-14, int max_iter = 100) {
    Real a = lo, b = hi;
    Real x = std::min(std::max(x0, a), b);
    for (int it = 0; it < max_iter; ++it) {
        Real fx = g(x) - target;
        if (fx == 0.0) return x;
        if (fx > 0.0)
            b = x;
        else
            a = x;
        Real d = dg(x);
        Real step = fx / d;
        Real xn = x - step;
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (std::fabs(xn - x) <= tol * std::max(1.0, std::fabs(x))) return xn;
        x = xn;
    }
    if (b - a > 1e-10)
        throw NonContractingPreimage("inverse iteration failed to converge");
    return 0.5 * (a + b);
}

// One monotone C^2 branch of an interval map.  Domain is half-open [lo, hi).
struct Branch {
    Real lo = 0.0, hi = 1.0;          // domain endpoints
    Real img_lo = 0.0, img_hi = 1.0;  // image endpoints (increasing branch)
    std::function<Real(Real)> forward;
    std::function<Real(Real)> derivative;
    std::function<Real(Real)> inverse;  // image -> domain; auto-derived if empty

    bool contains(Real x) const { return x >= lo && x < hi; }

    Real invert(Real w) const {
        if (inverse) return inverse(w);
        return newton_bisect(forward, derivative, w, lo, hi, 0.5 * (lo + hi));
    }
};

struct PiecewiseMap {
    std::vector<Branch> branches;          // ordered by domain
    std::vector<Real> indifferent_points;  // fixed points with f' = 1

    int branch_index(Real x) const {
        for (size_t i = 0; i < branches.size(); ++i)
            if (branches[i].contains(x)) return static_cast<int>(i);
        return static_cast<int>(branches.size()) - 1;
    }

    Real apply(Real x) const { return branches[branch_index(x)].forward(x); }
    Real derivative(Real x) const { return branches[branch_index(x)].derivative(x); }
};

struct LsvParams {
    Real alpha = 1.0;
};

// Liverani-Saussol-Vaienti family: x(1+2^a x^a) on (0,1/2), 2x-1 on (1/2,1).
inline PiecewiseMap make_lsv(const LsvParams& params) {
    if (!(params.alpha > 0.0)) throw BetaOutOfRange("make_lsv requires alpha > 0");
    const Real a = params.alpha;
    const Real pow2a = std::pow(2.0, a);

    Branch left;
    left.lo = 0.0;
    left.hi = 0.5;
    left.img_lo = 0.0;
    left.img_hi = 1.0;
    left.forward = [a, pow2a](Real x) { return x * (1.0 + pow2a * std::pow(x, a)); };
    left.derivative = [a, pow2a](Real x) { return 1.0 + pow2a * (1.0 + a) * std::pow(x, a); };
    left.inverse = [a, pow2a, left_f = left.forward, left_d = left.derivative](Real w) {
        // the derivative degenerates to 1 near 0, where bisection stays robust
        return newton_bisect(left_f, left_d, w, 0.0, 0.5, 0.5 * w);
    };

    Branch right;
    right.lo = 0.5;
    right.hi = 1.0;
    right.img_lo = 0.0;
    right.img_hi = 1.0;
    right.forward = [](Real x) { return 2.0 * x - 1.0; };
    right.derivative = [](Real) { return 2.0; };
    right.inverse = [](Real w) { return 0.5 * (w + 1.0); };

    PiecewiseMap map;
    map.branches = {left, right};
    map.indifferent_points = {0.0};
    return map;
}

// Boundary sequence x_0 = x0, f(x_{n+1}) = x_n through the leftmost branch.
// For LSV-like maps x0 defaults to the right edge of the indifferent branch.
inline std::vector<Real> boundary_sequence(const PiecewiseMap& map, int n_max,
                                           Real x0 = -1.0) {
    const Branch& left = map.branches.front();
    if (x0 < 0.0) x0 = left.hi;
    std::vector<Real> xs(n_max + 1);
    xs[0] = x0;
    for (int n = 1; n <= n_max; ++n) {
        xs[n] = newton_bisect(left.forward, left.derivative, xs[n - 1], 0.0, xs[n - 1],
                              0.9 * xs[n - 1]);
        if (!(xs[n] > 0.0 && xs[n] < xs[n - 1]))
            throw NonContractingPreimage("boundary sequence not strictly decreasing");
    }
    return xs;
}

// Forward orbit x0, f(x0), ..., f^n(x0), clamped into (kOrbitLo, kOrbitHi).
inline std::vector<Real> orbit(const PiecewiseMap& map, Real x0, int n) {
    std::vector<Real> xs(n + 1);
    Real x = std::min(std::max(x0, kOrbitLo), kOrbitHi);
    xs[0] = x;
    for (int k = 1; k <= n; ++k) {
        x = map.apply(x);
        x = std::min(std::max(x, kOrbitLo), kOrbitHi);
        xs[k] = x;
    }
    return xs;
}

}  // namespace orseq

#endif
