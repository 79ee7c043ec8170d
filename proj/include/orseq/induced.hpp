#ifndef ORSEQ_INDUCED_HPP
#define ORSEQ_INDUCED_HPP

#include <cmath>
#include <memory>
#include <vector>

#include "orseq/common.hpp"
#include "orseq/maps.hpp"

namespace orseq {

// First-return structure to Y = [y_lo, 1].  Requires a full-branch map whose
// leftmost branch carries the indifferent fixed point and maps (0, y_lo)
// onto (0, 1); the remaining branches form Y.  Return-time cylinders are
// pullbacks of the boundary sequence through the Y-branches.
struct ReturnStructure {
    std::shared_ptr<const PiecewiseMap> map;
    Real alpha = 0.0;  // LSV parameter when applicable, else 0
    Real beta = 0.0;   // tail index 1/alpha for LSV
    Real y_lo = 0.5;
    int n_max = 0;              // fully resolved cylinder horizon
    std::vector<Real> x_seq;    // boundary sequence x_0..x_{n_x}, x_0 = y_lo
    std::vector<int> y_branch;  // branch indices composing Y

    int n_x() const { return static_cast<int>(x_seq.size()) - 1; }

    const Branch& branch(int k) const { return map->branches[y_branch[k]]; }

    // Inverse of Y-branch k, mapping (0,1) back into the branch domain.
    Real binv(int k, Real w) const { return branch(k).invert(w); }

    // Cylinder piece {phi = n} inside Y-branch k, as [lo, hi).
    std::pair<Real, Real> cylinder_piece(int k, int n) const {
        if (n == 1) return {binv(k, y_lo), branch(k).hi};
        return {binv(k, x_seq[n - 1]), binv(k, x_seq[n - 2])};
    }

    Real leb_y() const {
        Real s = 0.0;
        for (size_t k = 0; k < y_branch.size(); ++k) s += branch(k).hi - branch(k).lo;
        return s;
    }

    // Leb(phi > n); n = 0 gives Leb(Y).
    Real leb_tail(int n) const {
        if (n == 0) return leb_y();
        Real s = 0.0;
        for (size_t k = 0; k < y_branch.size(); ++k)
            s += binv(static_cast<int>(k), x_seq[n - 1]) - branch(k).lo;
        return s;
    }

    // Return time of y by locating f(y) in the entry sets [x_k, x_{k-1}).
    int phi(Real y) const {
        Real z = map->apply(y);
        if (z >= y_lo) return 1;
        // binary search: largest k with x_k <= z  =>  phi = k+1
        int lo = 0, hi = n_x();
        if (z < x_seq[hi])
            throw HorizonTooLarge("return time exceeds resolved boundary sequence");
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (x_seq[mid] <= z)
                hi = mid;
            else
                lo = mid;
        }
        return hi + 1;
    }
};

inline ReturnStructure build_return_structure(const PiecewiseMap& map, Real y_lo,
                                              int n_max, int n_x = 100000) {
    if (n_max < 2) throw InvalidInducingSet("n_max must be >= 2");
    const Branch& left = map.branches.front();
    if (std::fabs(left.hi - y_lo) > 1e-12)
        throw InvalidInducingSet(
            "y_lo must coincide with the right edge of the indifferent branch");
    if (map.branches.size() < 2)
        throw InvalidInducingSet("map must have at least one branch inside Y");
    // full-branch check (increasing branches onto (0,1))
    for (const auto& b : map.branches) {
        Real eps = 1e-9 * (b.hi - b.lo);
        Real flo = b.forward(b.lo + eps), fhi = b.forward(b.hi - eps);
        if (!(fhi > flo) || flo > 1e-6 || fhi < 1.0 - 1e-6)
            throw InvalidInducingSet("branches must be increasing and full onto (0,1)");
    }

    ReturnStructure rs;
    rs.map = std::make_shared<PiecewiseMap>(map);
    rs.y_lo = y_lo;
    rs.n_max = n_max;
    for (size_t i = 1; i < map.branches.size(); ++i) rs.y_branch.push_back(static_cast<int>(i));
    rs.x_seq = boundary_sequence(map, std::max(n_max, n_x), y_lo);
    return rs;
}

inline ReturnStructure build_return_structure_lsv(Real alpha, int m_unused, int n_max,
                                                  int n_x = 100000) {
    (void)m_unused;
    if (alpha < 1.0)
        throw InvalidInducingSet("alpha < 1: finite invariant measure, out of scope");
    ReturnStructure rs = build_return_structure(make_lsv({alpha}), 0.5, n_max, n_x);
    rs.alpha = alpha;
    rs.beta = 1.0 / alpha;
    return rs;
}

// Applies the first return map: (F(y), phi(y)).
inline std::pair<Real, int> induced_apply(const ReturnStructure& rs, Real y) {
    Real z = rs.map->apply(y);
    // boundary guard: z within 1e-14 of an entry-set endpoint
    if (z < rs.y_lo) {
        int lo = 0, hi = rs.n_x();
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (rs.x_seq[mid] <= z)
                hi = mid;
            else
                lo = mid;
        }
        if (std::fabs(z - rs.x_seq[hi]) < 1e-14 || std::fabs(z - rs.x_seq[lo]) < 1e-14)
            throw CylinderBoundary("y is within 1e-14 of a cylinder endpoint");
    } else if (std::fabs(z - rs.y_lo) < 1e-14) {
        throw CylinderBoundary("y is within 1e-14 of a cylinder endpoint");
    }
    int n = rs.phi(y);
    Real w = z;
    for (int j = 1; j < n; ++j) w = rs.map->apply(w);
    return {w, n};
}

enum class TailMeasure { lebesgue, invariant };

// Return-time tail mu(phi > n) with a fitted c in mu(phi>n) = c n^{-beta} + cH(n).
struct TailModel {
    Real beta = 0.0;
    bool beta_is_one = false;
    TailMeasure measure = TailMeasure::lebesgue;
    std::vector<Real> tail;     // tail[n] = measure(phi > n), n = 0..n_tail
    Real c_fit = 0.0;           // fitted constant of the n^{-beta} law
    Real remainder_bound = 0.0; // sup |H(n)| n^{2 beta} over the fit window
    Real aH = 0.0;              // signed mean of H(n) n^{2 beta} (extrapolation)
    int fit_lo = 0, fit_hi = 0;

    Real ell(int n) const { return tail[n] * std::pow(Real(n), beta); }
};

namespace detail {

inline void fit_tail(TailModel& tm, int n_fit_lo, int n_fit_hi) {
    tm.fit_lo = n_fit_lo;
    tm.fit_hi = n_fit_hi;
    Real num = 0, den = 0;
    for (int n = n_fit_lo; n <= n_fit_hi; ++n) {
        Real w = std::pow(Real(n), 2.0 * tm.beta);
        num += w * tm.tail[n] * std::pow(Real(n), tm.beta);
        den += w;
    }
    tm.c_fit = num / den;
    Real sup = 0.0, mean = 0.0;
    for (int n = n_fit_lo; n <= n_fit_hi; ++n) {
        Real H = tm.tail[n] / tm.c_fit - std::pow(Real(n), -tm.beta);
        Real Hn = H * std::pow(Real(n), 2.0 * tm.beta);
        sup = std::max(sup, std::fabs(Hn));
        mean += Hn;
    }
    tm.remainder_bound = sup;
    tm.aH = mean / (n_fit_hi - n_fit_lo + 1);
}

}  // namespace detail

// Lebesgue-reference tail model.  tail[0] = Leb(Y), unnormalized.
inline TailModel tail_model_lebesgue(const ReturnStructure& rs, int n_tail = 0) {
    if (n_tail <= 0) n_tail = rs.n_x();
    TailModel tm;
    tm.beta = rs.beta > 0.0 ? rs.beta : 1.0;
    tm.measure = TailMeasure::lebesgue;
    tm.tail.resize(n_tail + 1);
    for (int n = 0; n <= n_tail; ++n) tm.tail[n] = rs.leb_tail(n);
    if (rs.beta <= 0.0) {
        // unknown index: estimate from the log-log slope over the top decade
        std::vector<Real> lx, ly;
        for (int n = n_tail / 10; n <= n_tail; n += std::max(1, n_tail / 200)) {
            lx.push_back(std::log(Real(n)));
            ly.push_back(std::log(tm.tail[n]));
        }
        tm.beta = -fit_line(lx, ly).slope;
    }
    tm.beta_is_one = std::fabs(tm.beta - 1.0) < 1e-12;
    detail::fit_tail(tm, std::max(1, rs.n_max / 4), rs.n_max);
    return tm;
}

// Invariant-measure tail model: integrates the induced density over {phi > n}.
// h_y holds per-cell density values on m equal cells of Y, normalized so that
// the measure of Y is 1.  tail[0] = 1.
inline TailModel tail_model_invariant(const ReturnStructure& rs,
                                      const std::vector<Real>& h_y, int n_tail = 0) {
    if (n_tail <= 0) n_tail = rs.n_x();
    const int m = static_cast<int>(h_y.size());
    const Real leb_y = rs.leb_y();
    const Real cell_w = leb_y / m;
    // prefix masses over the grid: mu([edge_0, edge_k])
    std::vector<Real> prefix(m + 1, 0.0);
    for (int i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + h_y[i] * cell_w;

    auto mu_below = [&](Real t) {
        // mu(Y ∩ [y-grid start, t)); grid is on [y_lo, 1] for single-interval Y
        Real pos = (t - rs.y_lo) / cell_w;
        int k = std::min(m - 1, std::max(0, static_cast<int>(pos)));
        return prefix[k] + h_y[k] * (t - (rs.y_lo + k * cell_w));
    };

    TailModel tm;
    tm.beta = rs.beta > 0.0 ? rs.beta : 1.0;
    tm.measure = TailMeasure::invariant;
    tm.tail.resize(n_tail + 1);
    tm.tail[0] = 1.0;
    for (int n = 1; n <= n_tail; ++n) {
        Real s = 0.0;
        for (size_t k = 0; k < rs.y_branch.size(); ++k) {
            const Branch& b = rs.branch(static_cast<int>(k));
            Real hi = rs.binv(static_cast<int>(k), rs.x_seq[n - 1]);
            s += mu_below(hi) - mu_below(b.lo);
        }
        tm.tail[n] = s;
    }
    tm.beta_is_one = std::fabs(tm.beta - 1.0) < 1e-12;
    detail::fit_tail(tm, std::max(1, rs.n_max / 4), rs.n_max);
    return tm;
}

}  // namespace orseq

#endif
