#ifndef ORSEQ_COMMON_HPP
#define ORSEQ_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace orseq {

using Real = double;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define ORSEQ_DEFINE_ERROR(Name)                                       \
    struct Name : Error {                                              \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

ORSEQ_DEFINE_ERROR(NonContractingPreimage);
ORSEQ_DEFINE_ERROR(InvalidInducingSet);
ORSEQ_DEFINE_ERROR(CylinderBoundary);
ORSEQ_DEFINE_ERROR(NoConvergence);
ORSEQ_DEFINE_ERROR(TruncationTooCoarse);
ORSEQ_DEFINE_ERROR(HorizonTooLarge);
ORSEQ_DEFINE_ERROR(BetaOutOfRange);
ORSEQ_DEFINE_ERROR(NoDominantEigenvalue);
ORSEQ_DEFINE_ERROR(SingularResolvent);
ORSEQ_DEFINE_ERROR(SupportViolation);
ORSEQ_DEFINE_ERROR(UnsupportedObservable);
ORSEQ_DEFINE_ERROR(SamplerFailure);

#undef ORSEQ_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline constexpr Real kPi = 3.14159265358979323846;

// Compensated (Kahan) accumulator.
struct Kahan {
    Real sum = 0.0, carry = 0.0;
    void add(Real x) {
        Real y = x - carry;
        Real t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    Real value() const { return sum; }
};

inline std::vector<Real> logspace(Real lo, Real hi, int n) {
    std::vector<Real> v(n);
    Real la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < n; ++i)
        v[i] = std::exp(la + (lb - la) * (n == 1 ? 0.0 : Real(i) / (n - 1)));
    return v;
}

// Least-squares slope (and intercept) of y against x.
struct LineFit {
    Real slope = 0.0, intercept = 0.0;
};

inline LineFit fit_line(const std::vector<Real>& x, const std::vector<Real>& y) {
    size_t n = x.size();
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    Real d = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / d;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Weighted least squares fit of y ~ const (returns the weighted mean).
inline Real fit_const_weighted(const std::vector<Real>& y, const std::vector<Real>& w) {
    Real num = 0, den = 0;
    for (size_t i = 0; i < y.size(); ++i) {
        num += w[i] * y[i];
        den += w[i];
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Deterministic parallel for.  Work is split into fixed-size chunks so the
// result of ordered reductions does not depend on the thread count.
// ---------------------------------------------------------------------------

inline int hardware_threads() {
    if (const char* env = std::getenv("THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

namespace detail {
inline int& thread_override() {
    static int t = 0;
    return t;
}
}  // namespace detail

inline void set_threads(int t) { detail::thread_override() = t; }
inline int num_threads() {
    return detail::thread_override() > 0 ? detail::thread_override() : hardware_threads();
}

// Runs fn(i) for i in [0, n).  Chunks are assigned round-robin; fn must not
// have cross-iteration data races.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                         std::int64_t chunk = 0) {
    int nt = num_threads();
    if (n <= 0) return;
    if (nt <= 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (chunk <= 0) chunk = std::max<std::int64_t>(1, n / (4 * nt));
    std::int64_t nchunks = (n + chunk - 1) / chunk;
    std::vector<std::thread> threads;
    threads.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        threads.emplace_back([=, &fn]() {
            for (std::int64_t c = t; c < nchunks; c += nt) {
                std::int64_t lo = c * chunk, hi = std::min(n, lo + chunk);
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            }
        });
    }
    for (auto& th : threads) th.join();
}

}  // namespace orseq

#endif
