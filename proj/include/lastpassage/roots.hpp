#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace lastpassage {

inline constexpr double kRootTolerance = 1e-12;
inline constexpr int kMaxRootIterations = 200;

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Newton iteration kept inside a sign-change bracket; falls back to bisection
// whenever the Newton step leaves the bracket. Stops when |f| <= ftol or the
// bracket collapses to a few ulps.
template <typename F, typename DF>
RootResult newton_bisect(F&& f, DF&& df, double lo, double hi, double guess,
                         double ftol = kRootTolerance, int max_iter = kMaxRootIterations) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0, true};
    if (fhi == 0.0) return {hi, 0.0, 0, true};
    if (flo > 0.0) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    // invariant: f(lo) < 0 < f(hi); lo may be the larger endpoint
    double x = (guess > std::min(lo, hi) && guess < std::max(lo, hi)) ? guess : 0.5 * (lo + hi);
    RootResult best{x, std::numeric_limits<double>::infinity(), 0, false};
    for (int it = 1; it <= max_iter; ++it) {
        const double fx = f(x);
        if (std::abs(fx) < std::abs(best.residual)) best = {x, fx, it, false};
        if (std::abs(fx) <= ftol) return {x, fx, it, true};
        if (fx < 0.0) lo = x; else hi = x;
        const double width = std::abs(hi - lo);
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            best.iterations = it;
            return best;
        }
        const double d = df(x);
        double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : lo;
        if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
        x = next;
    }
    best.iterations = max_iter;
    return best;
}

// Plain bisection for a nondecreasing predicate-style function: returns the
// smallest x in [lo, hi] (to within xtol) with f(x) >= target, assuming f(hi) >= target.
template <typename F>
double bisect_monotone(F&& f, double target, double lo, double hi, double xtol,
                       int max_iter = kMaxRootIterations) {
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= target) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace lastpassage
