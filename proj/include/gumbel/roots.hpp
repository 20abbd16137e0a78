#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "gumbel/errors.hpp"

namespace gumbel {

// Bracketed Newton refinement with bisection safeguards. `f_df` returns
// {f(x), f'(x)}; [lo, hi] must bracket a sign change. Every third step is a
// forced bisection so the bracket provably shrinks below tol_abs even when
// Newton converges one-sided. Deterministic.
template <typename FDF>
double newton_bisect(FDF&& f_df, double lo, double hi, double tol_abs) {
    double flo = f_df(lo).first;
    double fhi = f_df(hi).first;
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw compute_error("newton_bisect: endpoints do not bracket a sign change");
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 256 && (hi - lo) > tol_abs; ++iter) {
        auto [fx, dfx] = f_df(x);
        if (fx == 0.0) return x;
        if ((fx > 0.0) == (fhi > 0.0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        double next = x - (dfx != 0.0 ? fx / dfx : 0.0);
        bool inside = std::isfinite(next) && next > lo && next < hi;
        if (iter % 3 == 2 || dfx == 0.0 || !inside)
            x = 0.5 * (lo + hi);
        else
            x = next;
    }
    return 0.5 * (lo + hi);
}

// Bracketed secant steps with the same periodic bisection safeguard. [lo, hi]
// must bracket a sign change of f; stops when the bracket width falls below
// tol_abs.
template <typename F>
double secant_bisect(F&& f, double lo, double hi, double tol_abs) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw compute_error("secant_bisect: endpoints do not bracket a sign change");
    for (int iter = 0; iter < 300 && (hi - lo) > tol_abs; ++iter) {
        double x = 0.5 * (lo + hi);
        if (iter % 3 != 2) {
            double denom = fhi - flo;
            if (denom != 0.0 && std::isfinite(denom)) {
                double s = hi - fhi * (hi - lo) / denom;
                double margin = 0.001 * (hi - lo);
                if (s > lo + margin && s < hi - margin) x = s;
            }
        }
        double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx > 0.0) == (fhi > 0.0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace gumbel
