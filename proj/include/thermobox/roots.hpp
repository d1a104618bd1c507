#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "thermobox/errors.hpp"

namespace thermobox {

/// Brent's method on a bracket [a, b] with f(a), f(b) of opposite sign
/// (or one of them zero). Terminates when the bracket is narrower than
/// x_tol or f hits |f| <= f_tol. Returns the bracket end with smaller |f|.
template <class F>
double brent_root(const F& f, double a, double b, double fa, double fb, double x_tol,
                  double f_tol = 0.0, int max_iter = 200) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw SolverError("brent_root: root is not bracketed");

    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol =
            2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0 || std::abs(fb) <= f_tol) return b;

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0)
                q = -q;
            else
                p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    throw ConvergenceError("brent_root: iteration budget exhausted", std::abs(fb));
}

/// Bisection on a monotone predicate: returns x in [lo, hi] with
/// pred(lo-side) false and pred(hi-side) true, to width x_tol.
template <class Pred>
std::pair<double, double> bisect_predicate(const Pred& pred, double lo, double hi, double x_tol,
                                           int max_iter = 400) {
    for (int i = 0; i < max_iter && hi - lo > x_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return {lo, hi};
}

}  // namespace thermobox
