#pragma once

// Extremal currents of the feasible (I, J) region: the half-line boxcars
// bounding I and the Whitney boxcars bounding J at fixed I.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/roots.hpp"

namespace thermobox {

struct CurrentBound {
    double I = 0.0;
    BoxcarSet box;
};

struct CurrentBounds {
    CurrentBound min, max;
};

/// I_min and I_max with the boxcars attaining them: the two half-lines
/// split at ε0, or (equal temperatures) the full line and the empty set.
inline CurrentBounds current_bounds(const ReservoirPair& res) {
    CurrentBounds out;
    if (res.identical()) return out;
    if (auto e0 = epsilon_zero(res)) {
        CurrentBound left{delta_f_integral(res, -kInf, *e0), BoxcarSet({{-kInf, *e0}})};
        CurrentBound right{delta_f_integral(res, *e0, kInf), BoxcarSet({{*e0, kInf}})};
        if (left.I <= right.I) {
            out.min = std::move(left);
            out.max = std::move(right);
        } else {
            out.min = std::move(right);
            out.max = std::move(left);
        }
        return out;
    }
    // Δf has the sign of δ_μ everywhere.
    CurrentBound full{res.delta_mu(), BoxcarSet::full_line()};
    if (res.delta_mu() < 0.0)
        out.min = std::move(full);
    else
        out.max = std::move(full);
    return out;
}

namespace detail {

/// Monotone solve of F(x) = target for x on the ray from x0 in direction
/// dir, where F(x0) = 0 and |F| grows along the ray. Returns ±∞ when the
/// target is not reached before F saturates at `limit`.
template <class F>
double solve_on_ray(const F& f, double x0, int dir, double target, double scale, double limit) {
    if (target == 0.0) return x0;
    double inner = x0, outer = x0, step = scale, f_outer = 0.0;
    while (std::abs(f_outer) < std::abs(target)) {
        if (dir > 0 ? outer >= limit : outer <= limit) return dir * kInf;
        inner = outer;
        outer = dir > 0 ? std::min(outer + step, limit) : std::max(outer - step, limit);
        f_outer = f(outer);
        step *= 2.0;
    }
    auto g = [&](double x) { return f(x) - target; };
    const double tol = 1e-14 * std::max(1.0, std::abs(outer));
    return brent_root(g, inner, outer, g(inner), f_outer - target, tol);
}

/// Compact boxcar adjacent to ε0 with current c (empty if c == 0).
inline std::pair<BoxcarSet, double> compact_from_eps0(const ReservoirPair& res, double e0,
                                                      double c) {
    if (c == 0.0) return {BoxcarSet(), e0};
    // Δf > 0 on the right of ε0 exactly when δ_β < 0.
    const int positive_side = res.delta_beta() < 0.0 ? 1 : -1;
    const int dir = c > 0.0 ? positive_side : -positive_side;
    auto f = [&](double x) {
        return dir > 0 ? delta_f_integral(res, e0, x) : delta_f_integral(res, x, e0);
    };
    const auto [lo, hi] = res.window(60.0);
    const double x = solve_on_ray(f, e0, dir, c, 1.0 / res.beta_max(), dir > 0 ? hi : lo);
    return {dir > 0 ? BoxcarSet({{e0, x}}) : BoxcarSet({{x, e0}}), x};
}

}  // namespace detail

struct JExtrema {
    double J_min = 0.0, J_max = 0.0;
    double eps1 = 0.0;         // free endpoint of the J_min boxcar
    BoxcarSet box_min, box_max;
    double var_min = 0.0, var_max = 0.0;  // ∫_B g on each extremal boxcar
};

/// J_min(I) and J_max(I) with their boxcars. I must lie in [I_min, I_max]
/// (up to a relative slack of 1e-12 of the range).
inline JExtrema j_extrema(const ReservoirPair& res, double I) {
    const CurrentBounds cb = current_bounds(res);
    const double slack = 1e-12 * std::max(cb.max.I - cb.min.I, 1e-300);
    if (!std::isfinite(I) || I < cb.min.I - slack || I > cb.max.I + slack)
        throw FeasibilityError("I = " + std::to_string(I) + " outside [I_min, I_max] = [" +
                               std::to_string(cb.min.I) + ", " + std::to_string(cb.max.I) + "]");
    I = std::clamp(I, cb.min.I, cb.max.I);

    JExtrema out;
    if (res.identical()) return out;

    std::pair<BoxcarSet, double> a, b;
    if (auto e0 = epsilon_zero(res)) {
        // A compact box carrying I, and the complement of a compact box
        // carrying δ_μ - I.
        a = detail::compact_from_eps0(res, *e0, I);
        auto c = detail::compact_from_eps0(res, *e0, res.delta_mu() - I);
        b = {c.first.complement(), c.second};
    } else {
        // Sign-definite Δf: the two half-lines carrying I.
        const double full = res.delta_mu();
        const double scale = 1.0 / res.beta_max();
        if (I == 0.0) {
            a = b = {BoxcarSet(), kInf};
        } else if (std::abs(I) >= std::abs(full)) {
            a = b = {BoxcarSet::full_line(), kInf};
        } else {
            // ∫_{-∞}^{ν} Δf = I and ∫_{ν'}^{∞} Δf = I, each solved outward from
            // the far end of the window where the partial integral vanishes.
            const auto [lo, hi] = res.window(60.0);
            auto left = [&](double x) { return delta_f_integral(res, -kInf, x); };
            auto right = [&](double x) { return delta_f_integral(res, x, kInf); };
            const double nu = detail::solve_on_ray(left, lo, 1, I, scale, hi);
            const double nu2 = detail::solve_on_ray(right, hi, -1, I, scale, lo);
            a = {BoxcarSet({{-kInf, nu}}), nu};
            b = {BoxcarSet({{nu2, kInf}}), nu2};
        }
    }
    const BoxcarIntegrals ia = boxcar_integrals(res, a.first);
    const BoxcarIntegrals ib = boxcar_integrals(res, b.first);
    const bool a_is_min = ia.J <= ib.J;
    const auto& lo_box = a_is_min ? a : b;
    const auto& hi_box = a_is_min ? b : a;
    out.J_min = std::min(ia.J, ib.J);
    out.J_max = std::max(ia.J, ib.J);
    out.box_min = lo_box.first;
    out.box_max = hi_box.first;
    out.eps1 = lo_box.second;
    out.var_min = a_is_min ? ia.var : ib.var;
    out.var_max = a_is_min ? ib.var : ia.var;
    return out;
}

}  // namespace thermobox
