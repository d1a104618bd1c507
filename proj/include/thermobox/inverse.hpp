#pragma once

// Inverse map (I, J) -> (η, λ): the multipliers whose boxcar reproduces the
// target currents, and with it the minimal variance Δ²_opt(I, J).

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/region_bounds.hpp"
#include "thermobox/roots.hpp"

namespace thermobox {

struct InverseOptions {
    double tol = 1e-8;                 // relative tolerance on the currents
    double boundary_nudge = 1e-9;      // inward shift for boundary targets
    int max_newton = 40;
    int max_bracket_doublings = 80;
    std::optional<Multipliers> warm_start;  // try Newton from here first
    BoxcarOptions forward{};
};

struct OptimalSolution {
    Multipliers multipliers;
    BoxcarSet boxcar;
    double I = 0.0, J = 0.0;
    double var_opt = 0.0;
    double residual_norm = 0.0;  // max(|I - I_target|, |J - J_target|)
};

struct FeasibleTarget {
    double I, J;
    CurrentBounds bounds;
    JExtrema extrema;
};

/// Checks (I, J) against the region and nudges boundary targets inward.
inline FeasibleTarget check_feasible(const ReservoirPair& res, double I, double J,
                                     double nudge = 1e-9) {
    if (!std::isfinite(I) || !std::isfinite(J)) throw FeasibilityError("target must be finite");
    FeasibleTarget t{I, J, current_bounds(res), {}};
    const double i_range = t.bounds.max.I - t.bounds.min.I;
    const double i_slack = nudge * std::max(i_range, 1e-300);
    if (I < t.bounds.min.I - i_slack)
        throw FeasibilityError("I below I_min: I = " + std::to_string(I) +
                               ", I_min = " + std::to_string(t.bounds.min.I));
    if (I > t.bounds.max.I + i_slack)
        throw FeasibilityError("I above I_max: I = " + std::to_string(I) +
                               ", I_max = " + std::to_string(t.bounds.max.I));
    t.I = std::clamp(I, t.bounds.min.I + i_slack, t.bounds.max.I - i_slack);
    if (res.identical()) {
        t.I = 0.0;
        if (J != 0.0) throw FeasibilityError("identical reservoirs: only (0, 0) is attainable");
        return t;
    }
    t.extrema = j_extrema(res, t.I);
    const double j_range = t.extrema.J_max - t.extrema.J_min;
    const double j_slack = nudge * std::max({j_range, std::abs(J), 1e-300});
    if (J < t.extrema.J_min - j_slack)
        throw FeasibilityError("J below J_min(I): J = " + std::to_string(J) +
                               ", J_min = " + std::to_string(t.extrema.J_min));
    if (J > t.extrema.J_max + j_slack)
        throw FeasibilityError("J above J_max(I): J = " + std::to_string(J) +
                               ", J_max = " + std::to_string(t.extrema.J_max));
    t.J = std::clamp(J, t.extrema.J_min + j_slack, t.extrema.J_max - j_slack);
    return t;
}

namespace detail {

struct ForwardPoint {
    Multipliers m;
    BoxcarSet box;
    BoxcarIntegrals ints;
};

inline constexpr double kTinyStep = 1e-280;

class InverseSolver {
public:
    InverseSolver(const ReservoirPair& res, const FeasibleTarget& t, const InverseOptions& opt)
        : res_(res), t_(t), opt_(opt) {
        tol_I_ = opt.tol * std::max(std::abs(t.I), t.bounds.max.I - t.bounds.min.I);
        // J is measured against the current range times the thermal energy.
        const double j_scale = (t.bounds.max.I - t.bounds.min.I) / res.beta_min();
        tol_J_ = opt.tol * std::max({std::abs(t.J), t.extrema.J_max - t.extrema.J_min, j_scale});
        if (!(tol_I_ > 0.0)) tol_I_ = opt.tol;
        if (!(tol_J_ > 0.0)) tol_J_ = opt.tol;
        scale_ = std::max({res.beta_l(), res.beta_r(), res.beta_l() * std::abs(res.mu_l()),
                           res.beta_r() * std::abs(res.mu_r()), 1.0});
    }

    OptimalSolution solve() {
        if (opt_.warm_start) {
            if (auto s = newton(evaluate(*opt_.warm_start))) return *s;
        }
        ForwardPoint p;
        try {
            p = nested();
        } catch (const ConvergenceError& e) {
            if (auto s = boundary_fallback(p)) return *s;
            throw;
        }
        if (auto s = newton(p)) return *s;
        if (converged(p)) return finish(p);
        if (auto s = boundary_fallback(p)) return *s;
        throw ConvergenceError("solve_multipliers: did not reach tolerance", residual(p));
    }

private:
    ForwardPoint evaluate(const Multipliers& m) const {
        ForwardPoint p{m, solve_boxcar(res_, m, opt_.forward), {}};
        p.ints = boxcar_integrals(res_, p.box);
        return p;
    }

    double residual(const ForwardPoint& p) const {
        return std::max(std::abs(p.ints.I - t_.I), std::abs(p.ints.J - t_.J));
    }
    double scaled_residual(const ForwardPoint& p) const {
        return std::max(std::abs(p.ints.I - t_.I) / tol_I_, std::abs(p.ints.J - t_.J) / tol_J_);
    }
    bool converged(const ForwardPoint& p) const { return scaled_residual(p) <= 1.0; }

    OptimalSolution finish(const ForwardPoint& p) const {
        return {p.m, p.box, p.ints.I, p.ints.J, p.ints.var, residual(p)};
    }

    /// Targets within tolerance of the boundary are met by the extremal
    /// boxcar itself; the multipliers diverge there, so the last finite
    /// iterate is reported alongside it.
    std::optional<OptimalSolution> boundary_fallback(const ForwardPoint& last) const {
        for (const BoxcarSet* box : {&t_.extrema.box_min, &t_.extrema.box_max}) {
            ForwardPoint q{last.m, *box, boxcar_integrals(res_, *box)};
            if (converged(q)) return finish(q);
        }
        return std::nullopt;
    }

    /// Damped Newton on (I, J) in the variables (η, λ).
    std::optional<OptimalSolution> newton(ForwardPoint p) const {
        for (int it = 0; it < opt_.max_newton; ++it) {
            if (converged(p)) return finish(p);
            MultiplierJacobian jac;
            try {
                jac = multiplier_jacobian(res_, p.m, p.box);
            } catch (const NearBifurcationError&) {
                return std::nullopt;
            }
            const double det = jac.determinant();
            if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return std::nullopt;
            const double rI = t_.I - p.ints.I, rJ = t_.J - p.ints.J;
            const double d_eta = (jac.dJ_dlambda * rI - jac.dI_dlambda * rJ) / det;
            const double d_lambda = (jac.dI_deta * rJ - jac.dJ_deta * rI) / det;
            const double r0 = scaled_residual(p);
            bool improved = false;
            for (double damp = 1.0; damp > 1e-4; damp *= 0.5) {
                const Multipliers m{p.m.lambda + damp * d_lambda, p.m.eta + damp * d_eta};
                if (!std::isfinite(m.lambda) || !std::isfinite(m.eta)) continue;
                ForwardPoint q = evaluate(m);
                if (scaled_residual(q) < r0) {
                    p = std::move(q);
                    improved = true;
                    break;
                }
            }
            if (!improved) return converged(p) ? std::optional(finish(p)) : std::nullopt;
        }
        return converged(p) ? std::optional(finish(p)) : std::nullopt;
    }

    /// η(λ) with I(λ, η) = I_target; I is nondecreasing in η.
    ForwardPoint inner(double lambda, double eta_guess) const {
        auto f = [&](double eta) { return evaluate({lambda, eta}).ints.I - t_.I; };
        double step = std::max(scale_, std::abs(lambda) * 4.0 * scale_ / res_.beta_min());
        double a = eta_guess - step, b = eta_guess + step;
        double fa = f(a), fb = f(b);
        for (int k = 0; k < opt_.max_bracket_doublings && fa > 0.0; ++k) {
            b = a;
            fb = fa;
            step *= 2.0;
            a -= step;
            fa = f(a);
        }
        for (int k = 0; k < opt_.max_bracket_doublings && fb < 0.0; ++k) {
            a = b;
            fa = fb;
            step *= 2.0;
            b += step;
            fb = f(b);
        }
        if (fa > 0.0 || fb < 0.0)
            throw ConvergenceError("solve_multipliers: could not bracket eta for I", std::min(std::abs(fa), std::abs(fb)));
        // Brent's own 2ε|η| floor sets the x resolution; roots can sit many
        // decades below the bracket width.
        const double eta = brent_root(f, a, b, fa, fb, kTinyStep, 0.05 * tol_I_, 1200);
        return evaluate({lambda, eta});
    }

    /// Outer solve of J(λ, η(λ)) = J_target; J is nondecreasing in λ along
    /// the constant-I curve.
    ForwardPoint nested() const {
        double last_eta = 0.0;
        ForwardPoint best;
        double best_r = kInf;
        auto track = [&](const ForwardPoint& p) {
            last_eta = p.m.eta;
            const double r = scaled_residual(p);
            if (r < best_r) {
                best_r = r;
                best = p;
            }
        };
        auto g = [&](double lambda) {
            ForwardPoint p = inner(lambda, last_eta);
            track(p);
            return p.ints.J - t_.J;
        };
        double step = scale_;
        double a = -step, b = step;
        double ga = g(a), gb = g(b);
        for (int k = 0; k < opt_.max_bracket_doublings && ga > 0.0; ++k) {
            b = a;
            gb = ga;
            step *= 2.0;
            a -= step;
            ga = g(a);
        }
        for (int k = 0; k < opt_.max_bracket_doublings && gb < 0.0; ++k) {
            a = b;
            ga = gb;
            step *= 2.0;
            b += step;
            gb = g(b);
        }
        if (ga > 0.0 || gb < 0.0)
            throw ConvergenceError("solve_multipliers: could not bracket lambda for J", best_r);
        try {
            brent_root(g, a, b, ga, gb, kTinyStep, 0.05 * tol_J_, 1200);
        } catch (const ConvergenceError&) {
            // best iterate is still returned
        }
        return best;
    }

    const ReservoirPair& res_;
    const FeasibleTarget& t_;
    const InverseOptions& opt_;
    double tol_I_ = 0.0, tol_J_ = 0.0, scale_ = 1.0;
};

}  // namespace detail

/// Multipliers (η, λ) whose boxcar reproduces the target currents.
inline OptimalSolution solve_multipliers(const ReservoirPair& res, double I_target,
                                         double J_target, const InverseOptions& opt = {}) {
    if (I_target == 0.0 && J_target == 0.0) {
        check_feasible(res, 0.0, 0.0, opt.boundary_nudge);
        return {};
    }
    const FeasibleTarget t = check_feasible(res, I_target, J_target, opt.boundary_nudge);
    OptimalSolution s = detail::InverseSolver(res, t, opt).solve();
    s.residual_norm = std::max(std::abs(s.I - I_target), std::abs(s.J - J_target));
    return s;
}

/// Minimal particle-current variance at fixed (I, J).
inline double optimal_variance(const ReservoirPair& res, double I, double J,
                               const InverseOptions& opt = {}) {
    return solve_multipliers(res, I, J, opt).var_opt;
}

}  // namespace thermobox
