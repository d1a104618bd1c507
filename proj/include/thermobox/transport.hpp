#pragma once

// Landauer-Büttiker currents, particle-current variance and the derived
// thermodynamic quantities for an arbitrary transmission.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "thermobox/physics.hpp"
#include "thermobox/quadrature.hpp"
#include "thermobox/transmission.hpp"

namespace thermobox {

struct TransportOptions {
    QuadOptions quad{1e-10, 1e-8, 40000};
    double window_k = 40.0;
    int uniform_panels = 32;
};

struct TransportIntegrals {
    double I = 0.0, J = 0.0, var = 0.0;
    double I_error = 0.0, J_error = 0.0, var_error = 0.0;
};

namespace detail {

/// Bound on ∫|Δf|, ∫|εΔf| and ∫(g + Δf²) outside window(k), using
/// f, 1-f ≤ e^{-|x|} beyond the window.
inline std::array<double, 3> tail_bounds(const ReservoirPair& res, double k) {
    const auto [lo, hi] = res.window(k);
    const double t = std::exp(-k);
    std::array<double, 3> b{};
    for (double beta : {res.beta_l(), res.beta_r()}) {
        const double m = t / beta;
        b[0] += 2.0 * m;
        b[1] += m * (std::abs(lo) + std::abs(hi) + 2.0 / beta);
        b[2] += 2.0 * m;
    }
    b[2] *= 3.0;
    return b;
}

}  // namespace detail

/// I = ∫TΔf, J = ∫TεΔf and Δ_I² = ∫T[g + (1-T)Δf²] by adaptive quadrature
/// over the effective window; error estimates include the tail bound.
inline TransportIntegrals transport_integrals(const Transmission& T, const ReservoirPair& res,
                                              const TransportOptions& opt = {}) {
    TransportIntegrals out;
    if (res.identical() || T.is_zero()) return out;

    const auto [lo, hi] = res.window(opt.window_k);
    std::vector<double> extra = T.breakpoints();
    extra.push_back(res.mu_l());
    extra.push_back(res.mu_r());
    if (auto e0 = epsilon_zero(res)) extra.push_back(*e0);
    for (int k = 1; k < opt.uniform_panels; ++k)
        extra.push_back(lo + (hi - lo) * k / opt.uniform_panels);
    const auto edges = make_edges(lo, hi, std::move(extra));

    auto integrand = [&](double e) {
        const double t = T(e);
        if (t == 0.0) return std::array<double, 3>{0.0, 0.0, 0.0};
        const Occupations o = occupations(res, e);
        const double df = o.delta_f();
        return std::array<double, 3>{t * df, t * e * df, t * (o.g() + (1.0 - t) * df * df)};
    };
    const auto q = integrate_panels<3>(integrand, std::span<const double>(edges), opt.quad);
    const auto tails = detail::tail_bounds(res, opt.window_k);
    out.I = q.value[0];
    out.J = q.value[1];
    out.var = q.value[2];
    out.I_error = q.error[0] + tails[0];
    out.J_error = q.error[1] + tails[1];
    out.var_error = q.error[2] + tails[2];
    return out;
}

/// Particle and energy currents.
inline std::pair<double, double> currents(const Transmission& T, const ReservoirPair& res,
                                          const TransportOptions& opt = {}) {
    const auto r = transport_integrals(T, res, opt);
    return {r.I, r.J};
}

/// Particle-current variance Δ_I².
inline double variance(const Transmission& T, const ReservoirPair& res,
                       const TransportOptions& opt = {}) {
    return transport_integrals(T, res, opt).var;
}

struct TransportSummary {
    double I = 0.0, J = 0.0, var_I = 0.0;
    double sigma = 0.0;  // entropy production rate
    double P = 0.0;      // output power
    double J_Q_L = 0.0, J_Q_R = 0.0;
    std::optional<double> eta_eff;  // engine regime only
    std::optional<double> fano;
    std::optional<double> tur_ratio;
    double I_error = 0.0, J_error = 0.0, var_error = 0.0;
};

/// Derived quantities from (I, J, Δ_I²). I is treated as zero when
/// |I| ≤ i_tol.
inline TransportSummary summarize(const ReservoirPair& res, double I, double J, double var,
                                  double i_tol) {
    TransportSummary s;
    s.I = I;
    s.J = J;
    s.var_I = var;
    s.sigma = -res.delta_beta() * J + res.delta_beta_mu() * I;
    s.P = -res.delta_mu() * I;
    s.J_Q_L = J - res.mu_l() * I;
    s.J_Q_R = J - res.mu_r() * I;
    if (s.P > 0.0 && s.J_Q_L > 0.0 && s.J_Q_R > 0.0) s.eta_eff = s.P / s.J_Q_L;
    if (std::abs(I) > i_tol) {
        s.fano = var / std::abs(I);
        s.tur_ratio = var * s.sigma / (I * I);
    }
    return s;
}

inline TransportSummary summary(const Transmission& T, const ReservoirPair& res,
                                const TransportOptions& opt = {}) {
    const auto r = transport_integrals(T, res, opt);
    const double i_tol = std::max({r.I_error, opt.quad.abs_tol, 1e-14});
    TransportSummary s = summarize(res, r.I, r.J, r.var, i_tol);
    s.I_error = r.I_error;
    s.J_error = r.J_error;
    s.var_error = r.var_error;
    return s;
}

}  // namespace thermobox
