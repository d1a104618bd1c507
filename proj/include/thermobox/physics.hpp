#pragma once

// Two-reservoir Fermi statistics and the pointwise fields built from them.
// Natural units throughout: k_B = hbar = e = 1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "thermobox/errors.hpp"

namespace thermobox {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Left/right fermionic baths, stored as inverse temperatures.
class ReservoirPair {
public:
    ReservoirPair(double beta_l, double beta_r, double mu_l, double mu_r)
        : beta_l_(beta_l), beta_r_(beta_r), mu_l_(mu_l), mu_r_(mu_r) {
        if (!(beta_l > 0.0) || !(beta_r > 0.0) || !std::isfinite(beta_l) ||
            !std::isfinite(beta_r))
            throw DomainError("inverse temperatures must be finite and positive");
        if (!std::isfinite(mu_l) || !std::isfinite(mu_r))
            throw DomainError("chemical potentials must be finite");
    }

    static ReservoirPair from_temperatures(double t_l, double t_r, double mu_l, double mu_r) {
        if (!(t_l > 0.0) || !(t_r > 0.0))
            throw DomainError("temperatures must be positive");
        return {1.0 / t_l, 1.0 / t_r, mu_l, mu_r};
    }

    double beta_l() const noexcept { return beta_l_; }
    double beta_r() const noexcept { return beta_r_; }
    double mu_l() const noexcept { return mu_l_; }
    double mu_r() const noexcept { return mu_r_; }

    double delta_beta() const noexcept { return beta_l_ - beta_r_; }
    double delta_beta_mu() const noexcept { return beta_l_ * mu_l_ - beta_r_ * mu_r_; }
    double delta_mu() const noexcept { return mu_l_ - mu_r_; }

    bool identical() const noexcept { return beta_l_ == beta_r_ && mu_l_ == mu_r_; }
    double beta_max() const noexcept { return std::max(beta_l_, beta_r_); }
    double beta_min() const noexcept { return std::min(beta_l_, beta_r_); }

    /// Energy window [lo, hi] outside which every Fermi tail is below
    /// exp(-k).
    std::pair<double, double> window(double k = 40.0) const noexcept {
        return {std::min(mu_l_ - k / beta_l_, mu_r_ - k / beta_r_),
                std::max(mu_l_ + k / beta_l_, mu_r_ + k / beta_r_)};
    }

private:
    double beta_l_, beta_r_, mu_l_, mu_r_;
};

namespace detail {

/// 1/(e^x + 1) without overflow.
inline double logistic(double x) noexcept {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

/// log(1 + e^y) without overflow.
inline double softplus(double y) noexcept {
    return std::max(y, 0.0) + std::log1p(std::exp(-std::abs(y)));
}

/// Reduced energy β(ε-μ), with the infinities handled explicitly.
inline double reduced(double beta, double mu, double eps) noexcept {
    if (std::isinf(eps)) return eps;
    return beta * (eps - mu);
}

}  // namespace detail

/// Fermi-Dirac occupation 1/(e^{β(ε-μ)}+1).
inline double fermi(double beta, double mu, double eps) {
    if (!(beta > 0.0)) throw DomainError("fermi: beta must be positive");
    return detail::logistic(detail::reduced(beta, mu, eps));
}

/// Antiderivative of fermi in ε, -(1/β) ln(1 + e^{-β(ε-μ)}).
inline double fermi_antiderivative(double beta, double mu, double eps) {
    if (!(beta > 0.0)) throw DomainError("fermi_antiderivative: beta must be positive");
    return -detail::softplus(-detail::reduced(beta, mu, eps)) / beta;
}

/// Occupations of both baths at one energy, with complements computed
/// directly so that 1-f keeps full relative precision.
struct Occupations {
    double f_l, f_r;  // occupations
    double c_l, c_r;  // 1 - occupations

    double delta_f() const noexcept {
        // Pick the form without cancellation against 1.
        return (f_l + f_r <= 1.0) ? f_l - f_r : c_r - c_l;
    }
    double g() const noexcept { return f_l * c_l + f_r * c_r; }
};

namespace detail {

/// (f, 1-f) at reduced energy x from a single exponential.
inline std::pair<double, double> fermi_pair(double x) noexcept {
    if (std::isinf(x)) return x > 0.0 ? std::pair{0.0, 1.0} : std::pair{1.0, 0.0};
    const double e = std::exp(-std::abs(x));
    const double small = e / (1.0 + e);
    const double large = 1.0 / (1.0 + e);
    return x >= 0.0 ? std::pair{small, large} : std::pair{large, small};
}

}  // namespace detail

inline Occupations occupations(const ReservoirPair& res, double eps) noexcept {
    const auto [f_l, c_l] = detail::fermi_pair(detail::reduced(res.beta_l(), res.mu_l(), eps));
    const auto [f_r, c_r] = detail::fermi_pair(detail::reduced(res.beta_r(), res.mu_r(), eps));
    return {f_l, f_r, c_l, c_r};
}

/// Δf(ε) = f_L(ε) - f_R(ε).
inline double delta_f(const ReservoirPair& res, double eps) noexcept {
    return occupations(res, eps).delta_f();
}

/// g(ε) = f_L(1-f_L) + f_R(1-f_R), the equilibrium-noise weight.
inline double g_noise(const ReservoirPair& res, double eps) noexcept {
    return occupations(res, eps).g();
}

/// The unique zero of Δf, δ_{βμ}/δ_β; absent at equal temperatures.
inline std::optional<double> epsilon_zero(const ReservoirPair& res) noexcept {
    if (res.delta_beta() == 0.0) return std::nullopt;
    return res.delta_beta_mu() / res.delta_beta();
}

/// Exact ∫_a^b Δf dε from the Fermi antiderivatives. Endpoints may be
/// infinite; the -∞ limit telescopes to μ_R - μ_L without cancellation.
inline double delta_f_integral(const ReservoirPair& res, double a, double b) noexcept {
    // F_L(ε) - F_R(ε) = -max(μ_L-ε,0) + max(μ_R-ε,0) + (tails of log1p)
    auto primitive = [&res](double eps) {
        double ramp;
        if (eps <= std::min(res.mu_l(), res.mu_r()))
            ramp = res.mu_r() - res.mu_l();
        else
            ramp = -std::max(res.mu_l() - eps, 0.0) + std::max(res.mu_r() - eps, 0.0);
        const double x_l = detail::reduced(res.beta_l(), res.mu_l(), eps);
        const double x_r = detail::reduced(res.beta_r(), res.mu_r(), eps);
        const double t_l = std::isinf(x_l) ? 0.0 : std::log1p(std::exp(-std::abs(x_l)));
        const double t_r = std::isinf(x_r) ? 0.0 : std::log1p(std::exp(-std::abs(x_r)));
        return ramp - t_l / res.beta_l() + t_r / res.beta_r();
    };
    if (a == b) return 0.0;
    return primitive(b) - primitive(a);
}

/// Exact ∫_a^b g dε, using d f/dε = -β f(1-f).
inline double g_integral(const ReservoirPair& res, double a, double b) noexcept {
    if (a == b) return 0.0;
    const Occupations oa = occupations(res, a);
    const Occupations ob = occupations(res, b);
    // f(a) - f(b) == (1-f(b)) - (1-f(a)); use whichever side is small.
    auto diff = [](double fa, double fb, double ca, double cb) {
        return (fa + fb <= 1.0) ? fa - fb : cb - ca;
    };
    return diff(oa.f_l, ob.f_l, oa.c_l, ob.c_l) / res.beta_l() +
           diff(oa.f_r, ob.f_r, oa.c_r, ob.c_r) / res.beta_r();
}

namespace detail {

/// h = Δf/g given the reduced energies; log-domain in both tails so that
/// it stays finite (and accurate) where g itself underflows.
inline double h_ratio(const ReservoirPair& res, double eps, double x_l, double x_r) noexcept {
    // x_L - x_R in the cancellation-free form δ_β ε - δ_{βμ}.
    const double dx = res.delta_beta() * eps - res.delta_beta_mu();
    if (x_l >= 0.0 && x_r >= 0.0) {
        // Right tail: f_i = e^{-x_i}/(1+e^{-x_i}).
        const double p_l = std::log1p(std::exp(-x_l));
        const double p_r = std::log1p(std::exp(-x_r));
        const double d = dx + p_l - p_r;  // ln f_R - ln f_L
        if (d <= 0.0) return -std::expm1(d) / (std::exp(-p_l) + std::exp(d - p_r));
        return std::expm1(-d) / (std::exp(-d - p_l) + std::exp(-p_r));
    }
    if (x_l <= 0.0 && x_r <= 0.0) {
        // Left tail: 1-f_i = e^{x_i}/(1+e^{x_i}), Δf = (1-f_R) - (1-f_L).
        const double p_l = std::log1p(std::exp(x_l));
        const double p_r = std::log1p(std::exp(x_r));
        const double d = dx - p_l + p_r;  // ln(1-f_L) - ln(1-f_R)
        if (d <= 0.0) return -std::expm1(d) / (std::exp(-p_r) + std::exp(d - p_l));
        return std::expm1(-d) / (std::exp(-d - p_r) + std::exp(-p_l));
    }
    const auto [f_l, c_l] = fermi_pair(x_l);
    const auto [f_r, c_r] = fermi_pair(x_r);
    const double df = (f_l + f_r <= 1.0) ? f_l - f_r : c_r - c_l;
    return df / (f_l * c_l + f_r * c_r);
}

}  // namespace detail

/// Local quantities of the ratio h = Δf/g, valid from the centre of the
/// window out to arbitrarily large |ε| (log-domain tails).
struct RatioState {
    double h;       // Δf / g
    double w_l;     // g_L / g
    double w_r;     // g_R / g
    double tanh_l;  // 1 - 2 f_L
    double tanh_r;  // 1 - 2 f_R
    double log_g;   // ln g

    /// d h / d ε.
    double dh(const ReservoirPair& res) const noexcept {
        const double dfp_over_g = -res.beta_l() * w_l + res.beta_r() * w_r;
        const double gp_over_g = -res.beta_l() * w_l * tanh_l - res.beta_r() * w_r * tanh_r;
        return dfp_over_g - h * gp_over_g;
    }
};

inline RatioState ratio_state(const ReservoirPair& res, double eps) noexcept {
    const double x_l = res.beta_l() * (eps - res.mu_l());
    const double x_r = res.beta_r() * (eps - res.mu_r());
    // ln f(1-f) = -|x| - 2 ln(1 + e^{-|x|})
    const double lg_l = -std::abs(x_l) - 2.0 * std::log1p(std::exp(-std::abs(x_l)));
    const double lg_r = -std::abs(x_r) - 2.0 * std::log1p(std::exp(-std::abs(x_r)));
    const double lmax = std::max(lg_l, lg_r);
    const double s_l = std::exp(lg_l - lmax);
    const double s_r = std::exp(lg_r - lmax);
    RatioState st{};
    st.w_l = s_l / (s_l + s_r);
    st.w_r = s_r / (s_l + s_r);
    st.tanh_l = std::tanh(0.5 * x_l);
    st.tanh_r = std::tanh(0.5 * x_r);
    st.log_g = lmax + std::log(s_l + s_r);

    st.h = detail::h_ratio(res, eps, x_l, x_r);
    return st;
}

/// Δf/g, finite everywhere (zero at ε0).
inline double inverse_g_ratio(const ReservoirPair& res, double eps) noexcept {
    return detail::h_ratio(res, eps, res.beta_l() * (eps - res.mu_l()),
                           res.beta_r() * (eps - res.mu_r()));
}

/// 𝒢(ε) = g(ε)/Δf(ε).
inline double g_ratio(const ReservoirPair& res, double eps) {
    if (res.identical()) throw SingularityError("g_ratio: identical reservoirs, Δf ≡ 0");
    const double h = inverse_g_ratio(res, eps);
    if (h == 0.0) throw SingularityError("g_ratio: Δf vanishes at this energy (ε0)");
    return 1.0 / h;
}

/// Tail limits of 𝒢 at -∞ and +∞, from the dominant exponentials.
inline std::pair<double, double> g_ratio_limits(const ReservoirPair& res) {
    if (res.identical()) throw SingularityError("g_ratio_limits: identical reservoirs");
    const double db = res.delta_beta();
    if (db < 0.0) return {-1.0, 1.0};  // hot left bath dominates both tails
    if (db > 0.0) return {1.0, -1.0};
    if (res.delta_mu() == 0.0) throw SingularityError("g_ratio_limits: Δf ≡ 0");
    const double c = 1.0 / std::tanh(0.5 * res.beta_l() * res.delta_mu());
    return {c, c};
}

}  // namespace thermobox
