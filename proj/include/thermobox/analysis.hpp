#pragma once

// Physical-model comparisons: the double quantum dot against the optimal
// boxcar at equal temperatures, the symmetric-boxcar closed forms, and the
// linear-response TUR bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/inverse.hpp"
#include "thermobox/parallel.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/quadrature.hpp"
#include "thermobox/roots.hpp"
#include "thermobox/transmission.hpp"
#include "thermobox/transport.hpp"

namespace thermobox {

/// Resonant double quantum dot, Γ²Ω²/|(ε - ω + iΓ/2)² - Ω²|².
inline Transmission dqd_transmission(double gamma, double omega_c, double omega) {
    return ClosedFormModel::double_dot(gamma, omega_c, omega);
}

/// Equal temperatures with μ_R = -μ_L = dmu/2. The reservoir δ_μ = μ_L - μ_R
/// is therefore -dmu; dmu is the bias magnitude on the sweep axis.
inline ReservoirPair symmetric_bias(double beta, double dmu) {
    return ReservoirPair(beta, beta, -0.5 * dmu, 0.5 * dmu);
}

struct FanoRow {
    double dmu = 0.0;
    double I = 0.0, J = 0.0;
    double var_model = 0.0;
    double fano_model_scaled = 0.0;  // Δ²/|I| · β·dmu
    double var_opt = 0.0;
    double fano_opt_scaled = 0.0;
};

struct FanoSweepOptions {
    TransportOptions transport{};
    InverseOptions inverse{};
    unsigned threads = 0;
};

/// 0.05, 0.10, ..., 1 followed by 30 geometric steps up to 40.
inline std::vector<double> default_dmu_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 20; ++k) g.push_back(0.05 * k);
    for (int k = 1; k <= 30; ++k) g.push_back(std::pow(40.0, k / 30.0));
    return g;
}

/// Model and optimal Fano factors along a bias sweep. Rows with dmu = 0
/// carry no current and are omitted; the rest keep grid order.
inline std::vector<FanoRow> fano_sweep(double gamma, double omega_c, double omega, double beta,
                                       std::span<const double> dmu_grid,
                                       const FanoSweepOptions& opt = {}) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("fano_sweep: beta must be positive");
    const Transmission T = dqd_transmission(gamma, omega_c, omega);
    std::vector<double> grid;
    for (double d : dmu_grid) {
        if (!std::isfinite(d)) throw DomainError("fano_sweep: bias values must be finite");
        if (d != 0.0) grid.push_back(d);
    }
    std::vector<FanoRow> rows(grid.size());
    parallel_for(
        grid.size(),
        [&](std::size_t i) {
            const double dmu = grid[i];
            const ReservoirPair res = symmetric_bias(beta, dmu);
            const auto s = summary(T, res, opt.transport);
            FanoRow& row = rows[i];
            row.dmu = dmu;
            row.I = s.I;
            row.J = s.J;
            row.var_model = s.var_I;
            const double scale = beta * std::abs(dmu) / std::abs(s.I);
            row.fano_model_scaled = s.var_I * scale;
            row.var_opt = optimal_variance(res, s.I, s.J, opt.inverse);
            row.fano_opt_scaled = row.var_opt * scale;
        },
        opt.threads);
    return rows;
}

/// Width a of the boxcar [-a/2, a/2] carrying I_target at equal
/// temperatures and μ_R = -μ_L = dmu/2. Returns +∞ for the full-line current.
inline double symmetric_boxcar_width(double beta, double dmu, double I_target) {
    if (!(beta > 0.0) || !std::isfinite(dmu) || dmu == 0.0)
        throw DomainError("symmetric_boxcar_width: need beta > 0 and dmu != 0");
    const ReservoirPair res = symmetric_bias(beta, dmu);
    if (I_target == 0.0) return 0.0;
    const double full = delta_f_integral(res, -kInf, kInf);  // = -dmu
    const double rel = I_target / full;
    if (!(rel > 0.0) || rel > 1.0 + 1e-14)
        throw FeasibilityError("symmetric_boxcar_width: |I| must not exceed " +
                               std::to_string(std::abs(full)) + " and must share its sign");
    if (rel >= 1.0) return kInf;
    auto f = [&](double a) { return delta_f_integral(res, -0.5 * a, 0.5 * a) / full - rel; };
    double hi = std::abs(dmu) + 2.0 / beta;
    for (int k = 0; f(hi) < 0.0; ++k) {
        if (k > 200) return kInf;
        hi *= 2.0;
    }
    return brent_root(f, 0.0, hi, f(0.0), f(hi), 1e-15 * hi, 0.0, 400);
}

struct SymmetricFano {
    double F_opt = 0.0;         // from the closed form in the reading that matched
    double F_direct = 0.0;      // Δ²/|I| from the boxcar integrals
    std::string reading;        // "quotient", "product" or "none"
    double mismatch = 0.0;      // relative difference of the chosen reading
    bool matched = false;       // mismatch <= 1e-6
};

/// Optimal Fano factor of the boxcar [-a/2, a/2]. The closed form
/// 2(1 - f_L - f_R)/ln[...] with f at a/2 is printed ambiguously; both
/// readings of the logarithm are tried against the direct integrals.
inline SymmetricFano fano_opt_symmetric(double beta, double dmu, double a) {
    if (!(beta > 0.0) || !(dmu > 0.0) || !std::isfinite(dmu))
        throw DomainError("fano_opt_symmetric: need beta > 0 and dmu > 0");
    if (!(a >= 0.0)) throw DomainError("fano_opt_symmetric: width must be non-negative");
    const ReservoirPair res = symmetric_bias(beta, dmu);
    SymmetricFano out;
    if (a == 0.0) {
        out.F_direct = g_noise(res, 0.0) / std::abs(delta_f(res, 0.0));
        out.F_opt = out.F_direct;
        out.reading = "limit";
        out.matched = true;
        return out;
    }
    const double I = delta_f_integral(res, -0.5 * a, 0.5 * a);
    const double var = g_integral(res, -0.5 * a, 0.5 * a);
    out.F_direct = var / std::abs(I);

    const Occupations o = occupations(res, 0.5 * a);
    const double num = 2.0 * (o.c_l - o.f_r);  // 1 - f_L - f_R
    const double wl = o.f_l * o.c_l, wr = o.f_r * o.c_r;
    const std::array<std::pair<const char*, double>, 2> readings{
        std::pair{"quotient", num / (std::log(wr) - std::log(wl))},
        std::pair{"product", num / (std::log(wr) + std::log(wl))}};
    out.reading = "none";
    out.mismatch = kInf;
    for (const auto& [name, value] : readings) {
        const double m = std::abs(value - out.F_direct) / std::abs(out.F_direct);
        if (m < out.mismatch) {
            out.mismatch = m;
            out.F_opt = value;
            out.reading = name;
        }
    }
    out.matched = out.mismatch <= 1e-6;
    if (!out.matched) out.reading = "none";
    return out;
}

/// Mean inverse temperature β and potential μ with gradients:
/// β_L,R = β ∓ d_beta/2 and β_L,R μ_L,R = βμ ∓ d_beta_mu/2.
struct LinearResponseFrame {
    double beta = 1.0;
    double mu = 0.0;
    double d_beta = 0.0;
    double d_beta_mu = 0.0;

    double beta_l() const noexcept { return beta - 0.5 * d_beta; }
    double beta_r() const noexcept { return beta + 0.5 * d_beta; }

    void validate() const {
        if (!std::isfinite(beta) || !std::isfinite(mu) || !std::isfinite(d_beta) ||
            !std::isfinite(d_beta_mu))
            throw DomainError("linear frame: all fields must be finite");
        if (!(beta_l() > 0.0) || !(beta_r() > 0.0))
            throw DomainError("linear frame: beta -/+ d_beta/2 must both be positive");
    }

    ReservoirPair reservoirs() const {
        validate();
        const double bl = beta_l(), br = beta_r();
        return {bl, br, (beta * mu - 0.5 * d_beta_mu) / bl, (beta * mu + 0.5 * d_beta_mu) / br};
    }

    /// f(1 - f) of the mean distribution.
    double weight(double eps) const noexcept {
        const double f = detail::logistic(beta * (eps - mu));
        return f * (1.0 - f);
    }
};

struct ThetaMoments {
    double theta0 = 0.0, theta1 = 0.0, theta2 = 0.0;
};

/// θ_n = ∫_B ε^n f(1 - f) dε. θ0 is exact; θ1, θ2 use quadrature with
/// infinite ends clipped where f(1 - f) < e^{-60}.
inline ThetaMoments theta_moments(const LinearResponseFrame& frame, const BoxcarSet& box) {
    frame.validate();
    ThetaMoments t;
    const double lo = frame.mu - 60.0 / frame.beta, hi = frame.mu + 60.0 / frame.beta;
    auto f = [&](double e) { return detail::logistic(frame.beta * (e - frame.mu)); };
    for (const auto& iv : box.intervals()) {
        // ∫ f(1 - f) = -(f(b) - f(a))/β
        t.theta0 += (f(iv.a) - f(iv.b)) / frame.beta;
        const double a = std::max(iv.a, lo), b = std::min(iv.b, hi);
        if (!(b > a)) continue;
        std::vector<double> extra{frame.mu};
        const int pieces = std::clamp(static_cast<int>((b - a) * frame.beta / 4.0), 1, 64);
        for (int k = 1; k < pieces; ++k) extra.push_back(a + (b - a) * k / pieces);
        const auto edges = make_edges(a, b, std::move(extra));
        const auto r = integrate_panels<2>(
            [&frame](double e) {
                const double w = frame.weight(e);
                return std::array<double, 2>{e * w, e * e * w};
            },
            std::span<const double>(edges), QuadOptions{1e-13, 1e-12, 20000});
        t.theta1 += r.value[0];
        t.theta2 += r.value[1];
    }
    return t;
}

struct LinearTurBound {
    double ratio = 0.0;  // Δ²σ/I² = 2 + 2 d_beta² (θ0θ2 - θ1²)/I²
    double I = 0.0, J = 0.0;
    double var = 0.0;    // 2θ0
    double sigma = 0.0;
    ThetaMoments theta;
};

/// Linear-response currents, variance and TUR ratio of a boxcar.
/// σ is written with the affinities of the reservoirs the frame describes
/// (β_L - β_R = -d_beta, β_Lμ_L - β_Rμ_R = -d_beta_mu), so σ ≥ 0.
inline LinearTurBound linear_tur_bound(const LinearResponseFrame& frame, const BoxcarSet& box) {
    LinearTurBound out;
    out.theta = theta_moments(frame, box);
    const auto& t = out.theta;
    out.I = frame.d_beta * t.theta1 - frame.d_beta_mu * t.theta0;
    out.J = frame.d_beta * t.theta2 - frame.d_beta_mu * t.theta1;
    out.var = 2.0 * t.theta0;
    out.sigma = frame.d_beta * out.J - frame.d_beta_mu * out.I;
    const double scale =
        std::abs(frame.d_beta * t.theta1) + std::abs(frame.d_beta_mu * t.theta0);
    if (!(std::abs(out.I) > 1e-12 * scale) || out.I == 0.0)
        throw SingularityError("linear_tur_bound: linear current vanishes, ratio undefined");
    out.ratio = 2.0 + 2.0 * frame.d_beta * frame.d_beta * (t.theta0 * t.theta2 - t.theta1 * t.theta1) /
                          (out.I * out.I);
    return out;
}

}  // namespace thermobox
