#pragma once

// Optimal boxcar transmissions: the forward map from Lagrange multipliers
// (λ, η) to the set {ε : g(ε) < (λε + η) Δf(ε)}, exact integrals over a
// boxcar, and the derivatives of (I, J) with respect to the multipliers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "thermobox/errors.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/quadrature.hpp"
#include "thermobox/roots.hpp"

namespace thermobox {

struct Interval {
    double a;
    double b;
    bool operator==(const Interval&) const = default;
};

/// Ordered union of disjoint closed intervals; a_1 may be -∞, b_N may be +∞.
class BoxcarSet {
public:
    BoxcarSet() = default;
    explicit BoxcarSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
        for (std::size_t k = 0; k < intervals_.size(); ++k) {
            const auto& iv = intervals_[k];
            if (std::isnan(iv.a) || std::isnan(iv.b))
                throw DomainError("boxcar endpoint is NaN");
            if (!(iv.b > iv.a)) throw DomainError("boxcar interval must satisfy b > a");
            if (iv.b == -kInf || iv.a == kInf)
                throw DomainError("boxcar interval is empty at infinity");
            if (k > 0 && !(iv.a > intervals_[k - 1].b))
                throw DomainError("boxcar intervals must be disjoint and increasing");
            if (k > 0 && iv.a == -kInf) throw DomainError("only the first interval may start at -inf");
            if (k + 1 < intervals_.size() && iv.b == kInf)
                throw DomainError("only the last interval may end at +inf");
        }
    }

    static BoxcarSet full_line() { return BoxcarSet({{-kInf, kInf}}); }

    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    std::size_t size() const noexcept { return intervals_.size(); }
    bool empty() const noexcept { return intervals_.empty(); }
    bool left_infinite() const noexcept { return !empty() && intervals_.front().a == -kInf; }
    bool right_infinite() const noexcept { return !empty() && intervals_.back().b == kInf; }

    bool contains(double eps) const noexcept {
        for (const auto& iv : intervals_)
            if (eps >= iv.a && eps <= iv.b) return true;
        return false;
    }

    /// Lebesgue measure of the part of the set inside [lo, hi].
    double overlap(double lo, double hi) const noexcept {
        double m = 0.0;
        for (const auto& iv : intervals_) {
            const double a = std::max(iv.a, lo), b = std::min(iv.b, hi);
            if (b > a) m += b - a;
        }
        return m;
    }

    /// Complement in the real line (closure convention: shared endpoints).
    BoxcarSet complement() const {
        std::vector<Interval> out;
        double left = -kInf;
        for (const auto& iv : intervals_) {
            if (iv.a > left) out.push_back({left, iv.a});
            left = iv.b;
        }
        if (left < kInf) out.push_back({left, kInf});
        return BoxcarSet(std::move(out));
    }

    bool operator==(const BoxcarSet&) const = default;

private:
    std::vector<Interval> intervals_;
};

/// Lagrange pair: λ enforces the energy current, η the particle current.
struct Multipliers {
    double lambda = 0.0;
    double eta = 0.0;
};

struct BoxcarOptions {
    int base_nodes = 512;      // uniform scan nodes over the effective window
    int refine = 4;            // local refinement factor around ε0 and -η/λ
    double window_k = 40.0;    // window = μ_i ± window_k/β_i
    double root_tol = 1e-12;   // endpoint tolerance (relative to max(1, |ε|))
    double tail_growth = 1.5;  // geometric step growth beyond the window
    int max_tail_nodes = 4000;
};

/// R(ε) = g(ε) - (λε + η) Δf(ε).
inline double residual(const ReservoirPair& res, const Multipliers& m, double eps) noexcept {
    const Occupations o = occupations(res, eps);
    return o.g() - (m.lambda * eps + m.eta) * o.delta_f();
}

/// R'(ε), analytic.
inline double residual_derivative(const ReservoirPair& res, const Multipliers& m,
                                  double eps) noexcept {
    const Occupations o = occupations(res, eps);
    const double g_l = o.f_l * o.c_l, g_r = o.f_r * o.c_r;
    const double dg = -res.beta_l() * g_l * (o.c_l - o.f_l) - res.beta_r() * g_r * (o.c_r - o.f_r);
    const double ddf = -res.beta_l() * g_l + res.beta_r() * g_r;
    return dg - m.lambda * o.delta_f() - (m.lambda * eps + m.eta) * ddf;
}

/// R/g = 1 - (λε + η) Δf/g. Same sign and zeros as R, computable at any
/// finite energy.
inline double scaled_residual(const ReservoirPair& res, const Multipliers& m,
                              double eps) noexcept {
    return 1.0 - (m.lambda * eps + m.eta) * inverse_g_ratio(res, eps);
}

namespace detail {

/// Sign of R/g as ε → +∞ (side = +1) or -∞ (side = -1); 0 if the limit is
/// degenerate (λ = 0 and η equal to the tail limit of 𝒢).
inline int tail_sign(const ReservoirPair& res, const Multipliers& m, int side) {
    const auto [g_minus, g_plus] = g_ratio_limits(res);
    const double h_inf = 1.0 / (side > 0 ? g_plus : g_minus);
    if (m.lambda != 0.0) {
        // λε dominates: R/g ~ -(λ·side·∞)·h_inf
        const double s = -m.lambda * side * h_inf;
        return s > 0.0 ? 1 : -1;
    }
    const double lim = 1.0 - m.eta * h_inf;
    if (std::abs(lim) <= 1e-14 * (1.0 + std::abs(m.eta * h_inf))) return 0;
    return lim > 0.0 ? 1 : -1;
}

/// Energy beyond which λε + η certainly dominates the tail value of 𝒢.
inline double tail_crossing(const ReservoirPair& res, const Multipliers& m, int side) {
    if (m.lambda == 0.0) return 0.0;
    const auto [g_minus, g_plus] = g_ratio_limits(res);
    return ((side > 0 ? g_plus : g_minus) - m.eta) / m.lambda;
}

/// (R/g, (R/g)') at eps.
inline std::pair<double, double> residual_value_slope(const ReservoirPair& res,
                                                      const Multipliers& m, double eps) {
    const RatioState st = ratio_state(res, eps);
    const double line = m.lambda * eps + m.eta;
    return {1.0 - line * st.h, -m.lambda * st.h - line * st.dh(res)};
}

}  // namespace detail

/// Diagnostics from the last forward solve, useful when a root is missed.
struct ScanReport {
    std::size_t nodes = 0;
    std::size_t sign_changes = 0;
    double lo = 0.0, hi = 0.0;
};

/// Closure of {ε : R(ε) < 0} as a BoxcarSet.
///
/// Sign-scans R/g on a uniform grid over the effective window (plus local
/// refinement around ε0 and -η/λ), extends geometrically into both tails
/// until the asymptotic sign is reached, and polishes every bracketed sign
/// change with Brent's method. Tail membership follows the asymptotic sign
/// of R/g, which is fixed by λ and the finite limits of 𝒢.
inline BoxcarSet solve_boxcar(const ReservoirPair& res, const Multipliers& m,
                              const BoxcarOptions& opt = {}, ScanReport* report = nullptr) {
    if (!std::isfinite(m.lambda) || !std::isfinite(m.eta))
        throw DomainError("solve_boxcar: multipliers must be finite");
    if (res.identical() || (m.lambda == 0.0 && m.eta == 0.0)) return {};

    const auto [lo, hi] = res.window(opt.window_k);
    const int n = std::max(opt.base_nodes, 8);
    const double step = (hi - lo) / n;

    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n) + 64);
    for (int k = 0; k <= n; ++k) nodes.push_back(lo + step * k);

    std::vector<double> special{res.mu_l(), res.mu_r()};
    if (auto e0 = epsilon_zero(res)) special.push_back(*e0);
    if (m.lambda != 0.0) special.push_back(-m.eta / m.lambda);
    for (double p : special) {
        if (!(p > lo && p < hi)) continue;
        nodes.push_back(p);
        const double k0 = std::floor((p - lo) / step);
        for (int cell = -1; cell <= 1; ++cell) {
            const double left = lo + step * (k0 + cell);
            for (int j = 1; j < opt.refine; ++j) nodes.push_back(left + step * j / opt.refine);
        }
    }

    auto s = [&](double eps) { return scaled_residual(res, m, eps); };

    // Tails: grow until past every candidate crossing and the sampled sign
    // agrees with the asymptotic one.
    for (int side : {-1, 1}) {
        const int want = detail::tail_sign(res, m, side);
        const double cross = detail::tail_crossing(res, m, side);
        const double edge = side > 0 ? hi : lo;
        double x = edge, dx = step;
        for (int j = 0; j < opt.max_tail_nodes; ++j) {
            x += side * dx;
            dx *= opt.tail_growth;
            if (!std::isfinite(x)) break;
            nodes.push_back(x);
            const bool past = m.lambda == 0.0 ||
                              (side > 0 ? x > cross + std::abs(cross - edge) + step
                                        : x < cross - std::abs(cross - edge) - step);
            if (past) {
                const double v = s(x);
                if (want == 0 || (v < 0.0 ? -1 : 1) == want) break;
            }
        }
    }

    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    // Values and slopes of R/g at every node. A cell whose end slopes
    // disagree contains an extremum; it is located and added as a node so
    // that intervals and gaps narrower than the grid are not missed.
    std::vector<double> vals(nodes.size()), slopes(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto [v, d] = detail::residual_value_slope(res, m, nodes[i]);
        vals[i] = v;
        slopes[i] = d;
    }
    {
        auto slope = [&](double e) { return detail::residual_value_slope(res, m, e).second; };
        std::vector<std::pair<double, double>> extra;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double da = slopes[i], db = slopes[i + 1];
            if (da == 0.0 || db == 0.0 || (da > 0.0) == (db > 0.0)) continue;
            const double tol = 1e-3 * opt.root_tol * std::max(1.0, std::abs(nodes[i])) + 1e-14;
            const double x = brent_root(slope, nodes[i], nodes[i + 1], da, db, tol);
            if (x > nodes[i] && x < nodes[i + 1]) extra.emplace_back(x, s(x));
        }
        if (!extra.empty()) {
            std::vector<std::pair<double, double>> merged;
            merged.reserve(nodes.size() + extra.size());
            for (std::size_t i = 0; i < nodes.size(); ++i) merged.emplace_back(nodes[i], vals[i]);
            merged.insert(merged.end(), extra.begin(), extra.end());
            std::sort(merged.begin(), merged.end());
            nodes.clear();
            vals.clear();
            for (const auto& [x, v] : merged) {
                nodes.push_back(x);
                vals.push_back(v);
            }
        }
    }

    auto inside = [](double v) { return v < 0.0; };
    std::vector<Interval> out;
    bool in = inside(vals.front());
    double start = -kInf;
    std::size_t changes = 0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (inside(vals[i]) == inside(vals[i + 1])) continue;
        ++changes;
        const double xa = nodes[i], xb = nodes[i + 1];
        const double tol = opt.root_tol * std::max(1.0, std::max(std::abs(xa), std::abs(xb)));
        double r;
        try {
            // Zero values count as "outside"; nudge them so Brent sees a sign.
            const double fa = vals[i] == 0.0 ? 1e-300 : vals[i];
            const double fb = vals[i + 1] == 0.0 ? 1e-300 : vals[i + 1];
            r = brent_root(s, xa, xb, fa, fb, tol);
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "solve_boxcar: root polish failed in [" << xa << ", " << xb << "] (scan of "
                << nodes.size() << " nodes over [" << lo << ", " << hi << "]): " << e.what();
            throw SolverError(msg.str());
        }
        if (!in) {
            start = r;
            in = true;
        } else {
            out.push_back({start, r});
            in = false;
        }
    }
    if (in) out.push_back({start, kInf});

    // Merge intervals that touch within tolerance; drop degenerate ones.
    std::vector<Interval> merged;
    for (const auto& iv : out) {
        if (!(iv.b > iv.a)) continue;
        const double tol = opt.root_tol * std::max(1.0, std::abs(iv.a));
        if (!merged.empty() && iv.a - merged.back().b <= tol)
            merged.back().b = iv.b;
        else
            merged.push_back(iv);
    }
    if (report) *report = {nodes.size(), changes, lo, hi};
    return BoxcarSet(std::move(merged));
}

struct BoxcarIntegrals {
    double I = 0.0;
    double J = 0.0;
    double var = 0.0;
    double J_error = 0.0;  // quadrature error estimate on J
};

/// Particle current through a boxcar, exact.
inline double boxcar_current(const ReservoirPair& res, const BoxcarSet& box) noexcept {
    double I = 0.0;
    for (const auto& iv : box.intervals()) I += delta_f_integral(res, iv.a, iv.b);
    return I;
}

/// Noise integral ∫_B g dε, exact.
inline double boxcar_noise(const ReservoirPair& res, const BoxcarSet& box) noexcept {
    double v = 0.0;
    for (const auto& iv : box.intervals()) v += g_integral(res, iv.a, iv.b);
    return v;
}

/// ∫_a^b ε Δf dε by adaptive quadrature; infinite ends are clipped where
/// the Fermi tails fall below e^{-50}.
inline QuadResult<1> energy_moment(const ReservoirPair& res, double a, double b,
                                   const QuadOptions& q = {1e-13, 1e-12, 20000}) {
    const auto [wlo, whi] = res.window(50.0);
    const double lo = std::max(a, wlo), hi = std::min(b, whi);
    if (!(hi > lo)) return {};
    std::vector<double> extra{res.mu_l(), res.mu_r()};
    if (auto e0 = epsilon_zero(res)) extra.push_back(*e0);
    const double width = 2.0 / res.beta_max();
    const int pieces = std::clamp(static_cast<int>((hi - lo) / (8.0 * width)), 1, 64);
    for (int k = 1; k < pieces; ++k) extra.push_back(lo + (hi - lo) * k / pieces);
    const auto edges = make_edges(lo, hi, std::move(extra));
    return integrate_panels<1>(
        [&res](double e) { return std::array<double, 1>{e * delta_f(res, e)}; },
        std::span<const double>(edges), q);
}

/// (I, J, Δ²) of a boxcar transmission. I and Δ² use the Fermi
/// antiderivatives; J uses adaptive quadrature per interval.
inline BoxcarIntegrals boxcar_integrals(const ReservoirPair& res, const BoxcarSet& box) {
    BoxcarIntegrals out;
    for (const auto& iv : box.intervals()) {
        out.I += delta_f_integral(res, iv.a, iv.b);
        out.var += g_integral(res, iv.a, iv.b);
        const auto q = energy_moment(res, iv.a, iv.b);
        out.J += q.value[0];
        out.J_error += q.error[0];
    }
    return out;
}

/// ∂(I, J)/∂(η, λ) at a boxcar produced by solve_boxcar(res, m).
struct MultiplierJacobian {
    double dI_deta = 0.0;
    double dI_dlambda = 0.0;
    double dJ_deta = 0.0;
    double dJ_dlambda = 0.0;

    double determinant() const noexcept { return dI_deta * dJ_dlambda - dI_dlambda * dJ_deta; }
};

/// Implicit-function derivatives of the boxcar endpoints. Each finite
/// endpoint x contributes Δf(x)²/R'(x) (with the sign of an upper or lower
/// end); infinite endpoints contribute nothing.
///
/// Computed in scaled form, Δf²/R' = g h²/(R/g)', so that far-tail
/// endpoints give a vanishing weight instead of 0/0.
inline MultiplierJacobian multiplier_jacobian(const ReservoirPair& res, const Multipliers& m,
                                              const BoxcarSet& box,
                                              double derivative_floor = 1e-8) {
    MultiplierJacobian jac;
    auto weight = [&](double x) {
        const RatioState st = ratio_state(res, x);
        // (R/g)' = -λh - (λx + η)h'
        const double ds = -m.lambda * st.h - (m.lambda * x + m.eta) * st.dh(res);
        if (std::abs(ds) / res.beta_max() < derivative_floor) {
            std::ostringstream msg;
            msg << "multiplier_jacobian: endpoint " << x
                << " is a near-double root (scaled R' = " << ds / res.beta_max() << ")";
            throw NearBifurcationError(msg.str());
        }
        return std::exp(st.log_g) * st.h * st.h / ds;
    };
    for (const auto& iv : box.intervals()) {
        if (std::isfinite(iv.a)) {
            const double xi = weight(iv.a);
            jac.dI_deta -= xi;
            jac.dI_dlambda -= xi * iv.a;
            jac.dJ_dlambda -= xi * iv.a * iv.a;
        }
        if (std::isfinite(iv.b)) {
            const double theta = weight(iv.b);
            jac.dI_deta += theta;
            jac.dI_dlambda += theta * iv.b;
            jac.dJ_dlambda += theta * iv.b * iv.b;
        }
    }
    jac.dJ_deta = jac.dI_dlambda;
    return jac;
}

}  // namespace thermobox
