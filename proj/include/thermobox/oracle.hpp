#pragma once

// Discrete optimality oracle: the variance minimization restricted to
// transmissions that are constant on the cells of a uniform energy grid.
// On the grid the problem is a concave program over a box polytope with two
// equality constraints, so its minimum sits at a vertex with at most two
// fractional coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/inverse.hpp"
#include "thermobox/parallel.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/quadrature.hpp"
#include "thermobox/roots.hpp"

namespace thermobox {

/// Per-cell integrals A = ∫g, B = ∫Δf, C = ∫εΔf, D = ∫Δf².
struct GridCells {
    std::vector<double> edges;
    std::vector<double> A, B, C, D;

    std::size_t size() const noexcept { return A.size(); }
    double lo() const noexcept { return edges.front(); }
    double hi() const noexcept { return edges.back(); }
};

/// Smallest window [lo, hi] outside which at most (1 - mass_fraction) of
/// ∫g lies, split evenly between the two tails.
inline std::pair<double, double> default_window(const ReservoirPair& res,
                                                double mass_fraction = 1.0 - 1e-8) {
    if (!(mass_fraction > 0.0 && mass_fraction < 1.0))
        throw DomainError("window mass fraction must lie in (0, 1)");
    const double total = 1.0 / res.beta_l() + 1.0 / res.beta_r();
    const double target = 0.5 * (1.0 - mass_fraction) * total;
    // ∫_x^∞ f(1-f) = f(x)/β and ∫_{-∞}^x f(1-f) = (1-f(x))/β
    auto right = [&](double x) {
        const auto o = occupations(res, x);
        return o.f_l / res.beta_l() + o.f_r / res.beta_r() - target;
    };
    auto left = [&](double x) {
        const auto o = occupations(res, x);
        return o.c_l / res.beta_l() + o.c_r / res.beta_r() - target;
    };
    const auto [wlo, whi] = res.window(std::max(60.0, -std::log(target) + 20.0));
    const double mid = 0.5 * (res.mu_l() + res.mu_r());
    const double x_tol = 1e-12 * (whi - wlo);
    const double hi = brent_root(right, mid, whi, right(mid), right(whi), x_tol);
    const double lo = brent_root(left, wlo, mid, left(wlo), left(mid), x_tol);
    return {lo, hi};
}

/// Uniform cells over [lo, hi]. A and B are exact; C and D use adaptive
/// quadrature per cell.
inline GridCells discretize(const ReservoirPair& res, double lo, double hi, std::size_t N) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        throw DomainError("discretize: window must be finite with lo <= hi");
    if (N < 2) throw DomainError("discretize: need at least 2 cells");
    GridCells cells;
    cells.edges.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i)
        cells.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(N);
    cells.edges.back() = hi;
    cells.A.assign(N, 0.0);
    cells.B.assign(N, 0.0);
    cells.C.assign(N, 0.0);
    cells.D.assign(N, 0.0);

    std::vector<double> special{res.mu_l(), res.mu_r()};
    if (auto e0 = epsilon_zero(res)) special.push_back(*e0);
    const double width = 1.0 / res.beta_max();
    const QuadOptions q{1e-15, 1e-13, 40000};
    for (std::size_t i = 0; i < N; ++i) {
        const double a = cells.edges[i], b = cells.edges[i + 1];
        if (!(b > a)) continue;
        cells.A[i] = g_integral(res, a, b);
        cells.B[i] = delta_f_integral(res, a, b);
        std::vector<double> extra = special;
        const int pieces = std::clamp(static_cast<int>((b - a) / (4.0 * width)), 1, 256);
        for (int k = 1; k < pieces; ++k) extra.push_back(a + (b - a) * k / pieces);
        const auto e = make_edges(a, b, std::move(extra));
        const auto r = integrate_panels<2>(
            [&res](double x) {
                const double d = delta_f(res, x);
                return std::array<double, 2>{x * d, d * d};
            },
            std::span<const double>(e), q);
        cells.C[i] = r.value[0];
        cells.D[i] = r.value[1];
    }
    return cells;
}

inline GridCells discretize(const ReservoirPair& res, std::pair<double, double> window,
                            std::size_t N) {
    return discretize(res, window.first, window.second, N);
}

/// Q(τ) = Σ τ(A + D) - τ²D, the variance of the piecewise-constant
/// transmission τ.
inline double discrete_variance(const GridCells& c, std::span<const double> tau) {
    double q = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        q += tau[i] * (c.A[i] + c.D[i]) - tau[i] * tau[i] * c.D[i];
    return q;
}

/// L(τ) = Σ τA, the variance functional with T² replaced by T.
inline double discrete_linear(const GridCells& c, std::span<const double> tau) {
    double l = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) l += tau[i] * c.A[i];
    return l;
}

/// Σ D τ(1 - τ): zero exactly when τ is binary.
inline double boxcar_measure(const GridCells& c, std::span<const double> tau) {
    double m = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) m += c.D[i] * tau[i] * (1.0 - tau[i]);
    return m;
}

inline std::pair<double, double> discrete_currents(const GridCells& c,
                                                   std::span<const double> tau) {
    double I = 0.0, J = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        I += tau[i] * c.B[i];
        J += tau[i] * c.C[i];
    }
    return {I, J};
}

enum class DiscreteMode { Auto, Exhaustive, LP };

struct DiscreteOptions {
    DiscreteMode mode = DiscreteMode::Auto;
    std::size_t exhaustive_limit = 16;
    double feasibility_tol = 1e-9;  // slack on τ ∈ [0, 1] for the solved pair
    unsigned threads = 0;
};

struct DiscreteSolution {
    std::vector<double> tau;    // minimizer of Q
    double Q = 0.0;
    std::vector<double> tau_L;  // minimizer of L
    double L = 0.0;
    int fractional = 0;         // coordinates of τ strictly inside (0, 1)
    double measure = 0.0;       // boxcar measure of τ
    double enumeration_tol = 0.0;  // admissible Q - L: boxcar measure of τ_L plus round-off
    bool exhaustive = true;
    std::size_t vertices = 0;   // feasible vertices visited
};

namespace detail {

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> tau;
};

inline bool lex_less(const std::vector<double>& x, const std::vector<double>& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

/// Lower objective wins; within tie_tol the lexicographically smaller τ.
inline void offer(Candidate& best, double value, const std::vector<double>& tau, double tie_tol) {
    if (value < best.value - tie_tol ||
        (std::abs(value - best.value) <= tie_tol && lex_less(tau, best.tau))) {
        best.value = value;
        best.tau = tau;
    }
}

inline double snap_unit(double t) {
    if (std::abs(t) <= 1e-12) return 0.0;
    if (std::abs(1.0 - t) <= 1e-12) return 1.0;
    return std::clamp(t, 0.0, 1.0);
}

/// Solves τ_j B_j + τ_k B_k = rb, τ_j C_j + τ_k C_k = rc; false when the
/// system is singular or the solution leaves [0, 1] by more than tol.
inline bool solve_pair(const GridCells& c, std::size_t j, std::size_t k, double rb, double rc,
                       double tol, double& tj, double& tk) {
    const double det = c.B[j] * c.C[k] - c.B[k] * c.C[j];
    const double scale = std::abs(c.B[j] * c.C[k]) + std::abs(c.B[k] * c.C[j]);
    if (!(std::abs(det) > 1e-13 * scale)) return false;
    tj = (rb * c.C[k] - rc * c.B[k]) / det;
    tk = (c.B[j] * rc - c.C[j] * rb) / det;
    if (tj < -tol || tj > 1.0 + tol || tk < -tol || tk > 1.0 + tol) return false;
    tj = snap_unit(tj);
    tk = snap_unit(tk);
    return true;
}

inline std::vector<std::pair<std::size_t, std::size_t>> index_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) pairs.emplace_back(j, k);
    return pairs;
}

inline double objective_scale(const GridCells& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c.A[i] + c.D[i];
    return s;
}

inline void finish(const GridCells& c, DiscreteSolution& s) {
    s.fractional = 0;
    for (double t : s.tau)
        if (t > 0.0 && t < 1.0) ++s.fractional;
    s.measure = boxcar_measure(c, s.tau);
    s.enumeration_tol = boxcar_measure(c, s.tau_L) + 1e-12 * objective_scale(c);
}

/// Every vertex: a binary assignment of N - 2 coordinates with the
/// remaining pair solved from the two equalities.
inline DiscreteSolution enumerate_vertices(const GridCells& c, double I0, double J0,
                                           const DiscreteOptions& opt) {
    const std::size_t n = c.size();
    const auto pairs = index_pairs(n);
    const double tie_tol = 1e-14 * objective_scale(c);
    std::vector<Candidate> best_q(pairs.size()), best_l(pairs.size());
    std::vector<std::size_t> visited(pairs.size(), 0);

    parallel_for(
        pairs.size(),
        [&](std::size_t p) {
            const auto [j, k] = pairs[p];
            std::vector<std::size_t> others;
            for (std::size_t i = 0; i < n; ++i)
                if (i != j && i != k) others.push_back(i);
            const std::uint64_t patterns = std::uint64_t{1} << others.size();
            std::vector<double> tau(n, 0.0);
            for (std::uint64_t bits = 0; bits < patterns; ++bits) {
                double sb = 0.0, sc = 0.0, sa = 0.0;
                for (std::size_t o = 0; o < others.size(); ++o) {
                    const std::size_t i = others[o];
                    const bool on = (bits >> o) & 1u;
                    tau[i] = on ? 1.0 : 0.0;
                    if (on) {
                        sb += c.B[i];
                        sc += c.C[i];
                        sa += c.A[i];
                    }
                }
                double tj, tk;
                if (!solve_pair(c, j, k, I0 - sb, J0 - sc, opt.feasibility_tol, tj, tk))
                    continue;
                tau[j] = tj;
                tau[k] = tk;
                ++visited[p];
                const double l = sa + tj * c.A[j] + tk * c.A[k];
                const double q = l + tj * (1.0 - tj) * c.D[j] + tk * (1.0 - tk) * c.D[k];
                offer(best_q[p], q, tau, tie_tol);
                offer(best_l[p], l, tau, tie_tol);
            }
        },
        opt.threads);

    Candidate q, l;
    std::size_t total = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        total += visited[p];
        if (!best_q[p].tau.empty()) offer(q, best_q[p].value, best_q[p].tau, tie_tol);
        if (!best_l[p].tau.empty()) offer(l, best_l[p].value, best_l[p].tau, tie_tol);
    }
    if (q.tau.empty()) throw FeasibilityError("target is not attainable on this grid");
    DiscreteSolution s;
    s.tau = std::move(q.tau);
    s.Q = discrete_variance(c, s.tau);
    s.tau_L = std::move(l.tau);
    s.L = discrete_linear(c, s.tau_L);
    s.exhaustive = true;
    s.vertices = total;
    finish(c, s);
    return s;
}

/// Linear program min Σ τA by basis enumeration: each nonsingular pair
/// fixes the duals (λ, η); the other coordinates follow the sign of their
/// reduced cost A - λC - ηB, and the pair is solved from the equalities.
/// A primal-feasible basis is optimal.
inline DiscreteSolution solve_lp(const GridCells& c, double I0, double J0,
                                 const DiscreteOptions& opt) {
    const std::size_t n = c.size();
    const auto pairs = index_pairs(n);
    const double tie_tol = 1e-14 * objective_scale(c);
    std::vector<Candidate> best(pairs.size());
    std::vector<std::size_t> visited(pairs.size(), 0);

    parallel_for(
        pairs.size(),
        [&](std::size_t p) {
            const auto [j, k] = pairs[p];
            const double det = c.C[j] * c.B[k] - c.C[k] * c.B[j];
            const double scale = std::abs(c.C[j] * c.B[k]) + std::abs(c.C[k] * c.B[j]);
            if (!(std::abs(det) > 1e-13 * scale)) return;
            const double lambda = (c.A[j] * c.B[k] - c.A[k] * c.B[j]) / det;
            const double eta = (c.C[j] * c.A[k] - c.C[k] * c.A[j]) / det;
            std::vector<double> tau(n, 0.0);
            double sb = 0.0, sc = 0.0, sa = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == j || i == k) continue;
                const double r = c.A[i] - lambda * c.C[i] - eta * c.B[i];
                if (r < 0.0) {
                    tau[i] = 1.0;
                    sb += c.B[i];
                    sc += c.C[i];
                    sa += c.A[i];
                }
            }
            double tj, tk;
            if (!solve_pair(c, j, k, I0 - sb, J0 - sc, opt.feasibility_tol, tj, tk)) return;
            tau[j] = tj;
            tau[k] = tk;
            ++visited[p];
            offer(best[p], sa + tj * c.A[j] + tk * c.A[k], tau, tie_tol);
        },
        opt.threads);

    Candidate l;
    std::size_t total = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        total += visited[p];
        if (!best[p].tau.empty()) offer(l, best[p].value, best[p].tau, tie_tol);
    }
    if (l.tau.empty()) throw FeasibilityError("target is not attainable on this grid");
    DiscreteSolution s;
    s.tau_L = std::move(l.tau);
    s.L = discrete_linear(c, s.tau_L);
    s.tau = s.tau_L;
    s.Q = discrete_variance(c, s.tau);
    s.exhaustive = false;
    s.vertices = total;
    finish(c, s);
    return s;
}

}  // namespace detail

/// Discrete optimum at (I0, J0). Exhaustive mode returns the exact minima
/// of Q and L; LP mode minimizes L and reports Q at that vertex.
inline DiscreteSolution solve_discrete(const GridCells& cells, double I0, double J0,
                                       const DiscreteOptions& opt = {}) {
    if (cells.size() < 2) throw DomainError("solve_discrete: need at least 2 cells");
    if (!std::isfinite(I0) || !std::isfinite(J0))
        throw FeasibilityError("solve_discrete: target must be finite");
    const bool exhaustive = opt.mode == DiscreteMode::Exhaustive ||
                            (opt.mode == DiscreteMode::Auto && cells.size() <= opt.exhaustive_limit);
    if (exhaustive) {
        if (cells.size() > opt.exhaustive_limit)
            throw SizeError("exhaustive enumeration is limited to N <= " +
                            std::to_string(opt.exhaustive_limit) + " (got " +
                            std::to_string(cells.size()) + "); use LP mode");
        return detail::enumerate_vertices(cells, I0, J0, opt);
    }
    return detail::solve_lp(cells, I0, J0, opt);
}

/// Cell occupation fractions |cell ∩ B| / |cell|.
inline std::vector<double> snap_to_grid(const GridCells& c, const BoxcarSet& box) {
    std::vector<double> tau(c.size(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double w = c.edges[i + 1] - c.edges[i];
        if (w > 0.0) tau[i] = std::clamp(box.overlap(c.edges[i], c.edges[i + 1]) / w, 0.0, 1.0);
    }
    return tau;
}

/// Variance contribution of the cells in which a piecewise-constant τ can
/// disagree with the boxcar: cells cut by a finite endpoint, plus the part
/// of the boxcar outside the window.
inline double grid_error_bound(const ReservoirPair& res, const GridCells& c, const BoxcarSet& box) {
    double bound = 0.0;
    const double h = (c.hi() - c.lo()) / static_cast<double>(c.size());
    std::vector<char> cut(c.size(), 0);
    for (const auto& iv : box.intervals())
        for (double x : {iv.a, iv.b}) {
            if (!std::isfinite(x) || x <= c.lo() || x >= c.hi()) continue;
            const double pos = (x - c.lo()) / h;
            const double nearest = std::round(pos);
            if (std::abs(pos - nearest) <= 1e-9) continue;
            const auto i = std::min(static_cast<std::size_t>(pos), c.size() - 1);
            cut[i] = 1;
        }
    for (std::size_t i = 0; i < c.size(); ++i)
        if (cut[i]) bound += c.A[i] + c.D[i];
    for (const auto& iv : box.intervals()) {
        if (iv.a < c.lo()) bound += g_integral(res, iv.a, std::min(iv.b, c.lo()));
        if (iv.b > c.hi()) bound += g_integral(res, std::max(iv.a, c.hi()), iv.b);
    }
    return bound;
}

struct VerifyOptions {
    std::optional<std::pair<double, double>> window;  // default_window() if empty
    int refinements = 2;     // LP grids 2N, 4N, ... for the extrapolation check
    InverseOptions inverse{};
    DiscreteOptions discrete{};
};

struct VerifyGaps {
    double Q_minus_var = 0.0;
    double L_minus_var = 0.0;
    double snapped_minus_var = 0.0;
    double Q_minus_L = 0.0;
};

struct VerifyReport {
    double I = 0.0, J = 0.0;
    std::size_t N = 0;
    double lo = 0.0, hi = 0.0;
    double continuous_var = 0.0;
    Multipliers multipliers;
    BoxcarSet boxcar;
    double discrete_Q = 0.0;
    double discrete_L = 0.0;
    double snapped_var = 0.0;
    VerifyGaps gaps;
    double error_bound = 0.0;
    double certification_tol = 0.0;  // quadrature and solver slack only
    bool certified = false;          // var_opt <= Q* + certification_tol
    double enumeration_tol = 0.0;
    std::optional<double> extrapolated_Q;
    std::vector<std::size_t> refined_N;
    std::vector<double> refined_Q;
    DiscreteSolution discrete;
    bool pass = true;
    std::string verdict_reason;

    const char* verdict() const noexcept { return pass ? "PASS" : "FAIL"; }
};

/// Continuous optimum against the discrete optimum on an N-cell grid.
/// FAIL when var_opt exceeds Q* by more than the grid error bound, when it
/// falls below the extrapolated Q* of the refined LP grids by more than
/// that bound, or when Q* and L* disagree beyond the enumeration tolerance.
inline VerifyReport verify(const ReservoirPair& res, double I, double J, std::size_t N,
                           const VerifyOptions& opt = {}) {
    VerifyReport r;
    r.I = I;
    r.J = J;
    r.N = N;
    const auto window = opt.window ? *opt.window : default_window(res);
    r.lo = window.first;
    r.hi = window.second;

    const OptimalSolution sol = solve_multipliers(res, I, J, opt.inverse);
    r.continuous_var = sol.var_opt;
    r.multipliers = sol.multipliers;
    r.boxcar = sol.boxcar;

    const GridCells cells = discretize(res, window, N);
    r.discrete = solve_discrete(cells, I, J, opt.discrete);
    r.discrete_Q = r.discrete.Q;
    r.discrete_L = r.discrete.L;
    r.enumeration_tol = r.discrete.enumeration_tol;
    r.snapped_var = discrete_variance(cells, snap_to_grid(cells, sol.boxcar));

    r.gaps.Q_minus_var = r.discrete_Q - r.continuous_var;
    r.gaps.L_minus_var = r.discrete_L - r.continuous_var;
    r.gaps.snapped_minus_var = r.snapped_var - r.continuous_var;
    r.gaps.Q_minus_L = r.discrete_Q - r.discrete_L;

    // Current mismatch of the continuous solution, priced by the multipliers.
    const double solver_slack = std::abs(sol.multipliers.eta) * std::abs(sol.I - I) +
                                std::abs(sol.multipliers.lambda) * std::abs(sol.J - J);
    r.certification_tol = solver_slack + 1e-11 * std::max(1.0, detail::objective_scale(cells));
    r.error_bound = grid_error_bound(res, cells, sol.boxcar) + r.certification_tol;
    // Every grid transmission is admissible in the continuous problem.
    r.certified = r.continuous_var <= r.discrete_Q + r.certification_tol;

    DiscreteOptions lp = opt.discrete;
    lp.mode = DiscreteMode::LP;
    try {
        std::size_t n = N;
        for (int k = 0; k < opt.refinements; ++k) {
            n *= 2;
            const auto s = solve_discrete(discretize(res, window, n), I, J, lp);
            r.refined_N.push_back(n);
            r.refined_Q.push_back(s.Q);
        }
        if (r.refined_Q.size() >= 2) {
            const std::size_t m = r.refined_Q.size();
            r.extrapolated_Q = 2.0 * r.refined_Q[m - 1] - r.refined_Q[m - 2];
        }
    } catch (const FeasibilityError&) {
        r.refined_N.clear();
        r.refined_Q.clear();
    }

    std::string why;
    if (r.continuous_var > r.discrete_Q + r.error_bound)
        why = "continuous var_opt exceeds the discrete optimum by more than the grid error bound";
    else if (r.extrapolated_Q && r.continuous_var < *r.extrapolated_Q - r.error_bound)
        why = "continuous var_opt lies below the refined-grid extrapolation by more than the "
              "grid error bound";
    else if (r.discrete_Q < r.discrete_L - r.enumeration_tol ||
             r.discrete_Q > r.discrete_L + r.enumeration_tol)
        why = "discrete Q* and L* disagree beyond the enumeration tolerance";
    r.pass = why.empty();
    r.verdict_reason = r.pass ? "within grid error bound" : why;
    return r;
}

}  // namespace thermobox
