#pragma once

// Feasible-region maps: boundary polylines, bifurcation curves and the
// boxcar topology over a grid of target currents.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/inverse.hpp"
#include "thermobox/parallel.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/region_bounds.hpp"

namespace thermobox {

/// Interval count plus which ends of the line are covered.
struct Signature {
    int count = 0;
    bool left_infinite = false;
    bool right_infinite = false;

    bool operator==(const Signature&) const = default;
};

inline Signature signature_of(const BoxcarSet& box) {
    return {static_cast<int>(box.size()), box.left_infinite(), box.right_infinite()};
}

struct TopologyResult {
    Signature signature;
    OptimalSolution solution;
};

/// Solves the inverse problem at (I, J) and reports the boxcar signature.
inline TopologyResult classify_topology(const ReservoirPair& res, double I, double J,
                                        const InverseOptions& opt = {}) {
    OptimalSolution s = solve_multipliers(res, I, J, opt);
    return {signature_of(s.boxcar), std::move(s)};
}

/// 𝒢'(z) by central differences with Richardson extrapolation, halving
/// the step until two successive estimates agree to rel_tol.
inline double g_ratio_derivative(const ReservoirPair& res, double z, double rel_tol = 1e-8) {
    double h = 0.05 / res.beta_max();
    if (auto e0 = epsilon_zero(res)) h = std::min(h, 0.25 * std::abs(z - *e0));
    auto d = [&](double step) { return (g_ratio(res, z + step) - g_ratio(res, z - step)) / (2 * step); };
    double prev = (4.0 * d(0.5 * h) - d(h)) / 3.0;
    for (int k = 0; k < 30; ++k) {
        h *= 0.5;
        const double cur = (4.0 * d(0.5 * h) - d(h)) / 3.0;
        if (std::abs(cur - prev) <= rel_tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

struct BifurcationPoint {
    std::string tag;  // "B_tan", "B_0+" or "B_0-"
    double lambda = 0.0, eta = 0.0;
    double I = 0.0, J = 0.0;
};

struct BifurcationSet {
    std::vector<BifurcationPoint> points;
    std::vector<std::string> notices;  // skipped samples
};

/// Tangency curve (λ, η) = (𝒢'(z), 𝒢(z) - z𝒢'(z)) over z_grid, and the
/// λ = 0 line over eta_grid, each mapped to (I, J). At λ = ±0 the extra
/// tail interval carries no current, so both one-sided labels share the
/// same (I, J).
inline BifurcationSet bifurcation_curves(const ReservoirPair& res, const std::vector<double>& z_grid,
                                         const std::vector<double>& eta_grid) {
    const auto e0 = epsilon_zero(res);
    if (!e0) throw DomainError("bifurcation_curves: requires unequal temperatures");
    BifurcationSet out;
    const double min_gap = 1e-6 * std::max(1.0, std::abs(*e0));
    for (double z : z_grid) {
        if (!std::isfinite(z) || std::abs(z - *e0) < min_gap) {
            out.notices.push_back("z = " + std::to_string(z) + " skipped: too close to eps0");
            continue;
        }
        const double gp = g_ratio_derivative(res, z);
        const Multipliers m{gp, g_ratio(res, z) - z * gp};
        const auto ints = boxcar_integrals(res, solve_boxcar(res, m));
        out.points.push_back({"B_tan", m.lambda, m.eta, ints.I, ints.J});
    }
    for (double eta : eta_grid) {
        const auto ints = boxcar_integrals(res, solve_boxcar(res, {0.0, eta}));
        out.points.push_back({"B_0+", 0.0, eta, ints.I, ints.J});
        out.points.push_back({"B_0-", -0.0, eta, ints.I, ints.J});
    }
    return out;
}

/// Default sampling for bifurcation_curves: z uniform over the central
/// window, and η at the values 𝒢 takes there.
inline std::pair<std::vector<double>, std::vector<double>> default_bifurcation_grids(
    const ReservoirPair& res, int n = 400) {
    const auto [lo, hi] = res.window(12.0);
    std::vector<double> z, eta;
    const auto e0 = epsilon_zero(res);
    for (int k = 0; k < n; ++k) {
        const double x = lo + (hi - lo) * (k + 0.5) / n;
        z.push_back(x);
        if (e0 && std::abs(x - *e0) > 1e-9) eta.push_back(g_ratio(res, x));
    }
    std::sort(eta.begin(), eta.end());
    return {z, eta};
}

struct BoundaryRow {
    double I, J_min, J_max, eps1;
};

struct TopologySample {
    double I, J;
    bool solved = false;
    Signature signature;
    double var_opt = 0.0;
    Multipliers multipliers;
    std::string error;
};

struct RegionOptions {
    int boundary_points = 129;
    int grid_i = 64, grid_j = 64;
    int bifurcation_points = 400;
    unsigned threads = 0;  // 0: default_threads()
    InverseOptions inverse{};
};

struct RegionMap {
    double I_min = 0.0, I_max = 0.0;
    std::vector<BoundaryRow> boundary;
    BifurcationSet bifurcations;
    std::vector<TopologySample> topology;
    int max_intervals = 0;
    std::vector<std::string> notices;
};

/// Boundary polylines J_min(I), J_max(I), including both endpoints of the
/// current range.
inline std::vector<BoundaryRow> boundary_polylines(const ReservoirPair& res, int n) {
    const auto cb = current_bounds(res);
    std::vector<BoundaryRow> rows;
    if (n < 2 || res.identical()) return rows;
    rows.resize(static_cast<std::size_t>(n));
    parallel_for(rows.size(), [&](std::size_t k) {
        const double I = cb.min.I + (cb.max.I - cb.min.I) * static_cast<double>(k) / (n - 1);
        const auto ex = j_extrema(res, I);
        rows[k] = {I, ex.J_min, ex.J_max, ex.eps1};
    });
    return rows;
}

/// Topology over a grid_i x grid_j lattice of cell centres spanning the
/// bounding box of the feasible region; points outside it are dropped.
/// Each I column is solved in order of increasing J with warm starts, so
/// the result does not depend on the thread count.
inline std::vector<TopologySample> topology_grid(const ReservoirPair& res, const RegionOptions& opt) {
    const auto cb = current_bounds(res);
    if (res.identical()) return {};
    const int ni = opt.grid_i, nj = opt.grid_j;
    std::vector<double> Is(ni);
    std::vector<JExtrema> ex(ni);
    for (int k = 0; k < ni; ++k) Is[k] = cb.min.I + (cb.max.I - cb.min.I) * (k + 0.5) / ni;
    parallel_for(static_cast<std::size_t>(ni), [&](std::size_t k) { ex[k] = j_extrema(res, Is[k]); }, opt.threads);
    double j_lo = kInf, j_hi = -kInf;
    for (const auto& e : ex) {
        j_lo = std::min(j_lo, e.J_min);
        j_hi = std::max(j_hi, e.J_max);
    }
    // Include the J range at the ends of the I interval as well.
    for (const auto& b : {cb.min, cb.max}) {
        const double J = boxcar_integrals(res, b.box).J;
        j_lo = std::min(j_lo, J);
        j_hi = std::max(j_hi, J);
    }

    std::vector<std::vector<TopologySample>> columns(ni);
    parallel_for(
        static_cast<std::size_t>(ni),
        [&](std::size_t k) {
            std::optional<Multipliers> warm;
            for (int m = 0; m < nj; ++m) {
                const double J = j_lo + (j_hi - j_lo) * (m + 0.5) / nj;
                if (J <= ex[k].J_min || J >= ex[k].J_max) continue;
                TopologySample s{Is[k], J};
                InverseOptions io = opt.inverse;
                io.warm_start = warm;
                try {
                    const auto r = classify_topology(res, Is[k], J, io);
                    s.solved = true;
                    s.signature = r.signature;
                    s.var_opt = r.solution.var_opt;
                    s.multipliers = r.solution.multipliers;
                    warm = r.solution.multipliers;
                } catch (const Error& e) {
                    s.error = e.what();
                    warm.reset();
                }
                columns[k].push_back(std::move(s));
            }
        },
        opt.threads);
    std::vector<TopologySample> out;
    for (auto& c : columns)
        for (auto& s : c) out.push_back(std::move(s));
    return out;
}

inline RegionMap region_map(const ReservoirPair& res, const RegionOptions& opt = {}) {
    RegionMap map;
    const auto cb = current_bounds(res);
    map.I_min = cb.min.I;
    map.I_max = cb.max.I;
    map.boundary = boundary_polylines(res, opt.boundary_points);
    if (epsilon_zero(res)) {
        const auto [z, eta] = default_bifurcation_grids(res, opt.bifurcation_points);
        map.bifurcations = bifurcation_curves(res, z, eta);
    } else {
        map.notices.push_back("equal temperatures: bifurcation curves not traced");
    }
    map.topology = topology_grid(res, opt);
    for (const auto& s : map.topology) {
        if (s.solved) map.max_intervals = std::max(map.max_intervals, s.signature.count);
    }
    if (map.max_intervals > 3)
        map.notices.push_back("observed a boxcar with " + std::to_string(map.max_intervals) +
                              " intervals (more than 3)");
    return map;
}

}  // namespace thermobox
