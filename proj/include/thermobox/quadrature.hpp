#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
// integrands over a set of finite panels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "thermobox/errors.hpp"

namespace thermobox {

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    std::size_t max_panels = 20000;
};

template <std::size_t N>
struct QuadResult {
    std::array<double, N> value{};
    std::array<double, N> error{};
    std::size_t panels = 0;
};

namespace detail {

// Abscissae and weights of the 15-point Kronrod rule and its embedded
// 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Panel {
    double a, b;
    std::array<double, N> value;
    std::array<double, N> error;
    double priority;  // largest error relative to its tolerance share
};

/// One G7K15 application; the error is |K15 - G7|, which overestimates the
/// K15 error for smooth integrands.
template <std::size_t N, class F>
Panel<N> gk15(const F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, N> k{}, g{};
    const std::array<double, N> fc = f(centre);
    for (std::size_t c = 0; c < N; ++c) {
        k[c] = kWgk[7] * fc[c];
        g[c] = kWg[3] * fc[c];
    }
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const std::array<double, N> f1 = f(centre - dx);
        const std::array<double, N> f2 = f(centre + dx);
        for (std::size_t c = 0; c < N; ++c) {
            const double s = f1[c] + f2[c];
            k[c] += kWgk[j] * s;
            if (j % 2 == 1) g[c] += kWg[j / 2] * s;
        }
    }
    Panel<N> p{a, b, {}, {}, 0.0};
    for (std::size_t c = 0; c < N; ++c) {
        p.value[c] = k[c] * half;
        p.error[c] = std::abs((k[c] - g[c]) * half);
    }
    return p;
}

}  // namespace detail

/// Integrate f over [edges[0], edges.back()], initially split at every
/// edge. f maps double -> std::array<double, N>. Convergence requires every
/// component to satisfy err <= max(abs_tol, rel_tol * |value|).
template <std::size_t N, class F>
QuadResult<N> integrate_panels(const F& f, std::span<const double> edges,
                               const QuadOptions& opt = {}) {
    QuadResult<N> out;
    if (edges.size() < 2) return out;

    using P = detail::Panel<N>;
    auto cmp = [](const P& x, const P& y) {
        if (x.priority != y.priority) return x.priority < y.priority;
        return x.a > y.a;  // deterministic tie-break
    };
    std::priority_queue<P, std::vector<P>, decltype(cmp)> heap(cmp);

    std::array<double, N> total{}, total_err{};
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i + 1] > edges[i])) continue;
        P p = detail::gk15<N>(f, edges[i], edges[i + 1]);
        for (std::size_t c = 0; c < N; ++c) {
            total[c] += p.value[c];
            total_err[c] += p.error[c];
        }
        heap.push(p);
    }

    auto tolerance = [&](std::size_t c) {
        return std::max(opt.abs_tol, opt.rel_tol * std::abs(total[c]));
    };
    auto converged = [&] {
        for (std::size_t c = 0; c < N; ++c)
            if (total_err[c] > tolerance(c)) return false;
        return true;
    };
    auto priority_of = [&](P& p) {
        double pr = 0.0;
        for (std::size_t c = 0; c < N; ++c) pr = std::max(pr, p.error[c] / tolerance(c));
        p.priority = pr;
    };

    // Priorities are computed against the tolerance at push time; they are
    // refreshed lazily because the relative tolerance only loosens.
    {
        std::vector<P> initial;
        initial.reserve(heap.size());
        while (!heap.empty()) {
            initial.push_back(heap.top());
            heap.pop();
        }
        for (auto& p : initial) {
            priority_of(p);
            heap.push(p);
        }
    }

    while (!converged()) {
        if (heap.size() >= opt.max_panels) {
            double worst = 0.0;
            for (std::size_t c = 0; c < N; ++c) worst = std::max(worst, total_err[c]);
            throw ConvergenceError("adaptive quadrature exceeded its panel budget (" +
                                       std::to_string(opt.max_panels) + ")",
                                   worst);
        }
        P p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) {
            // Panel cannot be split further in double precision.
            double worst = 0.0;
            for (std::size_t c = 0; c < N; ++c) worst = std::max(worst, total_err[c]);
            throw ConvergenceError("adaptive quadrature hit machine resolution", worst);
        }
        P left = detail::gk15<N>(f, p.a, mid);
        P right = detail::gk15<N>(f, mid, p.b);
        for (std::size_t c = 0; c < N; ++c) {
            total[c] += left.value[c] + right.value[c] - p.value[c];
            total_err[c] += left.error[c] + right.error[c] - p.error[c];
        }
        priority_of(left);
        priority_of(right);
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from the final panel set to drop accumulated update round-off.
    out.value.fill(0.0);
    out.error.fill(0.0);
    out.panels = heap.size();
    std::vector<P> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const P& x, const P& y) { return x.a < y.a; });
    for (const auto& p : panels)
        for (std::size_t c = 0; c < N; ++c) {
            out.value[c] += p.value[c];
            out.error[c] += p.error[c];
        }
    return out;
}

/// Scalar convenience wrapper.
template <class F>
QuadResult<1> integrate(const F& f, double a, double b, const QuadOptions& opt = {}) {
    const std::array<double, 2> edges{a, b};
    return integrate_panels<1>([&f](double x) { return std::array<double, 1>{f(x)}; },
                               std::span<const double>(edges), opt);
}

/// Sorted, de-duplicated breakpoints restricted to [lo, hi], always
/// including both ends.
inline std::vector<double> make_edges(double lo, double hi, std::vector<double> extra) {
    extra.push_back(lo);
    extra.push_back(hi);
    std::vector<double> e;
    e.reserve(extra.size());
    for (double x : extra)
        if (std::isfinite(x) && x >= lo && x <= hi) e.push_back(x);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

}  // namespace thermobox
