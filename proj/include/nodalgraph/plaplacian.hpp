#pragma once

#include "nodalgraph/errors.hpp"
#include "nodalgraph/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nodalgraph {

/// 2 pi / (p sin(pi / p)); pi_2 = pi.
inline double pi_p(double p) {
    if (!(p > 1.0)) throw std::invalid_argument("pi_p: p must exceed 1");
    if (p == 2.0) return std::numbers::pi;
    return 2.0 * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
}

struct PContext {
    double p = 2.0;
    double q = 2.0;  ///< Hoelder conjugate p / (p - 1)
    double pi = std::numbers::pi;

    explicit PContext(double p_ = 2.0) : p(p_), q(p_ / (p_ - 1.0)), pi(pi_p(p_)) {}
};

enum class IntervalCondition { dirichlet, neumann };

/// (p-1) (pi_p m / l)^p with m = n (Dirichlet) or m = n - 1 (Neumann), n = 1..count.
inline std::vector<double> interval_spectrum_p(double length, const PContext& ctx, IntervalCondition kind, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t n = 1; n <= count; ++n) {
        const double m = static_cast<double>(kind == IntervalCondition::dirichlet ? n : n - 1);
        out.push_back((ctx.p - 1.0) * std::pow(ctx.pi * m / length, ctx.p));
    }
    return out;
}

struct PBracket {
    std::size_t n = 0;
    double lower = 0.0;  ///< decoupled Neumann value
    double upper = 0.0;  ///< decoupled Dirichlet value
};

namespace detail {

/// First `count` values of the merged edgewise lists (p-1)(pi_p m / l_e)^p, m >= m0.
inline std::vector<double> merged_decoupled_p(const MetricGraph& g, const PContext& ctx, std::size_t m0, std::size_t count) {
    using Item = std::pair<double, std::pair<std::size_t, std::size_t>>;
    const auto value = [&](std::size_t e, std::size_t m) {
        return (ctx.p - 1.0) * std::pow(ctx.pi * static_cast<double>(m) / g.edges()[e].length, ctx.p);
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t e = 0; e < g.edge_count(); ++e) heap.push({value(e, m0), {e, m0}});
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
        const auto [v, key] = heap.top();
        heap.pop();
        out.push_back(v);
        heap.push({value(key.first, key.second + 1), {key.first, key.second + 1}});
    }
    return out;
}

}  // namespace detail

/// lambda^N_{n,p} <= lambda_{n,p}(G) <= lambda^D_{n,p} for n = 1..N.
inline std::vector<PBracket> bracket_variational(const MetricGraph& g, const PContext& ctx, std::size_t N) {
    const std::vector<double> lower = detail::merged_decoupled_p(g, ctx, 0, N);
    const std::vector<double> upper = detail::merged_decoupled_p(g, ctx, 1, N);
    std::vector<PBracket> out;
    for (std::size_t i = 0; i < N; ++i) out.push_back({i + 1, lower[i], upper[i]});
    return out;
}

struct PWeylCheck {
    double lower_slope = 0.0;
    double upper_slope = 0.0;
    double expected = 0.0;   ///< (p-1)^{1/p} pi_p / |G|
    double deviation = 0.0;  ///< max relative deviation of the two slopes
};

/// Slopes of lower^{1/p} and upper^{1/p} against n over the top half of the first N brackets.
inline PWeylCheck weyl_p_check(const std::vector<PBracket>& brackets, const PContext& ctx, double total_length, std::size_t N) {
    if (N < 200 || brackets.size() < N) throw std::invalid_argument("weyl_p_check needs at least 200 brackets");
    const auto slope = [&](bool upper) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const std::size_t start = N / 2;
        const auto cnt = static_cast<double>(N - start);
        for (std::size_t i = start; i < N; ++i) {
            const double x = static_cast<double>(brackets[i].n);
            const double y = std::pow(upper ? brackets[i].upper : brackets[i].lower, 1.0 / ctx.p);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    };
    PWeylCheck c;
    c.lower_slope = slope(false);
    c.upper_slope = slope(true);
    c.expected = std::pow(ctx.p - 1.0, 1.0 / ctx.p) * ctx.pi / total_length;
    c.deviation = std::max(std::abs(c.lower_slope - c.expected), std::abs(c.upper_slope - c.expected)) / c.expected;
    return c;
}

/// (p / q) (pi_p |E| / |G|)^p.
inline double lambda1p_upper_bound(const MetricGraph& g, const PContext& ctx) {
    return (ctx.p / ctx.q) * std::pow(ctx.pi * static_cast<double>(g.edge_count()) / g.total_length(), ctx.p);
}

/// 2 pi_p |E| p^{1/p} / (q lambda)^{1/p}.
inline double p_nodal_size_bound(double lambda, const PContext& ctx, std::size_t edge_count) {
    if (!(lambda > 0.0)) throw std::invalid_argument("p_nodal_size_bound: lambda must be positive");
    return 2.0 * ctx.pi * static_cast<double>(edge_count) * std::pow(ctx.p, 1.0 / ctx.p) / std::pow(ctx.q * lambda, 1.0 / ctx.p);
}

/// Above this value every nodal domain is shorter than the shortest edge.
inline double p_one_vertex_threshold(const MetricGraph& g, const PContext& ctx) {
    return (ctx.p / ctx.q) * std::pow(2.0 * ctx.pi * static_cast<double>(g.edge_count()) / g.min_length(), ctx.p);
}

/// Admissible range of the nodal count at lambda for a function with the given support length.
inline std::pair<double, double> p_nu_bounds(double lambda, double supported_length, const PContext& ctx, const MetricGraph& g) {
    if (!(lambda > p_one_vertex_threshold(g, ctx))) throw std::invalid_argument("p_nu_bounds: lambda below the one-vertex threshold");
    const double core = supported_length / ctx.pi * std::pow(ctx.q * lambda / ctx.p, 1.0 / ctx.p);
    const double ne = static_cast<double>(g.edge_count());
    const double nv = static_cast<double>(g.vertex_count());
    return {core - (2.0 * ne - 1.0) * nv, core + nv};
}

}  // namespace nodalgraph
