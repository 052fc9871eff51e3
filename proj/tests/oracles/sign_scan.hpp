#pragma once

// Brute-force nodal count: dense sampling of every edge, sign runs glued at
// vertices whose sampled traces are all nonzero.

#include "nodalgraph/eigenfunctions.hpp"
#include "nodalgraph/metric_graph.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

inline std::size_t sign_scan_count(const nodalgraph::EdgewiseSolution& f, const nodalgraph::MetricGraph& g,
                                   std::size_t samples_per_edge = 10000) {
    const std::size_t ne = g.edge_count();
    std::vector<std::vector<double>> vals(ne);
    double sup = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
        const double len = g.edges()[e].length;
        for (std::size_t i = 0; i < samples_per_edge; ++i) {
            const double x = len * static_cast<double>(i) / static_cast<double>(samples_per_edge - 1);
            vals[e].push_back(nodalgraph::evaluate(f, e, x));
            sup = std::max(sup, std::abs(vals[e].back()));
        }
    }
    const double tol = 1e-9 * sup;
    const auto sgn = [tol](double v) { return v > tol ? 1 : (v < -tol ? -1 : 0); };

    // runs of equal nonzero sign along each edge
    std::vector<std::size_t> parent;
    std::vector<long> first_run(ne, -1), last_run(ne, -1);
    for (std::size_t e = 0; e < ne; ++e) {
        int current = 0;
        for (std::size_t i = 0; i < samples_per_edge; ++i) {
            const int s = sgn(vals[e][i]);
            if (s != 0 && s != current) {
                parent.push_back(parent.size());
                if (first_run[e] < 0 && i == 0) first_run[e] = static_cast<long>(parent.size() - 1);
            }
            current = s;
            if (i + 1 == samples_per_edge && s != 0) last_run[e] = static_cast<long>(parent.size() - 1);
        }
    }
    const auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (g.is_dirichlet(v)) continue;
        std::vector<long> runs;
        bool nonzero = true;
        for (const auto& end : g.ends(v)) {
            const long r = end.side == nodalgraph::EdgeSide::tail ? first_run[end.edge] : last_run[end.edge];
            if (r < 0) nonzero = false;
            runs.push_back(r);
        }
        if (!nonzero) continue;
        for (long r : runs) parent[find(static_cast<std::size_t>(r))] = find(static_cast<std::size_t>(runs.front()));
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < parent.size(); ++i) roots.insert(find(i));
    return roots.size();
}

}  // namespace oracle
