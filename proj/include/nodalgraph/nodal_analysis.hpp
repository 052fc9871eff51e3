#pragma once

#include "nodalgraph/eigenfunctions.hpp"
#include "nodalgraph/errors.hpp"
#include "nodalgraph/metric_graph.hpp"
#include "nodalgraph/secular_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace nodalgraph {

struct Segment {
    std::size_t edge = 0;
    double x0 = 0.0;
    double x1 = 0.0;
};

struct NodalDomain {
    std::vector<Segment> segments;  ///< ordered by edge, then position
    int sign = 1;
    bool contains_vertex = false;   ///< touches a vertex with nonzero trace
    std::size_t vertex_count = 0;   ///< distinct such vertices
    bool interval = false;          ///< one segment, no vertex of degree >= 2 inside
    double length = 0.0;
};

/// Nodal domains of f: every supported edge is cut at its interior zeros and
/// the pieces are glued at vertices whose trace is nonzero.
inline std::vector<NodalDomain> nodal_domains(const EdgewiseSolution& f, const MetricGraph& g) {
    const ZeroSet zs = zero_set(f);
    std::vector<Segment> segs;
    std::vector<int> signs;
    std::vector<std::size_t> first(g.edge_count(), 0), last(g.edge_count(), 0);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const EdgeZeros& z = zs.edges[e];
        if (z.identically_zero) continue;
        std::vector<double> cuts{0.0};
        cuts.insert(cuts.end(), z.interior.begin(), z.interior.end());
        cuts.push_back(g.edges()[e].length);
        first[e] = segs.size();
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            segs.push_back({e, cuts[i], cuts[i + 1]});
            signs.push_back(evaluate(f, e, 0.5 * (cuts[i] + cuts[i + 1])) >= 0.0 ? 1 : -1);
        }
        last[e] = segs.size() - 1;
    }
    if (segs.empty()) throw BasisError("nodal domains of the zero function");

    detail::DisjointSets sets(segs.size());
    std::vector<bool> live_vertex(g.vertex_count(), false);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (g.is_dirichlet(v)) continue;
        bool nonzero = true;
        for (const EdgeEnd& end : g.ends(v)) {
            const EdgeZeros& z = zs.edges[end.edge];
            if (z.identically_zero || (end.side == EdgeSide::tail ? z.at_tail : z.at_head)) nonzero = false;
        }
        if (!nonzero) continue;
        live_vertex[v] = true;
        const auto seg_of = [&](const EdgeEnd& end) { return end.side == EdgeSide::tail ? first[end.edge] : last[end.edge]; };
        const std::size_t s0 = seg_of(g.ends(v).front());
        for (const EdgeEnd& end : g.ends(v)) sets.unite(s0, seg_of(end));
    }

    std::map<std::size_t, std::size_t> root_to_domain;
    std::vector<NodalDomain> out;
    std::vector<std::set<std::size_t>> touched;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::size_t r = sets.find(i);
        auto [it, inserted] = root_to_domain.emplace(r, out.size());
        if (inserted) {
            out.emplace_back();
            out.back().sign = signs[i];
            touched.emplace_back();
        }
        NodalDomain& d = out[it->second];
        d.segments.push_back(segs[i]);
        d.length += segs[i].x1 - segs[i].x0;
        const Edge& edge = g.edges()[segs[i].edge];
        if (segs[i].x0 == 0.0 && live_vertex[edge.tail]) touched[it->second].insert(edge.tail);
        if (segs[i].x1 == edge.length && live_vertex[edge.head]) touched[it->second].insert(edge.head);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        NodalDomain& d = out[k];
        d.vertex_count = touched[k].size();
        d.contains_vertex = d.vertex_count > 0;
        bool inner_vertex = false;
        for (std::size_t v : touched[k]) inner_vertex = inner_vertex || g.degree(v) >= 2;
        d.interval = d.segments.size() == 1 && !inner_vertex;
    }
    return out;
}

struct DomainSummary {
    double length = 0.0;
    int sign = 1;
    bool interval = false;
    std::size_t vertex_count = 0;
};

struct NodalReport {
    std::size_t n = 0;
    double lambda = 0.0;
    std::size_t group = 0;  ///< 1-based index of the distinct eigenvalue
    std::size_t multiplicity = 1;
    std::size_t nu = 0;
    std::vector<std::size_t> support_edges;
    double support_length = 0.0;
    double ratio = 0.0;
    std::vector<DomainSummary> domains;

    double max_domain_length() const {
        double m = 0.0;
        for (const auto& d : domains) m = std::max(m, d.length);
        return m;
    }
};

struct IndexedEigenfunction {
    std::size_t n = 0;
    std::size_t group = 0;
    Eigenvalue eigenvalue;
    EdgewiseSolution f;
};

/// Eigenfunctions for indices 1..N; each eigenspace's members, in strategy
/// order, take consecutive indices.
inline std::vector<IndexedEigenfunction> eigenfunction_sequence(const SpectralProblem& p, std::size_t N, const BasisStrategy& strategy) {
    const std::vector<Eigenvalue> eigs = find_eigenvalues(p, N);
    std::vector<std::vector<EdgewiseSolution>> bases(eigs.size());
    std::vector<std::size_t> first_index(eigs.size());
    std::size_t n = 1;
    for (std::size_t k = 0; k < eigs.size(); ++k) {
        first_index[k] = n;
        n += eigs[k].multiplicity;
    }
    detail::parallel_for(eigs.size(), detail::resolve_threads(p.config.threads),
                         [&](std::size_t k) { bases[k] = apply_strategy(eigenbasis(p, eigs[k]), strategy, first_index[k]); });
    std::vector<IndexedEigenfunction> out;
    for (std::size_t k = 0; k < eigs.size(); ++k)
        for (const EdgewiseSolution& f : bases[k]) {
            if (out.size() == N) break;
            out.push_back({out.size() + 1, k + 1, eigs[k], f});
        }
    return out;
}

inline NodalReport nodal_report(const IndexedEigenfunction& item, const MetricGraph& g) {
    NodalReport r;
    r.n = item.n;
    r.lambda = item.eigenvalue.value;
    r.group = item.group;
    r.multiplicity = item.eigenvalue.multiplicity;
    const SupportSet s = support(item.f);
    r.support_edges = s.edges;
    r.support_length = s.length;
    for (const NodalDomain& d : nodal_domains(item.f, g)) r.domains.push_back({d.length, d.sign, d.interval, d.vertex_count});
    r.nu = r.domains.size();
    r.ratio = static_cast<double>(r.nu) / static_cast<double>(r.n);
    return r;
}

inline std::vector<NodalReport> nodal_count_series(const SpectralProblem& p, std::size_t N, const BasisStrategy& strategy) {
    const std::vector<IndexedEigenfunction> seq = eigenfunction_sequence(p, N, strategy);
    std::vector<NodalReport> out(seq.size());
    detail::parallel_for(seq.size(), detail::resolve_threads(p.config.threads),
                         [&](std::size_t i) { out[i] = nodal_report(seq[i], p.graph); });
    return out;
}

struct AccumulationPoint {
    double value = 0.0;
    std::size_t hits = 0;
    double max_snap_distance = 0.0;
};

struct AccumulationEstimate {
    std::vector<AccumulationPoint> points;          ///< from nu_n / n
    std::vector<AccumulationPoint> support_points;  ///< from |supp psi_n| / |G|
    bool agree = false;
    std::size_t window_begin = 0;  ///< first n of the tail window
    std::size_t window_end = 0;    ///< last n
    std::size_t snap_failures = 0; ///< tail ratios farther than snap_tol from every candidate
    double worst_snap_distance = 0.0;
    std::vector<double> candidates;
};

namespace detail {

inline std::vector<AccumulationPoint> snap_ratios(const std::vector<double>& ratios, const std::vector<double>& cands, double snap_tol,
                                                  std::size_t min_hits, std::size_t& failures, double& worst) {
    std::vector<AccumulationPoint> acc(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) acc[i].value = cands[i];
    for (double r : ratios) {
        std::size_t best = 0;
        double dist = std::abs(r - cands[0]);
        for (std::size_t i = 1; i < cands.size(); ++i)
            if (std::abs(r - cands[i]) < dist) dist = std::abs(r - cands[i]), best = i;
        worst = std::max(worst, dist);
        if (dist > snap_tol) {
            ++failures;
            continue;
        }
        ++acc[best].hits;
        acc[best].max_snap_distance = std::max(acc[best].max_snap_distance, dist);
    }
    std::vector<AccumulationPoint> out;
    for (const auto& a : acc)
        if (a.hits >= min_hits) out.push_back(a);
    return out;
}

}  // namespace detail

/// Limit points of nu_n / n, read off the tail of the series by snapping each
/// ratio to the subset-length ratios of g. Graphs too large for enumeration
/// snap to the observed support ratios instead, which are subset ratios too.
inline AccumulationEstimate accumulation_estimate(const std::vector<NodalReport>& series, const MetricGraph& g, double tail_fraction = 0.5,
                                                  double snap_tol = 0.02) {
    if (series.size() < 100) throw SolverError("accumulation_estimate needs at least 100 indices");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw SolverError("tail_fraction must lie in (0, 1]");
    const double total = g.total_length();
    const std::size_t start = series.size() - static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(series.size())));
    AccumulationEstimate est;
    est.window_begin = series[start].n;
    est.window_end = series.back().n;
    if (g.edge_count() <= kSubsetEnumerationCap) {
        est.candidates = subset_length_ratios(g).ratios;
    } else {
        std::set<double> seen;
        for (const auto& r : series) seen.insert(r.support_length / total);
        est.candidates.assign(seen.begin(), seen.end());
    }
    std::vector<double> ratios, supp;
    for (std::size_t i = start; i < series.size(); ++i) {
        ratios.push_back(series[i].ratio);
        supp.push_back(series[i].support_length / total);
    }
    const auto min_hits = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(ratios.size())));
    est.points = detail::snap_ratios(ratios, est.candidates, snap_tol, min_hits, est.snap_failures, est.worst_snap_distance);
    std::size_t ignored = 0;
    double ignored_worst = 0.0;
    est.support_points = detail::snap_ratios(supp, est.candidates, snap_tol, min_hits, ignored, ignored_worst);
    est.agree = est.points.size() == est.support_points.size();
    for (std::size_t i = 0; est.agree && i < est.points.size(); ++i) est.agree = est.points[i].value == est.support_points[i].value;
    return est;
}

/// (pi |E| / |G| + ||q||_1)^2 - ||q||_1^2, an upper bound for lambda_1 whatever the vertex conditions.
inline double lambda1_upper_bound(const MetricGraph& g) {
    const double q = g.potential_l1();
    const double a = std::numbers::pi * static_cast<double>(g.edge_count()) / g.total_length() + q;
    return a * a - q * q;
}

/// Bound on every nodal domain size at eigenvalue lambda; infinite when lambda <= 0.
inline double nodal_size_bound(double lambda, double q_norm, std::size_t edge_count) {
    const double d = std::sqrt(std::max(0.0, lambda + q_norm * q_norm)) - q_norm;
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    return 2.0 * std::numbers::pi * static_cast<double>(edge_count) / d;
}

/// Same bound for domains that are intervals.
inline double interval_domain_bound(double lambda, double q_norm) {
    const double d = std::sqrt(std::max(0.0, lambda + q_norm * q_norm)) - q_norm;
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    return std::numbers::pi / d;
}

/// Above this eigenvalue no nodal domain contains an entire edge.
inline double one_vertex_threshold(const MetricGraph& g, double q_norm) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(g.edge_count()) / g.min_length() + q_norm;
    return a * a - q_norm * q_norm;
}

struct BoundRow {
    std::string check;
    std::size_t n = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
};

/// Two-sided nu_n bounds for every index with lambda_n above max(||q||_1^2, the one-vertex threshold).
inline std::vector<BoundRow> check_nu_lambda(const std::vector<NodalReport>& series, const MetricGraph& g, double q_norm) {
    const double threshold = std::max(q_norm * q_norm, one_vertex_threshold(g, q_norm));
    const double ne = static_cast<double>(g.edge_count());
    const double nv = static_cast<double>(g.vertex_count());
    std::vector<BoundRow> rows;
    for (const NodalReport& r : series) {
        if (!(r.lambda > threshold)) continue;
        const double root = std::sqrt(r.lambda);
        const double lower = r.support_length * (root - q_norm) / std::numbers::pi - (2.0 * ne - 1.0) * nv;
        const double upper = r.support_length * root / std::numbers::pi + nv;
        const double nu = static_cast<double>(r.nu);
        rows.push_back({"nu_lower", r.n, lower, nu, lower <= nu + 1e-9});
        rows.push_back({"nu_upper", r.n, nu, upper, nu <= upper + 1e-9});
    }
    return rows;
}

struct NodalSizeCheck {
    double bound = 0.0;
    double interval_bound = 0.0;
    double max_domain = 0.0;
    std::size_t violations = 0;
    bool above_threshold = false;  ///< lambda exceeds the one-vertex threshold
    std::size_t multi_vertex_domains = 0;
    std::vector<BoundRow> rows;
};

inline NodalSizeCheck check_nodal_size(const NodalReport& report, const MetricGraph& g, double q_norm) {
    NodalSizeCheck c;
    c.bound = nodal_size_bound(report.lambda, q_norm, g.edge_count());
    c.interval_bound = interval_domain_bound(report.lambda, q_norm);
    c.above_threshold = report.lambda > one_vertex_threshold(g, q_norm);
    const double slack = 1e-9;
    for (const DomainSummary& d : report.domains) {
        c.max_domain = std::max(c.max_domain, d.length);
        if (d.vertex_count > 1) ++c.multi_vertex_domains;
    }
    if (std::isfinite(c.bound)) {
        const bool ok = c.max_domain <= c.bound * (1.0 + slack);
        c.rows.push_back({"nodal_size", report.n, c.max_domain, c.bound, ok});
        if (!ok) ++c.violations;
    }
    double max_interval = 0.0;
    bool any_interval = false;
    for (const DomainSummary& d : report.domains)
        if (d.interval) max_interval = std::max(max_interval, d.length), any_interval = true;
    if (any_interval && std::isfinite(c.interval_bound)) {
        const bool ok = max_interval <= c.interval_bound * (1.0 + slack);
        c.rows.push_back({"interval_domain_size", report.n, max_interval, c.interval_bound, ok});
        if (!ok) ++c.violations;
    }
    if (c.above_threshold) {
        const bool ok = c.multi_vertex_domains == 0;
        c.rows.push_back({"one_vertex_per_domain", report.n, static_cast<double>(c.multi_vertex_domains), 0.0, ok});
        if (!ok) ++c.violations;
    }
    return c;
}

/// The operator restricted to one nodal domain: Dirichlet at its zero ends,
/// the original conditions at the vertices inside it and the same potential.
inline SpectralProblem domain_subproblem(const EdgewiseSolution& f, const NodalDomain& d, const SpectralProblem& p) {
    const MetricGraph& g = p.graph;
    const ZeroSet zs = zero_set(f);
    std::vector<Segment> segs = d.segments;
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.edge != b.edge ? a.edge < b.edge : a.x0 < b.x0; });
    std::vector<Vertex> vertices;
    std::map<std::size_t, std::size_t> kept;  // original vertex -> new index
    const auto live = [&](std::size_t v) {
        if (g.is_dirichlet(v)) return false;
        for (const EdgeEnd& end : g.ends(v)) {
            const EdgeZeros& z = zs.edges[end.edge];
            if (z.identically_zero || (end.side == EdgeSide::tail ? z.at_tail : z.at_head)) return false;
        }
        return true;
    };
    const auto endpoint = [&](std::size_t v, bool at_vertex) {
        if (at_vertex && live(v)) {
            auto [it, inserted] = kept.emplace(v, vertices.size());
            if (inserted) vertices.push_back(g.vertices()[v]);
            return it->second;
        }
        Vertex z;
        z.id = "z" + std::to_string(vertices.size());
        z.condition.dirichlet = true;
        vertices.push_back(z);
        return vertices.size() - 1;
    };
    std::vector<Edge> edges;
    for (const Segment& s : segs) {
        const Edge& e = g.edges()[s.edge];
        Edge ne;
        ne.id = e.id + "#" + std::to_string(edges.size());
        ne.length = s.x1 - s.x0;
        ne.potential = e.potential;
        ne.tail = endpoint(e.tail, s.x0 == 0.0);
        ne.head = endpoint(e.head, s.x1 == e.length);
        edges.push_back(ne);
    }
    try {
        return SpectralProblem{MetricGraph(std::move(vertices), std::move(edges)), SolverConfig{}};
    } catch (const GraphError& err) {
        throw SolverError(std::string("nodal domain subproblem: ") + err.what());
    }
}

/// |lambda_1(domain) - lambda_n| / max(|lambda_n|, 1).
inline double check_domain_groundstate(const EdgewiseSolution& f, double lambda_n, const NodalDomain& d, const SpectralProblem& p) {
    SpectralProblem sub = domain_subproblem(f, d, p);
    sub.config.rank_tol = p.config.rank_tol;
    sub.config.refine_tol = p.config.refine_tol;
    sub.config.threads = 1;
    const std::vector<Eigenvalue> ev = find_eigenvalues(sub, 1);
    return std::abs(ev.front().value - lambda_n) / std::max(std::abs(lambda_n), 1.0);
}

}  // namespace nodalgraph
