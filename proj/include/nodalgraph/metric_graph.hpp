#pragma once

#include "nodalgraph/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nodalgraph {

enum class EdgeSide : std::uint8_t { tail = 0, head = 1 };

/// One end of an edge as seen from a vertex. A loop contributes two ends to the same vertex.
struct EdgeEnd {
    std::size_t edge = 0;
    EdgeSide side = EdgeSide::tail;

    bool operator==(const EdgeEnd&) const = default;
};

/// Edge identified with [0, length]; x = 0 sits at the tail vertex.
struct Edge {
    std::string id;
    std::size_t tail = 0;
    std::size_t head = 0;
    double length = 1.0;
    double potential = 0.0;  ///< constant q_e >= 0

    bool is_loop() const noexcept { return tail == head; }
};

/// Vertex condition in incident-end order (see MetricGraph::ends).
///
/// A Dirichlet vertex ignores weights and robin. Otherwise the traces satisfy
/// w_e f_e(v) = c_v for every incident end and the robin block enters the form
/// as <A f(v), f(v)>. Empty weights mean natural (all ones); an empty robin
/// block means zero.
struct VertexCondition {
    bool dirichlet = false;
    std::vector<double> weights;
    Eigen::MatrixXd robin;
};

struct Vertex {
    std::string id;
    VertexCondition condition;
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Compact connected metric graph with edgewise constant potential and
/// per-vertex positivity-preserving conditions. Immutable once built.
class MetricGraph {
public:
    MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges)
        : vertices_(std::move(vertices)), edges_(std::move(edges)) {
        if (edges_.empty()) throw GraphError("graph has no edges");
        ends_.resize(vertices_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const Edge& edge = edges_[e];
            if (edge.tail >= vertices_.size() || edge.head >= vertices_.size())
                throw GraphError("edge '" + edge.id + "' references an unknown vertex");
            if (!(edge.length > 0.0) || !std::isfinite(edge.length))
                throw GraphError("edge '" + edge.id + "': nonpositive length");
            if (!(edge.potential >= 0.0) || !std::isfinite(edge.potential))
                throw GraphError("edge '" + edge.id + "': negative potential");
            ends_[edge.tail].push_back({e, EdgeSide::tail});
            ends_[edge.head].push_back({e, EdgeSide::head});
        }
        for (std::size_t v = 0; v < vertices_.size(); ++v) normalise_condition(v);
        check_connected();
    }

    const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    /// Incident ends of v: edges in declaration order, tail end before head end.
    const std::vector<EdgeEnd>& ends(std::size_t v) const { return ends_.at(v); }
    std::size_t degree(std::size_t v) const { return ends_.at(v).size(); }

    std::size_t vertex_at(const EdgeEnd& end) const {
        const Edge& e = edges_.at(end.edge);
        return end.side == EdgeSide::tail ? e.tail : e.head;
    }

    bool is_dirichlet(std::size_t v) const { return vertices_.at(v).condition.dirichlet; }

    std::size_t dirichlet_count() const {
        return static_cast<std::size_t>(std::count_if(vertices_.begin(), vertices_.end(),
                                                      [](const Vertex& v) { return v.condition.dirichlet; }));
    }

    double weight(std::size_t v, std::size_t local_end) const { return vertices_.at(v).condition.weights.at(local_end); }

    /// Weight of `end` at the vertex it is attached to.
    double weight(const EdgeEnd& end) const {
        const std::size_t v = vertex_at(end);
        const auto& list = ends_[v];
        const auto it = std::find(list.begin(), list.end(), end);
        return weight(v, static_cast<std::size_t>(it - list.begin()));
    }

    /// rho_v = <A_vv u, u> with u_e = 1 / w_{e,v}: the scalar robin coefficient
    /// left after restricting the block to weighted-continuous traces.
    double robin_scalar(std::size_t v) const {
        const VertexCondition& c = vertices_.at(v).condition;
        if (c.dirichlet) return 0.0;
        Eigen::VectorXd u(static_cast<Eigen::Index>(c.weights.size()));
        for (std::size_t i = 0; i < c.weights.size(); ++i) u(static_cast<Eigen::Index>(i)) = 1.0 / c.weights[i];
        return u.dot(c.robin * u);
    }

    double total_length() const {
        double s = 0.0;
        for (const Edge& e : edges_) s += e.length;
        return s;
    }

    double min_length() const {
        double m = std::numeric_limits<double>::infinity();
        for (const Edge& e : edges_) m = std::min(m, e.length);
        return m;
    }

    /// L1 norm of the potential, sum of q_e * l_e.
    double potential_l1() const {
        double s = 0.0;
        for (const Edge& e : edges_) s += e.potential * e.length;
        return s;
    }

    std::size_t vertex_index(const std::string& id) const {
        for (std::size_t v = 0; v < vertices_.size(); ++v)
            if (vertices_[v].id == id) return v;
        throw GraphError("unknown vertex '" + id + "'");
    }

    std::size_t edge_index(const std::string& id) const {
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (edges_[e].id == id) return e;
        throw GraphError("unknown edge '" + id + "'");
    }

    /// Same topology and conditions, all lengths multiplied by `factor`.
    MetricGraph scaled(double factor) const {
        std::vector<Edge> edges = edges_;
        for (Edge& e : edges) e.length *= factor;
        return MetricGraph(vertices_, std::move(edges));
    }

private:
    void normalise_condition(std::size_t v) {
        Vertex& vertex = vertices_[v];
        VertexCondition& c = vertex.condition;
        const auto deg = static_cast<Eigen::Index>(ends_[v].size());
        if (c.dirichlet) {
            c.weights.assign(ends_[v].size(), 1.0);
            c.robin = Eigen::MatrixXd::Zero(deg, deg);
            return;
        }
        if (c.weights.empty()) c.weights.assign(ends_[v].size(), 1.0);
        if (c.weights.size() != ends_[v].size())
            throw GraphError("vertex '" + vertex.id + "': weight count does not match degree");
        for (double w : c.weights)
            if (!(w > 0.0) || !std::isfinite(w)) throw GraphError("vertex '" + vertex.id + "': nonpositive weight");
        if (c.robin.size() == 0) c.robin = Eigen::MatrixXd::Zero(deg, deg);
        if (c.robin.rows() != deg || c.robin.cols() != deg)
            throw GraphError("vertex '" + vertex.id + "': robin block must be deg x deg");
        const double scale = std::max(1.0, c.robin.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < deg; ++i) {
            for (Eigen::Index j = 0; j < deg; ++j) {
                if (!std::isfinite(c.robin(i, j))) throw GraphError("vertex '" + vertex.id + "': non-finite robin entry");
                if (i == j) continue;
                if (std::abs(c.robin(i, j) - c.robin(j, i)) > 1e-12 * scale)
                    throw GraphError("vertex '" + vertex.id + "': robin block is not symmetric");
                if (c.robin(i, j) > 0.0)
                    throw GraphError("vertex '" + vertex.id + "': positive off-diagonal robin entry");
            }
        }
    }

    void check_connected() const {
        detail::DisjointSets sets(vertices_.size());
        for (const Edge& e : edges_) sets.unite(e.tail, e.head);
        for (std::size_t v = 1; v < vertices_.size(); ++v)
            if (sets.find(v) != sets.find(0)) throw GraphError("graph is disconnected");
    }

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<EdgeEnd>> ends_;
};

/// Sorted distinct values of sum_{e in E0} l_e / |G| over nonempty E0.
struct SubsetLengthSet {
    std::vector<double> ratios;
};

inline constexpr std::size_t kSubsetEnumerationCap = 24;

/// Exhaustive subset-sum ratios; distinct sums closer than 1e-12 (relative) collapse.
inline SubsetLengthSet subset_length_ratios(const MetricGraph& g) {
    if (g.edge_count() > kSubsetEnumerationCap)
        throw GraphError("subset enumeration capped at " + std::to_string(kSubsetEnumerationCap) +
                         " edges; use accumulation_estimate's snap path on observed support ratios instead");
    const double total = g.total_length();
    const auto dedup = [total](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        std::vector<double> out;
        out.reserve(v.size());
        for (double x : v)
            if (out.empty() || x - out.back() > 1e-12 * total) out.push_back(x);
        v = std::move(out);
    };
    std::vector<double> sums;  // nonempty subset sums of the edges seen so far
    for (const Edge& e : g.edges()) {
        std::vector<double> next = sums;
        next.push_back(e.length);
        for (double s : sums) next.push_back(s + e.length);
        dedup(next);
        sums = std::move(next);
    }
    SubsetLengthSet out;
    out.ratios.reserve(sums.size());
    for (double s : sums) out.ratios.push_back(s / total);
    out.ratios.back() = 1.0;
    return out;
}

/// First `count` eigenvalues of the Schroedinger operator with Dirichlet
/// conditions at every vertex: the merged multiset {q_e + (m pi / l_e)^2}.
inline std::vector<double> decoupled_dirichlet_spectrum(const MetricGraph& g, std::size_t count) {
    using Item = std::pair<double, std::pair<std::size_t, std::size_t>>;  // value, (edge, m)
    const auto value = [&g](std::size_t e, std::size_t m) {
        const Edge& edge = g.edges()[e];
        const double k = static_cast<double>(m) * std::numbers::pi / edge.length;
        return edge.potential + k * k;
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t e = 0; e < g.edge_count(); ++e) heap.push({value(e, 1), {e, 1}});
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

/// Number of decoupled Dirichlet eigenvalues strictly below lambda.
inline std::size_t decoupled_dirichlet_count_below(const MetricGraph& g, double lambda) {
    std::size_t n = 0;
    for (const Edge& e : g.edges()) {
        const double mu = lambda - e.potential;
        if (mu <= 0.0) continue;
        const double phase = std::sqrt(mu) * e.length / std::numbers::pi;
        auto m = static_cast<std::size_t>(std::floor(phase));
        if (static_cast<double>(m) == phase && m > 0) --m;
        n += m;
    }
    return n;
}

}  // namespace nodalgraph
