#pragma once

#include "nodalgraph/metric_graph.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodalgraph {

enum class LengthDistribution { uniform, rational };
enum class Topology { random, star, path, lasso };

struct RandomGraphOptions {
    std::uint64_t seed = 1;
    std::size_t edge_count = 5;
    LengthDistribution lengths = LengthDistribution::uniform;
    double base = 1.0;
    /// Rational mode multipliers; star and path use them in order, random draws from them.
    std::vector<int> multipliers{1, 2, 3, 4, 5, 6, 7, 8};
    Topology topology = Topology::random;
    double potential = 0.0;   ///< constant q_e on every edge
    double delta = 0.0;       ///< delta strength at every vertex of degree >= 2
    std::size_t dirichlet_leaves = 0;
};

namespace detail {

inline Topology parse_topology(const std::string& s) {
    if (s == "random") return Topology::random;
    if (s == "star") return Topology::star;
    if (s == "path") return Topology::path;
    if (s == "lasso") return Topology::lasso;
    throw std::invalid_argument("unknown topology '" + s + "'");
}

}  // namespace detail

/// Connected graph drawn deterministically from the seed. The random topology
/// is a random spanning tree plus extra edges, loops and parallel edges allowed.
inline MetricGraph generate_random_graph(const RandomGraphOptions& opt) {
    if (opt.edge_count == 0) throw std::invalid_argument("edge_count must be positive");
    if (opt.multipliers.empty()) throw std::invalid_argument("multipliers must be nonempty");
    for (int m : opt.multipliers)
        if (m < 1 || m > 8) throw std::invalid_argument("multipliers must lie in 1..8");
    std::mt19937_64 rng(opt.seed);
    const std::size_t ne = opt.edge_count;

    std::vector<std::pair<std::size_t, std::size_t>> ends;
    std::size_t nv = 0;
    switch (opt.topology) {
        case Topology::star:
            nv = ne + 1;
            for (std::size_t i = 0; i < ne; ++i) ends.emplace_back(0, i + 1);
            break;
        case Topology::path:
            nv = ne + 1;
            for (std::size_t i = 0; i < ne; ++i) ends.emplace_back(i, i + 1);
            break;
        case Topology::lasso:
            // loop at vertex 0, then a path
            nv = ne;
            ends.emplace_back(0, 0);
            for (std::size_t i = 1; i < ne; ++i) ends.emplace_back(i - 1, i);
            break;
        case Topology::random: {
            std::uniform_int_distribution<std::size_t> pick_nv(2, ne + 1);
            nv = pick_nv(rng);
            for (std::size_t v = 1; v < nv; ++v) {
                std::uniform_int_distribution<std::size_t> parent(0, v - 1);
                ends.emplace_back(parent(rng), v);
            }
            std::uniform_int_distribution<std::size_t> any(0, nv - 1);
            while (ends.size() < ne) {
                const std::size_t a = any(rng);
                const std::size_t b = any(rng);
                ends.emplace_back(a, b);
            }
            break;
        }
    }

    std::vector<Edge> edges;
    std::uniform_real_distribution<double> uniform(0.5, 2.0);
    std::uniform_int_distribution<std::size_t> pick_mult(0, opt.multipliers.size() - 1);
    const bool ordered = opt.topology != Topology::random;
    for (std::size_t i = 0; i < ne; ++i) {
        Edge e;
        e.id = "e" + std::to_string(i + 1);
        e.tail = ends[i].first;
        e.head = ends[i].second;
        if (opt.lengths == LengthDistribution::uniform) {
            e.length = uniform(rng);
        } else {
            const std::size_t k = ordered ? i % opt.multipliers.size() : pick_mult(rng);
            e.length = opt.base * opt.multipliers[k];
        }
        e.potential = opt.potential;
        edges.push_back(e);
    }

    std::vector<std::size_t> degree(nv, 0);
    for (const auto& [a, b] : ends) ++degree[a], ++degree[b];
    std::vector<Vertex> vertices(nv);
    std::size_t leaves_marked = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        vertices[v].id = "v" + std::to_string(v);
        if (degree[v] == 1 && leaves_marked < opt.dirichlet_leaves) {
            vertices[v].condition.dirichlet = true;
            ++leaves_marked;
        } else if (degree[v] >= 2 && opt.delta != 0.0) {
            const auto d = static_cast<Eigen::Index>(degree[v]);
            vertices[v].condition.robin = Eigen::MatrixXd::Zero(d, d);
            vertices[v].condition.robin(0, 0) = opt.delta;
        }
    }
    return MetricGraph(std::move(vertices), std::move(edges));
}

}  // namespace nodalgraph
