#pragma once

#include "nodalgraph/errors.hpp"
#include "nodalgraph/metric_graph.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace nodalgraph {

namespace detail {

inline std::vector<std::string> split_tokens(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// Splits a document into (line number, tokens) with `#` comments removed.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> tokenise_document(std::string_view text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto tokens = split_tokens(line);
        if (!tokens.empty()) lines.emplace_back(lineno, std::move(tokens));
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

}  // namespace detail

/// Reads the line-oriented graph format:
///
///     vertex <id> [dirichlet | robin <deg*deg row-major reals>] [weights <edge-id>:<w> ...]
///     edge <id> <tail-id> <head-id> length <l> [q <q_e>]
///
/// Vertices mentioned only by edges get natural conditions. Robin entries are
/// ordered like MetricGraph::ends (edges in file order, tail end first). A
/// weight given for a loop applies to both of its ends.
inline MetricGraph parse_graph(std::string_view text) {
    struct PendingVertex {
        std::size_t line = 0;
        bool dirichlet = false;
        std::vector<double> robin;
        std::vector<std::pair<std::string, double>> weights;
    };
    std::vector<std::string> vertex_order;
    std::map<std::string, std::size_t> vertex_ids;
    std::vector<PendingVertex> pending;
    std::vector<Edge> edges;
    std::vector<std::size_t> edge_lines;
    std::map<std::string, std::size_t> edge_ids;

    const auto touch_vertex = [&](const std::string& id) {
        if (auto it = vertex_ids.find(id); it != vertex_ids.end()) return it->second;
        vertex_ids.emplace(id, vertex_order.size());
        vertex_order.push_back(id);
        pending.emplace_back();
        return vertex_order.size() - 1;
    };

    std::vector<bool> declared;
    for (const auto& [lineno, tok] : detail::tokenise_document(text)) {
        if (tok[0] == "vertex") {
            if (tok.size() < 2) throw ParseError(lineno, "vertex line needs an id");
            const std::size_t v = touch_vertex(tok[1]);
            declared.resize(vertex_order.size(), false);
            if (declared[v]) throw ParseError(lineno, "duplicate vertex '" + tok[1] + "'");
            declared[v] = true;
            PendingVertex& pv = pending[v];
            pv.line = lineno;
            std::size_t i = 2;
            while (i < tok.size()) {
                if (tok[i] == "dirichlet") {
                    pv.dirichlet = true;
                    ++i;
                } else if (tok[i] == "robin") {
                    ++i;
                    while (i < tok.size()) {
                        const auto x = detail::to_double(tok[i]);
                        if (!x) break;
                        pv.robin.push_back(*x);
                        ++i;
                    }
                    if (pv.robin.empty()) throw ParseError(lineno, "robin needs deg*deg entries");
                } else if (tok[i] == "weights") {
                    ++i;
                    while (i < tok.size() && tok[i].find(':') != std::string::npos) {
                        const auto colon = tok[i].rfind(':');
                        const auto w = detail::to_double(std::string_view(tok[i]).substr(colon + 1));
                        if (!w) throw ParseError(lineno, "bad weight '" + tok[i] + "'");
                        if (!(*w > 0.0)) throw ParseError(lineno, "nonpositive weight '" + tok[i] + "'");
                        pv.weights.emplace_back(tok[i].substr(0, colon), *w);
                        ++i;
                    }
                } else {
                    throw ParseError(lineno, "unexpected token '" + tok[i] + "'");
                }
            }
            if (pv.dirichlet && (!pv.robin.empty() || !pv.weights.empty()))
                throw ParseError(lineno, "dirichlet vertex cannot carry robin or weights");
        } else if (tok[0] == "edge") {
            if (tok.size() < 6 || tok[4] != "length") throw ParseError(lineno, "expected: edge <id> <tail> <head> length <l> [q <q>]");
            if (edge_ids.count(tok[1])) throw ParseError(lineno, "duplicate edge '" + tok[1] + "'");
            Edge e;
            e.id = tok[1];
            e.tail = touch_vertex(tok[2]);
            e.head = touch_vertex(tok[3]);
            const auto len = detail::to_double(tok[5]);
            if (!len) throw ParseError(lineno, "bad length '" + tok[5] + "'");
            if (!(*len > 0.0)) throw ParseError(lineno, "nonpositive length");
            e.length = *len;
            std::size_t i = 6;
            while (i < tok.size()) {
                if (tok[i] == "q" && i + 1 < tok.size()) {
                    const auto q = detail::to_double(tok[i + 1]);
                    if (!q) throw ParseError(lineno, "bad potential '" + tok[i + 1] + "'");
                    if (!(*q >= 0.0)) throw ParseError(lineno, "negative potential");
                    e.potential = *q;
                    i += 2;
                } else {
                    throw ParseError(lineno, "unexpected token '" + tok[i] + "'");
                }
            }
            edge_ids.emplace(e.id, edges.size());
            edges.push_back(std::move(e));
            edge_lines.push_back(lineno);
        } else {
            throw ParseError(lineno, "unknown directive '" + tok[0] + "'");
        }
    }
    if (edges.empty()) throw ParseError(0, "document declares no edges");

    // Incident-end order must agree with MetricGraph::ends.
    std::vector<std::vector<EdgeEnd>> ends(vertex_order.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        ends[edges[e].tail].push_back({e, EdgeSide::tail});
        ends[edges[e].head].push_back({e, EdgeSide::head});
    }

    std::vector<Vertex> vertices;
    vertices.reserve(vertex_order.size());
    for (std::size_t v = 0; v < vertex_order.size(); ++v) {
        const PendingVertex& pv = pending[v];
        Vertex vertex;
        vertex.id = vertex_order[v];
        vertex.condition.dirichlet = pv.dirichlet;
        const std::size_t deg = ends[v].size();
        if (deg == 0) throw ParseError(pv.line, "vertex '" + vertex.id + "' has no incident edges: graph is disconnected");
        if (!pv.robin.empty()) {
            if (pv.robin.size() != deg * deg)
                throw ParseError(pv.line, "robin block for '" + vertex.id + "' needs " + std::to_string(deg * deg) + " entries");
            const auto d = static_cast<Eigen::Index>(deg);
            vertex.condition.robin.resize(d, d);
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) vertex.condition.robin(i, j) = pv.robin[static_cast<std::size_t>(i * d + j)];
        }
        if (!pv.weights.empty()) {
            vertex.condition.weights.assign(deg, 1.0);
            for (const auto& [edge_id, w] : pv.weights) {
                const auto it = edge_ids.find(edge_id);
                if (it == edge_ids.end()) throw ParseError(pv.line, "weight for unknown edge '" + edge_id + "'");
                bool found = false;
                for (std::size_t k = 0; k < deg; ++k) {
                    if (ends[v][k].edge == it->second) {
                        vertex.condition.weights[k] = w;
                        found = true;
                    }
                }
                if (!found) throw ParseError(pv.line, "edge '" + edge_id + "' is not incident to '" + vertex.id + "'");
            }
        }
        vertices.push_back(std::move(vertex));
    }
    try {
        return MetricGraph(std::move(vertices), std::move(edges));
    } catch (const GraphError& err) {
        throw ParseError(0, err.what());
    }
}

/// Writes a graph in the format read by parse_graph. Numbers use the shortest
/// round-trip representation, so parse(format(g)) reproduces g exactly.
inline std::string format_graph(const MetricGraph& g) {
    std::ostringstream out;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const Vertex& vertex = g.vertices()[v];
        const VertexCondition& c = vertex.condition;
        out << "vertex " << vertex.id;
        if (c.dirichlet) {
            out << " dirichlet";
        } else {
            if (!c.robin.isZero(0.0)) {
                out << " robin";
                for (Eigen::Index i = 0; i < c.robin.rows(); ++i)
                    for (Eigen::Index j = 0; j < c.robin.cols(); ++j) out << ' ' << detail::shortest(c.robin(i, j));
            }
            bool natural = true;
            for (double w : c.weights) natural = natural && w == 1.0;
            if (!natural) {
                out << " weights";
                const auto& ends = g.ends(v);
                for (std::size_t k = 0; k < ends.size(); ++k) {
                    // a loop's two ends share one entry
                    if (k > 0 && ends[k - 1].edge == ends[k].edge) continue;
                    out << ' ' << g.edges()[ends[k].edge].id << ':' << detail::shortest(c.weights[k]);
                }
            }
        }
        out << '\n';
    }
    for (const Edge& e : g.edges()) {
        out << "edge " << e.id << ' ' << g.vertices()[e.tail].id << ' ' << g.vertices()[e.head].id << " length "
            << detail::shortest(e.length);
        if (e.potential != 0.0) out << " q " << detail::shortest(e.potential);
        out << '\n';
    }
    return out.str();
}

}  // namespace nodalgraph
