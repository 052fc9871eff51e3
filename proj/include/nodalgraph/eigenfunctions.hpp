#pragma once

#include "nodalgraph/errors.hpp"
#include "nodalgraph/fundamental.hpp"
#include "nodalgraph/graph_io.hpp"
#include "nodalgraph/secular_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nodalgraph {

/// Relative tolerance shared by zero detection, support and vertex merging.
inline constexpr double kZeroTol = 1e-9;

inline double evaluate(const EdgewiseSolution& f, std::size_t e, double x) {
    const EdgeSolution& s = f.edges.at(e);
    if (x < -1e-12 * s.length || x > s.length * (1.0 + 1e-12))
        throw std::out_of_range("evaluate: x outside [0, length] on edge " + std::to_string(e));
    const Fundamental fu = fundamental(s.mu, x);
    return s.a * fu.c + s.b * fu.s;
}

inline double evaluate_derivative(const EdgewiseSolution& f, std::size_t e, double x) {
    const EdgeSolution& s = f.edges.at(e);
    const Fundamental fu = fundamental(s.mu, x);
    return s.a * fu.dc + s.b * fu.ds;
}

/// max |f| over the edge, from the endpoints and the closed-form critical points.
inline double edge_sup_norm(const EdgewiseSolution& f, std::size_t e) {
    const EdgeSolution& s = f.edges.at(e);
    double sup = std::max(std::abs(evaluate(f, e, 0.0)), std::abs(evaluate(f, e, s.length)));
    if (s.mu > 0.0) {
        const double k = std::sqrt(s.mu);
        const double amp = std::hypot(s.a, s.b / k);
        const double phase = std::atan2(s.b / k, s.a);
        // peaks at k x - phase = m pi
        const double first = std::ceil(-phase / std::numbers::pi);
        if ((phase + first * std::numbers::pi) / k < s.length) sup = std::max(sup, amp);
    } else if (s.mu < 0.0 && s.a != 0.0) {
        const double kappa = std::sqrt(-s.mu);
        const double r = -s.b / (s.a * kappa);  // tanh(kappa x) at the critical point
        if (std::abs(r) < 1.0) {
            const double x = std::atanh(r) / kappa;
            if (x > 0.0 && x < s.length) sup = std::max(sup, std::abs(evaluate(f, e, x)));
        }
    }
    return sup;
}

struct EdgeZeros {
    std::vector<double> interior;  ///< strictly increasing, inside (0, length)
    bool at_tail = false;
    bool at_head = false;
    bool identically_zero = false;
};

struct ZeroSet {
    std::vector<EdgeZeros> edges;
};

struct SupportSet {
    std::vector<std::size_t> edges;
    double length = 0.0;
};

/// True when the L2 mass of f on e is negligible against the whole function.
inline bool edge_vanishes(const EdgewiseSolution& f, std::size_t e, double global_norm) {
    return std::sqrt(edge_mass(f, e)) <= kZeroTol * global_norm;
}

/// Zeros of f on edge e. Interior zeros come from the closed form of the
/// edge profile; endpoint zeros are flagged by |f| <= 1e-9 sup|f| and any
/// interior zero indistinguishable from a flagged endpoint is dropped.
inline EdgeZeros edge_zeros(const EdgewiseSolution& f, std::size_t e) {
    EdgeZeros z;
    const EdgeSolution& s = f.edges.at(e);
    if (edge_vanishes(f, e, l2_norm(f))) {
        z.identically_zero = true;
        return z;
    }
    const double sup = edge_sup_norm(f, e);
    z.at_tail = std::abs(evaluate(f, e, 0.0)) <= kZeroTol * sup;
    z.at_head = std::abs(evaluate(f, e, s.length)) <= kZeroTol * sup;
    const double len = s.length;
    std::vector<double> xs;
    if (std::abs(s.mu) * len * len < 1e-4) {
        // nearly linear profile: at most one zero
        if (s.b != 0.0) {
            double x = -s.a / s.b;
            for (int it = 0; it < 4 && std::isfinite(x); ++it) {
                const double d = evaluate_derivative(f, e, std::clamp(x, 0.0, len));
                if (d == 0.0) break;
                x -= (s.a * fundamental(s.mu, x).c + s.b * fundamental(s.mu, x).s) / d;
            }
            if (x > 0.0 && x < len) xs.push_back(x);
        }
    } else if (s.mu > 0.0) {
        const double k = std::sqrt(s.mu);
        const double phase = std::atan2(s.b / k, s.a);
        // zeros at k x = phase + pi/2 + m pi
        const double base = phase + 0.5 * std::numbers::pi;
        for (double m = std::ceil(-base / std::numbers::pi); ; m += 1.0) {
            const double x = (base + m * std::numbers::pi) / k;
            if (x >= len) break;
            if (x > 0.0) xs.push_back(x);
        }
    } else {
        const double kappa = std::sqrt(-s.mu);
        if (s.b != 0.0) {
            const double r = -s.a * kappa / s.b;  // tanh(kappa x) at the zero
            if (std::abs(r) < 1.0) {
                const double x = std::atanh(r) / kappa;
                if (x > 0.0 && x < len) xs.push_back(x);
            }
        }
    }
    const double near = 1e-7 * len;
    for (double x : xs) {
        if (z.at_tail && x < near) continue;
        if (z.at_head && len - x < near) continue;
        z.interior.push_back(x);
    }
    return z;
}

inline ZeroSet zero_set(const EdgewiseSolution& f) {
    ZeroSet zs;
    for (std::size_t e = 0; e < f.edges.size(); ++e) zs.edges.push_back(edge_zeros(f, e));
    return zs;
}

inline SupportSet support(const EdgewiseSolution& f) {
    const double nrm = l2_norm(f);
    if (!(nrm > 0.0)) throw BasisError("support of the zero function");
    SupportSet s;
    for (std::size_t e = 0; e < f.edges.size(); ++e) {
        if (edge_vanishes(f, e, nrm)) continue;
        s.edges.push_back(e);
        s.length += f.edges[e].length;
    }
    return s;
}

/// Rows for one eigenspace: each row lists one amplitude per edge.
struct TableEntry {
    std::size_t line = 0;
    std::vector<double> row;
};

/// Explicit basis choices. `indexed[n]` applies to the eigenspace containing
/// lambda_n; `wildcard` applies to every eigenspace whose multiplicity equals
/// its row count and that has no indexed entry.
struct BasisTable {
    std::map<std::size_t, std::vector<TableEntry>> indexed;
    std::vector<TableEntry> wildcard;
};

/// Reads lines `basis <n|*> row <c_1> ... <c_|E|>`; `#` starts a comment.
inline BasisTable parse_basis_table(std::string_view text) {
    BasisTable t;
    for (const auto& [lineno, tok] : detail::tokenise_document(text)) {
        if (tok[0] != "basis") throw ParseError(lineno, "unknown directive '" + tok[0] + "'");
        if (tok.size() < 4 || tok[2] != "row") throw ParseError(lineno, "expected: basis <index|*> row <c_1> ...");
        TableEntry entry;
        entry.line = lineno;
        for (std::size_t i = 3; i < tok.size(); ++i) {
            const auto x = detail::to_double(tok[i]);
            if (!x) throw ParseError(lineno, "bad coefficient '" + tok[i] + "'");
            entry.row.push_back(*x);
        }
        if (tok[1] == "*") {
            t.wildcard.push_back(std::move(entry));
        } else {
            const auto n = detail::to_double(tok[1]);
            if (!n || *n < 1.0 || std::floor(*n) != *n) throw ParseError(lineno, "bad eigenvalue index '" + tok[1] + "'");
            t.indexed[static_cast<std::size_t>(*n)].push_back(std::move(entry));
        }
    }
    return t;
}

struct BasisStrategy {
    enum class Kind { solver_default, support_max, user_table };
    Kind kind = Kind::solver_default;
    BasisTable table;

    static BasisStrategy solver_default() { return {}; }
    static BasisStrategy support_max() { return {Kind::support_max, {}}; }
    static BasisStrategy user_table(BasisTable t) { return {Kind::user_table, std::move(t)}; }
};

namespace detail {

inline void scale_solution(EdgewiseSolution& f, double s) {
    for (EdgeSolution& x : f.edges) {
        x.a *= s;
        x.b *= s;
    }
}

inline void axpy(EdgewiseSolution& y, double alpha, const EdgewiseSolution& x) {
    for (std::size_t e = 0; e < y.edges.size(); ++e) {
        y.edges[e].a += alpha * x.edges[e].a;
        y.edges[e].b += alpha * x.edges[e].b;
    }
}

/// Loewdin orthonormalization: F G^{-1/2}, the closest orthonormal family.
inline std::vector<EdgewiseSolution> symmetric_orthonormalize(const std::vector<EdgewiseSolution>& fs) {
    const auto m = static_cast<Eigen::Index>(fs.size());
    Eigen::MatrixXd gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) gram(i, j) = l2_inner(fs[static_cast<std::size_t>(i)], fs[static_cast<std::size_t>(j)]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.eigenvalues().minCoeff() <= 0.0) throw BasisError("basis family is linearly dependent");
    const Eigen::MatrixXd inv_sqrt = eig.operatorInverseSqrt();
    std::vector<EdgewiseSolution> out;
    for (Eigen::Index j = 0; j < m; ++j) out.push_back(combine(fs, inv_sqrt.col(j)));
    return out;
}

/// Per-edge mass of cos(t) u + sin(t) v as alpha + beta cos 2t + gamma sin 2t.
struct MassHarmonic {
    double alpha = 0.0, beta = 0.0, gamma = 0.0, length = 1.0;
    double at(double t) const { return alpha + beta * std::cos(2.0 * t) + gamma * std::sin(2.0 * t); }
};

inline std::vector<MassHarmonic> mass_harmonics(const EdgewiseSolution& u, const EdgewiseSolution& v) {
    std::vector<MassHarmonic> out;
    for (std::size_t e = 0; e < u.edges.size(); ++e) {
        const EdgeSolution& x = u.edges[e];
        const EdgeSolution& y = v.edges[e];
        const EdgeGram gr = edge_gram(x.mu, x.length);
        const double uu = x.a * x.a * gr.cc + 2.0 * x.a * x.b * gr.cs + x.b * x.b * gr.ss;
        const double vv = y.a * y.a * gr.cc + 2.0 * y.a * y.b * gr.cs + y.b * y.b * gr.ss;
        const double uv = x.a * y.a * gr.cc + (x.a * y.b + x.b * y.a) * gr.cs + x.b * y.b * gr.ss;
        out.push_back({0.5 * (uu + vv), 0.5 * (uu - vv), uv, x.length});
    }
    return out;
}

/// Lexicographic support objective of a unit function: (supported length, min mass density).
struct SupportScore {
    double length = 0.0;
    double density = 0.0;

    bool better_than(const SupportScore& o) const {
        const double tol = 1e-12 * std::max(1.0, o.length);
        if (length > o.length + tol) return true;
        if (length < o.length - tol) return false;
        return density > o.density * (1.0 + 1e-12) + 1e-300;
    }
};

inline SupportScore score_at(const std::vector<MassHarmonic>& h, double t) {
    double total = 0.0;
    for (const auto& m : h) total += std::max(0.0, m.at(t));
    SupportScore s;
    s.density = std::numeric_limits<double>::infinity();
    for (const auto& m : h) {
        const double mass = std::max(0.0, m.at(t));
        if (std::sqrt(mass) <= kZeroTol * std::sqrt(total)) continue;
        s.length += m.length;
        s.density = std::min(s.density, mass / m.length);
    }
    if (s.length == 0.0) s.density = 0.0;
    return s;
}

/// Best rotation angle for the pair (u, v): 64 samples plus every angle where
/// one edge density peaks or vanishes or two densities cross, so the optimum of
/// the piecewise-harmonic objective is hit to machine precision.
inline double best_rotation(const EdgewiseSolution& u, const EdgewiseSolution& v) {
    const std::vector<MassHarmonic> h = mass_harmonics(u, v);
    std::vector<double> cands;
    for (int i = 0; i < 64; ++i) cands.push_back(std::numbers::pi * i / 64.0);
    const auto push_phase = [&](double phi) {  // phi = 2 t
        double t = 0.5 * phi;
        t = std::fmod(t, std::numbers::pi);
        if (t < 0.0) t += std::numbers::pi;
        cands.push_back(t);
    };
    const auto solve = [&](double a, double b, double c) {  // a cos phi + b sin phi = c
        const double r = std::hypot(a, b);
        if (r == 0.0 || std::abs(c) > r) return;
        const double psi = std::atan2(b, a);
        const double d = std::acos(std::clamp(c / r, -1.0, 1.0));
        push_phase(psi + d);
        push_phase(psi - d);
    };
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double scale = h[i].length;
        push_phase(std::atan2(h[i].gamma, h[i].beta));  // density peak
        solve(h[i].beta, h[i].gamma, -h[i].alpha);      // mass zero
        for (std::size_t j = i + 1; j < h.size(); ++j) {
            const double sj = h[j].length;
            solve(h[i].beta / scale - h[j].beta / sj, h[i].gamma / scale - h[j].gamma / sj, h[j].alpha / sj - h[i].alpha / scale);
        }
    }
    double best_t = 0.0;
    SupportScore best = score_at(h, 0.0);
    for (double t : cands) {
        const SupportScore s = score_at(h, t);
        if (s.better_than(best)) {
            best = s;
            best_t = t;
        }
    }
    return best_t;
}

inline SupportScore score_of(const EdgewiseSolution& f) {
    return score_at(mass_harmonics(f, f), 0.0);
}

inline std::vector<EdgewiseSolution> support_max(std::vector<EdgewiseSolution> q) {
    const std::size_t m = q.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (int sweep = 0; sweep < 16; ++sweep) {
            bool moved = false;
            for (std::size_t j = i + 1; j < m; ++j) {
                const double t = best_rotation(q[i], q[j]);
                if (t == 0.0) continue;
                const double c = std::cos(t), s = std::sin(t);
                EdgewiseSolution u = q[i];
                EdgewiseSolution v = q[j];
                scale_solution(u, c);
                axpy(u, s, q[j]);
                scale_solution(v, c);
                axpy(v, -s, q[i]);
                if (!score_of(u).better_than(score_of(q[i]))) continue;
                q[i] = std::move(u);
                q[j] = std::move(v);
                moved = true;
            }
            if (!moved) break;
        }
    }
    return q;
}

/// Signed per-edge amplitudes of every member of an eigenspace: on each edge
/// all members are multiples of one reference profile, fixed by its
/// (a, b / omega) direction with the b-component (else a) positive.
inline Eigen::MatrixXd edge_amplitudes(const std::vector<EdgewiseSolution>& basis) {
    const auto m = static_cast<Eigen::Index>(basis.size());
    const std::size_t ne = basis.front().edges.size();
    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(ne));
    for (std::size_t e = 0; e < ne; ++e) {
        const double mu = basis.front().edges[e].mu;
        const double omega = std::abs(mu) * basis.front().edges[e].length * basis.front().edges[e].length < 1e-12
                                 ? 1.0 / basis.front().edges[e].length
                                 : std::sqrt(std::abs(mu));
        Eigen::MatrixXd coeff(m, 2);
        for (Eigen::Index i = 0; i < m; ++i) {
            coeff(i, 0) = basis[static_cast<std::size_t>(i)].edges[e].a;
            coeff(i, 1) = basis[static_cast<std::size_t>(i)].edges[e].b / omega;
        }
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(coeff, Eigen::ComputeFullV);
        const Eigen::VectorXd sv = svd.singularValues();
        if (sv(0) <= kZeroTol) continue;
        if (sv.size() > 1 && sv(1) > 1e-8 * sv(0))
            throw BasisError("edge " + std::to_string(e) + " carries a two-dimensional restriction of the eigenspace; amplitude rows are ambiguous");
        Eigen::Vector2d dir = svd.matrixV().col(0);
        if (dir(1) < -1e-12 || (std::abs(dir(1)) <= 1e-12 && dir(0) < 0.0)) dir = -dir;
        amp.col(static_cast<Eigen::Index>(e)) = coeff * dir;
    }
    return amp;
}

inline std::vector<EdgewiseSolution> from_table(const std::vector<EdgewiseSolution>& basis, const std::vector<TableEntry>& rows) {
    const std::size_t ne = basis.front().edges.size();
    if (rows.size() > basis.size())
        throw BasisError("table gives " + std::to_string(rows.size()) + " rows for an eigenspace of dimension " + std::to_string(basis.size()));
    const Eigen::MatrixXd amp = edge_amplitudes(basis);
    const Eigen::MatrixXd at = amp.transpose();
    std::vector<EdgewiseSolution> out;
    for (const TableEntry& entry : rows) {
        if (entry.row.size() != ne)
            throw BasisError("table row on line " + std::to_string(entry.line) + " has " + std::to_string(entry.row.size()) +
                             " entries, expected " + std::to_string(ne));
        const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(entry.row.data(), static_cast<Eigen::Index>(ne));
        if (c.norm() == 0.0) throw BasisError("table row on line " + std::to_string(entry.line) + " is zero");
        const Eigen::VectorXd x = at.colPivHouseholderQr().solve(c);
        if ((at * x - c).norm() >= 1e-6 * c.norm())
            throw BasisError("table row on line " + std::to_string(entry.line) + " is not in the eigenspace");
        EdgewiseSolution f = combine(basis, x);
        scale_solution(f, 1.0 / l2_norm(f));
        out.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(l2_inner(out[i], out[j])) > 1e-8)
                throw BasisError("table rows on lines " + std::to_string(rows[j].line) + " and " + std::to_string(rows[i].line) +
                                 " are not orthogonal");
    // Complete with the parts of the numerical basis orthogonal to the rows.
    std::vector<EdgewiseSolution> rest = basis;
    while (out.size() < basis.size()) {
        std::size_t best = 0;
        double best_norm = -1.0;
        std::vector<EdgewiseSolution> proj = rest;
        for (std::size_t k = 0; k < proj.size(); ++k) {
            for (int pass = 0; pass < 2; ++pass)
                for (const EdgewiseSolution& q : out) axpy(proj[k], -l2_inner(proj[k], q), q);
            const double n = l2_norm(proj[k]);
            if (n > best_norm) best_norm = n, best = k;
        }
        scale_solution(proj[best], 1.0 / best_norm);
        out.push_back(proj[best]);
    }
    return symmetric_orthonormalize(out);
}

}  // namespace detail

/// Re-chooses an orthonormal basis of one eigenspace. `first_index` is the
/// index n of the eigenspace's first member in the counting sequence, used to
/// look up table rows.
inline std::vector<EdgewiseSolution> apply_strategy(const std::vector<EdgewiseSolution>& basis, const BasisStrategy& strategy,
                                                    std::size_t first_index = 1) {
    if (basis.size() <= 1) return basis;
    switch (strategy.kind) {
        case BasisStrategy::Kind::solver_default:
            return basis;
        case BasisStrategy::Kind::support_max:
            return detail::symmetric_orthonormalize(detail::support_max(basis));
        case BasisStrategy::Kind::user_table: {
            const BasisTable& t = strategy.table;
            for (std::size_t n = first_index; n < first_index + basis.size(); ++n)
                if (auto it = t.indexed.find(n); it != t.indexed.end()) return detail::from_table(basis, it->second);
            if (!t.wildcard.empty() && t.wildcard.size() == basis.size()) return detail::from_table(basis, t.wildcard);
            return basis;
        }
    }
    return basis;
}

}  // namespace nodalgraph
