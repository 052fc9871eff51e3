#pragma once

#include "nodalgraph/errors.hpp"
#include "nodalgraph/fundamental.hpp"
#include "nodalgraph/metric_graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace nodalgraph {

struct SolverConfig {
    /// Grid step in t = sign(lambda) sqrt|lambda|; 0 selects pi / (8 |G|).
    double scan_step = 0.0;
    /// Relative singular-value threshold for the numerical nullity.
    double rank_tol = 1e-8;
    /// Root refinement tolerance on t (relative to max(1, |t|)).
    double refine_tol = 1e-12;
    /// Lower end of the search; derived from the robin blocks when empty.
    std::optional<double> lambda_floor;
    /// Maximum number of grid windows before giving up.
    std::size_t max_windows = 20'000'000;
    /// Worker threads for the window scan; 0 reads NODALGRAPH_THREADS (default 1).
    std::size_t threads = 0;
};

struct SpectralProblem {
    MetricGraph graph;
    SolverConfig config;
};

struct Eigenvalue {
    double value = 0.0;
    std::size_t multiplicity = 1;
    /// Largest of the `multiplicity` smallest singular values of the row-scaled M(value).
    double residual = 0.0;
};

/// f_e(x) = a c(x; mu) + b s(x; mu) on [0, length], mu = lambda - q_e.
struct EdgeSolution {
    double a = 0.0;
    double b = 0.0;
    double mu = 0.0;
    double length = 1.0;
};

struct EdgewiseSolution {
    double lambda = 0.0;
    std::vector<EdgeSolution> edges;
};

inline double lambda_of(double t) { return t * std::abs(t); }
inline double t_of(double lambda) { return std::copysign(std::sqrt(std::abs(lambda)), lambda); }

/// Default grid step: eight samples per mean root gap pi / |G| in t.
inline double default_scan_step(const MetricGraph& g) { return std::numbers::pi / (8.0 * g.total_length()); }

namespace detail {

struct EndTrace {
    // trace f_e(v) = va a + vb b; outward derivative = da a + db b
    double va, vb, da, db;
};

/// Trace coefficients at one edge end together with a magnitude envelope that
/// does not cancel when c or s pass through zero.
inline std::pair<EndTrace, EndTrace> end_trace(const Edge& edge, EdgeSide side, double lambda) {
    if (side == EdgeSide::tail) return {{1.0, 0.0, 0.0, -1.0}, {1.0, 0.0, 0.0, 1.0}};
    const double mu = lambda - edge.potential;
    const Fundamental f = fundamental(mu, edge.length);
    const double k = std::sqrt(std::abs(mu));
    const double s_env = std::max(std::abs(f.s), std::min(edge.length, k > 0.0 ? 1.0 / k : edge.length));
    const double ds_env = std::max(std::abs(f.dc), std::abs(mu) * std::min(edge.length, k > 0.0 ? 1.0 / k : edge.length));
    const double c_env = std::max(std::abs(f.c), 1.0);
    return {{f.c, f.s, f.dc, f.ds}, {c_env, s_env, ds_env, c_env}};
}

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NODALGRAPH_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    return 1;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

namespace detail {

/// Assembles M(lambda) and, alongside, the same rows built from trace
/// envelopes; the envelope row norms are the row scales.
inline void assemble_conditions(const SpectralProblem& p, double lambda, Eigen::MatrixXd& m, Eigen::MatrixXd& env) {
    const MetricGraph& g = p.graph;
    const auto n = static_cast<Eigen::Index>(2 * g.edge_count());
    m = Eigen::MatrixXd::Zero(n, n);
    env = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index row = 0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto& ends = g.ends(v);
        std::vector<EndTrace> tr;
        std::vector<EndTrace> en;
        for (const EdgeEnd& end : ends) {
            const auto [t, e] = end_trace(g.edges()[end.edge], end.side, lambda);
            tr.push_back(t);
            en.push_back(e);
        }
        const auto col = [&](std::size_t k) { return static_cast<Eigen::Index>(2 * ends[k].edge); };
        const auto add = [&](std::size_t k, double ca, double cb, double ea, double eb) {
            m(row, col(k)) += ca;
            m(row, col(k) + 1) += cb;
            env(row, col(k)) += std::abs(ea);
            env(row, col(k) + 1) += std::abs(eb);
        };
        if (g.is_dirichlet(v)) {
            for (std::size_t k = 0; k < ends.size(); ++k, ++row) add(k, tr[k].va, tr[k].vb, en[k].va, en[k].vb);
            continue;
        }
        const double w1 = g.weight(v, 0);
        for (std::size_t k = 1; k < ends.size(); ++k, ++row) {
            const double wk = g.weight(v, k);
            add(0, w1 * tr[0].va, w1 * tr[0].vb, w1 * en[0].va, w1 * en[0].vb);
            add(k, -wk * tr[k].va, -wk * tr[k].vb, wk * en[k].va, wk * en[k].vb);
        }
        const double rho = g.robin_scalar(v);
        const double mean = 1.0 / static_cast<double>(ends.size());
        for (std::size_t k = 0; k < ends.size(); ++k) {
            const double wk = g.weight(v, k);
            const double r = rho * mean * wk;
            add(k, tr[k].da / wk + r * tr[k].va, tr[k].db / wk + r * tr[k].vb, en[k].da / wk + std::abs(r) * en[k].va,
                en[k].db / wk + std::abs(r) * en[k].vb);
        }
        ++row;
    }
}

}  // namespace detail

/// Vertex-condition matrix M(lambda), (2|E|) x (2|E|), acting on the edge
/// coefficients (a_0, b_0, a_1, b_1, ...). Per vertex v:
///   Dirichlet: one row f_e(v) = 0 per incident end;
///   otherwise: w_1 f_1(v) - w_j f_j(v) = 0 for j >= 2, and the Kirchhoff-Robin
///   row sum_j d_nu f_j(v) / w_j + rho_v c_v = 0 with c_v the mean of w_j f_j(v).
/// d_nu is the derivative pointing out of the edge into the vertex.
inline Eigen::MatrixXd vertex_condition_matrix(const SpectralProblem& p, double lambda) {
    Eigen::MatrixXd m, env;
    detail::assemble_conditions(p, lambda, m, env);
    return m;
}

/// M(lambda) with rows scaled to unit size. The scale of a row is the norm of
/// its envelope row (|c|, |s| replaced by bounds that never vanish), so a row
/// that cancels exactly at an eigenvalue stays small instead of being
/// inflated to a unit row of rounding noise.
inline Eigen::MatrixXd scaled_condition_matrix(const SpectralProblem& p, double lambda) {
    Eigen::MatrixXd m, env;
    detail::assemble_conditions(p, lambda, m, env);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double nrm = env.row(r).norm();
        if (nrm > 0.0) m.row(r) /= nrm;
    }
    return m;
}

/// Singular values of the row-scaled M(lambda), descending.
inline Eigen::VectorXd secular_singular_values(const SpectralProblem& p, double lambda) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled_condition_matrix(p, lambda));
    return svd.singularValues();
}

/// Reference size for the nullity threshold. Scaled rows never exceed unit
/// norm, so 1 is the natural scale; the largest singular value only takes
/// over above it. At a point where every condition cancels at once (a lone
/// loop at a sine mode) the whole matrix is rounding noise and a purely
/// relative threshold would see no nullspace at all.
inline double nullity_scale(const Eigen::VectorXd& sv_desc) { return std::max(1.0, sv_desc(0)); }

/// Smallest singular value of the row-scaled M(lambda); zero exactly at eigenvalues.
inline double secular_min_sv(const SpectralProblem& p, double lambda) {
    const Eigen::VectorXd sv = secular_singular_values(p, lambda);
    return sv(sv.size() - 1);
}

/// Number of eigenvalues strictly below lambda, counted with multiplicity.
///
/// Uses the decomposition of the form domain into functions vanishing at all
/// vertices plus lambda-solutions with prescribed vertex values: the count is
/// the decoupled Dirichlet count plus the negative inertia of the vertex
/// Dirichlet-to-Neumann form Lambda(lambda). Requires lambda to stay away from
/// the edgewise Dirichlet eigenvalues, where Lambda has poles.
inline std::size_t eigenvalue_count_below(const SpectralProblem& p, double lambda) {
    const MetricGraph& g = p.graph;
    std::vector<Eigen::Index> index(g.vertex_count(), -1);
    Eigen::Index r = 0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        if (!g.is_dirichlet(v)) index[v] = r++;
    std::size_t negative = 0;
    if (r > 0) {
        Eigen::MatrixXd dtn = Eigen::MatrixXd::Zero(r, r);
        for (std::size_t v = 0; v < g.vertex_count(); ++v)
            if (index[v] >= 0) dtn(index[v], index[v]) += g.robin_scalar(v);
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const Edge& edge = g.edges()[e];
            const Fundamental f = fundamental(lambda - edge.potential, edge.length);
            const double diag = f.c / f.s;
            const double off = -1.0 / f.s;
            const Eigen::Index it = index[edge.tail];
            const Eigen::Index ih = index[edge.head];
            const double ut = it >= 0 ? 1.0 / g.weight(EdgeEnd{e, EdgeSide::tail}) : 0.0;
            const double uh = ih >= 0 ? 1.0 / g.weight(EdgeEnd{e, EdgeSide::head}) : 0.0;
            if (it >= 0) dtn(it, it) += diag * ut * ut;
            if (ih >= 0) dtn(ih, ih) += diag * uh * uh;
            if (it >= 0 && ih >= 0) {
                dtn(it, ih) += off * ut * uh;
                dtn(ih, it) += off * ut * uh;
            }
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dtn, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < r; ++i)
            if (eig.eigenvalues()(i) < 0.0) ++negative;
    }
    return decoupled_dirichlet_count_below(g, lambda) + negative;
}

/// Crude form lower bound -(sum_v ||A_vv|| max_e w_{e,v}^-2)^2 - 1; q >= 0 adds nothing negative.
inline double derived_lambda_floor(const MetricGraph& g) {
    double s = 0.0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (g.is_dirichlet(v)) continue;
        const VertexCondition& c = g.vertices()[v].condition;
        double scale = 0.0;
        for (double w : c.weights) scale = std::max(scale, 1.0 / (w * w));
        const double norm = c.robin.size() == 0 ? 0.0 : c.robin.operatorNorm();
        s += norm * scale;
    }
    return -s * s - 1.0;
}

namespace detail {

struct Root {
    double t = 0.0;
    std::size_t sv_multiplicity = 0;
    Eigen::VectorXd singular;  // ascending
};

/// Window scan of the secular function backed by the exact eigenvalue count.
class Scanner {
public:
    explicit Scanner(const SpectralProblem& p) : p_(p) {}

    double sigma(double t) const { return secular_min_sv(p_, lambda_of(t)); }

    std::size_t count(double t) const { return eigenvalue_count_below(p_, lambda_of(t)); }

    /// Phase distance of t from the nearest edgewise Dirichlet eigenvalue.
    double dirichlet_clearance(double t) const {
        const double lambda = lambda_of(t);
        double best = std::numeric_limits<double>::infinity();
        for (const Edge& e : p_.graph.edges()) {
            const double mu = lambda - e.potential;
            if (mu <= 0.0) continue;
            const double phase = std::sqrt(mu) * e.length;
            const double m = std::round(phase / std::numbers::pi);
            if (m < 1.0) continue;
            best = std::min(best, std::abs(phase - m * std::numbers::pi));
        }
        return best;
    }

    /// A point near `nominal` inside (lo, hi) where the count is reliable:
    /// clear of Dirichlet poles and of eigenvalues.
    double pick_point(double nominal, double lo, double hi) const {
        constexpr double kClear = 1e-6;
        const double step = (hi - lo) / 64.0;
        double best_t = nominal;
        double best_score = -1.0;
        for (int j = 0; j < 61; ++j) {
            const int offset = (j % 2 == 1) ? (j + 1) / 2 : -(j / 2);
            const double t = nominal + offset * step;
            if (!(t > lo) || !(t < hi)) continue;
            const double score = std::min(dirichlet_clearance(t) / kClear, sigma(t) / kClear);
            if (score >= 1.0) return t;
            if (score > best_score) {
                best_score = score;
                best_t = t;
            }
        }
        return best_t;
    }

    /// Resolves the `m` eigenvalues (with multiplicity) lying in [a, b).
    void resolve(double a, double b, std::size_t m, int depth, std::vector<Eigenvalue>& out) const {
        if (m == 0) return;
        std::vector<Root> roots = local_roots(a, b);
        std::size_t total = 0;
        for (const Root& r : roots) total += r.sv_multiplicity;
        if (total == m) {
            for (const Root& r : roots) out.push_back(make_eigenvalue(r, r.sv_multiplicity));
            return;
        }
        if (roots.size() == 1 && total > m) {
            out.push_back(make_eigenvalue(roots[0], m));
            return;
        }
        const double scale = std::max(1.0, std::max(std::abs(a), std::abs(b)));
        if (depth < 64 && b - a > 1e-10 * scale) {
            const double mid = pick_point(0.5 * (a + b), a, b);
            if (mid > a && mid < b) {
                const std::size_t na = count(a);
                const std::size_t nm = count(mid);
                if (nm >= na && nm - na <= m) {
                    resolve(a, mid, nm - na, depth + 1, out);
                    resolve(mid, b, m - (nm - na), depth + 1, out);
                    return;
                }
            }
        }
        if (roots.empty())
            throw SolverError("could not locate " + std::to_string(m) + " eigenvalue(s) in t-window [" + std::to_string(a) +
                              ", " + std::to_string(b) + ")");
        // Unsplittable cluster: the exact count is authoritative.
        if (roots.size() == 1) {
            out.push_back(make_eigenvalue(roots[0], m));
            return;
        }
        std::vector<std::size_t> mult;
        for (const Root& r : roots) mult.push_back(std::max<std::size_t>(1, r.sv_multiplicity));
        std::size_t sum = 0;
        for (auto k : mult) sum += k;
        while (sum > m) {
            auto it = std::max_element(mult.begin(), mult.end());
            if (*it == 1) break;
            --*it;
            --sum;
        }
        if (sum < m) {
            mult[0] += m - sum;
        } else if (sum > m) {
            throw SolverError("inconsistent root multiplicities in a degenerate t-window");
        }
        for (std::size_t i = 0; i < roots.size(); ++i) out.push_back(make_eigenvalue(roots[i], mult[i]));
    }

private:
    Eigenvalue make_eigenvalue(const Root& r, std::size_t multiplicity) const {
        const std::size_t n = static_cast<std::size_t>(r.singular.size());
        if (multiplicity > n) throw SolverError("detected nullity exceeds the sum of vertex degrees");
        Eigenvalue ev;
        ev.value = lambda_of(r.t);
        ev.multiplicity = multiplicity;
        ev.residual = r.singular(static_cast<Eigen::Index>(multiplicity - 1));
        return ev;
    }

    double golden_min(double lo, double hi) const {
        constexpr double kInvPhi = 0.6180339887498949;
        const double tol = p_.config.refine_tol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        double x1 = hi - kInvPhi * (hi - lo);
        double x2 = lo + kInvPhi * (hi - lo);
        double f1 = sigma(x1);
        double f2 = sigma(x2);
        double best_t = f1 < f2 ? x1 : x2;
        double best_f = std::min(f1, f2);
        for (int it = 0; it < 300 && hi - lo > tol; ++it) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - kInvPhi * (hi - lo);
                f1 = sigma(x1);
                if (f1 < best_f) best_f = f1, best_t = x1;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + kInvPhi * (hi - lo);
                f2 = sigma(x2);
                if (f2 < best_f) best_f = f2, best_t = x2;
            }
        }
        return best_t;
    }

    std::vector<Root> local_roots(double a, double b) const {
        constexpr int kSamples = 8;
        std::vector<double> ts(kSamples + 1);
        std::vector<double> ss(kSamples + 1);
        for (int j = 0; j <= kSamples; ++j) {
            ts[j] = a + (b - a) * j / kSamples;
            ss[j] = sigma(ts[j]);
        }
        std::vector<Root> roots;
        for (int j = 0; j <= kSamples; ++j) {
            const bool left_ok = j == 0 || ss[j] <= ss[j - 1];
            const bool right_ok = j == kSamples || ss[j] <= ss[j + 1];
            if (!left_ok || !right_ok) continue;
            const double lo = ts[std::max(0, j - 1)];
            const double hi = ts[std::min(kSamples, j + 1)];
            const double t = golden_min(lo, hi);
            if (!(t > a && t < b)) continue;
            const Eigen::VectorXd sv_desc = secular_singular_values(p_, lambda_of(t));
            const double thresh = p_.config.rank_tol * nullity_scale(sv_desc);
            Root r;
            r.t = t;
            r.singular = sv_desc.reverse();
            for (Eigen::Index i = 0; i < r.singular.size(); ++i)
                if (r.singular(i) <= thresh) ++r.sv_multiplicity;
            if (r.sv_multiplicity == 0) continue;
            const double dedup = 1e-9 * std::max(1.0, std::abs(t));
            const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const Root& o) { return std::abs(o.t - t) < dedup; });
            if (!duplicate) roots.push_back(std::move(r));
        }
        std::sort(roots.begin(), roots.end(), [](const Root& x, const Root& y) { return x.t < y.t; });
        return roots;
    }

    const SpectralProblem& p_;
};

}  // namespace detail

/// Searches the lower end of the spectrum: the derived (or configured) floor,
/// pushed down until no eigenvalue lies below it.
inline double verified_lambda_floor(const SpectralProblem& p) {
    double floor = p.config.lambda_floor.value_or(derived_lambda_floor(p.graph));
    if (floor > -1.0) floor = -1.0;
    for (int i = 0; i < 80; ++i) {
        if (eigenvalue_count_below(p, floor) == 0) return floor;
        floor *= 4.0;
    }
    throw SolverError("spectrum appears unbounded below");
}

/// First `count` eigenvalues (with multiplicity) in ascending order. Groups
/// are never split, so the multiplicities may add up to slightly more than
/// `count` when the last eigenvalue is degenerate.
inline std::vector<Eigenvalue> find_eigenvalues(const SpectralProblem& p, std::size_t count) {
    if (count == 0) throw SolverError("count must be positive");
    const detail::Scanner scan(p);
    const double h = p.config.scan_step > 0.0 ? p.config.scan_step : default_scan_step(p.graph);
    const double t_floor = t_of(verified_lambda_floor(p));
    const std::size_t threads = detail::resolve_threads(p.config.threads);
    constexpr std::size_t kBatch = 64;

    std::vector<Eigenvalue> found;
    std::size_t total = 0;
    double t_prev = t_floor;
    std::size_t n_prev = 0;
    std::size_t windows = 0;
    while (total < count) {
        std::vector<double> grid(kBatch);
        for (std::size_t i = 0; i < kBatch; ++i) {
            const double nominal = t_floor + static_cast<double>(windows + i + 1) * h;
            grid[i] = scan.pick_point(nominal, nominal - 0.25 * h, nominal + 0.25 * h);
        }
        std::vector<std::size_t> counts(kBatch);
        detail::parallel_for(kBatch, threads, [&](std::size_t i) { counts[i] = scan.count(grid[i]); });
        std::vector<std::vector<Eigenvalue>> parts(kBatch);
        std::size_t last_needed = kBatch;
        std::size_t running = total;
        for (std::size_t i = 0; i < kBatch; ++i) {
            const std::size_t before = i == 0 ? n_prev : counts[i - 1];
            if (counts[i] < before) throw SolverError("eigenvalue count decreased along the scan; increase precision");
            running += counts[i] - before;
            if (running >= count) {
                last_needed = i + 1;
                break;
            }
        }
        detail::parallel_for(last_needed, threads, [&](std::size_t i) {
            const double a = i == 0 ? t_prev : grid[i - 1];
            const std::size_t before = i == 0 ? n_prev : counts[i - 1];
            scan.resolve(a, grid[i], counts[i] - before, 0, parts[i]);
        });
        for (std::size_t i = 0; i < last_needed; ++i) {
            for (const Eigenvalue& ev : parts[i]) {
                found.push_back(ev);
                total += ev.multiplicity;
            }
        }
        t_prev = grid[last_needed - 1];
        n_prev = counts[last_needed - 1];
        windows += last_needed;
        if (windows > p.config.max_windows)
            throw SolverError("scan budget exhausted before " + std::to_string(count) + " eigenvalues were found; scan_step too coarse");
    }
    return found;
}

/// Eigenvalues listed once per index, lambda_1 <= lambda_2 <= ... (first n entries).
inline std::vector<double> expand_eigenvalues(const std::vector<Eigenvalue>& eigs, std::size_t n) {
    std::vector<double> out;
    for (const Eigenvalue& ev : eigs)
        for (std::size_t k = 0; k < ev.multiplicity && out.size() < n; ++k) out.push_back(ev.value);
    return out;
}

inline std::size_t total_multiplicity(const std::vector<Eigenvalue>& eigs) {
    std::size_t n = 0;
    for (const Eigenvalue& ev : eigs) n += ev.multiplicity;
    return n;
}

/// L2(G) inner product of two edgewise solutions sharing the same eigenvalue.
inline double l2_inner(const EdgewiseSolution& f, const EdgewiseSolution& g) {
    double s = 0.0;
    for (std::size_t e = 0; e < f.edges.size(); ++e) {
        const EdgeSolution& x = f.edges[e];
        const EdgeSolution& y = g.edges[e];
        const EdgeGram gr = edge_gram(x.mu, x.length);
        s += x.a * y.a * gr.cc + (x.a * y.b + x.b * y.a) * gr.cs + x.b * y.b * gr.ss;
    }
    return s;
}

inline double l2_norm(const EdgewiseSolution& f) { return std::sqrt(std::max(0.0, l2_inner(f, f))); }

/// Squared L2 norm of f restricted to edge e.
inline double edge_mass(const EdgewiseSolution& f, std::size_t e) {
    const EdgeSolution& x = f.edges[e];
    const EdgeGram gr = edge_gram(x.mu, x.length);
    return std::max(0.0, x.a * x.a * gr.cc + 2.0 * x.a * x.b * gr.cs + x.b * x.b * gr.ss);
}

/// sum_i coeffs[i] * basis[i]
inline EdgewiseSolution combine(const std::vector<EdgewiseSolution>& basis, const Eigen::VectorXd& coeffs) {
    EdgewiseSolution out = basis.at(0);
    for (std::size_t e = 0; e < out.edges.size(); ++e) {
        out.edges[e].a = 0.0;
        out.edges[e].b = 0.0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            out.edges[e].a += coeffs(static_cast<Eigen::Index>(i)) * basis[i].edges[e].a;
            out.edges[e].b += coeffs(static_cast<Eigen::Index>(i)) * basis[i].edges[e].b;
        }
    }
    return out;
}

/// Row-scaled residual ||M x|| / ||x|| of the coefficient vector of f.
inline double condition_residual(const SpectralProblem& p, const EdgewiseSolution& f) {
    const Eigen::MatrixXd m = scaled_condition_matrix(p, f.lambda);
    Eigen::VectorXd x(m.cols());
    for (std::size_t e = 0; e < f.edges.size(); ++e) {
        x(static_cast<Eigen::Index>(2 * e)) = f.edges[e].a;
        x(static_cast<Eigen::Index>(2 * e + 1)) = f.edges[e].b;
    }
    return (m * x).norm() / x.norm();
}

/// L2-orthonormal basis of the eigenspace of `ev`, from the numerical nullspace of M.
inline std::vector<EdgewiseSolution> eigenbasis(const SpectralProblem& p, const Eigenvalue& ev) {
    const MetricGraph& g = p.graph;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled_condition_matrix(p, ev.value), Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const Eigen::Index n = sv.size();
    const auto m = static_cast<Eigen::Index>(ev.multiplicity);
    if (m > n) throw SolverError("multiplicity exceeds the sum of vertex degrees");
    const double loose = 1e-5 * nullity_scale(sv);
    if (sv(n - m) > loose)
        throw SolverError("nullspace dimension disagrees with the recorded multiplicity at lambda = " + std::to_string(ev.value));

    std::vector<EdgewiseSolution> raw;
    for (Eigen::Index i = n - m; i < n; ++i) {
        EdgewiseSolution f;
        f.lambda = ev.value;
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const Edge& edge = g.edges()[e];
            f.edges.push_back({svd.matrixV()(static_cast<Eigen::Index>(2 * e), i), svd.matrixV()(static_cast<Eigen::Index>(2 * e + 1), i),
                               ev.value - edge.potential, edge.length});
        }
        raw.push_back(std::move(f));
    }
    // Gram-Schmidt in L2(G), done twice for stability.
    std::vector<EdgewiseSolution> out;
    for (EdgewiseSolution f : raw) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const EdgewiseSolution& q : out) {
                const double c = l2_inner(f, q);
                for (std::size_t e = 0; e < f.edges.size(); ++e) {
                    f.edges[e].a -= c * q.edges[e].a;
                    f.edges[e].b -= c * q.edges[e].b;
                }
            }
        }
        const double nrm = l2_norm(f);
        if (!(nrm > 0.0)) throw SolverError("degenerate nullspace vector");
        // sign: largest coefficient positive
        double big = 0.0;
        for (const EdgeSolution& s : f.edges) {
            if (std::abs(s.a) > std::abs(big)) big = s.a;
            if (std::abs(s.b) > std::abs(big)) big = s.b;
        }
        const double scale = (big < 0.0 ? -1.0 : 1.0) / nrm;
        for (EdgeSolution& s : f.edges) {
            s.a *= scale;
            s.b *= scale;
        }
        out.push_back(std::move(f));
    }
    return out;
}

struct InterlacingRow {
    std::size_t n = 0;
    std::optional<double> lower;  ///< lambda^D_{n-|V|}, present for n > |V|
    double lambda = 0.0;
    double upper = 0.0;  ///< lambda^D_n
    bool lower_violated = false;
    bool upper_violated = false;
};

struct InterlacingReport {
    std::vector<InterlacingRow> rows;
    std::size_t violations = 0;
};

/// Checks lambda^D_{n-|V|} <= lambda_n <= lambda^D_n against precomputed eigenvalues.
inline InterlacingReport verify_interlacing(const MetricGraph& g, const std::vector<double>& lambdas, double slack = 1e-8) {
    const std::size_t nv = g.vertex_count();
    const std::vector<double> dir = decoupled_dirichlet_spectrum(g, lambdas.size());
    InterlacingReport rep;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        InterlacingRow row;
        row.n = i + 1;
        row.lambda = lambdas[i];
        row.upper = dir[i];
        row.upper_violated = row.lambda > row.upper + slack * std::max(1.0, std::abs(row.upper));
        if (row.n > nv) {
            row.lower = dir[row.n - nv - 1];
            row.lower_violated = *row.lower > row.lambda + slack * std::max(1.0, std::abs(row.lambda));
        }
        if (row.lower_violated || row.upper_violated) ++rep.violations;
        rep.rows.push_back(row);
    }
    return rep;
}

inline InterlacingReport verify_interlacing(const SpectralProblem& p, std::size_t n) {
    return verify_interlacing(p.graph, expand_eigenvalues(find_eigenvalues(p, n), n));
}

struct WeylFit {
    double slope = 0.0;
    double expected = 0.0;
    double deviation = 0.0;  ///< |slope - expected| / expected
};

/// Least-squares slope (with intercept) of lambda_n against n^2 over the top
/// half of the supplied indices, compared with pi^2 / |G|^2.
inline WeylFit weyl_fit(const std::vector<double>& lambdas, double total_length) {
    if (lambdas.size() < 100) throw SolverError("weyl_fit needs at least 100 eigenvalues");
    const std::size_t start = lambdas.size() / 2;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto cnt = static_cast<double>(lambdas.size() - start);
    for (std::size_t i = start; i < lambdas.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double x = n * n;
        sx += x;
        sy += lambdas[i];
        sxx += x * x;
        sxy += x * lambdas[i];
    }
    WeylFit fit;
    fit.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    fit.expected = std::numbers::pi * std::numbers::pi / (total_length * total_length);
    fit.deviation = std::abs(fit.slope - fit.expected) / fit.expected;
    return fit;
}

inline WeylFit weyl_fit(const std::vector<Eigenvalue>& eigs, double total_length) {
    return weyl_fit(expand_eigenvalues(eigs, total_multiplicity(eigs)), total_length);
}

}  // namespace nodalgraph
