// Command-line front end: solve, nodal, accumulate, verify, plap, gen.

#include "nodalgraph/nodalgraph.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace nodalgraph;

namespace {

struct Options {
    std::string graph;
    std::size_t N = 100;
    double p = 2.0;
    std::string basis;
    std::string strategy = "default";
    std::string out = ".";
    bool strict = false;
    double scan_step = 0.0;
    double rank_tol = 1e-8;
    double tail = 0.5;
    double snap_tol = 0.02;

    std::uint64_t seed = 1;
    std::size_t edges = 5;
    std::string lengths = "uniform";
    double base = 1.0;
    std::vector<int> multipliers{1, 2, 3, 4, 5, 6, 7, 8};
    std::string topology = "random";
    double q = 0.0;
    double delta = 0.0;
    std::size_t dirichlet_leaves = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

SpectralProblem load_problem(const Options& o) {
    SpectralProblem p{parse_graph(read_file(o.graph)), {}};
    p.config.scan_step = o.scan_step;
    p.config.rank_tol = o.rank_tol;
    return p;
}

BasisStrategy load_strategy(const Options& o) {
    std::string kind = o.strategy;
    if (!o.basis.empty() && kind == "default") kind = "table";
    if (kind == "default") return BasisStrategy::solver_default();
    if (kind == "supportmax") return BasisStrategy::support_max();
    if (kind == "table") {
        if (o.basis.empty()) throw std::runtime_error("--strategy table needs --basis <file>");
        return BasisStrategy::user_table(parse_basis_table(read_file(o.basis)));
    }
    throw std::runtime_error("unknown strategy '" + kind + "'");
}

std::string spectrum_csv(const std::vector<Eigenvalue>& eigs, std::size_t N) {
    CsvWriter csv({"n", "lambda", "multiplicity", "residual"});
    std::size_t n = 0;
    for (const Eigenvalue& ev : eigs)
        for (std::size_t k = 0; k < ev.multiplicity && n < N; ++k)
            csv.cell(++n).cell(ev.value).cell(ev.multiplicity).cell(ev.residual).end_row();
    return csv.str();
}

bool report_bounds_ok(const NodalReport& r, const MetricGraph& g, double qn) {
    if (check_nodal_size(r, g, qn).violations > 0) return false;
    for (const BoundRow& row : check_nu_lambda({r}, g, qn))
        if (!row.pass) return false;
    return true;
}

std::string nodal_csv(const std::vector<NodalReport>& series, const MetricGraph& g) {
    const double qn = g.potential_l1();
    CsvWriter csv({"n", "lambda", "multiplicity_group", "nu", "supp_len", "ratio", "max_domain_len", "bounds_ok"});
    for (const NodalReport& r : series)
        csv.cell(r.n)
            .cell(r.lambda)
            .cell(r.group)
            .cell(r.nu)
            .cell(r.support_length)
            .cell(r.ratio)
            .cell(r.max_domain_length())
            .cell(report_bounds_ok(r, g, qn))
            .end_row();
    return csv.str();
}

std::string svg_for(const std::vector<NodalReport>& series, const MetricGraph& g, const std::string& title) {
    std::vector<std::pair<double, double>> pts;
    for (const NodalReport& r : series) pts.emplace_back(static_cast<double>(r.n), r.ratio);
    std::vector<double> cands;
    if (g.edge_count() <= kSubsetEnumerationCap) cands = subset_length_ratios(g).ratios;
    return ratio_svg(pts, cands, title);
}

bool natural_linear(const MetricGraph& g) {
    for (const Edge& e : g.edges())
        if (e.potential != 0.0) return false;
    for (const Vertex& v : g.vertices()) {
        if (v.condition.dirichlet) continue;
        if (!v.condition.robin.isZero(0.0)) return false;
        for (double w : v.condition.weights)
            if (w != 1.0) return false;
    }
    return true;
}

int run_solve(const Options& o) {
    const SpectralProblem p = load_problem(o);
    const auto eigs = find_eigenvalues(p, o.N);
    write_file(fs::path(o.out) / "spectrum.csv", spectrum_csv(eigs, o.N));
    return 0;
}

int run_nodal(const Options& o, bool accumulate) {
    const SpectralProblem p = load_problem(o);
    const auto series = nodal_count_series(p, o.N, load_strategy(o));
    write_file(fs::path(o.out) / "spectrum.csv", spectrum_csv(find_eigenvalues(p, o.N), o.N));
    write_file(fs::path(o.out) / "nodal.csv", nodal_csv(series, p.graph));
    write_file(fs::path(o.out) / "ratios.svg", svg_for(series, p.graph, fs::path(o.graph).filename().string()));
    if (!accumulate) return 0;
    const AccumulationEstimate est = accumulation_estimate(series, p.graph, o.tail, o.snap_tol);
    CsvWriter csv({"source", "value", "hits", "max_snap_distance"});
    for (const auto& a : est.points) csv.cell(std::string("nu_ratio")).cell(a.value).cell(a.hits).cell(a.max_snap_distance).end_row();
    for (const auto& a : est.support_points)
        csv.cell(std::string("support_ratio")).cell(a.value).cell(a.hits).cell(a.max_snap_distance).end_row();
    write_file(fs::path(o.out) / "accumulation.csv", csv.str());
    std::cout << "window n=" << est.window_begin << ".." << est.window_end << "  accumulation:";
    for (const auto& a : est.points) std::cout << ' ' << fmt12(a.value);
    std::cout << "  support agrees: " << (est.agree ? "yes" : "no") << "  snap failures: " << est.snap_failures << '\n';
    return 0;
}

int run_verify(const Options& o) {
    const SpectralProblem p = load_problem(o);
    const MetricGraph& g = p.graph;
    const double qn = g.potential_l1();
    const auto seq = eigenfunction_sequence(p, o.N, load_strategy(o));
    std::vector<double> lambdas;
    for (const auto& item : seq) lambdas.push_back(item.eigenvalue.value);

    CsvWriter csv({"check", "n", "lhs", "rhs", "pass"});
    std::size_t fails = 0;
    const auto emit = [&](const BoundRow& r) {
        csv.cell(r.check).cell(r.n).cell(r.lhs).cell(r.rhs).cell(r.pass).end_row();
        if (!r.pass) ++fails;
    };
    for (const InterlacingRow& r : verify_interlacing(g, lambdas).rows) {
        if (r.lower) emit({"interlacing_lower", r.n, *r.lower, r.lambda, !r.lower_violated});
        emit({"interlacing_upper", r.n, r.lambda, r.upper, !r.upper_violated});
    }
    const double b1 = lambda1_upper_bound(g);
    emit({"lambda1_upper", 1, lambdas.front(), b1, lambdas.front() <= b1 * (1.0 + 1e-9) + 1e-12});
    std::vector<NodalReport> series;
    for (const auto& item : seq) series.push_back(nodal_report(item, g));
    for (const NodalReport& r : series)
        for (const BoundRow& row : check_nodal_size(r, g, qn).rows) emit(row);
    for (const BoundRow& row : check_nu_lambda(series, g, qn)) emit(row);
    if (natural_linear(g)) {
        const PContext ctx(2.0);
        const auto br = bracket_variational(g, ctx, o.N);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const double slack = 1e-8 * std::max(1.0, std::abs(lambdas[i]));
            emit({"p2_bracket_lower", i + 1, br[i].lower, lambdas[i], br[i].lower <= lambdas[i] + slack});
            emit({"p2_bracket_upper", i + 1, lambdas[i], br[i].upper, lambdas[i] <= br[i].upper + slack});
        }
    }
    write_file(fs::path(o.out) / "verify.csv", csv.str());
    std::cout << "verify: " << fails << " failing row(s)\n";
    return (o.strict && fails > 0) ? 1 : 0;
}

int run_plap(const Options& o) {
    const MetricGraph g = parse_graph(read_file(o.graph));
    const PContext ctx(o.p);
    const auto br = bracket_variational(g, ctx, o.N);
    CsvWriter csv({"n", "lower", "upper", "p"});
    for (const PBracket& b : br) csv.cell(b.n).cell(b.lower).cell(b.upper).cell(o.p).end_row();
    write_file(fs::path(o.out) / "brackets.csv", csv.str());
    if (o.N >= 200) {
        const PWeylCheck w = weyl_p_check(br, ctx, g.total_length(), o.N);
        std::cout << "p=" << fmt12(o.p) << " expected slope " << fmt12(w.expected) << " lower " << fmt12(w.lower_slope) << " upper "
                  << fmt12(w.upper_slope) << " deviation " << fmt12(w.deviation) << '\n';
    }
    return 0;
}

int run_gen(const Options& o, bool write_out) {
    RandomGraphOptions r;
    r.seed = o.seed;
    r.edge_count = o.edges;
    if (o.lengths == "uniform") {
        r.lengths = LengthDistribution::uniform;
    } else if (o.lengths == "rational") {
        r.lengths = LengthDistribution::rational;
    } else {
        throw std::runtime_error("unknown length distribution '" + o.lengths + "'");
    }
    r.base = o.base;
    r.multipliers = o.multipliers;
    r.topology = detail::parse_topology(o.topology);
    r.potential = o.q;
    r.delta = o.delta;
    r.dirichlet_leaves = o.dirichlet_leaves;
    const std::string text = format_graph(generate_random_graph(r));
    if (write_out) {
        write_file(fs::path(o.out) / ("random-" + std::to_string(o.seed) + ".graph"), text);
    } else {
        std::cout << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectra and nodal domains of Schroedinger operators on metric graphs"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("graph", o.graph, "graph file")->required()->check(CLI::ExistingFile);
        sub->add_option("--N", o.N, "number of eigenvalues (with multiplicity)")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--scan-step", o.scan_step, "grid step in sqrt(lambda) units");
        sub->add_option("--rank-tol", o.rank_tol, "relative singular value threshold");
    };
    const auto basis_opts = [&](CLI::App* sub) {
        sub->add_option("--strategy", o.strategy, "default|supportmax|table")
            ->check(CLI::IsMember({"default", "supportmax", "table"}));
        sub->add_option("--basis", o.basis, "basis table file")->check(CLI::ExistingFile);
    };

    auto* solve = app.add_subcommand("solve", "eigenvalues -> spectrum.csv");
    common(solve);
    auto* nodal = app.add_subcommand("nodal", "nodal counts -> nodal.csv, ratios.svg");
    common(nodal);
    basis_opts(nodal);
    auto* acc = app.add_subcommand("accumulate", "accumulation set of nu_n/n -> accumulation.csv");
    common(acc);
    basis_opts(acc);
    acc->add_option("--tail", o.tail, "tail window fraction")->check(CLI::Range(0.0, 1.0));
    acc->add_option("--snap-tol", o.snap_tol, "snap tolerance");
    auto* verify = app.add_subcommand("verify", "bound checks -> verify.csv");
    common(verify);
    basis_opts(verify);
    verify->add_flag("--strict", o.strict, "nonzero exit on any failing row");
    auto* plap = app.add_subcommand("plap", "p-Laplacian brackets -> brackets.csv");
    plap->add_option("graph", o.graph, "graph file")->required()->check(CLI::ExistingFile);
    plap->add_option("--N", o.N, "number of brackets")->check(CLI::PositiveNumber);
    plap->add_option("--p", o.p, "exponent p > 1");
    plap->add_option("--out", o.out, "output directory");
    auto* gen = app.add_subcommand("gen", "random graph file (stdout unless --out)");
    gen->add_option("--seed", o.seed, "generator seed");
    gen->add_option("--edges", o.edges, "edge count")->check(CLI::PositiveNumber);
    gen->add_option("--lengths", o.lengths, "uniform|rational")->check(CLI::IsMember({"uniform", "rational"}));
    gen->add_option("--base", o.base, "base length for rational mode");
    gen->add_option("--multipliers", o.multipliers, "length multipliers (1..8) for rational mode");
    gen->add_option("--topology", o.topology, "random|star|path|lasso")->check(CLI::IsMember({"random", "star", "path", "lasso"}));
    gen->add_option("--q", o.q, "constant potential on every edge");
    gen->add_option("--delta", o.delta, "delta strength at vertices of degree >= 2");
    gen->add_option("--dirichlet-leaves", o.dirichlet_leaves, "number of leaves with Dirichlet conditions");
    auto* gen_out = gen->add_option("--out", o.out, "output directory");

    CLI11_PARSE(app, argc, argv);
    try {
        if (!solve->parsed() && !gen->parsed()) fs::create_directories(o.out);
        if (solve->parsed()) {
            fs::create_directories(o.out);
            return run_solve(o);
        }
        if (nodal->parsed()) return run_nodal(o, false);
        if (acc->parsed()) return run_nodal(o, true);
        if (verify->parsed()) return run_verify(o);
        if (plap->parsed()) return run_plap(o);
        if (gen->parsed()) {
            if (gen_out->count() > 0) fs::create_directories(o.out);
            return run_gen(o, gen_out->count() > 0);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
