#include "oracles/fd_oracle.hpp"

#include "nodalgraph/eigenfunctions.hpp"
#include "nodalgraph/graph_io.hpp"
#include "nodalgraph/random_graph.hpp"
#include "nodalgraph/secular_solver.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace nodalgraph;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

const char* kInterval = "vertex a dirichlet\nvertex b dirichlet\nedge e a b length 1\n";
const char* kStar4 =
    "edge e1 c v1 length 1\nedge e2 c v2 length 1\nedge e3 c v3 length 1\nedge e4 c v4 length 1\n";
const char* kStar124 = "edge e1 c v1 length 1\nedge e2 c v2 length 2\nedge e3 c v3 length 4\n";
const char* kDelta =
    "vertex a dirichlet\nvertex m robin 2 0 0 0\nvertex b dirichlet\nedge l a m length 0.3\nedge r m b length 0.7\n";

SpectralProblem problem(const std::string& text) { return SpectralProblem{parse_graph(text), SolverConfig{}}; }

std::size_t nullity(const SpectralProblem& p, double lambda) {
    const Eigen::VectorXd sv = secular_singular_values(p, lambda);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= p.config.rank_tol * nullity_scale(sv)) ++k;
    return k;
}

void check_against(const std::vector<double>& got, const std::vector<double>& want, double rel, double abs_floor = 0.0) {
    REQUIRE(got.size() >= want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        INFO("index " << i + 1);
        CHECK_THAT(got[i], WithinRel(want[i], rel) || WithinAbs(want[i], abs_floor));
    }
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("fundamental solutions and their Gram integrals") {
    for (double mu : {25.0, 1.0, 1e-6, 0.0, -1e-6, -4.0, -30.0}) {
        const double len = 1.3;
        INFO("mu = " << mu);
        const Fundamental f = fundamental(mu, len);
        // Wronskian c s' - c' s = 1
        CHECK_THAT(f.c * f.ds - f.dc * f.s, WithinAbs(1.0, 1e-14 * std::max(1.0, f.c * f.c)));
        const auto c = [&](double x) { return fundamental(mu, x).c; };
        const auto s = [&](double x) { return fundamental(mu, x).s; };
        const EdgeGram g = edge_gram(mu, len);
        CHECK_THAT(g.cc, WithinRel(simpson([&](double x) { return c(x) * c(x); }, 0, len), 1e-10));
        CHECK_THAT(g.cs, WithinRel(simpson([&](double x) { return c(x) * s(x); }, 0, len), 1e-10));
        CHECK_THAT(g.ss, WithinRel(simpson([&](double x) { return s(x) * s(x); }, 0, len), 1e-10));
    }
    // the power series agrees with the closed forms on both sides of the switch
    for (double mu : {0.999e-4, 1.001e-4, -0.999e-4, -1.001e-4}) {
        const Fundamental f = fundamental(mu, 1.0);
        const double k = std::sqrt(std::abs(mu));
        CHECK_THAT(f.c, WithinAbs(mu > 0 ? std::cos(k) : std::cosh(k), 1e-15));
        CHECK_THAT(f.s, WithinAbs(mu > 0 ? std::sin(k) / k : std::sinh(k) / k, 1e-15));
    }
}

TEST_CASE("vertex condition matrix: nullity examples") {
    const SpectralProblem interval = problem(kInterval);
    CHECK(vertex_condition_matrix(interval, pi * pi).rows() == 2);
    CHECK(nullity(interval, pi * pi) == 1);
    CHECK(nullity(interval, 2.0) == 0);

    // constants solve every natural graph at lambda = 0
    for (const char* text : {kStar4, kStar124, "edge l a a length 1\nedge t a b length 3\n"}) {
        const SpectralProblem p = problem(text);
        const Eigen::MatrixXd m = vertex_condition_matrix(p, 0.0);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(m.cols());
        for (Eigen::Index e = 0; e < m.cols() / 2; ++e) x(2 * e) = 1.0;
        CHECK((m * x).norm() < 1e-14);
    }
    // a natural degree-1 vertex contributes one derivative row
    const SpectralProblem pendant = problem("vertex a dirichlet\nedge e a b length 1\n");
    const Eigen::MatrixXd m = vertex_condition_matrix(pendant, 1.7);
    CHECK(m.rows() == 2);
    CHECK(nullity(pendant, pi * pi / 4) == 1);

    const SpectralProblem star = problem(kStar4);
    CHECK(nullity(star, pi * pi / 4) == 3);
    CHECK(nullity(star, pi * pi) == 1);
}

TEST_CASE("secular_min_sv examples") {
    const SpectralProblem interval = problem(kInterval);
    CHECK(secular_min_sv(interval, pi * pi) < 1e-12);
    CHECK(secular_min_sv(interval, 2.0) > 1e-3);
    const SpectralProblem star = problem(kStar4);
    const Eigen::VectorXd sv = secular_singular_values(star, pi * pi / 4);
    CHECK(sv(sv.size() - 1) < 1e-12);
    CHECK(sv(sv.size() - 3) < 1e-12);
    CHECK(sv(sv.size() - 4) > 1e-3);
}

TEST_CASE("find_eigenvalues: closed-form examples") {
    SECTION("Dirichlet interval") {
        const auto ev = find_eigenvalues(problem(kInterval), 3);
        REQUIRE(ev.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK_THAT(ev[k].value, WithinRel(pi * pi * (k + 1) * (k + 1), 1e-10));
            CHECK(ev[k].multiplicity == 1);
        }
    }
    SECTION("equilateral 4-star") {
        const auto ev = find_eigenvalues(problem(kStar4), 8);
        REQUIRE(ev.size() == 4);
        CHECK_THAT(ev[0].value, WithinAbs(0.0, 1e-10));
        CHECK(ev[0].multiplicity == 1);
        CHECK_THAT(ev[1].value, WithinRel(pi * pi / 4, 1e-10));
        CHECK(ev[1].multiplicity == 3);
        CHECK_THAT(ev[2].value, WithinRel(pi * pi, 1e-10));
        CHECK(ev[2].multiplicity == 1);
        CHECK_THAT(ev[3].value, WithinRel(9 * pi * pi / 4, 1e-10));
        CHECK(ev[3].multiplicity == 3);
    }
    SECTION("loop through one vertex: double eigenvalues") {
        const auto ev = find_eigenvalues(problem("edge l a a length 1\n"), 5);
        REQUIRE(ev.size() == 3);
        CHECK(ev[1].multiplicity == 2);
        CHECK_THAT(ev[1].value, WithinRel(4 * pi * pi, 1e-10));
        CHECK(ev[2].multiplicity == 2);
        CHECK_THAT(ev[2].value, WithinRel(16 * pi * pi, 1e-10));
    }
    SECTION("negative eigenvalue from an attractive robin vertex") {
        // f'(0) = -2 f(0), f(1) = 0 has one bound state: tanh(kappa) = kappa / 2
        const SpectralProblem p = problem("vertex a robin -2\nvertex b dirichlet\nedge e a b length 1\n");
        const auto ev = find_eigenvalues(p, 2);
        REQUIRE(ev[0].value < 0.0);
        const double kappa = std::sqrt(-ev[0].value);
        CHECK_THAT(std::tanh(kappa), WithinAbs(kappa / 2, 1e-10));
        CHECK(ev[1].value > 0.0);
    }
    SECTION("multiplicities add up to the count and residuals are tiny") {
        const SpectralProblem p = problem(kStar124);
        const auto ev = find_eigenvalues(p, 60);
        CHECK(total_multiplicity(ev) >= 60);
        for (const auto& e : ev) {
            const Eigen::VectorXd sv = secular_singular_values(p, e.value);
            CHECK(e.residual <= p.config.rank_tol * nullity_scale(sv));
        }
    }
}

TEST_CASE("find_eigenvalues matches the finite-difference oracle") {
    SECTION("3-star with lengths 1, 2, 4") {
        const SpectralProblem p = problem(kStar124);
        const auto got = expand_eigenvalues(find_eigenvalues(p, 20), 20);
        check_against(got, oracle::fd_eigenvalues(p.graph, 20), 1e-4, 1e-8);
    }
    SECTION("interval with a delta coupling") {
        const SpectralProblem p = problem(kDelta);
        const auto got = expand_eigenvalues(find_eigenvalues(p, 10), 10);
        check_against(got, oracle::fd_eigenvalues(p.graph, 10), 1e-4);
    }
    SECTION("weights, potentials, a loop and a Dirichlet leaf") {
        const SpectralProblem p = problem(
            "vertex a robin 1 -0.5 0 -0.5 2 -1 0 -1 3 weights l:2 p:0.5\n"
            "vertex d dirichlet\n"
            "edge l a a length 1.25\nedge p a b length 0.75 q 3\nedge m b d length 2\nedge m2 b c length 0.6\n");
        const auto got = expand_eigenvalues(find_eigenvalues(p, 15), 15);
        check_against(got, oracle::fd_eigenvalues(p.graph, 15), 1e-4);
    }
    SECTION("negative eigenvalue") {
        const SpectralProblem p = problem("vertex a robin -2\nvertex b dirichlet\nedge e a b length 1\n");
        check_against(expand_eigenvalues(find_eigenvalues(p, 4), 4), oracle::fd_eigenvalues(p.graph, 4), 1e-4);
    }
}

TEST_CASE("eigenbasis examples") {
    SECTION("interval sine") {
        const SpectralProblem p = problem(kInterval);
        const auto ev = find_eigenvalues(p, 1);
        const auto basis = eigenbasis(p, ev[0]);
        REQUIRE(basis.size() == 1);
        CHECK_THAT(l2_norm(basis[0]), WithinRel(1.0, 1e-12));
        const double peak = evaluate(basis[0], 0, 0.5);
        CHECK_THAT(std::abs(peak), WithinRel(std::sqrt(2.0), 1e-9));
        for (double x : {0.1, 0.3, 0.77}) CHECK_THAT(evaluate(basis[0], 0, x) / peak, WithinAbs(std::sin(pi * x), 1e-9));
    }
    SECTION("4-star triple eigenspace vanishes at the centre") {
        const SpectralProblem p = problem(kStar4);
        for (const auto& e : find_eigenvalues(p, 8)) {
            if (e.multiplicity != 3) continue;
            const auto basis = eigenbasis(p, e);
            REQUIRE(basis.size() == 3);
            for (const auto& f : basis) {
                double sum_b = 0.0;
                for (const auto& s : f.edges) {
                    CHECK(std::abs(s.a) < 1e-9);
                    sum_b += s.b;
                }
                CHECK(std::abs(sum_b) < 1e-9);
            }
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) CHECK_THAT(l2_inner(basis[i], basis[j]), WithinAbs(i == j ? 1.0 : 0.0, 1e-12));
        }
    }
    SECTION("loop at 4 pi^2 has a two-dimensional space") {
        const SpectralProblem p = problem("edge l a a length 1\n");
        const Eigenvalue ev{4 * pi * pi, 2, 0.0};
        const auto basis = eigenbasis(p, ev);
        REQUIRE(basis.size() == 2);
        CHECK_THAT(l2_inner(basis[0], basis[1]), WithinAbs(0.0, 1e-12));
        for (const auto& f : basis) {
            CHECK_THAT(evaluate(f, 0, 0.0), WithinAbs(evaluate(f, 0, 1.0), 1e-9));
            CHECK_THAT(evaluate_derivative(f, 0, 0.0), WithinAbs(evaluate_derivative(f, 0, 1.0), 1e-8));
        }
    }
    SECTION("a claimed multiplicity larger than the nullspace is rejected") {
        const SpectralProblem p = problem(kInterval);
        REQUIRE_THROWS_AS(eigenbasis(p, Eigenvalue{pi * pi, 2, 0.0}), SolverError);
    }
}

TEST_CASE("every eigenfunction satisfies the vertex conditions") {
    RandomGraphOptions opt;
    for (std::uint64_t seed : {3u, 11u}) {
        opt.seed = seed;
        opt.edge_count = 6;
        opt.potential = seed == 3 ? 0.0 : 1.0;
        opt.delta = seed == 3 ? -1.0 : 2.0;
        const SpectralProblem p{generate_random_graph(opt), SolverConfig{}};
        for (const auto& e : find_eigenvalues(p, 40))
            for (const auto& f : eigenbasis(p, e)) CHECK(condition_residual(p, f) <= 1e-8);
    }
}

TEST_CASE("interlacing with the decoupled Dirichlet spectrum") {
    SECTION("natural interval against the Dirichlet one") {
        const SpectralProblem p = problem("edge e a b length 1\n");
        const auto rep = verify_interlacing(p, 20);
        CHECK(rep.violations == 0);
        REQUIRE(rep.rows.size() == 20);
        for (const auto& row : rep.rows) {
            const double n = static_cast<double>(row.n);
            CHECK_THAT(row.lambda, WithinRel((n - 1) * (n - 1) * pi * pi, 1e-9) || WithinAbs(0.0, 1e-9));
            CHECK_THAT(row.upper, WithinRel(n * n * pi * pi, 1e-12));
            if (row.n > 2) CHECK_THAT(*row.lower, WithinRel((n - 2) * (n - 2) * pi * pi, 1e-12));
        }
    }
    SECTION("4-star") { CHECK(verify_interlacing(problem(kStar4), 50).violations == 0); }
    SECTION("random 5-edge graph") {
        RandomGraphOptions opt;
        opt.seed = 5;
        opt.edge_count = 5;
        CHECK(verify_interlacing(SpectralProblem{generate_random_graph(opt), SolverConfig{}}, 100).violations == 0);
    }
    SECTION("a wrong spectrum is reported") {
        const MetricGraph g = parse_graph(kInterval);
        const auto rep = verify_interlacing(g, {1.0, 50.0, 100.0});
        CHECK(rep.violations == 2);
        CHECK_FALSE(rep.rows[0].upper_violated);
        CHECK(rep.rows[1].upper_violated);
        CHECK(rep.rows[2].upper_violated);
        CHECK_FALSE(rep.rows[2].lower_violated);
    }
}

TEST_CASE("counting consistency with the decoupled Dirichlet count") {
    RandomGraphOptions opt;
    opt.edge_count = 7;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        opt.seed = seed;
        const SpectralProblem p{generate_random_graph(opt), SolverConfig{}};
        const auto ev = find_eigenvalues(p, 80);
        const double top = ev.back().value;
        for (int i = 1; i <= 40; ++i) {
            const double lambda = top * (i + 0.37) / 41.0;
            const std::size_t coupled = eigenvalue_count_below(p, lambda);
            const std::size_t decoupled = decoupled_dirichlet_count_below(p.graph, lambda);
            const auto diff = static_cast<long>(coupled) - static_cast<long>(decoupled);
            CHECK(std::abs(diff) <= static_cast<long>(p.graph.vertex_count()));
            std::size_t listed = 0;
            for (const auto& e : ev)
                if (e.value < lambda) listed += e.multiplicity;
            CHECK(listed == coupled);
        }
    }
}

TEST_CASE("relabelling edges of edge-transitive graphs leaves the spectrum unchanged") {
    const auto ref = expand_eigenvalues(find_eigenvalues(problem(kStar4), 40), 40);
    const auto perm = expand_eigenvalues(
        find_eigenvalues(problem("edge x3 v3 c length 1\nedge x1 c v1 length 1\nedge x4 v4 c length 1\nedge x2 c v2 length 1\n"), 40), 40);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK_THAT(perm[i], WithinAbs(ref[i], 1e-10 * std::max(1.0, ref[i])));

    const auto tri = expand_eigenvalues(find_eigenvalues(problem("edge a x y length 1\nedge b y z length 1\nedge c z x length 1\n"), 30), 30);
    const auto tri2 = expand_eigenvalues(find_eigenvalues(problem("edge c x z length 1\nedge a y x length 1\nedge b z y length 1\n"), 30), 30);
    for (std::size_t i = 0; i < tri.size(); ++i) CHECK_THAT(tri2[i], WithinAbs(tri[i], 1e-10 * std::max(1.0, tri[i])));
    // the equilateral triangle is a circle of length 3
    CHECK_THAT(tri[1], WithinRel(4 * pi * pi / 9, 1e-10));
    CHECK_THAT(tri[2], WithinRel(4 * pi * pi / 9, 1e-10));
}

TEST_CASE("Weyl asymptotics") {
    SECTION("Dirichlet interval") {
        const WeylFit fit = weyl_fit(find_eigenvalues(problem(kInterval), 1000), 1.0);
        CHECK_THAT(fit.expected, WithinRel(pi * pi, 1e-15));
        CHECK(fit.deviation < 0.005);
    }
    SECTION("3-star with lengths 1, 2, 4") {
        const WeylFit fit = weyl_fit(find_eigenvalues(problem(kStar124), 1000), 7.0);
        CHECK_THAT(fit.expected, WithinRel(pi * pi / 49, 1e-15));
        CHECK(fit.deviation < 0.01);
    }
    SECTION("equilateral 4-star") {
        const WeylFit fit = weyl_fit(find_eigenvalues(problem(kStar4), 1000), 4.0);
        CHECK(fit.deviation < 0.01);
    }
    SECTION("too few eigenvalues") { REQUIRE_THROWS_AS(weyl_fit(std::vector<double>(99, 1.0), 1.0), SolverError); }
}

TEST_CASE("solver configuration") {
    SpectralProblem p = problem(kStar124);
    p.config.scan_step = 0.01;
    const auto fine = expand_eigenvalues(find_eigenvalues(p, 30), 30);
    p.config.scan_step = 0.3;
    const auto coarse = expand_eigenvalues(find_eigenvalues(p, 30), 30);
    for (std::size_t i = 0; i < 30; ++i) CHECK_THAT(coarse[i], WithinAbs(fine[i], 1e-9 * std::max(1.0, fine[i])));
    p.config.threads = 4;
    const auto threaded = expand_eigenvalues(find_eigenvalues(p, 30), 30);
    CHECK(threaded == coarse);
    p.config.max_windows = 2;
    p.config.scan_step = 1e-3;
    REQUIRE_THROWS_AS(find_eigenvalues(p, 30), SolverError);
    REQUIRE_THROWS_AS(find_eigenvalues(problem(kInterval), 0), SolverError);
}
