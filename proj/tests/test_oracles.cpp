// Self-checks for the reference implementations used by the other suites.

#include "oracles/fd_oracle.hpp"
#include "oracles/sign_scan.hpp"

#include "nodalgraph/graph_io.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace nodalgraph;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("fd oracle: Dirichlet interval") {
    const MetricGraph g = parse_graph("vertex a dirichlet\nvertex b dirichlet\nedge e a b length 1\n");
    const auto fd = oracle::fd_eigenvalues(g, 6);
    for (std::size_t k = 1; k <= 6; ++k) CHECK_THAT(fd[k - 1], WithinRel(pi * pi * k * k, 1e-8));
}

TEST_CASE("fd oracle: Neumann interval split at an interior vertex") {
    const MetricGraph g = parse_graph("edge l a m length 0.3\nedge r m b length 0.7\n");
    const auto fd = oracle::fd_eigenvalues(g, 5);
    CHECK_THAT(fd[0], WithinAbs(0.0, 1e-7));
    for (std::size_t k = 2; k <= 5; ++k) CHECK_THAT(fd[k - 1], WithinRel(pi * pi * (k - 1) * (k - 1), 1e-8));
}

TEST_CASE("fd oracle: equilateral 4-star and a loop") {
    const MetricGraph star = parse_graph("edge e1 c v1 length 1\nedge e2 c v2 length 1\nedge e3 c v3 length 1\nedge e4 c v4 length 1\n");
    const auto fd = oracle::fd_eigenvalues(star, 5);
    CHECK_THAT(fd[0], WithinAbs(0.0, 1e-7));
    for (std::size_t k = 1; k <= 3; ++k) CHECK_THAT(fd[k], WithinRel(pi * pi / 4, 1e-8));
    CHECK_THAT(fd[4], WithinRel(pi * pi, 1e-8));

    // a loop of length 1 through a vertex: 0, then (2 pi m)^2 twice
    const MetricGraph loop = parse_graph("edge l a a length 1\n");
    const auto fl = oracle::fd_eigenvalues(loop, 5);
    CHECK_THAT(fl[0], WithinAbs(0.0, 1e-7));
    CHECK_THAT(fl[1], WithinRel(4 * pi * pi, 1e-8));
    CHECK_THAT(fl[2], WithinRel(4 * pi * pi, 1e-8));
    CHECK_THAT(fl[3], WithinRel(16 * pi * pi, 1e-8));
    CHECK_THAT(fl[4], WithinRel(16 * pi * pi, 1e-8));
}

TEST_CASE("fd oracle: weights, potential and a robin vertex") {
    // constant potential shifts the spectrum
    const MetricGraph q = parse_graph("vertex a dirichlet\nvertex b dirichlet\nedge e a b length 1 q 3\n");
    CHECK_THAT(oracle::fd_eigenvalues(q, 1)[0], WithinRel(3 + pi * pi, 1e-8));
    // Robin end h on [0,1] with Dirichlet at the other end: k cot k = -h... here k cot k = -2
    const MetricGraph r = parse_graph("vertex a robin 2\nvertex b dirichlet\nedge e a b length 1\n");
    const double lam = oracle::fd_eigenvalues(r, 1)[0];
    const double k = std::sqrt(lam);
    CHECK_THAT(k / std::tan(k), WithinAbs(-2.0, 1e-7));
}

TEST_CASE("sign scan counts sign runs of sin(m pi x)") {
    const MetricGraph g = parse_graph("vertex a dirichlet\nvertex b dirichlet\nedge e a b length 1\n");
    for (int m = 1; m <= 7; ++m) {
        EdgewiseSolution f;
        const double k = m * pi;
        f.lambda = k * k;
        f.edges.push_back({0.0, k, k * k, 1.0});
        CHECK(oracle::sign_scan_count(f, g) == static_cast<std::size_t>(m));
    }
}

TEST_CASE("sign scan glues runs across a vertex with nonzero trace") {
    // cos(pi x / 2) on each edge of a 3-star, outward from the centre: one domain
    const MetricGraph g = parse_graph("vertex v1 dirichlet\nvertex v2 dirichlet\nvertex v3 dirichlet\n"
                                      "edge e1 c v1 length 1\nedge e2 c v2 length 1\nedge e3 c v3 length 1\n");
    EdgewiseSolution f;
    f.lambda = pi * pi / 4;
    for (int e = 0; e < 3; ++e) f.edges.push_back({1.0, 0.0, f.lambda, 1.0});
    CHECK(oracle::sign_scan_count(f, g) == 1);
    // a vanishing edge kills the trace there, so the centre no longer glues
    f.edges[2].a = 0.0;
    CHECK(oracle::sign_scan_count(f, g) == 2);
}
