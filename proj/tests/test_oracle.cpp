#include <doctest.h>

#include <cmath>

#include "fkg/error.hpp"
#include "fkg/oracle.hpp"

using namespace fkg;

namespace {

double spin(std::uint64_t c, int v) { return ((c >> v) & 1u) ? 1.0 : -1.0; }

SmallGraph single(double H) {
    SmallGraph g;
    g.name = "single";
    g.add_vertex(H);
    return g;
}

SmallGraph pair(double J, double H) {
    SmallGraph g;
    g.name = "pair";
    g.add_vertex(H);
    g.add_vertex(H);
    g.add_edge(0, 1, J);
    return g;
}

std::uint64_t all_internal_open(const SmallGraph& g) { return (std::uint64_t{1} << g.edges.size()) - 1; }

} // namespace

TEST_CASE("single vertex magnetization is tanh H") {
    const auto d = enumerate_ising(single(0.7));
    CHECK(d.total() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.expectation([](std::uint64_t c) { return spin(c, 0); }) == doctest::Approx(0.6043678).epsilon(1e-7));
    CHECK(d.expectation([](std::uint64_t c) { return spin(c, 0); }) == doctest::Approx(std::tanh(0.7)).epsilon(1e-14));
}

TEST_CASE("two vertices at the critical coupling") {
    const auto d = enumerate_ising(pair(kBetaC, 0.0));
    CHECK(d.expectation([](std::uint64_t c) { return spin(c, 0) * spin(c, 1); }) ==
          doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
    CHECK(d.expectation([](std::uint64_t c) { return spin(c, 0) * spin(c, 1); }) == doctest::Approx(0.4142136).epsilon(1e-7));
}

TEST_CASE("zero field gives zero magnetization") {
    const auto d = enumerate_ising(SmallGraph::grid(3, 3, kBetaC, 0.0));
    for (int v = 0; v < 9; ++v) CHECK(std::abs(d.expectation([v](std::uint64_t c) { return spin(c, v); })) < 1e-14);
}

TEST_CASE("ghost edge of a single vertex") {
    const SmallGraph g = single(0.5);
    const auto full = enumerate_fk_ghost(g, 2.0);
    CHECK(full.size() == 2);
    CHECK(full.probability(1) == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
    CHECK(full.probability(1) == doctest::Approx(0.4621172).epsilon(1e-7));
    const auto internal = internal_marginal(full);
    REQUIRE(internal.size() == 1);
    CHECK(internal.prob[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("zero field freezes external edges") {
    const SmallGraph g = SmallGraph::grid(2, 2, kBetaC, 0.0);
    const auto full = enumerate_fk_ghost(g, 2.0);
    for (auto c : full.configs) CHECK((c >> g.edges.size()) == 0);
    CHECK(max_abs_difference(internal_marginal(full), internal_marginal_closed_form(g, 2.0)) < 1e-15);
}

TEST_CASE("q = 1 is independent percolation") {
    SmallGraph g = SmallGraph::grid(2, 2, 0.3, 0.2);
    g.edges[1].J = 0.9;
    const auto full = enumerate_fk_ghost(g, 1.0);
    const int E = static_cast<int>(g.edges.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        double p = 1.0;
        for (int e = 0; e < E; ++e) {
            const double pe = bond_probability(g.edges[static_cast<std::size_t>(e)].J);
            p *= ((full.configs[k] >> e) & 1u) ? pe : 1 - pe;
        }
        for (int v = 0; v < g.n; ++v) {
            const double pv = bond_probability(g.field[static_cast<std::size_t>(v)]);
            p *= ((full.configs[k] >> (E + v)) & 1u) ? pv : 1 - pv;
        }
        worst = std::max(worst, std::abs(p - full.prob[k]));
    }
    CHECK(full.size() == 256);
    CHECK(worst < 1e-15);
}

TEST_CASE("internal marginal closed form on the 2x2 grid") {
    const SmallGraph g = SmallGraph::grid(2, 2, kBetaC, 1.0);
    const auto from_full = internal_marginal(enumerate_fk_ghost(g, 2.0));
    const auto closed = internal_marginal_closed_form(g, 2.0);
    CHECK(from_full.size() == 16);
    CHECK(closed.size() == 16);
    CHECK(max_abs_difference(from_full, closed) < 1e-12);

    // One cluster by hand: all four edges open, H(C) = 4.
    const double p = 2.0 - std::sqrt(2.0);
    double z = 0.0;
    for (std::uint64_t w = 0; w < 16; ++w) {
        double weight = 1.0;
        for (int e = 0; e < 4; ++e) weight *= ((w >> e) & 1u) ? p : 1 - p;
        for (const auto& c : internal_clusters(g, w)) weight *= 1 + std::exp(-2.0 * c.field);
        z += weight;
    }
    CHECK(closed.probability(15) == doctest::Approx(std::pow(p, 4) * (1 + std::exp(-8.0)) / z).epsilon(1e-13));
}

TEST_CASE("tilt of the zero-field measure") {
    SmallGraph iso;
    iso.name = "isolated";
    iso.add_vertex(1.0);
    iso.add_vertex(1.0);
    CHECK(cosh_product(iso, 0) == doctest::Approx(std::cosh(1.0) * std::cosh(1.0)).epsilon(1e-14));
    CHECK(cosh_product(iso, 0) == doctest::Approx(2.3810978).epsilon(1e-7));

    for (auto [r, c] : {std::pair{1, 2}, {2, 2}, {2, 3}, {3, 3}}) {
        const SmallGraph g = SmallGraph::grid(r, c, kBetaC, 0.6);
        const auto zero = internal_marginal_closed_form(g.scaled_field(0.0), 2.0);
        const auto table = rn_derivative_table(g, zero, 2.0);
        double mean = 0.0;
        ExactDistribution tilted = zero;
        for (std::size_t k = 0; k < zero.size(); ++k) {
            mean += zero.prob[k] * table[k];
            tilted.prob[k] = zero.prob[k] * table[k];
        }
        CHECK(mean == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(max_abs_difference(tilted, internal_marginal(enumerate_fk_ghost(g, 2.0))) < 1e-12);

        // cosh form and the generic tilt agree up to normalization
        const double ratio0 = table[0] / cosh_product(g, zero.configs[0]);
        for (std::size_t k = 0; k < zero.size(); ++k) {
            CHECK(table[k] / cosh_product(g, zero.configs[k]) == doctest::Approx(ratio0).epsilon(1e-12));
        }
    }

    const SmallGraph g0 = SmallGraph::grid(2, 2, kBetaC, 0.0);
    for (std::uint64_t w = 0; w < 16; ++w) CHECK(rn_derivative(g0, w) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tanh law for two clusters") {
    SmallGraph g;
    g.name = "3+2";
    for (int v = 0; v < 5; ++v) g.add_vertex(0.5);
    g.add_edge(0, 1, kBetaC);
    g.add_edge(1, 2, kBetaC);
    g.add_edge(3, 4, kBetaC);
    const auto law = ghost_conditional(g, all_internal_open(g), 2.0);
    REQUIRE(law.size() == 2);
    CHECK(law[0].probability == doctest::Approx(0.9051483).epsilon(1e-7));
    CHECK(law[1].probability == doctest::Approx(0.7615942).epsilon(1e-7));
    CHECK(conditional_independence_defect(g, enumerate_fk_ghost(g, 2.0), 2.0) < 1e-12);
}

TEST_CASE("general-q ghost law") {
    for (double H : {0.0, 0.1, 0.7, 2.5}) {
        CHECK(ghost_connection_probability(H, 2.0) == doctest::Approx(std::tanh(H)).epsilon(1e-14));
        const double q = 3.0;
        CHECK(ghost_connection_probability(H, q) ==
              doctest::Approx(std::tanh(H) / (1 + (q - 2) / (std::exp(2 * H) + 1))).epsilon(1e-14));
    }
    CHECK(ghost_connection_probability(1.0, 3.0) == doctest::Approx(0.6804790).epsilon(1e-7));
    CHECK_THROWS_AS(ghost_connection_probability(1.0, 0.0), Error);

    // Path of three vertices with H = 1/3 each: one cluster of field 1 when all internal edges are open.
    SmallGraph g;
    g.name = "path3";
    for (int v = 0; v < 3; ++v) g.add_vertex(1.0 / 3.0);
    g.add_edge(0, 1, 0.4);
    g.add_edge(1, 2, 0.4);
    const auto full = enumerate_fk_ghost(g, 3.0);
    double joint = 0.0, given = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        if ((full.configs[k] & 3u) != 3u) continue;
        given += full.prob[k];
        if (full.configs[k] >> 2) joint += full.prob[k];
    }
    CHECK(joint / given == doctest::Approx(0.6804790).epsilon(1e-7));
    CHECK(conditional_independence_defect(g, full, 3.0) < 1e-12);
}

TEST_CASE("Edwards-Sokal two-point identity") {
    auto r = truncated_two_point_exact(pair(kBetaC, 0.0), 0, 1);
    CHECK(r.spin_side == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
    CHECK(r.fk_side == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
    CHECK(r.difference() < 1e-12);

    r = truncated_two_point_exact(pair(kBetaC, 10.0), 0, 1);
    CHECK(std::abs(r.spin_side) < 1e-8);
    CHECK(std::abs(r.fk_side) < 1e-8);

    const SmallGraph s = single(0.8);
    const auto full = enumerate_fk_ghost(s, 2.0);
    CHECK(ghost_probability(s, full, 0) == doctest::Approx(std::tanh(0.8)).epsilon(1e-14));

    CHECK_THROWS_AS(truncated_two_point_exact(pair(kBetaC, 0.0), 1, 1), Error);

    const SmallGraph g = SmallGraph::grid(2, 3, kBetaC, 0.5);
    for (int x = 0; x < 6; ++x)
        for (int y = x + 1; y < 6; ++y) CHECK(truncated_two_point_exact(g, x, y).difference() < 1e-12);
}

TEST_CASE("coloring FK clusters reproduces the Ising measure") {
    for (double H : {0.0, 0.3, 1.0}) {
        const SmallGraph g = SmallGraph::grid(2, 3, kBetaC, H);
        const auto colored = color_clusters(g, enumerate_fk_ghost(g, 2.0));
        CHECK(max_abs_difference(colored, enumerate_ising(g)) < 1e-12);
    }
}

TEST_CASE("field monotonicity of the internal marginal") {
    const SmallGraph base = SmallGraph::grid(2, 3, kBetaC, 1.0);
    const double hs[] = {0.0, 0.25, 0.5, 1.0, 2.0};
    for (int k = 0; k + 1 < 5; ++k) {
        const auto lo = internal_marginal_closed_form(base.scaled_field(hs[k]), 2.0);
        const auto hi = internal_marginal_closed_form(base.scaled_field(hs[k + 1]), 2.0);
        const auto r = check_domination(lo, hi, static_cast<int>(base.edges.size()));
        CHECK(r.holds(1e-12));
    }
    // the reverse order fails, so the check has teeth
    const auto lo = internal_marginal_closed_form(base.scaled_field(0.0), 2.0);
    const auto hi = internal_marginal_closed_form(base.scaled_field(2.0), 2.0);
    CHECK_FALSE(check_domination(hi, lo, static_cast<int>(base.edges.size())).holds(1e-6));
}

TEST_CASE("lattice conversion encodes boundary conditions") {
    auto dom = std::make_shared<const LatticeDomain>(LatticeDomain::build(Rect{0, 0, 2, 2}, Rational(1)));

    // Plus exterior equals an extra field beta_c per exterior neighbour.
    const auto plus = small_graph_from(extend_with_ghost(dom, 0.3, BoundaryCondition::plus()));
    CHECK(plus.n == 5);
    SmallGraph shifted = SmallGraph::grid(2, 2, kBetaC, 0.3);
    for (int v = 0; v < 4; ++v) shifted.field[static_cast<std::size_t>(v)] += 2 * kBetaC;
    const auto a = enumerate_ising(plus);
    const auto b = enumerate_ising(shifted);
    for (int v = 0; v < 4; ++v) {
        CHECK(a.expectation([v](std::uint64_t c) { return spin(c, v); }) ==
              doctest::Approx(b.expectation([v](std::uint64_t c) { return spin(c, v); })).epsilon(1e-13));
    }
    // FK side with the plus exterior merged into the ghost reproduces the same spins.
    CHECK(truncated_two_point_exact(plus, 0, 3).difference() < 1e-12);

    const auto minus = small_graph_from(extend_with_ghost(dom, 0.0, BoundaryCondition::minus()));
    const auto m = enumerate_ising(minus);
    const auto p0 = enumerate_ising(small_graph_from(extend_with_ghost(dom, 0.0, BoundaryCondition::plus())));
    CHECK(m.expectation([](std::uint64_t c) { return spin(c, 0); }) ==
          doctest::Approx(-p0.expectation([](std::uint64_t c) { return spin(c, 0); })).epsilon(1e-13));
    CHECK(max_abs_difference(color_clusters(minus, enumerate_fk_ghost(minus, 2.0)), m) < 1e-12);

    // Wired: every vertex of the 2x2 block is on the boundary, so all spins agree.
    const auto wired = small_graph_from(extend_with_ghost(dom, 0.0, BoundaryCondition::wired()));
    const auto w = enumerate_ising(wired);
    CHECK(w.size() == 2);
    CHECK(w.prob[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(max_abs_difference(color_clusters(wired, enumerate_fk_ghost(wired, 2.0)), w) < 1e-12);
}

TEST_CASE("size limits are enforced") {
    SmallGraph big = SmallGraph::grid(3, 7, kBetaC, 0.0);
    CHECK_THROWS_AS(enumerate_ising(big), Error);
    try {
        enumerate_ising(big);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::size_limit);
    }
    SmallGraph neg = pair(-0.1, 0.0);
    CHECK_THROWS_AS(enumerate_ising(neg), Error);
}
