#include <doctest.h>

#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "fkg/error.hpp"
#include "fkg/lattice.hpp"

using namespace fkg;

namespace {

Rect rect(Rational x0, Rational y0, Rational x1, Rational y1) { return {x0, y0, x1, y1}; }

std::shared_ptr<const LatticeDomain> shared(LatticeDomain d) {
    return std::make_shared<const LatticeDomain>(std::move(d));
}

// Lattice points of [x0,x1) by direct scan.
std::int64_t scan_count(Rational lo, Rational hi, Rational a) {
    std::int64_t c = 0;
    for (std::int64_t k = -200; k <= 200; ++k) {
        const Rational x = Rational(k) * a;
        if (lo <= x && x < hi) ++c;
    }
    return c;
}

} // namespace

TEST_CASE("half-open unit square at a = 1/2 has four vertices") {
    const auto d = LatticeDomain::build(rect(Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)), Rational(1, 2));
    CHECK(d.vertex_count() == 4);
    CHECK(d.edge_count() == 4);
    std::set<Site> sites;
    for (std::size_t v = 0; v < d.vertex_count(); ++v) sites.insert(d.site(static_cast<VertexId>(v)));
    CHECK(sites == std::set<Site>{{-1, -1}, {0, -1}, {-1, 0}, {0, 0}});
    for (std::size_t v = 0; v < 4; ++v) {
        const auto p = d.position(static_cast<VertexId>(v));
        CHECK((p[0] == -0.5 || p[0] == 0.0));
        CHECK((p[1] == -0.5 || p[1] == 0.0));
    }
    CHECK(d.inner_boundary().size() == 4);
}

TEST_CASE("single-vertex domain") {
    const auto d = LatticeDomain::build(rect(0, 0, 1, 1), Rational(1));
    CHECK(d.vertex_count() == 1);
    CHECK(d.edge_count() == 0);
    REQUIRE(d.inner_boundary().size() == 1);
    CHECK(d.inner_boundary()[0] == 0);
    CHECK(d.boundary_bonds().size() == 4);
    CHECK(d.outer_boundary().size() == 4);
}

TEST_CASE("square grid counts") {
    for (int n : {1, 2, 3, 7, 16}) {
        const auto d = LatticeDomain::build(rect(0, 0, n, n), Rational(1));
        CHECK(d.vertex_count() == static_cast<std::size_t>(n * n));
        CHECK(d.edge_count() == static_cast<std::size_t>(2 * n * (n - 1)));
    }
}

TEST_CASE("edges join vertices at distance a") {
    const Rational a(1, 4);
    const auto d = LatticeDomain::build({rect(-1, -1, 0, 1), rect(0, Rational(-1, 2), 1, Rational(1, 2))}, a);
    for (const Edge& e : d.internal_edges()) {
        const auto p = d.position(e.u), q = d.position(e.v);
        CHECK(std::hypot(p[0] - q[0], p[1] - q[1]) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(d.edge_between(e.u, e.v).has_value());
    }
}

TEST_CASE("zero-area region is rejected") {
    CHECK_THROWS_AS(LatticeDomain::build(rect(0, 0, 0, 1), Rational(1)), Error);
    try {
        LatticeDomain::build(rect(0, 0, 1, 0), Rational(1));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_domain);
    }
}

TEST_CASE("closed-form counts match direct scans on random rectangles") {
    std::mt19937_64 gen(20240611);
    std::uniform_int_distribution<int> num(-24, 24);
    for (Rational a : {Rational(1), Rational(1, 2), Rational(1, 4), Rational(1, 8)}) {
        for (int t = 0; t < 100; ++t) {
            int x0 = num(gen), x1 = num(gen), y0 = num(gen), y1 = num(gen);
            if (x0 == x1) ++x1;
            if (y0 == y1) ++y1;
            if (x0 > x1) std::swap(x0, x1);
            if (y0 > y1) std::swap(y0, y1);
            const Rect r = rect(Rational(x0, 3), Rational(y0, 5), Rational(x1, 3), Rational(y1, 5));
            const std::int64_t expect = scan_count(r.x0, r.x1, a) * scan_count(r.y0, r.y1, a);
            CHECK(rect_vertex_count(r, a) == expect);
            if (expect > 0) CHECK(LatticeDomain::build(r, a).vertex_count() == static_cast<std::size_t>(expect));
        }
    }
}

TEST_CASE("halving the spacing quadruples counts") {
    const Rect q = rect(Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2));
    for (int k = 0; k < 6; ++k) {
        const Rational a(1, 1 << k);
        CHECK(rect_vertex_count(q, a / Rational(2)) == 4 * rect_vertex_count(q, a));
        CHECK(rect_vertex_count(q, a) == a.den() * a.den());  // N(a) a^2 = 1
    }
}

TEST_CASE("boundary sets") {
    std::vector<std::vector<Rect>> shapes;
    for (int w : {1, 2, 5, 13, 64})
        for (int h : {1, 3, 8, 64}) shapes.push_back({rect(0, 0, w, h)});
    shapes.push_back({rect(0, 0, 10, 4), rect(0, 0, 4, 10)});
    shapes.push_back({rect(0, 0, 3, 3), rect(5, 5, 8, 8)});
    for (const auto& shape : shapes) {
        const auto d = LatticeDomain::build(shape, Rational(1));
        std::set<VertexId> inner(d.inner_boundary().begin(), d.inner_boundary().end());
        for (std::size_t v = 0; v < d.vertex_count(); ++v) {
            const auto nb = d.neighbors(static_cast<VertexId>(v));
            const bool has_outside = std::count(nb.begin(), nb.end(), kNoVertex) > 0;
            CHECK(has_outside == (inner.count(static_cast<VertexId>(v)) == 1));
            CHECK(has_outside == d.is_inner_boundary(static_cast<VertexId>(v)));
        }
        for (const Site& s : d.outer_boundary()) {
            CHECK_FALSE(d.vertex_at(s).has_value());
            const Site around[4] = {{s.i + 1, s.j}, {s.i, s.j + 1}, {s.i - 1, s.j}, {s.i, s.j - 1}};
            int inside = 0;
            for (const Site& t : around) inside += d.vertex_at(t).has_value();
            CHECK(inside >= 1);
        }
    }
}

TEST_CASE("ghost graph probabilities") {
    auto d = shared(LatticeDomain::build(rect(0, 0, 3, 3), Rational(1)));
    const auto g = extend_with_ghost(d, 0.5, BoundaryCondition::free());
    CHECK(g.p_internal() == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-15));
    CHECK(g.p_internal() == doctest::Approx(0.5857864).epsilon(1e-7));
    for (VertexId v = 0; v < 9; ++v) CHECK(g.p_external(v) == doctest::Approx(0.6321206).epsilon(1e-7));
    CHECK(g.has_field());

    const auto g0 = extend_with_ghost(d, 0.0, BoundaryCondition::free());
    CHECK_FALSE(g0.has_field());
    for (VertexId v = 0; v < 9; ++v) CHECK(g0.p_external(v) == 0.0);

    CHECK_THROWS_AS(extend_with_ghost(d, -0.1, BoundaryCondition::free()), Error);

    auto fine = shared(LatticeDomain::build(rect(0, 0, 1, 1), Rational(1, 4)));
    const auto gf = extend_with_ghost(fine, 2.0, BoundaryCondition::plus());
    CHECK(gf.field(0) == doctest::Approx(2.0 * std::pow(0.25, 15.0 / 8.0)).epsilon(1e-15));
}

TEST_CASE("boundary condition bookkeeping") {
    auto d = shared(LatticeDomain::build(rect(0, 0, 2, 2), Rational(1)));
    const std::size_t nb = d->boundary_bonds().size();
    CHECK(nb == 8);
    const auto plus = extend_with_ghost(d, 0.0, BoundaryCondition::plus());
    const auto wired = extend_with_ghost(d, 0.0, BoundaryCondition::wired());
    for (std::size_t b = 0; b < nb; ++b) {
        CHECK(plus.bond_spin(b) == 1);
        CHECK_FALSE(plus.bond_wired(b));
        CHECK(wired.bond_spin(b) == 0);
        CHECK(wired.bond_wired(b));
    }
    CHECK(wired.has_wired_exterior());
    CHECK_THROWS_AS(extend_with_ghost(d, 0.0, BoundaryCondition::explicit_spin({1, -1})), Error);
    CHECK_THROWS_AS(extend_with_ghost(d, 0.0, BoundaryCondition::explicit_edge(std::vector<std::int8_t>(nb, 2))), Error);
    CHECK(parse_boundary_kind("wired") == BoundaryKind::Wired);
    CHECK(std::string(to_string(BoundaryKind::Plus)) == "plus");
}

namespace {

bool dual_connected(const DualAnnulus& an) {
    const auto cells = an.cells();
    if (cells.empty()) return true;
    std::vector<std::vector<int>> adj(cells.size());
    for (const auto& e : an.dual_edges()) {
        adj[static_cast<std::size_t>(e.c1)].push_back(e.c2);
        adj[static_cast<std::size_t>(e.c2)].push_back(e.c1);
    }
    std::vector<char> seen(cells.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
        const int c = q.front();
        q.pop();
        for (int t : adj[static_cast<std::size_t>(c)]) {
            if (!seen[static_cast<std::size_t>(t)]) {
                seen[static_cast<std::size_t>(t)] = 1;
                ++count;
                q.push(t);
            }
        }
    }
    return count == cells.size();
}

} // namespace

TEST_CASE("dual annulus with one ring") {
    const ClosedRect inner{Rational(-1, 4), Rational(-1, 4), Rational(1, 4), Rational(1, 4)};
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    const auto an = build_dual_annulus(inner, outer, Rational(1, 4));
    CHECK(an.has_ring());
    CHECK(an.cells().size() == 12);
    CHECK(an.inner_sites().size() == 9);
    CHECK(an.outer_sites().size() == 16);
    // 40 edges in the 5x5 box, minus 12 inside the inner 3x3 block and 16 along the outer ring.
    CHECK(an.primal_edges().size() == 12);
    CHECK(an.dual_edges().size() == an.primal_edges().size());
    int cut = 0;
    for (const auto& e : an.dual_edges()) cut += e.crosses_cut;
    CHECK(cut == 1);
    CHECK(dual_connected(an));
}

TEST_CASE("dual edges cross their primal edge") {
    const ClosedRect inner{Rational(-1, 2), Rational(-1, 4), Rational(1, 4), Rational(1, 2)};
    const ClosedRect outer{Rational(-1), Rational(-1), Rational(1), Rational(1)};
    const auto an = build_dual_annulus(inner, outer, Rational(1, 8));
    REQUIRE(an.has_ring());
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (std::size_t k = 0; k < an.dual_edges().size(); ++k) {
        const auto& p = an.primal_edges()[k];
        const auto& d = an.dual_edges()[k];
        const auto c1 = an.cells()[static_cast<std::size_t>(d.c1)];
        const auto c2 = an.cells()[static_cast<std::size_t>(d.c2)];
        // midpoint of the primal edge equals the midpoint of the two cell centres
        CHECK(2 * (p.u.i + p.v.i) == 2 * (c1.i + c2.i) + 2);
        CHECK(2 * (p.u.j + p.v.j) == 2 * (c1.j + c2.j) + 2);
        CHECK(std::abs(p.u.i - p.v.i) + std::abs(p.u.j - p.v.j) == 1);
        CHECK(seen.insert({p.u.i * 1000 + p.u.j, p.v.i * 1000 + p.v.j}).second);
    }
    CHECK(dual_connected(an));
}

TEST_CASE("annulus preconditions and degenerate spacing") {
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    const ClosedRect touching{Rational(-1, 2), Rational(-1, 4), Rational(1, 4), Rational(1, 4)};
    CHECK_THROWS_AS(build_dual_annulus(touching, outer, Rational(1, 4)), Error);
    const ClosedRect inner{Rational(-1, 4), Rational(-1, 4), Rational(1, 4), Rational(1, 4)};
    const auto coarse = build_dual_annulus(inner, outer, Rational(1));
    CHECK_FALSE(coarse.has_ring());
    CHECK(coarse.dual_edges().empty());
}
