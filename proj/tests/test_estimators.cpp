#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <random>

#include "fkg/error.hpp"
#include "fkg/estimators.hpp"
#include "fkg/oracle.hpp"
#include "fkg/sampler.hpp"

using namespace fkg;

namespace {

std::shared_ptr<const LatticeDomain> square(Rational lo, Rational hi, Rational a) {
    return std::make_shared<const LatticeDomain>(LatticeDomain::build(Rect{lo, lo, hi, hi}, a));
}

std::shared_ptr<const LatticeDomain> box(std::int64_t w, std::int64_t h) {
    return std::make_shared<const LatticeDomain>(
        LatticeDomain::build(Rect{Rational(0), Rational(0), Rational(w), Rational(h)}, Rational(1)));
}

std::shared_ptr<const GhostGraph> ghost(std::shared_ptr<const LatticeDomain> d, double h,
                                        BoundaryCondition bc = BoundaryCondition::free()) {
    return std::make_shared<const GhostGraph>(extend_with_ghost(std::move(d), h, std::move(bc)));
}

/// Lattice bonds matching an internal configuration of small_graph_from(g).
BondConfig bonds_from_bits(const GhostGraph& g, std::uint64_t omega) {
    BondConfig b = BondConfig::closed(g);
    const std::size_t E = g.domain().edge_count();
    for (std::size_t e = 0; e < E; ++e) b.internal[e] = (omega >> e) & 1u;
    const auto kind = g.boundary().kind;
    for (std::size_t k = 0; k < b.boundary.size(); ++k) {
        if (kind == BoundaryKind::Wired || kind == BoundaryKind::ExplicitEdge) b.boundary[k] = g.bond_wired(k);
        else if (kind != BoundaryKind::Free) b.boundary[k] = (omega >> (E + k)) & 1u;
    }
    return b;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int atoms) {
    std::uniform_real_distribution<double> pos(0.0, 1.0), mass(0.1, 1.0);
    DiscreteMeasure m;
    for (int k = 0; k < atoms; ++k) m.atoms.push_back({std::round(pos(rng) * 8) / 8, std::round(pos(rng) * 8) / 8, mass(rng)});
    return m;
}

} // namespace

TEST_CASE("cluster decomposition of a hand-drawn 3x3 configuration") {
    auto g = ghost(box(3, 3), 0.0);
    const auto& dom = g->domain();
    BondConfig b = BondConfig::closed(*g);
    auto open = [&](Site x, Site y) { b.internal[*dom.edge_between(*dom.vertex_at(x), *dom.vertex_at(y))] = 1; };
    // an L-shaped cluster {(0,0),(1,0),(2,0),(2,1)} and a pair {(0,2),(1,2)}
    open({0, 0}, {1, 0});
    open({1, 0}, {2, 0});
    open({2, 0}, {2, 1});
    open({0, 2}, {1, 2});
    const auto d = clusters(*g, b);
    CHECK(d.count() == 5);
    const auto s = area_stats(d);
    CHECK(s.max == doctest::Approx(4.0));
    CHECK(s.boundary == 0.0);
    std::multiset<double> areas(s.areas.begin(), s.areas.end());
    CHECK(areas == std::multiset<double>{1.0, 1.0, 1.0, 2.0, 4.0});
    // the centre is isolated, so it has no arm to the boundary
    CHECK_FALSE(one_arm(d, dom, *dom.vertex_at({1, 1})));
    CHECK(one_arm(d, dom, *dom.vertex_at({2, 1})));
}

TEST_CASE("area statistics at the extremes") {
    const Rational a(1, 8);
    auto g = ghost(square(Rational(0), Rational(1), a), 0.0, BoundaryCondition::wired());
    const double unit = std::pow(0.125, 15.0 / 8.0);
    {
        const auto d = clusters(*g, BondConfig::closed(*g));
        CHECK(d.count() == 64);
        CHECK(area_stats(d).max == doctest::Approx(unit));
    }
    {
        const auto d = clusters(*g, BondConfig::open(*g));
        const auto s = area_stats(d);
        CHECK(d.count() == 1);
        CHECK(s.max == doctest::Approx(64 * unit));
        CHECK(s.boundary == doctest::Approx(64 * unit));
    }
    auto f = ghost(square(Rational(0), Rational(1), a), 0.0);
    CHECK(area_stats(clusters(*f, BondConfig::open(*f))).boundary == 0.0);
}

TEST_CASE("one-arm indicator") {
    auto g = ghost(square(Rational(-1), Rational(1), Rational(1, 4)), 0.0);
    const auto& dom = g->domain();
    const auto o = *dom.vertex_at({0, 0});
    CHECK(one_arm(clusters(*g, BondConfig::open(*g)), dom, o));
    CHECK_FALSE(one_arm(clusters(*g, BondConfig::closed(*g)), dom, o));
    // at a = 1 the origin of [-1,1)^2 is itself a boundary vertex
    auto tiny = ghost(square(Rational(-1), Rational(1), Rational(1)), 0.0);
    CHECK(one_arm(clusters(*tiny, BondConfig::closed(*tiny)), tiny->domain(), *tiny->domain().vertex_at({0, 0})));
}

TEST_CASE("two-point RB values on single configurations") {
    auto g = ghost(box(2, 1), 0.0);
    BondConfig b = BondConfig::closed(*g);
    CHECK(two_point_rb(clusters(*g, b), 0, 1) == 0.0);
    b.internal[0] = 1;
    CHECK(two_point_rb(clusters(*g, b), 0, 1) == 1.0);
    auto gh = ghost(box(2, 1), 0.5);
    const auto d = clusters(*gh, BondConfig::closed(*gh));
    CHECK(two_point_rb(d, 0, 1) == doctest::Approx(std::tanh(0.5) * std::tanh(0.5)));
    CHECK(ghost_connection_rb(d, 0) == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("RB tower property against exact enumeration") {
    for (double h : {0.0, 0.25, 1.0}) {
        for (auto bc : {BoundaryCondition::free(), BoundaryCondition::plus(), BoundaryCondition::minus(),
                        BoundaryCondition::wired()}) {
            CAPTURE(h);
            const std::string kind = to_string(bc.kind);
            CAPTURE(kind);
            // clamped boundaries add a boundary bond per side, so keep that box smaller
            const bool clamped = bc.kind == BoundaryKind::Plus || bc.kind == BoundaryKind::Minus;
            auto g = ghost(clamped ? box(2, 2) : box(3, 2), h, bc);
            const SmallGraph sg = small_graph_from(*g);
            const auto full = enumerate_fk_ghost(sg);
            const auto marg = internal_marginal(full);
            const auto ising = enumerate_ising(sg);
            const int n = static_cast<int>(g->domain().vertex_count());
            std::vector<ClusterDecomposition> dec;
            for (auto omega : marg.configs) dec.push_back(clusters(*g, bonds_from_bits(*g, omega)));
            auto avg = [&](auto f) {
                long double s = 0.0;
                for (std::size_t k = 0; k < dec.size(); ++k) s += marg.prob[k] * f(dec[k]);
                return static_cast<double>(s);
            };
            for (int x = 0; x < n; ++x) {
                const double spin = ising.expectation([&](std::uint64_t c) { return (c >> x) & 1u ? 1.0 : -1.0; });
                CHECK(avg([&](const auto& d) { return spin_rb(d, x); }) == doctest::Approx(spin).epsilon(1e-12));
                CHECK(avg([&](const auto& d) { return ghost_connection_rb(d, x); }) ==
                      doctest::Approx(ghost_probability(sg, full, x)).epsilon(1e-12));
                for (int y = x + 1; y < n; ++y) {
                    CHECK(avg([&](const auto& d) { return two_point_rb(d, x, y); }) ==
                          doctest::Approx(connection_probability(sg, full, x, y)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("truncated two-point estimator on a two-site graph") {
    auto g = ghost(box(2, 1), 0.5);
    const auto exact = truncated_two_point_exact(small_graph_from(*g), 0, 1);
    SwendsenWang chain(g, 11, 0);
    std::vector<double> pair, gx, gy;
    for (int s = 0; s < 200000; ++s) {
        chain.sweep();
        const auto d = clusters(*g, chain.bonds());
        pair.push_back(two_point_rb(d, 0, 1));
        gx.push_back(ghost_connection_rb(d, 0));
        gy.push_back(ghost_connection_rb(d, 1));
    }
    const auto est = truncated_two_point_mc(pair, gx, gy);
    CHECK(est.error > 0);
    CHECK(std::abs(est.value - exact.fk_side) < 3 * est.error + 1e-4);

    const std::vector<double> p{0.2, 0.7, 0.4}, zeros(3, 0.0);
    CHECK(truncated_two_point_mc(p, zeros, zeros, 3).value == doctest::Approx((0.2 + 0.7 + 0.4) / 3));
}

TEST_CASE("annulus duality: exhaustive on the one-ring annulus") {
    const ClosedRect inner{Rational(-1, 4), Rational(-1, 4), Rational(1, 4), Rational(1, 4)};
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    auto dom = square(Rational(-1, 2), Rational(3, 4), Rational(1, 4));
    AnnulusProbe probe(dom, build_dual_annulus(inner, outer, Rational(1, 4)));
    REQUIRE(probe.size() == 12);
    std::vector<std::uint8_t> open(12);
    int circuits = 0;
    for (std::uint32_t c = 0; c < (1u << 12); ++c) {
        for (std::size_t k = 0; k < 12; ++k) open[k] = (c >> k) & 1u;
        const bool circ = probe.blocking_circuit(open);
        CHECK(circ != probe.primal_crossing(open));
        circuits += circ;
    }
    // every radial edge closed is the only way to block a one-cell-wide ring
    CHECK(circuits == 1);
}

TEST_CASE("annulus duality: random configurations and a radial path") {
    const ClosedRect inner{Rational(-1, 8), Rational(-1, 8), Rational(1, 8), Rational(1, 8)};
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    auto dom = square(Rational(-1, 2), Rational(5, 8), Rational(1, 8));
    AnnulusProbe probe(dom, build_dual_annulus(inner, outer, Rational(1, 8)));
    const auto& an = probe.annulus();
    std::vector<std::uint8_t> open(probe.size());
    CHECK(probe.blocking_circuit(open));
    std::fill(open.begin(), open.end(), 1);
    CHECK_FALSE(probe.blocking_circuit(open));

    std::mt19937_64 rng(5);
    for (double p : {0.3, 0.5, 0.7}) {
        std::bernoulli_distribution coin(p);
        int violations = 0;
        for (int s = 0; s < 20000; ++s) {
            for (auto& o : open) o = coin(rng);
            violations += probe.blocking_circuit(open) == probe.primal_crossing(open);
        }
        CHECK(violations == 0);
    }

    // straight radial path from (1,0) to (4,0)
    std::fill(open.begin(), open.end(), 0);
    std::size_t last = 0;
    for (std::size_t k = 0; k < probe.size(); ++k) {
        const auto& e = an.primal_edges()[k];
        if (e.u.j == 0 && e.v.j == 0 && e.u.i >= 1 && e.v.i <= 4) {
            open[k] = 1;
            last = k;
        }
    }
    CHECK_FALSE(probe.blocking_circuit(open));
    CHECK(probe.primal_crossing(open));
    open[last] = 0;
    CHECK(probe.blocking_circuit(open));

    // the same probe reads bonds of the lattice configuration
    auto g = ghost(dom, 0.0);
    BondConfig b = BondConfig::closed(*g);
    for (std::size_t k = 0; k < probe.size(); ++k) b.internal[probe.edge_index(k)] = open[k];
    CHECK(probe.blocking_circuit(b) == probe.blocking_circuit(open));
}

TEST_CASE("annulus probe rejects a domain that does not contain it") {
    const ClosedRect inner{Rational(-1, 8), Rational(-1, 8), Rational(1, 8), Rational(1, 8)};
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    auto small = square(Rational(-1, 4), Rational(1, 4), Rational(1, 8));
    CHECK_THROWS_AS(AnnulusProbe(small, build_dual_annulus(inner, outer, Rational(1, 8))), Error);
    auto coarse = square(Rational(-1), Rational(1), Rational(1, 4));
    CHECK_THROWS_AS(AnnulusProbe(coarse, build_dual_annulus(inner, outer, Rational(1, 8))), Error);
}

TEST_CASE("moment generating function estimates") {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> ex(4.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = ex(rng);
    CHECK(mgf_estimate(x, 0.0).value == 1.0);
    CHECK(mgf_estimate(x, 0.0).error == 0.0);
    double prev = 0.0;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        const auto m = mgf_estimate(x, t);
        CHECK(m.value > prev);
        prev = m.value;
        CHECK(m.log_value == doctest::Approx(std::log(m.value)));
    }
    // log-sum-exp keeps huge exponents finite on the log scale
    const std::vector<double> big{800.0, 801.0};
    CHECK(mgf_estimate(big, 1.0, 2).log_value == doctest::Approx(800.0 + std::log((1 + std::exp(1.0)) / 2)));
    CHECK_THROWS_AS(mgf_estimate(x, -1.0), Error);

    const std::vector<double> t{0.5, 1.0, 2.0};
    std::vector<MgfEstimate> est;
    for (double tt : t) est.push_back(mgf_estimate(x, tt));
    const double c = fit_mgf_constant(t, est);
    for (std::size_t k = 0; k < t.size(); ++k)
        CHECK(est[k].log_value <= std::log(2.0) + c * (t[k] + t[k] * t[k]) + 1e-12);
}

TEST_CASE("field pairing") {
    auto dom = square(Rational(-1, 2), Rational(1, 2), Rational(1, 2));
    REQUIRE(dom->vertex_count() == 4);
    const std::vector<std::int8_t> plus(4, 1);
    CHECK(field_pairing(*dom, plus, TestFunction::constant_value(1.0)) == doctest::Approx(1.0905077));
    CHECK(field_pairing(*dom, plus, TestFunction::constant_value(0.0)) == 0.0);

    auto big = square(Rational(-1), Rational(1), Rational(1, 4));
    std::mt19937_64 rng(1);
    std::vector<std::int8_t> sigma(big->vertex_count());
    for (auto& s : sigma) s = (rng() & 1u) ? 1 : -1;
    const auto f = TestFunction::product_xy();
    const auto ind = TestFunction::indicator(Rect{Rational(-1, 2), Rational(0), Rational(1, 2), Rational(1)});
    auto fv = f.values(*big), gv = ind.values(*big), sum = fv;
    for (std::size_t v = 0; v < sum.size(); ++v) sum[v] += gv[v];
    CHECK(field_pairing(*big, sigma, sum) ==
          doctest::Approx(field_pairing(*big, sigma, f) + field_pairing(*big, sigma, ind)).epsilon(1e-12));
    // indicator counts the half-open rectangle: 4 columns x 4 rows at a = 1/4
    CHECK(std::accumulate(gv.begin(), gv.end(), 0.0) == 16.0);
}

TEST_CASE("Prokhorov and ensemble distances") {
    DiscreteMeasure one{{{0, 0, 1.0}}}, half{{{0, 0, 0.5}}};
    CHECK(prokhorov_distance(one, half) == doctest::Approx(0.5));
    CHECK(prokhorov_distance(one, one) == 0.0);
    // unit mass moved by 0.3
    DiscreteMeasure moved{{{0.3, 0, 1.0}}};
    CHECK(prokhorov_distance(one, moved) == doctest::Approx(0.3));
    // far apart: the mass bound caps the distance
    DiscreteMeasure far{{{5, 0, 1.0}}};
    CHECK(prokhorov_distance(one, far) == doctest::Approx(1.0));
    DiscreteMeasure small_far{{{5, 0, 0.2}}}, small{{{0, 0, 0.2}}};
    CHECK(prokhorov_distance(small, small_far) == doctest::Approx(0.2));

    CHECK(ensemble_distance({}, {}) == 0.0);
    CHECK(std::isinf(ensemble_distance({one}, {})));
    CHECK(ensemble_distance({one, half}, {one, half}) == 0.0);
    CHECK(ensemble_distance({one}, {one, half}) == doctest::Approx(0.5));

    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> count(1, 3), atoms(1, 3);
    auto ensemble = [&] {
        ClusterMeasureEnsemble e;
        const int k = count(rng);
        for (int i = 0; i < k; ++i) e.push_back(random_measure(rng, atoms(rng)));
        return e;
    };
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = ensemble(), s = ensemble(), t = ensemble();
        const double rs = ensemble_distance(r, s), sr = ensemble_distance(s, r);
        CHECK(rs == doctest::Approx(sr).epsilon(1e-12));
        CHECK(ensemble_distance(r, t) <= rs + ensemble_distance(s, t) + 1e-9);
        CHECK(ensemble_distance(r, r) == 0.0);
    }
}

TEST_CASE("cluster ensembles carry renormalized masses") {
    auto g = ghost(square(Rational(0), Rational(1), Rational(1, 4)), 0.0);
    const auto d = clusters(*g, BondConfig::closed(*g));
    const auto ens = cluster_ensemble(d, g->domain());
    CHECK(ens.size() == 16);
    CHECK(ens[0].total() == doctest::Approx(std::pow(0.25, 15.0 / 8.0)));
    CHECK(cluster_ensemble(d, g->domain(), 2).empty());
    const auto all = cluster_ensemble(clusters(*g, BondConfig::open(*g)), g->domain());
    REQUIRE(all.size() == 1);
    CHECK(all[0].total() == doctest::Approx(16 * std::pow(0.25, 15.0 / 8.0)));
}

TEST_CASE("measurement rows") {
    const Rational a(1, 8);
    auto dom = square(Rational(-1), Rational(1), a);
    auto g = ghost(dom, 1.0, BoundaryCondition::plus());
    ObservableSpec spec;
    spec.phi.push_back({"Q", TestFunction::indicator(Rect{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)})});
    spec.pairs.push_back({Site{0, 0}, Site{3, -2}});
    spec.annulus = {ClosedRect{Rational(-1, 4), Rational(-1, 4), Rational(1, 4), Rational(1, 4)},
                    ClosedRect{Rational(-3, 4), Rational(-3, 4), Rational(3, 4), Rational(3, 4)}};
    spec.window = 8;
    spec.max_r = 3;
    Measurer m(g, spec);
    const auto& h = m.header();
    const std::vector<std::string> lead{"sweep", "h", "a", "L", "m", "A_max", "A_0", "one_arm", "block_circ", "phi_Q",
                                        "tp_0_0__3_m2"};
    REQUIRE(h.size() > lead.size());
    CHECK(std::vector<std::string>(h.begin(), h.begin() + static_cast<long>(lead.size())) == lead);
    std::map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < h.size(); ++k) col[h[k]] = k;
    for (const char* name : {"phirb_Q", "gc_0_0", "gc_3_m2", "mbar", "s_center", "sbar", "wr_7", "wk_0", "wc_0", "wc_3",
                             "pc_3", "pe_1"})
        CHECK(col.count(name) == 1);
    CHECK(col.count("pc_0") == 0);

    SwendsenWang chain(g, 9, 0);
    std::vector<double> row, mean_m, mean_bar;
    for (int s = 1; s <= 200; ++s) {
        chain.sweep();
        row.clear();
        m.measure(static_cast<std::uint64_t>(s), chain.spins(), chain.bonds(), row);
        REQUIRE(row.size() == h.size());
        CHECK(row[0] == s);
        CHECK(row[1] == 1.0);
        CHECK(row[2] == 0.125);
        CHECK(row[3] == 16.0);
        CHECK((row[7] == 0.0 || row[7] == 1.0));
        CHECK((row[8] == 0.0 || row[8] == 1.0));
        CHECK(std::abs(row[9]) <= 64 * dom->area_unit() + 1e-12);
        CHECK(row[col["wc_0"]] >= 0.0);
        mean_m.push_back(row[4]);
        mean_bar.push_back(row[col["mbar"]]);
    }
    // sample-level identity between the renormalized magnetization and the mean spin
    const double lhs = mean(mean_m);
    const double rhs = dom->area_unit() * static_cast<double>(dom->vertex_count()) * mean(mean_bar);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("measurement configuration errors") {
    auto g = ghost(square(Rational(0), Rational(1), Rational(1, 8)), 0.0);
    ObservableSpec missing;
    missing.origin = Site{20, 0};
    CHECK_THROWS_AS(Measurer(g, missing), Error);
    ObservableSpec same;
    same.pairs.push_back({Site{1, 1}, Site{1, 1}});
    CHECK_THROWS_AS(Measurer(g, same), Error);
    ObservableSpec wide;
    wide.window = 12;
    CHECK_THROWS_AS(Measurer(g, wide), Error);
    ObservableSpec no_window;
    no_window.max_r = 2;
    CHECK_THROWS_AS(Measurer(g, no_window), Error);
    try {
        Measurer(g, missing);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config);
    }
}
