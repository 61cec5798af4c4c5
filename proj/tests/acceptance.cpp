// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 3 5        a subset
//
// Exit status 0 iff every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fkg/error.hpp"
#include "fkg/estimators.hpp"
#include "fkg/lattice.hpp"
#include "fkg/run.hpp"
#include "fkg/sampler.hpp"
#include "fkg/scaling.hpp"
#include "fkg/verify.hpp"

using namespace fkg;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string pm(double v, double e) { return fmt("%.4f", v) + " +- " + fmt("%.4f", e); }

// Identity on every simulated run, collected as the runs happen.
struct IdentityLedger {
    std::size_t runs = 0, failures = 0;
    double worst = 0.0;
    void check(const RecordTable& t, const RunSpec& s) {
        const auto dom = LatticeDomain::build(s.region, s.a);
        const auto r = identity_check(t.column("m"), t.column("mbar"), s.a.value(),
                                      static_cast<double>(dom.vertex_count()));
        ++runs;
        failures += !r.holds(1e-12);
        worst = std::max(worst, r.abs_diff());
    }
};
IdentityLedger identity_ledger;

RecordTable simulate(const RunSpec& s) {
    auto t = merge_chains(run_chains(s));
    identity_ledger.check(t, s);
    return t;
}

RunSpec square_run(Rational half_side, Rational a, BoundaryCondition bc, double h, std::uint64_t sweeps,
                   std::uint64_t seed) {
    RunSpec s;
    s.region = {Rect{-half_side, -half_side, half_side, half_side}};
    s.a = a;
    s.bc = std::move(bc);
    s.h = h;
    s.sweeps = sweeps;
    s.seed = seed;
    return s;
}

// 1. Exact identities on the shipped corpus.
Outcome oracle_suite() {
    const auto report = run_corpus(parse_corpus(builtin_corpus(), "builtin corpus"), 1);
    double worst = 0.0;
    for (const auto& c : report.checks)
        if (c.identity != "sampler_tv") worst = std::max(worst, c.value);
    const bool ok = report.passed() && worst <= 1e-12;
    return {ok, std::to_string(report.checks.size()) + " checks, " + std::to_string(report.failures()) +
                    " failures, largest exact deviation " + fmt("%.2g", worst)};
}

// 2. Swendsen-Wang against enumeration on tiny boxes.
Outcome sampler_exactness() {
    double worst = 0.0;
    std::uint64_t seed = 100;
    for (auto [w, h] : {std::pair{1, 2}, {2, 2}, {2, 3}}) {
        for (double field : {0.0, 0.5, 1.0}) {
            auto dom = std::make_shared<const LatticeDomain>(
                LatticeDomain::build(Rect{Rational(0), Rational(0), Rational(w), Rational(h)}, Rational(1)));
            const GhostGraph g = extend_with_ghost(dom, field, BoundaryCondition::free());
            worst = std::max(worst, sampler_tv(g, 1000000, ++seed));
        }
    }
    return {worst < 0.01, "largest TV distance " + fmt("%.4f", worst) + " over 9 boxes x fields (1e6 sweeps each)"};
}

// 3. One-arm probability vs a at h = 0 and h = 1.
Outcome one_arm_exponent() {
    bool ok = true;
    std::string detail;
    for (double h : {0.0, 1.0}) {
        ScalingSeries s{"one_arm", "a", {}};
        std::vector<double> hits;
        for (int k : {8, 16, 32, 64}) {
            auto spec = square_run(Rational(1), Rational(1, k), BoundaryCondition::wired(), h, 30000, 300 + k);
            const auto t = simulate(spec);
            const auto e = column_estimate(t, "one_arm");
            double n = 0;
            for (double v : t.column("one_arm")) n += v;
            s.points.push_back({1.0 / k, e.value, e.error});
            hits.push_back(n);
        }
        std::reverse(s.points.begin(), s.points.end());
        std::reverse(hits.begin(), hits.end());
        const auto f = one_arm_fit(s, hits);
        const bool pass = std::abs(f.exponent - kOneArmExponent) <= 0.03;
        ok = ok && pass;
        detail += (detail.empty() ? "" : "; ") + std::string("h=") + fmt("%g", h) + ": exponent " +
                  pm(f.exponent, f.exponent_stderr);
    }
    return {ok, detail + " (target 0.125 +- 0.03)"};
}

// 4. Magnetization vs H on a plus box of side 256.
Outcome magnetization_exponent() {
    ScalingSeries s{"magnetization", "H", {}};
    for (double H : {0.002, 0.005, 0.01, 0.02, 0.05}) {
        auto spec = square_run(Rational(128), Rational(1), BoundaryCondition::plus(), H, 5000, 400);
        spec.observables.window = 64;
        const auto t = simulate(spec);
        const auto e = column_estimate(t, "sbar");
        s.points.push_back({H, e.value, e.error});
    }
    const auto m = magnetization_fit(s, 256);
    const bool ok = std::abs(m.fit.exponent - kMagnetizationExponent) <= 0.015 && m.plateau_ratio < 1.15;
    return {ok, "exponent " + pm(m.fit.exponent, m.fit.exponent_stderr) + " (target 0.0667 +- 0.015), plateau ratio " +
                    fmt("%.4f", m.plateau_ratio) + " (< 1.15)"};
}

// 5. Effective mass vs H from the zero-momentum window correlator.
Outcome mass_exponent() {
    ScalingSeries s{"mass", "H", {}};
    std::string windows;
    for (double H : {0.01, 0.02, 0.05, 0.1}) {
        auto spec = square_run(Rational(64), Rational(1), BoundaryCondition::plus(), H, 50000, 500);
        spec.observables.window = 64;
        spec.observables.max_r = 20;
        const auto t = simulate(spec);
        const double r_min = std::ceil(0.5 * std::pow(H, -kMassExponent));
        const auto m = effective_mass(wall_correlator(t), r_min);
        if (!m.valid) return {false, "H=" + fmt("%g", H) + ": no stable window (" + m.reason + ")"};
        s.points.push_back({H, m.mass, m.error});
        windows += " m(" + fmt("%g", H) + ")=" + pm(m.mass, m.error) + " r in [" + fmt("%g", m.r_lo) + "," +
                   fmt("%g", m.r_hi) + "]";
    }
    const auto f = mass_fit(s);
    const bool ok = std::abs(f.fit.exponent - kMassExponent) <= 0.08 && std::isfinite(f.bound_constant) &&
                    f.bound_constant > 0;
    return {ok, "exponent " + pm(f.fit.exponent, f.fit.exponent_stderr) + " (target 0.5333 +- 0.08), C = " +
                    fmt("%.3f", f.bound_constant) + ", spread " + fmt("%.3f", f.bound_spread) + ";" + windows};
}

// 6. MGF bound constants of the largest renormalized area on the wired unit square.
Outcome mgf_shape() {
    bool ok = true;
    std::string detail;
    const std::vector<double> t{0.5, 1.0, 2.0};
    for (double h : {0.0, 1.0}) {
        std::vector<double> c;
        for (int k : {32, 64}) {
            auto spec = square_run(Rational(1, 2), Rational(1, k), BoundaryCondition::wired(), h, 20000, 600 + k);
            const auto rows = simulate(spec);
            const auto f = mgf_fit(rows.column("A_max"), t, h);
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double s = t[i] + h;
                ok = ok && f.estimates[i].value <= 2.0 * std::exp(f.constant * (s + s * s)) * (1 + 1e-12);
            }
            c.push_back(f.constant);
        }
        const double var = relative_change(c[0], c[1]);
        ok = ok && std::isfinite(var) && var < 0.2;
        detail += (detail.empty() ? "" : "; ") + std::string("h=") + fmt("%g", h) + ": C(1/32)=" + fmt("%.4f", c[0]) +
                  " C(1/64)=" + fmt("%.4f", c[1]) + " variation " + fmt("%.3f", var);
    }
    return {ok, detail + " (< 0.2)"};
}

// 7. Sample-level identity on every run above plus a dedicated a-grid.
Outcome identity_everywhere() {
    for (int k : {1, 2, 4, 8, 16}) {
        RunSpec s;
        s.region = {Rect{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)}};
        s.a = Rational(1, k);
        s.h = 1.0;
        s.bc = BoundaryCondition::plus();
        s.sweeps = 2000;
        s.thermalization = 200;
        simulate(s);
    }
    const bool ok = identity_ledger.failures == 0 && identity_ledger.runs > 0;
    return {ok, std::to_string(identity_ledger.runs) + " runs, " + std::to_string(identity_ledger.failures) +
                    " violations, largest |lhs - rhs| " + fmt("%.2g", identity_ledger.worst)};
}

// 8. Blocking circuit XOR primal crossing on random annulus configurations.
Outcome duality() {
    const ClosedRect inner{Rational(-1, 8), Rational(-1, 8), Rational(1, 8), Rational(1, 8)};
    const ClosedRect outer{Rational(-1, 2), Rational(-1, 2), Rational(1, 2), Rational(1, 2)};
    const Rational a(1, 8);
    auto dom = std::make_shared<const LatticeDomain>(
        LatticeDomain::build(Rect{Rational(-1, 2), Rational(-1, 2), Rational(5, 8), Rational(5, 8)}, a));
    AnnulusProbe probe(dom, build_dual_annulus(inner, outer, a));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint8_t> open(probe.size());
    std::uint64_t violations = 0, circuits = 0;
    const std::uint64_t n = 100000;
    for (std::uint64_t s = 0; s < n; ++s) {
        const double p = unif(rng);  // sweep the whole density range
        for (auto& o : open) o = unif(rng) < p;
        const bool c = probe.blocking_circuit(open);
        circuits += c;
        violations += c == probe.primal_crossing(open);
    }
    return {violations == 0, std::to_string(n) + " configurations on a " + std::to_string(probe.size()) +
                                 "-edge annulus, " + std::to_string(circuits) + " with a circuit, " +
                                 std::to_string(violations) + " violations"};
}

// 9. Cluster spins from shared uniforms never decrease along the h grid.
Outcome coupled_monotonicity() {
    ChainParams p;
    auto dom = std::make_shared<const LatticeDomain>(
        LatticeDomain::build(Rect{Rational(-16), Rational(-16), Rational(16), Rational(16)}, Rational(1)));
    p.graph = std::make_shared<const GhostGraph>(extend_with_ghost(dom, 0.01, BoundaryCondition::free()));
    p.seed = 900;
    p.thermalization = 1000;
    p.sweeps = 11000;
    p.h_grid = {0.05, 0.2, 0.8};
    std::uint64_t samples = 0, violations = 0, decreasing = 0;
    coupled_h_run(p, [&](const CoupledSample& s) {
        ++samples;
        violations += s.violations;
        for (std::size_t k = 0; k + 1 < s.magnetization.size(); ++k) decreasing += s.magnetization[k + 1] < s.magnetization[k];
    });
    return {samples == 10000 && violations == 0 && decreasing == 0,
            std::to_string(samples) + " samples x 3 fields, " + std::to_string(violations) +
                " cluster violations, " + std::to_string(decreasing) + " magnetization decreases"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "oracle identity suite", 60, oracle_suite},
        {2, "sampler exactness", 600, sampler_exactness},
        {3, "one-arm exponent", 1800, one_arm_exponent},
        {4, "magnetization exponent", 3600, magnetization_exponent},
        {5, "mass exponent", 7200, mass_exponent},
        {6, "MGF shape", 1800, mgf_shape},
        {7, "sample-level identity", 600, identity_everywhere},
        {8, "duality dichotomy", 600, duality},
        {9, "coupled-h monotonicity", 600, coupled_monotonicity},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    bool all_pass = true;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the time budget";
        }
        all_pass = all_pass && o.pass;
        std::printf("%s %d %s: %s [%.1f s, budget %.0f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs, c.budget_s);
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}
