#include "fkg/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fkg/error.hpp"
#include "fkg/lattice.hpp"
#include "fkg/oracle.hpp"
#include "fkg/sampler.hpp"

namespace fkg {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto k = s.find(sep, start);
        out.push_back(trim(s.substr(start, k - start)));
        if (k == std::string_view::npos) break;
        start = k + 1;
    }
    return out;
}

const std::map<std::string, std::vector<std::string>>& known_identities() {
    static const std::map<std::string, std::vector<std::string>> ids{
        {"es_identity", {"graph", "h", "J", "tol"}},
        {"rn_tilt", {"graph", "h", "q", "J", "tol"}},
        {"tanh_law", {"graph", "h", "q", "J", "tol"}},
        {"marginal", {"graph", "h", "q", "J", "tol"}},
        {"fkg", {"graph", "h", "J", "tol"}},
        {"ghost_law", {"H", "q", "expected", "tol"}},
        {"two_point", {"graph", "h", "x", "y", "expected", "J", "tol"}},
        {"magnetization", {"graph", "h", "x", "expected", "J", "tol"}},
        {"sampler_tv", {"box", "bc", "h", "sweeps", "tol", "seed"}},
    };
    return ids;
}

[[noreturn]] void bad_entry(const CorpusEntry& e, const std::string& what) {
    fail(Errc::config, "corpus line " + std::to_string(e.line) + " (" + e.identity + "): " + what);
}

double to_number(const CorpusEntry& e, const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        bad_entry(e, "bad number '" + text + "' for " + key);
    }
    return v;
}

std::string param(const CorpusEntry& e, const std::string& key) {
    const auto it = e.params.find(key);
    if (it == e.params.end()) bad_entry(e, "missing parameter '" + key + "'");
    return it->second;
}

double number(const CorpusEntry& e, const std::string& key, std::optional<double> fallback = std::nullopt) {
    const auto it = e.params.find(key);
    if (it == e.params.end()) {
        if (!fallback) bad_entry(e, "missing parameter '" + key + "'");
        return *fallback;
    }
    return to_number(e, key, it->second);
}

std::vector<double> numbers(const CorpusEntry& e, const std::string& key, double fallback) {
    const auto it = e.params.find(key);
    if (it == e.params.end()) return {fallback};
    std::vector<double> out;
    for (const auto& t : split(it->second, ',')) out.push_back(to_number(e, key, t));
    return out;
}

int integer(const CorpusEntry& e, const std::string& text) {
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 1) bad_entry(e, "bad size '" + text + "'");
    return v;
}

std::pair<int, int> dims(const CorpusEntry& e, const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) bad_entry(e, "expected RxC, got '" + text + "'");
    return {integer(e, text.substr(0, x)), integer(e, text.substr(x + 1))};
}

std::shared_ptr<const GhostGraph> lattice_box(const CorpusEntry& e, const std::string& size, const std::string& bc,
                                              double h) {
    const auto [w, hgt] = dims(e, size);
    auto dom = std::make_shared<const LatticeDomain>(
        LatticeDomain::build(Rect{Rational(0), Rational(0), Rational(w), Rational(hgt)}, Rational(1)));
    BoundaryKind kind{};
    try {
        kind = parse_boundary_kind(bc);
    } catch (const Error&) {
        bad_entry(e, "unknown boundary condition '" + bc + "'");
    }
    if (kind == BoundaryKind::ExplicitSpin || kind == BoundaryKind::ExplicitEdge) {
        bad_entry(e, "explicit boundaries are not expressible in a corpus line");
    }
    return std::make_shared<const GhostGraph>(extend_with_ghost(std::move(dom), h, BoundaryCondition{kind, {}}));
}

/// path:N cycle:N star:N complete:N grid:RxC lattice:WxH:bc
SmallGraph make_graph(const CorpusEntry& e, double J, double H, int* sites = nullptr) {
    const auto spec = param(e, "graph");
    const auto parts = split(spec, ':');
    const std::string& kind = parts[0];
    if (kind == "lattice") {
        if (parts.size() != 3) bad_entry(e, "lattice graphs read lattice:WxH:bc");
        const auto box = lattice_box(e, parts[1], parts[2], H);
        if (sites) *sites = static_cast<int>(box->domain().vertex_count());
        return small_graph_from(*box);
    }
    if (parts.size() != 2) bad_entry(e, "bad graph '" + spec + "'");
    SmallGraph g;
    g.name = spec;
    if (kind == "grid") {
        const auto [r, c] = dims(e, parts[1]);
        g = SmallGraph::grid(r, c, J, H);
        g.name = spec;
    } else {
        const int n = integer(e, parts[1]);
        if (n > SmallGraph::kMaxVertices) bad_entry(e, "too many vertices");
        for (int v = 0; v < n; ++v) g.add_vertex(H);
        if (kind == "path" || kind == "cycle") {
            for (int v = 0; v + 1 < n; ++v) g.add_edge(v, v + 1, J);
            if (kind == "cycle" && n > 2) g.add_edge(n - 1, 0, J);
        } else if (kind == "star") {
            for (int v = 1; v < n; ++v) g.add_edge(0, v, J);
        } else if (kind == "complete") {
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v) g.add_edge(u, v, J);
        } else {
            bad_entry(e, "unknown graph family '" + kind + "'");
        }
    }
    g.validate();
    if (sites) *sites = g.n;
    return g;
}

std::string describe(const CorpusEntry& e, double h, std::optional<double> q) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : e.params) {
        if (k == "h" || k == "q") continue;
        os << (first ? "" : " ") << k << '=' << v;
        first = false;
    }
    if (e.params.count("h")) os << (first ? "" : " ") << "h=" << h, first = false;
    if (q) os << (first ? "" : " ") << "q=" << *q;
    return os.str();
}

void run_entry(const CorpusEntry& e, std::uint64_t seed, std::vector<CheckResult>& out) {
    const double J = number(e, "J", kBetaC);
    auto record = [&](const std::string& params, double value, double tol, std::string detail = {}) {
        CheckResult r;
        r.line = e.line;
        r.identity = e.identity;
        r.params = params;
        r.value = value;
        r.tolerance = tol;
        r.passed = std::isfinite(value) && value <= tol;
        r.detail = std::move(detail);
        out.push_back(std::move(r));
    };
    const std::string& id = e.identity;

    if (id == "ghost_law") {
        const double H = number(e, "H"), q = number(e, "q", 2.0);
        const double got = ghost_connection_probability(H, q);
        record(describe(e, 0, std::nullopt), std::abs(got - number(e, "expected")), number(e, "tol", 1e-12),
               "computed " + std::to_string(got));
        return;
    }
    if (id == "sampler_tv") {
        const auto sweeps = static_cast<std::uint64_t>(number(e, "sweeps"));
        const auto s = static_cast<std::uint64_t>(number(e, "seed", static_cast<double>(seed)));
        const std::string bc = e.params.count("bc") ? e.params.at("bc") : "free";
        for (double h : numbers(e, "h", 0.0)) {
            const auto g = lattice_box(e, param(e, "box"), bc, h);
            record(describe(e, h, std::nullopt), sampler_tv(*g, sweeps, s), number(e, "tol", 0.01));
        }
        return;
    }

    const auto hs = numbers(e, "h", 0.0);
    const auto qs = numbers(e, "q", 2.0);
    for (double q : qs) {
        if (!(q > 0)) bad_entry(e, "q must be positive");
    }
    if (id == "fkg") {
        auto sorted = hs;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.size() < 2) bad_entry(e, "needs at least two fields");
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            const SmallGraph lo = make_graph(e, J, sorted[k]), hi = make_graph(e, J, sorted[k + 1]);
            if (lo.edges.size() > 12) bad_entry(e, "domination check limited to 12 edges");
            const auto d = check_domination(internal_marginal(enumerate_fk_ghost(lo)),
                                            internal_marginal(enumerate_fk_ghost(hi)), static_cast<int>(lo.edges.size()));
            std::ostringstream p;
            p << "graph=" << param(e, "graph") << " h=" << sorted[k] << "<" << sorted[k + 1];
            record(p.str(), std::max(d.flow_deficit, d.worst_upset_gap), number(e, "tol", 1e-10));
        }
        return;
    }

    for (double h : hs) {
        int n = 0;  // vertices of the graph proper, exterior nodes excluded
        const SmallGraph g = make_graph(e, J, h, &n);
        if (id == "es_identity") {
            std::vector<std::pair<int, int>> pairs;
            if (n <= 6) {
                for (int x = 0; x < n; ++x)
                    for (int y = x + 1; y < n; ++y) pairs.push_back({x, y});
            } else {
                pairs = {{0, 1}, {0, n / 2}, {0, n - 1}};
            }
            double worst = 0.0;
            for (auto [x, y] : pairs) worst = std::max(worst, truncated_two_point_exact(g, x, y).difference());
            record(describe(e, h, std::nullopt), worst, number(e, "tol", 1e-12),
                   std::to_string(pairs.size()) + " vertex pairs");
            continue;
        }
        if (id == "two_point" || id == "magnetization") {
            const int x = static_cast<int>(number(e, "x"));
            if (x < 0 || x >= n) bad_entry(e, "vertex out of range");
            double got = 0.0;
            if (id == "two_point") {
                const int y = static_cast<int>(number(e, "y"));
                if (y < 0 || y >= n || y == x) bad_entry(e, "bad vertex pair");
                got = truncated_two_point_exact(g, x, y).fk_side;
            } else {
                got = ghost_probability(g, enumerate_fk_ghost(g), x);
            }
            record(describe(e, h, std::nullopt), std::abs(got - number(e, "expected")), number(e, "tol", 1e-12),
                   "computed " + std::to_string(got));
            continue;
        }
        for (double q : qs) {
            const auto full = enumerate_fk_ghost(g, q);
            double dev = 0.0;
            if (id == "rn_tilt") {
                const auto zero = internal_marginal(enumerate_fk_ghost(g.scaled_field(0.0), q));
                const auto table = rn_derivative_table(g, zero, q);
                ExactDistribution tilted = zero;
                for (std::size_t k = 0; k < zero.size(); ++k) tilted.prob[k] = zero.prob[k] * table[k];
                dev = max_abs_difference(tilted, internal_marginal(full));
            } else if (id == "tanh_law") {
                dev = conditional_independence_defect(g, full, q);
            } else if (id == "marginal") {
                dev = max_abs_difference(internal_marginal(full), internal_marginal_closed_form(g, q));
            } else {
                bad_entry(e, "unknown identity");
            }
            record(describe(e, h, q), dev, number(e, "tol", 1e-12));
        }
    }
}

} // namespace

Corpus parse_corpus(std::string_view text, std::string source) {
    Corpus c;
    c.source = std::move(source);
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string word;
        if (!(words >> word)) continue;
        CorpusEntry e;
        e.line = lineno;
        e.identity = word;
        const auto& ids = known_identities();
        const auto it = ids.find(e.identity);
        if (it == ids.end()) fail(Errc::config, c.source + ":" + std::to_string(lineno) + ": unknown identity '" + word + "'");
        while (words >> word) {
            const auto eq = word.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == word.size())
                fail(Errc::config, c.source + ":" + std::to_string(lineno) + ": expected key=value, got '" + word + "'");
            const std::string key = word.substr(0, eq);
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                fail(Errc::config, c.source + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + e.identity);
            if (!e.params.emplace(key, word.substr(eq + 1)).second)
                fail(Errc::config, c.source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        c.entries.push_back(std::move(e));
    }
    return c;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot read corpus '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_corpus(ss.str(), path);
}

bool VerifyReport::passed() const { return failures() == 0; }

std::size_t VerifyReport::failures() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.passed; }));
}

std::string VerifyReport::to_json() const {
    nlohmann::json j;
    j["passed"] = passed();
    j["checks"] = checks.size();
    j["failures"] = nlohmann::json::array();
    for (const auto& c : checks) {
        if (c.passed) continue;
        j["failures"].push_back({{"line", c.line},
                                 {"identity", c.identity},
                                 {"params", c.params},
                                 {"deviation", c.value},
                                 {"tolerance", c.tolerance},
                                 {"detail", c.detail}});
    }
    return j.dump(2);
}

double sampler_tv(const GhostGraph& g, std::uint64_t sweeps, std::uint64_t seed, std::uint64_t burn_in) {
    require(sweeps > 0, Errc::invalid_argument, "need at least one sweep");
    const auto exact = enumerate_ising(small_graph_from(g));
    const int n = static_cast<int>(g.domain().vertex_count());
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    std::map<std::uint64_t, double> law;
    for (std::size_t k = 0; k < exact.size(); ++k) law[exact.configs[k] & mask] += exact.prob[k];

    SwendsenWang chain(std::make_shared<const GhostGraph>(g), seed, 0);
    for (std::uint64_t s = 0; s < burn_in; ++s) chain.sweep();
    std::map<std::uint64_t, double> counts;
    for (std::uint64_t s = 0; s < sweeps; ++s) {
        chain.sweep();
        std::uint64_t c = 0;
        const auto& spin = chain.spins().spin;
        for (int v = 0; v < n; ++v)
            if (spin[static_cast<std::size_t>(v)] > 0) c |= std::uint64_t{1} << v;
        counts[c] += 1.0;
    }
    double tv = 0.0;
    for (const auto& [c, p] : law) {
        const auto it = counts.find(c);
        tv += std::abs(p - (it == counts.end() ? 0.0 : it->second / static_cast<double>(sweeps)));
    }
    for (const auto& [c, k] : counts)
        if (!law.count(c)) tv += k / static_cast<double>(sweeps);
    return 0.5 * tv;
}

VerifyReport run_corpus(const Corpus& corpus, std::uint64_t seed) {
    VerifyReport r;
    for (const auto& e : corpus.entries) run_entry(e, seed, r.checks);
    return r;
}

} // namespace fkg
