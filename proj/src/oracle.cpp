#include "fkg/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "fkg/error.hpp"
#include "fkg/maxflow.hpp"
#include "fkg/union_find.hpp"

namespace fkg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool frozen_open(double J) { return std::isinf(J); }
bool frozen_closed(double J) { return J == 0.0; }

/// Bit layout of a full-bond configuration: which bits are enumerated and
/// which are fixed open.
struct BondLayout {
    int n = 0;
    int E = 0;
    std::vector<int> free_bits;
    std::uint64_t fixed_open = 0;
    std::vector<double> log_p, log_q;  // per bit, log p and log(1-p)
};

BondLayout make_layout(const SmallGraph& g, bool with_external) {
    BondLayout L;
    L.n = g.n;
    L.E = static_cast<int>(g.edges.size());
    const int bits = L.E + (with_external ? g.n : 0);
    require(bits <= 64, Errc::size_limit, "graph '" + g.name + "' has more than 64 edges");
    L.log_p.assign(static_cast<std::size_t>(bits), 0.0);
    L.log_q.assign(static_cast<std::size_t>(bits), 0.0);
    for (int e = 0; e < L.E; ++e) {
        const double J = g.edges[static_cast<std::size_t>(e)].J;
        if (frozen_open(J)) {
            L.fixed_open |= std::uint64_t{1} << e;
        } else if (!frozen_closed(J)) {
            L.free_bits.push_back(e);
            L.log_p[static_cast<std::size_t>(e)] = std::log(-std::expm1(-2.0 * J));
            L.log_q[static_cast<std::size_t>(e)] = -2.0 * J;
        }
    }
    if (with_external) {
        for (int v = 0; v < g.n; ++v) {
            const double H = g.field[static_cast<std::size_t>(v)];
            if (g.clamped(v) != 0 || H == 0.0) continue;
            const int b = L.E + v;
            L.free_bits.push_back(b);
            L.log_p[static_cast<std::size_t>(b)] = std::log(-std::expm1(-2.0 * H));
            L.log_q[static_cast<std::size_t>(b)] = -2.0 * H;
        }
    }
    require(L.free_bits.size() <= 26 && (std::uint64_t{1} << L.free_bits.size()) <= kMaxEnumerated,
            Errc::size_limit,
            "graph '" + g.name + "' needs 2^" + std::to_string(L.free_bits.size()) + " configurations");
    return L;
}

std::uint64_t deposit(std::uint64_t k, const std::vector<int>& bits) {
    std::uint64_t mask = 0;
    for (std::size_t t = 0; t < bits.size(); ++t) {
        if ((k >> t) & 1u) mask |= std::uint64_t{1} << bits[t];
    }
    return mask;
}

/// Union-find over the vertices, the ghost (n) and the minus node (n + 1).
void link_bonds(const SmallGraph& g, std::uint64_t mask, bool with_external, MinRootUnionFind& uf) {
    uf.resize(static_cast<std::size_t>(g.n) + 2);
    for (int v = 0; v < g.n; ++v) {
        const auto c = g.clamped(v);
        if (c > 0) uf.unite(v, g.n);
        if (c < 0) uf.unite(v, g.n + 1);
    }
    const int E = static_cast<int>(g.edges.size());
    for (int e = 0; e < E; ++e) {
        if ((mask >> e) & 1u) uf.unite(g.edges[static_cast<std::size_t>(e)].u, g.edges[static_cast<std::size_t>(e)].v);
    }
    if (with_external) {
        for (int v = 0; v < g.n; ++v) {
            if ((mask >> (E + v)) & 1u) uf.unite(v, g.n);
        }
    }
}

double log_bernoulli(const BondLayout& L, std::uint64_t mask) {
    double s = 0.0;
    for (int b : L.free_bits) {
        s += ((mask >> b) & 1u) ? L.log_p[static_cast<std::size_t>(b)] : L.log_q[static_cast<std::size_t>(b)];
    }
    return s;
}

ExactDistribution normalize(ConfigKind kind, const SmallGraph& g, std::vector<std::uint64_t> configs,
                            std::vector<double> logw) {
    // Keep only allowed configurations; enumeration order is already increasing.
    ExactDistribution d;
    d.kind = kind;
    d.n_vertices = g.n;
    d.n_internal = static_cast<int>(g.edges.size());
    double mx = kNegInf;
    for (double w : logw) mx = std::max(mx, w);
    require(std::isfinite(mx), Errc::numeric, "graph '" + g.name + "' has no allowed configuration");
    long double total = 0.0;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        if (logw[k] == kNegInf) continue;
        const double w = std::exp(logw[k] - mx);
        d.configs.push_back(configs[k]);
        d.prob.push_back(w);
        total += w;
    }
    for (double& p : d.prob) p /= total;
    return d;
}

ExactDistribution from_map(ConfigKind kind, int n, int E, const std::vector<std::pair<std::uint64_t, double>>& entries) {
    ExactDistribution d;
    d.kind = kind;
    d.n_vertices = n;
    d.n_internal = E;
    for (const auto& [c, p] : entries) {
        if (!d.configs.empty() && d.configs.back() == c) {
            d.prob.back() += p;
        } else {
            d.configs.push_back(c);
            d.prob.push_back(p);
        }
    }
    return d;
}

/// Per-cluster weight after summing the external edges of its free vertices.
double log_cluster_factor(const InternalCluster& c, double q) {
    if (c.plus && c.minus) return kNegInf;
    if (c.plus) return 0.0;
    if (c.minus) return -2.0 * c.field;
    return std::log1p((q - 1.0) * std::exp(-2.0 * c.field));
}

double log_cluster_factor_zero(const InternalCluster& c, double q) {
    if (c.plus && c.minus) return kNegInf;
    if (c.plus || c.minus) return 0.0;
    return std::log(q);
}

double logsumexp(const std::vector<double>& xs) {
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

void require_q(double q) { require(q > 0 && std::isfinite(q), Errc::invalid_argument, "cluster weight q must be positive"); }

} // namespace

double bond_probability(double J) {
    if (std::isinf(J)) return 1.0;
    return -std::expm1(-2.0 * J);
}

SmallGraph SmallGraph::grid(int rows, int cols, double J, double H) {
    SmallGraph g;
    g.name = std::to_string(rows) + "x" + std::to_string(cols);
    g.n = rows * cols;
    g.field.assign(static_cast<std::size_t>(g.n), H);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int v = r * cols + c;
            if (c + 1 < cols) g.add_edge(v, v + 1, J);
            if (r + 1 < rows) g.add_edge(v, v + cols, J);
        }
    }
    return g;
}

int SmallGraph::add_vertex(double H, std::int8_t clamped) {
    if (clamped != 0 && clamp.empty()) clamp.assign(static_cast<std::size_t>(n), 0);
    field.push_back(H);
    if (!clamp.empty()) clamp.push_back(clamped);
    return n++;
}

bool SmallGraph::has_clamps() const {
    return std::any_of(clamp.begin(), clamp.end(), [](std::int8_t c) { return c != 0; });
}

bool SmallGraph::has_minus_clamp() const {
    return std::any_of(clamp.begin(), clamp.end(), [](std::int8_t c) { return c < 0; });
}

bool SmallGraph::has_ghost() const {
    for (int v = 0; v < n; ++v) {
        if (clamped(v) == 0 && field[static_cast<std::size_t>(v)] > 0) return true;
    }
    return false;
}

SmallGraph SmallGraph::scaled_field(double s) const {
    SmallGraph g = *this;
    for (double& H : g.field) H *= s;
    return g;
}

void SmallGraph::validate() const {
    require(n >= 1, Errc::invalid_argument, "graph '" + name + "' has no vertices");
    require(n <= kMaxVertices, Errc::size_limit,
            "graph '" + name + "' has " + std::to_string(n) + " vertices (limit " + std::to_string(kMaxVertices) + ")");
    require(field.size() == static_cast<std::size_t>(n), Errc::invalid_argument, "field vector size mismatch");
    require(clamp.empty() || clamp.size() == static_cast<std::size_t>(n), Errc::invalid_argument,
            "clamp vector size mismatch");
    for (double H : field) {
        require(std::isfinite(H) && H >= 0, Errc::invalid_argument, "fields must be finite and nonnegative");
    }
    for (auto c : clamp) require(c >= -1 && c <= 1, Errc::invalid_argument, "clamp values must be -1, 0 or +1");
    for (const auto& e : edges) {
        require(e.u >= 0 && e.u < n && e.v >= 0 && e.v < n && e.u != e.v, Errc::invalid_argument,
                "bad edge in graph '" + name + "'");
        require(e.J >= 0, Errc::invalid_argument, "couplings must be nonnegative");
    }
}

double ExactDistribution::probability(std::uint64_t config) const {
    auto it = std::lower_bound(configs.begin(), configs.end(), config);
    if (it == configs.end() || *it != config) return 0.0;
    return prob[static_cast<std::size_t>(it - configs.begin())];
}

double ExactDistribution::expectation(const std::function<double(std::uint64_t)>& f) const {
    long double s = 0.0;
    for (std::size_t k = 0; k < configs.size(); ++k) s += prob[k] * f(configs[k]);
    return s;
}

double ExactDistribution::total() const { return std::accumulate(prob.begin(), prob.end(), 0.0); }

ExactDistribution enumerate_ising(const SmallGraph& g) {
    g.validate();
    std::vector<int> free_bits;
    std::uint64_t fixed_plus = 0;
    for (int v = 0; v < g.n; ++v) {
        const auto c = g.clamped(v);
        if (c == 0) free_bits.push_back(v);
        if (c > 0) fixed_plus |= std::uint64_t{1} << v;
    }
    const std::uint64_t count = std::uint64_t{1} << free_bits.size();
    std::vector<std::uint64_t> configs(count);
    std::vector<double> logw(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t s = deposit(k, free_bits) | fixed_plus;
        auto spin = [&](int v) { return ((s >> v) & 1u) ? 1.0 : -1.0; };
        double w = 0.0;
        for (const auto& e : g.edges) {
            const double prod = spin(e.u) * spin(e.v);
            if (frozen_open(e.J)) {
                if (prod < 0) {
                    w = kNegInf;
                    break;
                }
            } else {
                w += e.J * prod;
            }
        }
        if (w != kNegInf) {
            for (int v : free_bits) w += g.field[static_cast<std::size_t>(v)] * spin(v);
        }
        configs[k] = s;
        logw[k] = w;
    }
    return normalize(ConfigKind::Spin, g, std::move(configs), std::move(logw));
}

ExactDistribution enumerate_fk_ghost(const SmallGraph& g, double q) {
    g.validate();
    require_q(q);
    const BondLayout L = make_layout(g, true);
    const double log_q_weight = std::log(q);
    const std::uint64_t count = std::uint64_t{1} << L.free_bits.size();
    std::vector<std::uint64_t> configs(count);
    std::vector<double> logw(count);
    MinRootUnionFind uf;
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t mask = deposit(k, L.free_bits) | L.fixed_open;
        configs[k] = mask;
        link_bonds(g, mask, true, uf);
        const int rg = uf.find(g.n);
        const int rm = uf.find(g.n + 1);
        if (rg == rm) {
            logw[k] = kNegInf;
            continue;
        }
        int K = 0;
        for (int v = 0; v < g.n; ++v) {
            const int r = uf.find(v);
            if (r == v && r != rg && r != rm) ++K;
        }
        logw[k] = log_bernoulli(L, mask) + K * log_q_weight;
    }
    return normalize(ConfigKind::FullBond, g, std::move(configs), std::move(logw));
}

ExactDistribution internal_marginal(const ExactDistribution& full) {
    require(full.kind == ConfigKind::FullBond, Errc::invalid_argument, "internal_marginal needs a full-bond distribution");
    const std::uint64_t imask =
        full.n_internal >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << full.n_internal) - 1;
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(full.size());
    for (std::size_t k = 0; k < full.size(); ++k) entries.emplace_back(full.configs[k] & imask, full.prob[k]);
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return from_map(ConfigKind::InternalBond, full.n_vertices, full.n_internal, entries);
}

std::vector<InternalCluster> internal_clusters(const SmallGraph& g, std::uint64_t omega) {
    MinRootUnionFind uf;
    link_bonds(g, omega, false, uf);
    const int rg = uf.find(g.n);
    const int rm = uf.find(g.n + 1);
    std::vector<InternalCluster> out;
    std::vector<int> index(static_cast<std::size_t>(g.n), -1);
    for (int v = 0; v < g.n; ++v) {
        const int r = uf.find(v);
        if (index[static_cast<std::size_t>(r)] < 0) {
            index[static_cast<std::size_t>(r)] = static_cast<int>(out.size());
            InternalCluster c;
            c.plus = r == rg;
            c.minus = r == rm;
            out.push_back(std::move(c));
        }
        auto& c = out[static_cast<std::size_t>(index[static_cast<std::size_t>(r)])];
        c.vertices.push_back(v);
        if (g.clamped(v) == 0) c.field += g.field[static_cast<std::size_t>(v)];
    }
    return out;
}

ExactDistribution internal_marginal_closed_form(const SmallGraph& g, double q) {
    g.validate();
    require_q(q);
    const BondLayout L = make_layout(g, false);
    const std::uint64_t count = std::uint64_t{1} << L.free_bits.size();
    std::vector<std::uint64_t> configs(count);
    std::vector<double> logw(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t omega = deposit(k, L.free_bits) | L.fixed_open;
        configs[k] = omega;
        double w = log_bernoulli(L, omega);
        for (const auto& c : internal_clusters(g, omega)) w += log_cluster_factor(c, q);
        logw[k] = w;
    }
    return normalize(ConfigKind::InternalBond, g, std::move(configs), std::move(logw));
}

double log_tilt_weight(const SmallGraph& g, std::uint64_t omega, double q) {
    require_q(q);
    double w = 0.0;
    for (const auto& c : internal_clusters(g, omega)) {
        const double a = log_cluster_factor(c, q);
        const double b = log_cluster_factor_zero(c, q);
        if (a == kNegInf || b == kNegInf) return kNegInf;
        w += a - b;
    }
    return w;
}

double cosh_product(const SmallGraph& g, std::uint64_t omega) {
    double logv = 0.0;
    for (const auto& c : internal_clusters(g, omega)) {
        if (c.plus || c.minus) continue;
        // log cosh H = H + log1p(e^{-2H}) - log 2, stable for large H
        logv += c.field + std::log1p(std::exp(-2.0 * c.field)) - std::log(2.0);
    }
    return std::exp(logv);
}

std::vector<double> rn_derivative_table(const SmallGraph& g, const ExactDistribution& zero_field, double q) {
    require(zero_field.kind == ConfigKind::InternalBond, Errc::invalid_argument,
            "derivative table needs an internal-bond distribution");
    std::vector<double> logt(zero_field.size());
    std::vector<double> terms(zero_field.size());
    for (std::size_t k = 0; k < zero_field.size(); ++k) {
        logt[k] = log_tilt_weight(g, zero_field.configs[k], q);
        terms[k] = std::log(zero_field.prob[k]) + logt[k];
    }
    const double log_norm = logsumexp(terms);
    std::vector<double> out(zero_field.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(logt[k] - log_norm);
    return out;
}

double rn_derivative(const SmallGraph& g, std::uint64_t omega, double q) {
    const ExactDistribution zero = internal_marginal_closed_form(g.scaled_field(0.0), q);
    std::vector<double> terms(zero.size());
    for (std::size_t k = 0; k < zero.size(); ++k) {
        terms[k] = std::log(zero.prob[k]) + log_tilt_weight(g, zero.configs[k], q);
    }
    return std::exp(log_tilt_weight(g, omega, q) - logsumexp(terms));
}

double ghost_connection_probability(double H, double q) {
    require_q(q);
    require(H >= 0, Errc::invalid_argument, "field must be nonnegative");
    if (std::isinf(H)) return 1.0;
    const double open = -std::expm1(-2.0 * H);
    return open / (open + q * std::exp(-2.0 * H));
}

std::vector<ClusterGhostLaw> ghost_conditional(const SmallGraph& g, std::uint64_t omega, double q) {
    require_q(q);
    std::vector<ClusterGhostLaw> out;
    for (auto& c : internal_clusters(g, omega)) {
        ClusterGhostLaw law;
        law.field = c.field;
        law.probability = c.plus ? 1.0 : c.minus ? 0.0 : ghost_connection_probability(c.field, q);
        law.vertices = std::move(c.vertices);
        out.push_back(std::move(law));
    }
    return out;
}

double TwoPointComparison::difference() const { return std::abs(spin_side - fk_side); }

double connection_probability(const SmallGraph& g, const ExactDistribution& full, int x, int y) {
    MinRootUnionFind uf;
    long double s = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        link_bonds(g, full.configs[k], true, uf);
        if (uf.find(x) == uf.find(y)) s += full.prob[k];
    }
    return s;
}

double ghost_probability(const SmallGraph& g, const ExactDistribution& full, int x) {
    return connection_probability(g, full, x, g.n);
}

TwoPointComparison truncated_two_point_exact(const SmallGraph& g, int x, int y) {
    g.validate();
    require(x != y, Errc::invalid_argument, "two-point function needs distinct vertices");
    require(x >= 0 && x < g.n && y >= 0 && y < g.n, Errc::invalid_argument, "vertex out of range");
    require(!g.has_minus_clamp(), Errc::invalid_argument, "two-point identity needs no minus-clamped vertices");
    const ExactDistribution spins = enumerate_ising(g);
    auto s = [](std::uint64_t c, int v) { return ((c >> v) & 1u) ? 1.0 : -1.0; };
    const double sx = spins.expectation([&](std::uint64_t c) { return s(c, x); });
    const double sy = spins.expectation([&](std::uint64_t c) { return s(c, y); });
    const double sxy = spins.expectation([&](std::uint64_t c) { return s(c, x) * s(c, y); });

    const ExactDistribution full = enumerate_fk_ghost(g, 2.0);
    TwoPointComparison out;
    out.spin_side = sxy - sx * sy;
    out.fk_side = connection_probability(g, full, x, y) - ghost_probability(g, full, x) * ghost_probability(g, full, y);
    return out;
}

ExactDistribution color_clusters(const SmallGraph& g, const ExactDistribution& full) {
    require(full.kind == ConfigKind::FullBond, Errc::invalid_argument, "coloring needs a full-bond distribution");
    std::vector<double> dense(std::size_t{1} << g.n, 0.0);
    MinRootUnionFind uf;
    std::vector<int> roots;
    for (std::size_t k = 0; k < full.size(); ++k) {
        link_bonds(g, full.configs[k], true, uf);
        const int rg = uf.find(g.n);
        roots.clear();
        std::uint64_t base = 0;
        for (int v = 0; v < g.n; ++v) {
            const int r = uf.find(v);
            if (r == rg) base |= std::uint64_t{1} << v;
            if (r == v && r != rg && r != uf.find(g.n + 1)) roots.push_back(r);
        }
        const std::uint64_t colorings = std::uint64_t{1} << roots.size();
        const double share = full.prob[k] / static_cast<double>(colorings);
        for (std::uint64_t c = 0; c < colorings; ++c) {
            std::uint64_t s = base;
            for (int v = 0; v < g.n; ++v) {
                const int r = uf.find(v);
                const auto it = std::find(roots.begin(), roots.end(), r);
                if (it != roots.end() && ((c >> (it - roots.begin())) & 1u)) s |= std::uint64_t{1} << v;
            }
            dense[s] += share;
        }
    }
    std::vector<std::pair<std::uint64_t, double>> entries;
    for (std::uint64_t s = 0; s < dense.size(); ++s) {
        if (dense[s] > 0) entries.emplace_back(s, dense[s]);
    }
    return from_map(ConfigKind::Spin, g.n, static_cast<int>(g.edges.size()), entries);
}

namespace {

template <class F>
void merge_walk(const ExactDistribution& p, const ExactDistribution& q, F&& f) {
    std::size_t i = 0, j = 0;
    while (i < p.size() || j < q.size()) {
        if (j == q.size() || (i < p.size() && p.configs[i] < q.configs[j])) {
            f(p.prob[i++], 0.0);
        } else if (i == p.size() || q.configs[j] < p.configs[i]) {
            f(0.0, q.prob[j++]);
        } else {
            f(p.prob[i++], q.prob[j++]);
        }
    }
}

} // namespace

double max_abs_difference(const ExactDistribution& p, const ExactDistribution& q) {
    double m = 0.0;
    merge_walk(p, q, [&](double a, double b) { m = std::max(m, std::abs(a - b)); });
    return m;
}

double total_variation(const ExactDistribution& p, const ExactDistribution& q) {
    double s = 0.0;
    merge_walk(p, q, [&](double a, double b) { s += std::abs(a - b); });
    return 0.5 * s;
}

double conditional_independence_defect(const SmallGraph& g, const ExactDistribution& full, double q) {
    require(full.kind == ConfigKind::FullBond, Errc::invalid_argument, "needs a full-bond distribution");
    const int E = full.n_internal;
    const std::uint64_t imask = (std::uint64_t{1} << E) - 1;

    struct Entry {
        std::vector<std::vector<int>> free_clusters;
        std::vector<double> t;
        double mass = 0.0;
        std::unordered_map<std::uint32_t, double> patterns;
    };
    std::unordered_map<std::uint64_t, Entry> by_omega;
    for (std::size_t k = 0; k < full.size(); ++k) {
        const std::uint64_t omega = full.configs[k] & imask;
        auto [it, inserted] = by_omega.try_emplace(omega);
        Entry& e = it->second;
        if (inserted) {
            for (auto& c : internal_clusters(g, omega)) {
                if (c.plus || c.minus) continue;
                e.t.push_back(ghost_connection_probability(c.field, q));
                e.free_clusters.push_back(std::move(c.vertices));
            }
        }
        std::uint32_t pattern = 0;
        for (std::size_t i = 0; i < e.free_clusters.size(); ++i) {
            for (int v : e.free_clusters[i]) {
                if ((full.configs[k] >> (E + v)) & 1u) {
                    pattern |= 1u << i;
                    break;
                }
            }
        }
        e.mass += full.prob[k];
        e.patterns[pattern] += full.prob[k];
    }
    double defect = 0.0;
    for (const auto& [omega, e] : by_omega) {
        const std::uint32_t n_patterns = 1u << e.free_clusters.size();
        for (std::uint32_t pattern = 0; pattern < n_patterns; ++pattern) {
            double product = 1.0;
            for (std::size_t i = 0; i < e.t.size(); ++i) product *= ((pattern >> i) & 1u) ? e.t[i] : 1.0 - e.t[i];
            const auto it = e.patterns.find(pattern);
            const double observed = it == e.patterns.end() ? 0.0 : it->second / e.mass;
            defect = std::max(defect, std::abs(observed - product));
        }
    }
    return defect;
}

DominationResult check_domination(const ExactDistribution& low, const ExactDistribution& high, int bits) {
    require(bits >= 0 && bits < 64, Errc::invalid_argument, "bad bit count");
    const int nl = static_cast<int>(low.size());
    const int nh = static_cast<int>(high.size());
    const int source = nl + nh;
    const int sink = source + 1;
    MaxFlow flow(nl + nh + 2);
    for (int i = 0; i < nl; ++i) flow.add_edge(source, i, low.prob[static_cast<std::size_t>(i)]);
    for (int j = 0; j < nh; ++j) flow.add_edge(nl + j, sink, high.prob[static_cast<std::size_t>(j)]);
    for (int i = 0; i < nl; ++i) {
        for (int j = 0; j < nh; ++j) {
            if ((low.configs[static_cast<std::size_t>(i)] & ~high.configs[static_cast<std::size_t>(j)]) == 0) {
                flow.add_edge(i, nl + j, 2.0);
            }
        }
    }
    DominationResult r;
    r.flow_deficit = std::max(0.0, low.total() - flow.solve(source, sink));

    auto upset = [](const ExactDistribution& d, std::uint64_t x) {
        double s = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if ((x & ~d.configs[k]) == 0) s += d.prob[k];
        }
        return s;
    };
    for (const auto* d : {&low, &high}) {
        for (std::uint64_t x : d->configs) r.worst_upset_gap = std::max(r.worst_upset_gap, upset(low, x) - upset(high, x));
    }
    return r;
}

SmallGraph small_graph_from(const GhostGraph& gg) {
    const LatticeDomain& dom = gg.domain();
    const int n = static_cast<int>(dom.vertex_count());
    require(n <= SmallGraph::kMaxVertices, Errc::size_limit, "lattice too large for enumeration");
    SmallGraph g;
    g.name = "lattice";
    g.n = n;
    g.field.assign(gg.fields().begin(), gg.fields().end());
    for (const Edge& e : dom.internal_edges()) g.add_edge(e.u, e.v, gg.beta());

    const auto bonds = dom.boundary_bonds();
    const BoundaryKind kind = gg.boundary().kind;
    if (kind == BoundaryKind::Free || bonds.empty()) {
        g.validate();
        return g;
    }
    if (kind == BoundaryKind::Wired || kind == BoundaryKind::ExplicitEdge) {
        int w = -1;
        for (std::size_t b = 0; b < bonds.size(); ++b) {
            if (!gg.bond_wired(b)) continue;
            if (w < 0) w = g.add_vertex(0.0, 0);
            g.add_edge(bonds[b].inside, w, std::numeric_limits<double>::infinity());
        }
    } else {
        int plus = -1, minus = -1;
        for (std::size_t b = 0; b < bonds.size(); ++b) {
            const auto s = gg.bond_spin(b);
            int& node = s > 0 ? plus : minus;
            if (node < 0) node = g.add_vertex(0.0, s > 0 ? std::int8_t{1} : std::int8_t{-1});
            g.add_edge(bonds[b].inside, node, gg.beta());
        }
    }
    g.validate();
    return g;
}

} // namespace fkg
