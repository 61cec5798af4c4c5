#include "fkg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "fkg/error.hpp"
#include "fkg/maxflow.hpp"

namespace fkg {

double two_point_rb(const ClusterDecomposition& d, VertexId x, VertexId y) {
    if (d.connected(x, y)) return 1.0;
    return conditional_ghost(d.of(x)) * conditional_ghost(d.of(y));
}

double ghost_connection_rb(const ClusterDecomposition& d, VertexId x) { return conditional_ghost(d.of(x)); }

double spin_rb(const ClusterDecomposition& d, VertexId x) { return conditional_spin(d.of(x)); }

Estimate truncated_two_point_mc(std::span<const double> pair, std::span<const double> ghost_x,
                                std::span<const double> ghost_y, std::size_t blocks) {
    std::vector<std::vector<double>> cols{{pair.begin(), pair.end()},
                                          {ghost_x.begin(), ghost_x.end()},
                                          {ghost_y.begin(), ghost_y.end()}};
    return jackknife(cols, blocks, [](std::span<const double> m) { return m[0] - m[1] * m[2]; });
}

bool one_arm(const ClusterDecomposition& d, const LatticeDomain& domain, VertexId origin) {
    const auto c = d.cluster_of[static_cast<std::size_t>(origin)];
    for (VertexId v : domain.inner_boundary()) {
        if (d.cluster_of[static_cast<std::size_t>(v)] == c) return true;
    }
    return false;
}

AnnulusProbe::AnnulusProbe(std::shared_ptr<const LatticeDomain> domain, DualAnnulus annulus)
    : domain_(std::move(domain)), annulus_(std::move(annulus)) {
    require(domain_ != nullptr, Errc::invalid_argument, "annulus probe needs a domain");
    require(domain_->spacing() == annulus_.spacing(), Errc::mismatch, "annulus and domain spacings differ");
    std::map<Site, std::int32_t> node;
    auto node_of = [&](Site s) {
        auto [it, inserted] = node.try_emplace(s, static_cast<std::int32_t>(node.size()));
        if (inserted) {
            node_inner_.push_back(annulus_.is_inner(s));
            node_outer_.push_back(annulus_.is_outer(s));
        }
        return it->second;
    };
    for (const auto& p : annulus_.primal_edges()) {
        const auto u = domain_->vertex_at(p.u);
        const auto v = domain_->vertex_at(p.v);
        require(u && v, Errc::mismatch, "annulus is not contained in the sampled domain");
        const auto e = domain_->edge_between(*u, *v);
        require(e.has_value(), Errc::mismatch, "annulus edge missing from the sampled domain");
        edge_index_.push_back(*e);
        edge_nodes_.push_back({node_of(p.u), node_of(p.v)});
    }
}

bool AnnulusProbe::blocking_circuit(const BondConfig& bonds) const {
    std::vector<std::uint8_t> open(edge_index_.size());
    for (std::size_t k = 0; k < open.size(); ++k) open[k] = bonds.internal[edge_index_[k]];
    return blocking_circuit(open);
}

bool AnnulusProbe::primal_crossing(const BondConfig& bonds) const {
    std::vector<std::uint8_t> open(edge_index_.size());
    for (std::size_t k = 0; k < open.size(); ++k) open[k] = bonds.internal[edge_index_[k]];
    return primal_crossing(open);
}

bool AnnulusProbe::blocking_circuit(std::span<const std::uint8_t> annulus_open) const {
    if (!annulus_.has_ring()) return false;
    const auto cells = annulus_.cells();
    const auto dual = annulus_.dual_edges();
    // Adjacency over dual-open edges, each carrying its winding parity.
    std::vector<std::vector<std::pair<std::int32_t, std::uint8_t>>> adj(cells.size());
    for (std::size_t k = 0; k < dual.size(); ++k) {
        if (annulus_open[k]) continue;
        adj[static_cast<std::size_t>(dual[k].c1)].push_back({dual[k].c2, dual[k].crosses_cut});
        adj[static_cast<std::size_t>(dual[k].c2)].push_back({dual[k].c1, dual[k].crosses_cut});
    }
    // A closed walk with odd parity winds around the inner rectangle.
    std::vector<std::int8_t> parity(cells.size(), -1);
    std::queue<std::int32_t> queue;
    for (std::size_t start = 0; start < cells.size(); ++start) {
        if (parity[start] >= 0) continue;
        parity[start] = 0;
        queue.push(static_cast<std::int32_t>(start));
        while (!queue.empty()) {
            const auto c = static_cast<std::size_t>(queue.front());
            queue.pop();
            for (auto [t, flip] : adj[c]) {
                const auto want = static_cast<std::int8_t>(parity[c] ^ flip);
                auto& pt = parity[static_cast<std::size_t>(t)];
                if (pt < 0) {
                    pt = want;
                    queue.push(t);
                } else if (pt != want) {
                    return true;
                }
            }
        }
    }
    return false;
}

bool AnnulusProbe::primal_crossing(std::span<const std::uint8_t> annulus_open) const {
    if (!annulus_.has_ring()) return true;
    const std::size_t n = node_inner_.size();
    std::vector<std::vector<std::int32_t>> adj(n);
    for (std::size_t k = 0; k < edge_nodes_.size(); ++k) {
        if (!annulus_open[k]) continue;
        adj[static_cast<std::size_t>(edge_nodes_[k][0])].push_back(edge_nodes_[k][1]);
        adj[static_cast<std::size_t>(edge_nodes_[k][1])].push_back(edge_nodes_[k][0]);
    }
    std::vector<std::uint8_t> seen(n, 0);
    std::queue<std::size_t> queue;
    for (std::size_t v = 0; v < n; ++v) {
        if (node_inner_[v]) {
            seen[v] = 1;
            queue.push(v);
        }
    }
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop();
        if (node_outer_[v]) return true;
        for (auto t : adj[v]) {
            if (!seen[static_cast<std::size_t>(t)]) {
                seen[static_cast<std::size_t>(t)] = 1;
                queue.push(static_cast<std::size_t>(t));
            }
        }
    }
    return false;
}

AreaStats area_stats(const ClusterDecomposition& d) {
    AreaStats s;
    s.areas.reserve(d.count());
    for (std::size_t c = 0; c < d.count(); ++c) {
        const double a = d.area(c);
        s.areas.push_back(a);
        s.max = std::max(s.max, a);
        if (d.clusters[c].exterior) s.boundary += a;
    }
    return s;
}

MgfEstimate mgf_estimate(std::span<const double> x, double t, std::size_t blocks) {
    require(t >= 0 && std::isfinite(t), Errc::invalid_argument, "mgf parameter t must be nonnegative");
    require(!x.empty(), Errc::invalid_argument, "mgf of an empty series");
    double shift = -std::numeric_limits<double>::infinity();
    for (double v : x) shift = std::max(shift, t * v);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(t * x[i] - shift);
    const Estimate e = jackknife_mean(y, blocks);
    MgfEstimate out;
    out.log_value = shift + std::log(e.value);
    out.value = std::exp(out.log_value);
    out.error = std::exp(shift) * e.error;
    return out;
}

double fit_mgf_constant(std::span<const double> t, std::span<const MgfEstimate> estimates, double shift) {
    require(t.size() == estimates.size() && !t.empty(), Errc::invalid_argument, "mgf fit needs matching grids");
    double c = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double s = t[k] + shift;
        if (s <= 0) continue;
        c = std::max(c, (estimates[k].log_value - std::log(2.0)) / (s + s * s));
    }
    return c;
}

double TestFunction::at(const LatticeDomain& d, VertexId v) const {
    switch (kind) {
    case Kind::Constant: return constant;
    case Kind::ProductXY: {
        const auto p = d.position(v);
        return p[0] * p[1];
    }
    case Kind::Indicator: {
        const Site s = d.site(v);
        const Rational x = Rational(s.i) * d.spacing();
        const Rational y = Rational(s.j) * d.spacing();
        return (rect.x0 <= x && x < rect.x1 && rect.y0 <= y && y < rect.y1) ? 1.0 : 0.0;
    }
    }
    return 0.0;
}

std::vector<double> TestFunction::values(const LatticeDomain& d) const {
    std::vector<double> f(d.vertex_count());
    for (std::size_t v = 0; v < f.size(); ++v) f[v] = at(d, static_cast<VertexId>(v));
    return f;
}

double field_pairing(const LatticeDomain& d, std::span<const std::int8_t> sigma, std::span<const double> f_values) {
    require(sigma.size() == d.vertex_count() && f_values.size() == d.vertex_count(), Errc::mismatch,
            "pairing inputs do not match the domain");
    double s = 0.0;
    for (std::size_t v = 0; v < sigma.size(); ++v) s += f_values[v] * sigma[v];
    return d.area_unit() * s;
}

double field_pairing(const LatticeDomain& d, std::span<const std::int8_t> sigma, const TestFunction& f) {
    return field_pairing(d, sigma, f.values(d));
}

double DiscreteMeasure::total() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
}

namespace {

double atom_distance(const DiscreteMeasure::Atom& a, const DiscreteMeasure::Atom& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// max_A [mu(A) - nu(A^eps)] over sets of atoms, via bipartite max flow.
double deficiency(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps) {
    const int m = static_cast<int>(mu.atoms.size());
    const int n = static_cast<int>(nu.atoms.size());
    MaxFlow flow(m + n + 2);
    const int source = m + n, sink = m + n + 1;
    for (int i = 0; i < m; ++i) flow.add_edge(source, i, mu.atoms[static_cast<std::size_t>(i)].mass);
    for (int j = 0; j < n; ++j) flow.add_edge(m + j, sink, nu.atoms[static_cast<std::size_t>(j)].mass);
    const double big = mu.total() + nu.total() + 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (atom_distance(mu.atoms[static_cast<std::size_t>(i)], nu.atoms[static_cast<std::size_t>(j)]) <= eps)
                flow.add_edge(i, m + j, big);
    return std::max(0.0, mu.total() - flow.solve(source, sink, 1e-300));
}

} // namespace

double prokhorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    for (const auto* m : {&mu, &nu})
        for (const auto& a : m->atoms)
            require(a.mass >= 0 && std::isfinite(a.x) && std::isfinite(a.y), Errc::invalid_argument, "bad atom");
    std::vector<double> d{0.0};
    for (const auto& a : mu.atoms)
        for (const auto& b : nu.atoms) d.push_back(atom_distance(a, b));
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());

    auto D = [&](std::size_t k) { return std::max(deficiency(mu, nu, d[k]), deficiency(nu, mu, d[k])); };
    auto next = [&](std::size_t k) {
        return k + 1 < d.size() ? d[k + 1] : std::numeric_limits<double>::infinity();
    };
    // D is nonincreasing, so "max(d_k, D_k) < d_{k+1}" switches from false to true once.
    std::size_t lo = 0, hi = d.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (std::max(d[mid], D(mid)) < next(mid)) hi = mid;
        else lo = mid + 1;
    }
    return std::max(d[lo], D(lo));
}

double ensemble_distance(const ClusterMeasureEnsemble& s, const ClusterMeasureEnsemble& t) {
    if (s.empty() && t.empty()) return 0.0;
    if (s.empty() || t.empty()) return std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(s.size(), std::vector<double>(t.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) dp[i][j] = prokhorov_distance(s[i], t[j]);
    double out = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < t.size(); ++j) best = std::min(best, dp[i][j]);
        out = std::max(out, best);
    }
    for (std::size_t j = 0; j < t.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.size(); ++i) best = std::min(best, dp[i][j]);
        out = std::max(out, best);
    }
    return out;
}

ClusterMeasureEnsemble cluster_ensemble(const ClusterDecomposition& d, const LatticeDomain& domain,
                                        std::int32_t min_size) {
    ClusterMeasureEnsemble out;
    std::vector<std::int32_t> slot(d.count(), -1);
    for (std::size_t c = 0; c < d.count(); ++c) {
        if (d.clusters[c].size < min_size) continue;
        slot[c] = static_cast<std::int32_t>(out.size());
        out.emplace_back();
    }
    for (std::size_t v = 0; v < d.cluster_of.size(); ++v) {
        const auto s = slot[static_cast<std::size_t>(d.cluster_of[v])];
        if (s < 0) continue;
        const auto p = domain.position(static_cast<VertexId>(v));
        out[static_cast<std::size_t>(s)].atoms.push_back({p[0], p[1], d.area_unit});
    }
    return out;
}

std::string site_label(Site s) {
    auto part = [](std::int64_t k) { return k < 0 ? "m" + std::to_string(-k) : std::to_string(k); };
    return part(s.i) + "_" + part(s.j);
}

Measurer::Measurer(std::shared_ptr<const GhostGraph> graph, ObservableSpec spec)
    : graph_(std::move(graph)), spec_(std::move(spec)) {
    require(graph_ != nullptr, Errc::invalid_argument, "measurer needs a graph");
    const LatticeDomain& dom = graph_->domain();
    header_ = {"sweep", "h", "a", "L", "m", "A_max", "A_0", "one_arm", "block_circ"};

    const auto origin = dom.vertex_at(spec_.origin);
    require(origin.has_value(), Errc::config, "one-arm origin " + site_label(spec_.origin) + " is not in the domain");
    origin_ = *origin;
    const Site centre{dom.min_i() + dom.width() / 2, dom.min_j() + dom.height() / 2};
    const auto c = dom.vertex_at(centre);
    require(c.has_value(), Errc::config, "domain centre is not a lattice vertex of the domain");
    center_ = *c;

    if (spec_.annulus) {
        probe_.emplace(graph_->domain_ptr(),
                       build_dual_annulus(spec_.annulus->first, spec_.annulus->second, dom.spacing()));
    }
    for (const auto& [name, f] : spec_.phi) {
        header_.push_back("phi_" + name);
        phi_values_.push_back(f.values(dom));
    }
    std::vector<Site> ghost_sites;
    for (const auto& [x, y] : spec_.pairs) {
        require(x != y, Errc::config, "two-point pair needs distinct sites");
        const auto vx = dom.vertex_at(x), vy = dom.vertex_at(y);
        require(vx && vy, Errc::config, "two-point site outside the domain");
        pair_vertices_.push_back({*vx, *vy});
        header_.push_back("tp_" + site_label(x) + "__" + site_label(y));
        for (Site s : {x, y}) {
            if (std::find(ghost_sites.begin(), ghost_sites.end(), s) == ghost_sites.end()) ghost_sites.push_back(s);
        }
    }
    for (const auto& [name, f] : spec_.phi) header_.push_back("phirb_" + name);
    for (Site s : ghost_sites) {
        header_.push_back("gc_" + site_label(s));
        ghost_sites_.push_back(*dom.vertex_at(s));
    }
    header_.push_back("mbar");
    header_.push_back("s_center");

    if (spec_.window > 0) {
        const std::int64_t W = spec_.window;
        const std::int64_t i0 = centre.i - W / 2, j0 = centre.j - W / 2;
        rows_.assign(static_cast<std::size_t>(W), {});
        cols_.assign(static_cast<std::size_t>(W), {});
        for (std::int64_t j = 0; j < W; ++j) {
            for (std::int64_t i = 0; i < W; ++i) {
                const auto v = dom.vertex_at({i0 + i, j0 + j});
                require(v.has_value(), Errc::config, "central window does not fit in the domain");
                window_vertices_.push_back(*v);
                rows_[static_cast<std::size_t>(j)].push_back(*v);
                cols_[static_cast<std::size_t>(i)].push_back(*v);
            }
        }
        header_.push_back("sbar");
        if (spec_.max_r > 0) {
            require(spec_.max_r < W, Errc::config, "correlator distance must be smaller than the window");
            for (std::int64_t j = 0; j < W; ++j) header_.push_back("wr_" + std::to_string(j));
            for (std::int64_t i = 0; i < W; ++i) header_.push_back("wk_" + std::to_string(i));
            for (std::int64_t r = 0; r <= spec_.max_r; ++r) header_.push_back("wc_" + std::to_string(r));
            axis_.assign(static_cast<std::size_t>(spec_.max_r) + 1, {});
            for (std::int64_t r = 1; r <= spec_.max_r; ++r) {
                for (Site s : {Site{centre.i + r, centre.j}, Site{centre.i, centre.j + r}, Site{centre.i - r, centre.j},
                               Site{centre.i, centre.j - r}}) {
                    const auto v = dom.vertex_at(s);
                    require(v.has_value(), Errc::config, "point correlator leaves the domain");
                    axis_[static_cast<std::size_t>(r)].push_back(*v);
                }
                header_.push_back("pc_" + std::to_string(r));
                header_.push_back("pe_" + std::to_string(r));
            }
        }
    } else {
        require(spec_.max_r == 0, Errc::config, "correlators need a central window");
    }
}

namespace {

/// Sum over clusters of n_a(C) n_b(C) w(C) for two lines given as sorted (cluster, count) runs.
double line_overlap(const std::vector<std::pair<std::int32_t, std::int32_t>>& a,
                    const std::vector<std::pair<std::int32_t, std::int32_t>>& b, const std::vector<double>& w) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) ++i;
        else if (b[j].first < a[i].first) ++j;
        else {
            s += static_cast<double>(a[i].second) * b[j].second * w[static_cast<std::size_t>(a[i].first)];
            ++i, ++j;
        }
    }
    return s;
}

std::vector<std::pair<std::int32_t, std::int32_t>> line_runs(const ClusterDecomposition& d,
                                                             const std::vector<VertexId>& line,
                                                             std::vector<std::int32_t>& scratch) {
    scratch.clear();
    for (VertexId v : line) scratch.push_back(d.cluster_of[static_cast<std::size_t>(v)]);
    std::sort(scratch.begin(), scratch.end());
    std::vector<std::pair<std::int32_t, std::int32_t>> runs;
    for (auto c : scratch) {
        if (!runs.empty() && runs.back().first == c) ++runs.back().second;
        else runs.push_back({c, 1});
    }
    return runs;
}

} // namespace

void Measurer::measure(std::uint64_t sweep, const SpinConfig& spins, const BondConfig& bonds,
                       std::vector<double>& row) const {
    const LatticeDomain& dom = graph_->domain();
    const auto d = clusters(*graph_, bonds);
    const std::size_t n = dom.vertex_count();
    require(spins.spin.size() == n, Errc::mismatch, "spin configuration does not match the graph");

    std::vector<double> e(n);
    for (std::size_t v = 0; v < n; ++v) e[v] = conditional_spin(d.clusters[static_cast<std::size_t>(d.cluster_of[v])]);

    double total = 0.0;
    for (auto s : spins.spin) total += s;
    const AreaStats areas = area_stats(d);

    row.push_back(static_cast<double>(sweep));
    row.push_back(graph_->h());
    row.push_back(dom.a());
    row.push_back(static_cast<double>(std::max(dom.width(), dom.height())));
    row.push_back(dom.area_unit() * total);
    row.push_back(areas.max);
    row.push_back(areas.boundary);
    row.push_back(one_arm(d, dom, origin_) ? 1.0 : 0.0);
    row.push_back(probe_ && probe_->blocking_circuit(bonds) ? 1.0 : 0.0);
    for (const auto& f : phi_values_) row.push_back(field_pairing(dom, spins.spin, f));
    for (const auto& [x, y] : pair_vertices_) row.push_back(two_point_rb(d, x, y));
    for (const auto& f : phi_values_) {
        double s = 0.0;
        for (std::size_t v = 0; v < n; ++v) s += f[v] * e[v];
        row.push_back(dom.area_unit() * s);
    }
    for (VertexId v : ghost_sites_) row.push_back(ghost_connection_rb(d, v));
    row.push_back(total / static_cast<double>(n));
    row.push_back(e[static_cast<std::size_t>(center_)]);

    if (rows_.empty()) return;
    double sbar = 0.0;
    for (VertexId v : window_vertices_) sbar += e[static_cast<std::size_t>(v)];
    row.push_back(sbar / static_cast<double>(window_vertices_.size()));
    if (spec_.max_r == 0) return;

    const auto W = static_cast<double>(rows_.size());
    std::vector<double> fluct(d.count());
    for (std::size_t c = 0; c < d.count(); ++c) {
        const double ec = conditional_spin(d.clusters[c]);
        fluct[c] = 1.0 - ec * ec;
    }
    std::vector<std::int32_t> scratch;
    std::vector<double> row_sum(rows_.size()), col_sum(cols_.size());
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> row_runs, col_runs;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        for (VertexId v : rows_[k]) row_sum[k] += e[static_cast<std::size_t>(v)];
        for (VertexId v : cols_[k]) col_sum[k] += e[static_cast<std::size_t>(v)];
        row_runs.push_back(line_runs(d, rows_[k], scratch));
        col_runs.push_back(line_runs(d, cols_[k], scratch));
    }
    for (double s : row_sum) row.push_back(s / W);
    for (double s : col_sum) row.push_back(s / W);
    // E[S_j S_{j+r} | bonds] / W averaged over line pairs, rows and columns together.
    for (std::int64_t r = 0; r <= spec_.max_r; ++r) {
        const std::size_t pairs = rows_.size() - static_cast<std::size_t>(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < pairs; ++j) {
            const std::size_t k = j + static_cast<std::size_t>(r);
            acc += line_overlap(row_runs[j], row_runs[k], fluct) + row_sum[j] * row_sum[k];
            acc += line_overlap(col_runs[j], col_runs[k], fluct) + col_sum[j] * col_sum[k];
        }
        row.push_back(acc / (2.0 * static_cast<double>(pairs) * W));
    }
    const double e0 = e[static_cast<std::size_t>(center_)];
    for (std::int64_t r = 1; r <= spec_.max_r; ++r) {
        double pc = 0.0, pe = 0.0;
        for (VertexId y : axis_[static_cast<std::size_t>(r)]) {
            const double ey = e[static_cast<std::size_t>(y)];
            pc += d.connected(center_, y) ? 1.0 : e0 * ey;
            pe += ey;
        }
        row.push_back(pc / 4.0);
        row.push_back(pe / 4.0);
    }
}

} // namespace fkg
