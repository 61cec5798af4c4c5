#include "fkg/clusters.hpp"

#include <cmath>

#include "fkg/error.hpp"
#include "fkg/union_find.hpp"

namespace fkg {

BondConfig BondConfig::closed(const GhostGraph& g) {
    const auto& d = g.domain();
    BondConfig b;
    b.internal.assign(d.edge_count(), 0);
    b.external.assign(d.vertex_count(), 0);
    b.boundary.assign(d.boundary_bonds().size(), 0);
    return b;
}

BondConfig BondConfig::open(const GhostGraph& g) {
    const auto& d = g.domain();
    BondConfig b;
    b.internal.assign(d.edge_count(), 1);
    b.external.assign(d.vertex_count(), 0);
    for (std::size_t v = 0; v < d.vertex_count(); ++v) b.external[v] = g.p_external(static_cast<VertexId>(v)) > 0;
    b.boundary.assign(d.boundary_bonds().size(), 0);
    for (std::size_t k = 0; k < b.boundary.size(); ++k) b.boundary[k] = g.bond_spin(k) != 0 || g.bond_wired(k);
    return b;
}

ClusterDecomposition clusters(const GhostGraph& g, const BondConfig& bonds) {
    const auto& dom = g.domain();
    const auto n = static_cast<VertexId>(dom.vertex_count());
    const auto edges = dom.internal_edges();
    const auto bbonds = dom.boundary_bonds();
    require(bonds.internal.size() == edges.size() && bonds.external.size() == dom.vertex_count() &&
                bonds.boundary.size() == bbonds.size(),
            Errc::mismatch, "bond configuration does not match the graph");

    const VertexId plus = n, minus = n + 1, wired = n + 2;
    MinRootUnionFind uf(static_cast<std::size_t>(n) + 3);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (bonds.internal[e]) uf.unite(edges[e].u, edges[e].v);
    }
    for (std::size_t b = 0; b < bbonds.size(); ++b) {
        if (!bonds.boundary[b]) continue;
        const auto s = g.bond_spin(b);
        uf.unite(bbonds[b].inside, s > 0 ? plus : s < 0 ? minus : wired);
    }

    ClusterDecomposition d;
    d.area_unit = dom.area_unit();
    d.cluster_of.assign(static_cast<std::size_t>(n), -1);
    const VertexId rp = uf.find(plus), rm = uf.find(minus), rw = uf.find(wired);
    std::vector<std::int32_t> index_of_root(static_cast<std::size_t>(n), -1);
    for (VertexId v = 0; v < n; ++v) {
        const VertexId r = uf.find(v);
        auto& idx = index_of_root[static_cast<std::size_t>(r)];
        if (idx < 0) {
            idx = static_cast<std::int32_t>(d.clusters.size());
            ClusterDecomposition::Cluster c;
            c.key = r;
            c.fixed_spin = r == rp ? 1 : r == rm ? -1 : 0;
            c.exterior = r == rp || r == rm || r == rw;
            if (r == rw) d.boundary_cluster = idx;
            d.clusters.push_back(c);
        }
        auto& c = d.clusters[static_cast<std::size_t>(idx)];
        d.cluster_of[static_cast<std::size_t>(v)] = idx;
        ++c.size;
        c.field += g.field(v);
        if (bonds.external[static_cast<std::size_t>(v)]) c.ghost = true;
    }
    return d;
}

double conditional_spin(const ClusterDecomposition::Cluster& c) {
    if (c.fixed_spin != 0) return c.fixed_spin;
    return std::tanh(c.field);
}

double conditional_ghost(const ClusterDecomposition::Cluster& c) {
    if (c.fixed_spin > 0) return 1.0;
    if (c.fixed_spin < 0) return 0.0;
    return std::tanh(c.field);
}

} // namespace fkg
