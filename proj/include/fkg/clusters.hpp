#pragma once

#include <cstdint>
#include <vector>

#include "fkg/lattice.hpp"

namespace fkg {

/// Open/closed bits of an FK configuration on a ghost graph.
///
/// internal[e] follows LatticeDomain::internal_edges, external[v] is the edge
/// {v, g}, and boundary[b] follows LatticeDomain::boundary_bonds.
struct BondConfig {
    std::vector<std::uint8_t> internal;
    std::vector<std::uint8_t> external;
    std::vector<std::uint8_t> boundary;

    static BondConfig closed(const GhostGraph& g);
    static BondConfig open(const GhostGraph& g);
};

/// Clusters of the internal and boundary bonds (external edges excluded).
///
/// Clusters are numbered in order of their smallest vertex, which is also
/// their key. A cluster joined to a clamped exterior has that exterior's spin
/// as fixed_spin; a cluster joined to the wired exterior is the boundary
/// cluster.
struct ClusterDecomposition {
    struct Cluster {
        VertexId key = kNoVertex;
        std::int32_t size = 0;
        double field = 0.0;         // H(C), sum of per-vertex fields
        bool ghost = false;         // some open external edge
        bool exterior = false;      // attached to an exterior node
        std::int8_t fixed_spin = 0; // +1 plus exterior, -1 minus exterior, 0 free
    };

    double area_unit = 1.0;
    std::vector<std::int32_t> cluster_of;
    std::vector<Cluster> clusters;
    std::int32_t boundary_cluster = -1;

    std::size_t count() const noexcept { return clusters.size(); }
    double area(std::size_t c) const { return area_unit * clusters[c].size; }
    const Cluster& of(VertexId v) const { return clusters[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(v)])]; }
    bool connected(VertexId x, VertexId y) const {
        return cluster_of[static_cast<std::size_t>(x)] == cluster_of[static_cast<std::size_t>(y)];
    }
};

ClusterDecomposition clusters(const GhostGraph& g, const BondConfig& bonds);

/// E[sigma_C | internal bonds]: the clamped spin, or tanh H(C) for a free cluster.
double conditional_spin(const ClusterDecomposition::Cluster& c);
/// P(C <-> g | internal bonds), the plus exterior counting as the ghost.
double conditional_ghost(const ClusterDecomposition::Cluster& c);

} // namespace fkg
