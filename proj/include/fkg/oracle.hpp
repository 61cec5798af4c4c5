#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fkg/lattice.hpp"

namespace fkg {

/// Small ferromagnetic graph for exact enumeration.
///
/// Vertices may be clamped to a fixed spin. On the bond side a vertex clamped
/// to +1 is identified with the ghost and all vertices clamped to -1 are
/// identified with one extra node that may never join the ghost cluster.
/// A coupling of +infinity is an edge that is always open (spins forced equal).
struct SmallGraph {
    static constexpr int kMaxVertices = 20;

    struct WeightedEdge {
        int u = 0;
        int v = 0;
        double J = 0.0;
    };

    std::string name;
    int n = 0;
    std::vector<WeightedEdge> edges;
    std::vector<double> field;      // H_v >= 0, size n
    std::vector<std::int8_t> clamp; // 0 free, +1 or -1 clamped; empty means none

    static SmallGraph grid(int rows, int cols, double J, double H);

    int add_vertex(double H = 0.0, std::int8_t clamped = 0);
    void add_edge(int u, int v, double J) { edges.push_back({u, v, J}); }
    std::int8_t clamped(int v) const { return clamp.empty() ? 0 : clamp[static_cast<std::size_t>(v)]; }
    bool has_clamps() const;
    bool has_minus_clamp() const;
    bool has_ghost() const;
    /// Same graph with every field multiplied by s.
    SmallGraph scaled_field(double s) const;
    /// Throws on negative couplings or fields, bad indices, or too many vertices.
    void validate() const;
};

/// Open probability 1 - exp(-2J) of an edge with coupling J.
double bond_probability(double J);

enum class ConfigKind { Spin, FullBond, InternalBond };

/// Enumerated configurations with normalized probabilities.
///
/// Spin configurations: bit v set iff sigma_v = +1.
/// Bond configurations: bits [0, E) are the internal edges in graph order and,
/// for FullBond, bits [E, E + n) the external edges {v, g}.
struct ExactDistribution {
    ConfigKind kind = ConfigKind::Spin;
    int n_vertices = 0;
    int n_internal = 0;
    std::vector<std::uint64_t> configs;  // strictly increasing
    std::vector<double> prob;

    std::size_t size() const noexcept { return configs.size(); }
    double probability(std::uint64_t config) const;
    double expectation(const std::function<double(std::uint64_t)>& f) const;
    double total() const;
};

/// Largest number of enumerated configurations held in memory.
inline constexpr std::uint64_t kMaxEnumerated = std::uint64_t{1} << 26;

ExactDistribution enumerate_ising(const SmallGraph& g);
ExactDistribution enumerate_fk_ghost(const SmallGraph& g, double q = 2.0);
ExactDistribution internal_marginal(const ExactDistribution& full);

/// Internal-edge marginal from the per-cluster closed form
/// p^o (1-p)^c prod_C (1 + (q-1) exp(-2 H(C))), enumerated over internal edges only.
ExactDistribution internal_marginal_closed_form(const SmallGraph& g, double q = 2.0);

/// Clusters of an internal configuration together with their total field.
struct InternalCluster {
    std::vector<int> vertices;
    double field = 0.0;    // H(C)
    bool plus = false;     // contains a +1-clamped vertex
    bool minus = false;    // contains a -1-clamped vertex
};
std::vector<InternalCluster> internal_clusters(const SmallGraph& g, std::uint64_t omega);

/// log of the unnormalized tilt prod_C (1 + (q-1) e^{-2H(C)}) / q relative to
/// the same graph at zero field; for q = 2 this is prod_C cosh H(C) up to a
/// constant independent of omega. Returns -inf for forbidden configurations.
double log_tilt_weight(const SmallGraph& g, std::uint64_t omega, double q = 2.0);

/// prod_C cosh(H(C)) for free clusters (q = 2 form).
double cosh_product(const SmallGraph& g, std::uint64_t omega);

/// Normalized Radon-Nikodym derivative of the field-tilted internal marginal
/// with respect to the zero-field one, evaluated at omega.
double rn_derivative(const SmallGraph& g, std::uint64_t omega, double q = 2.0);

/// All derivative values, indexed like the zero-field internal marginal.
std::vector<double> rn_derivative_table(const SmallGraph& g, const ExactDistribution& zero_field, double q = 2.0);

/// P(C <-> g | omega) for a free cluster with total field H.
double ghost_connection_probability(double H, double q = 2.0);

struct ClusterGhostLaw {
    std::vector<int> vertices;
    double field = 0.0;
    double probability = 0.0;
};
std::vector<ClusterGhostLaw> ghost_conditional(const SmallGraph& g, std::uint64_t omega, double q = 2.0);

struct TwoPointComparison {
    double spin_side = 0.0;  // <s_x s_y> - <s_x><s_y>
    double fk_side = 0.0;    // P(x<->y) - P(x<->g) P(y<->g)
    double difference() const;
};
TwoPointComparison truncated_two_point_exact(const SmallGraph& g, int x, int y);

/// Connection probabilities read off a full-bond distribution.
double connection_probability(const SmallGraph& g, const ExactDistribution& full, int x, int y);
double ghost_probability(const SmallGraph& g, const ExactDistribution& full, int x);

/// Spin law obtained by coloring clusters of a q = 2 full-bond distribution.
ExactDistribution color_clusters(const SmallGraph& g, const ExactDistribution& full);

/// Largest over configurations of |P(x) - Q(x)| (missing entries count as 0).
double max_abs_difference(const ExactDistribution& p, const ExactDistribution& q);
double total_variation(const ExactDistribution& p, const ExactDistribution& q);

/// Largest deficiency of the joint ghost-connection law given omega from its
/// product form, over all internal configurations and connection patterns.
double conditional_independence_defect(const SmallGraph& g, const ExactDistribution& full, double q = 2.0);

struct DominationResult {
    double flow_deficit = 0.0;     // 1 - max monotone coupling mass
    double worst_upset_gap = 0.0;  // max over principal up-sets of P_low - P_high
    bool holds(double tol) const { return flow_deficit <= tol && worst_upset_gap <= tol; }
};
/// Checks low <=_st high on {0,1}^bits (Strassen coupling via max flow).
DominationResult check_domination(const ExactDistribution& low, const ExactDistribution& high, int bits);

/// Vertices and edges of a lattice ghost graph, with exterior nodes encoding the boundary condition.
SmallGraph small_graph_from(const GhostGraph& gg);

} // namespace fkg
