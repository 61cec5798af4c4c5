#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkg/clusters.hpp"
#include "fkg/lattice.hpp"
#include "fkg/sampler.hpp"
#include "fkg/stats.hpp"

namespace fkg {

// Rao-Blackwellized observables: conditional expectations given the internal
// and boundary bonds, with ghost edges integrated out cluster by cluster.

/// P(x <-> y | internal bonds) in the ghost-extended graph.
double two_point_rb(const ClusterDecomposition& d, VertexId x, VertexId y);
double ghost_connection_rb(const ClusterDecomposition& d, VertexId x);
double spin_rb(const ClusterDecomposition& d, VertexId x);

/// P(x<->y) - P(x<->g) P(y<->g) from per-sample RB values, jackknifed.
Estimate truncated_two_point_mc(std::span<const double> pair, std::span<const double> ghost_x,
                                std::span<const double> ghost_y, std::size_t blocks = 50);

/// 1 iff the cluster of `origin` contains a vertex of the inner boundary.
bool one_arm(const ClusterDecomposition& d, const LatticeDomain& domain, VertexId origin);

/// Annulus events evaluated on a bond configuration of a given domain.
class AnnulusProbe {
public:
    AnnulusProbe(std::shared_ptr<const LatticeDomain> domain, DualAnnulus annulus);

    const DualAnnulus& annulus() const noexcept { return annulus_; }
    /// A circuit of dual-open edges (crossing closed primal edges) surrounds the inner rectangle.
    bool blocking_circuit(const BondConfig& bonds) const;
    /// An open primal path joins the inner rectangle to the outer ring.
    bool primal_crossing(const BondConfig& bonds) const;
    bool blocking_circuit(std::span<const std::uint8_t> annulus_open) const;
    bool primal_crossing(std::span<const std::uint8_t> annulus_open) const;
    /// Domain edge index of annulus edge k.
    std::size_t edge_index(std::size_t k) const { return edge_index_[k]; }
    std::size_t size() const noexcept { return edge_index_.size(); }

private:
    std::shared_ptr<const LatticeDomain> domain_;
    DualAnnulus annulus_;
    std::vector<std::size_t> edge_index_;
    std::vector<std::int32_t> site_node_;  // annulus primal endpoints -> compact node ids
    std::vector<std::array<std::int32_t, 2>> edge_nodes_;
    std::vector<std::uint8_t> node_inner_, node_outer_;
};

struct AreaStats {
    double max = 0.0;       // A_max
    double boundary = 0.0;  // A_0: clusters attached to an exterior node
    std::vector<double> areas;
};
AreaStats area_stats(const ClusterDecomposition& d);

/// E[exp(t X)] with jackknife error; the mean is formed relative to max(tX).
struct MgfEstimate {
    double log_value = 0.0;
    double value = 0.0;
    double error = 0.0;
};
MgfEstimate mgf_estimate(std::span<const double> x, double t, std::size_t blocks = 50);

/// Smallest C with E[exp(t X)] <= 2 exp(C ((t+s) + (t+s)^2)) at every t of the grid.
double fit_mgf_constant(std::span<const double> t, std::span<const MgfEstimate> estimates, double shift = 0.0);

/// Test function on the plane: indicator of a half-open rectangle, x*y, or a constant.
struct TestFunction {
    enum class Kind { Indicator, ProductXY, Constant };
    Kind kind = Kind::Constant;
    Rect rect{};
    double constant = 1.0;

    static TestFunction indicator(Rect r) { return {Kind::Indicator, r, 1.0}; }
    static TestFunction product_xy() { return {Kind::ProductXY, {}, 1.0}; }
    static TestFunction constant_value(double c) { return {Kind::Constant, {}, c}; }

    double at(const LatticeDomain& d, VertexId v) const;
    std::vector<double> values(const LatticeDomain& d) const;
};

/// a^{15/8} sum_x f(x) sigma_x
double field_pairing(const LatticeDomain& d, std::span<const std::int8_t> sigma, const TestFunction& f);
double field_pairing(const LatticeDomain& d, std::span<const std::int8_t> sigma, std::span<const double> f_values);

/// Finite measure made of weighted atoms in the plane.
struct DiscreteMeasure {
    struct Atom {
        double x = 0.0, y = 0.0, mass = 0.0;
    };
    std::vector<Atom> atoms;
    double total() const;
};
using ClusterMeasureEnsemble = std::vector<DiscreteMeasure>;

/// Prokhorov distance between two finite atomic measures.
double prokhorov_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
/// Hausdorff-type distance between ensembles under the Prokhorov metric;
/// +infinity when exactly one ensemble is empty.
double ensemble_distance(const ClusterMeasureEnsemble& s, const ClusterMeasureEnsemble& t);
/// a^{15/8}-weighted counting measures of all clusters with at least `min_size` vertices.
ClusterMeasureEnsemble cluster_ensemble(const ClusterDecomposition& d, const LatticeDomain& domain,
                                        std::int32_t min_size = 1);

/// Site label used in column names: "3_m2" for (3, -2).
std::string site_label(Site s);

/// Observables registered for a run.
struct ObservableSpec {
    std::vector<std::pair<std::string, TestFunction>> phi;
    std::vector<std::pair<Site, Site>> pairs;
    Site origin{0, 0};
    std::optional<std::pair<ClosedRect, ClosedRect>> annulus;  // inner, outer
    /// Side of the central window used for translation averages and
    /// correlators, in lattice units; 0 disables them.
    std::int64_t window = 0;
    /// Largest correlator distance; 0 disables correlators.
    std::int64_t max_r = 0;
};

/// Turns one sample into one row of measurement columns.
class Measurer {
public:
    Measurer(std::shared_ptr<const GhostGraph> graph, ObservableSpec spec);

    const std::vector<std::string>& header() const noexcept { return header_; }
    /// Appends the row for a sample (spins after the sweep, bonds of the sweep).
    void measure(std::uint64_t sweep, const SpinConfig& spins, const BondConfig& bonds, std::vector<double>& row) const;
    const ObservableSpec& spec() const noexcept { return spec_; }
    bool has_annulus() const noexcept { return probe_.has_value(); }
    /// Number of vertices whose spins enter the central-window average.
    std::size_t window_vertices() const noexcept { return window_vertices_.size(); }

private:
    std::shared_ptr<const GhostGraph> graph_;
    ObservableSpec spec_;
    std::vector<std::string> header_;
    VertexId origin_ = kNoVertex;
    VertexId center_ = kNoVertex;
    std::optional<AnnulusProbe> probe_;
    std::vector<std::vector<double>> phi_values_;
    std::vector<std::pair<VertexId, VertexId>> pair_vertices_;
    std::vector<VertexId> ghost_sites_;
    std::vector<VertexId> window_vertices_;
    // window rows/columns as vertex lists, indexed [line][offset]
    std::vector<std::vector<VertexId>> rows_, cols_;
    // vertices at distance r from the centre along the four axes
    std::vector<std::vector<VertexId>> axis_;
};

} // namespace fkg
