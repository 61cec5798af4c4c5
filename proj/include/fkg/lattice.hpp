#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fkg/rational.hpp"

namespace fkg {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

/// Critical inverse temperature of the square-lattice Ising model, (1/2) ln(1 + sqrt 2).
inline const double kBetaC = 0.5 * std::log1p(1.4142135623730951);

/// Magnetization scaling dimension pairing: renormalized quantities carry a^{15/8}.
inline constexpr double kAreaExponent = 15.0 / 8.0;

/// Lattice point (i a, j a) stored by its integer index pair.
struct Site {
    std::int64_t i = 0;
    std::int64_t j = 0;
    friend auto operator<=>(const Site&, const Site&) = default;
};

/// Half-open rectangle [x0, x1) x [y0, y1).
struct Rect {
    Rational x0, y0, x1, y1;
};

/// Closed rectangle [x0, x1] x [y0, y1]; used for annulus geometry.
struct ClosedRect {
    Rational x0, y0, x1, y1;
};

struct Edge {
    VertexId u = kNoVertex;
    VertexId v = kNoVertex;
};

/// Nearest-neighbour pair with one end inside the domain and one outside.
struct BoundaryBond {
    VertexId inside = kNoVertex;
    Site outside;
};

/// a-approximation D^a = aZ^2 ∩ D of a union of half-open rectangles.
///
/// Vertices are numbered row-major over the bounding box (j outer, i inner),
/// skipping sites outside the region. Internal edges are listed per vertex in
/// vertex order, right neighbour first, then upper neighbour; that order is
/// part of the reproducibility contract of the sampler.
class LatticeDomain {
public:
    static LatticeDomain build(const std::vector<Rect>& region, Rational spacing);
    static LatticeDomain build(const Rect& region, Rational spacing) {
        return build(std::vector<Rect>{region}, spacing);
    }

    Rational spacing() const noexcept { return spacing_; }
    double a() const noexcept { return spacing_.value(); }
    /// a^{15/8}
    double area_unit() const noexcept { return area_unit_; }
    const std::vector<Rect>& region() const noexcept { return region_; }

    std::size_t vertex_count() const noexcept { return sites_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const Edge> internal_edges() const noexcept { return edges_; }
    std::span<const VertexId> inner_boundary() const noexcept { return inner_boundary_; }
    std::span<const Site> outer_boundary() const noexcept { return outer_boundary_; }
    std::span<const BoundaryBond> boundary_bonds() const noexcept { return boundary_bonds_; }

    Site site(VertexId v) const { return sites_[static_cast<std::size_t>(v)]; }
    std::array<double, 2> position(VertexId v) const;
    std::optional<VertexId> vertex_at(Site s) const noexcept;
    /// Site at exact coordinates, if (x, y) is a lattice point.
    std::optional<Site> site_at(Rational x, Rational y) const;
    bool is_inner_boundary(VertexId v) const { return on_inner_boundary_[static_cast<std::size_t>(v)] != 0; }

    /// Internal edge index joining nearest neighbours u and v, if any.
    std::optional<std::size_t> edge_between(VertexId u, VertexId v) const;
    /// Neighbours in the order right, up, left, down; kNoVertex when outside.
    std::array<VertexId, 4> neighbors(VertexId v) const;

    std::int64_t min_i() const noexcept { return i0_; }
    std::int64_t min_j() const noexcept { return j0_; }
    std::int64_t width() const noexcept { return width_; }
    std::int64_t height() const noexcept { return height_; }

private:
    LatticeDomain() = default;

    Rational spacing_;
    double area_unit_ = 1.0;
    std::vector<Rect> region_;
    std::int64_t i0_ = 0, j0_ = 0, width_ = 0, height_ = 0;
    std::vector<VertexId> grid_;  // bounding box -> vertex id or kNoVertex
    std::vector<Site> sites_;
    std::vector<Edge> edges_;
    std::vector<std::int32_t> right_edge_, up_edge_;
    std::vector<VertexId> inner_boundary_;
    std::vector<std::uint8_t> on_inner_boundary_;
    std::vector<Site> outer_boundary_;
    std::vector<BoundaryBond> boundary_bonds_;
};

/// Closed-form |aZ^2 ∩ [x0,x1) x [y0,y1)|.
std::int64_t rect_vertex_count(const Rect& r, Rational a);

enum class BoundaryKind { Free, Wired, Plus, Minus, ExplicitSpin, ExplicitEdge };

/// Boundary condition on the bonds leaving the domain.
///
/// Spin-type conditions (Plus, Minus, ExplicitSpin) clamp the exterior site of
/// every boundary bond to a fixed spin; those bonds are then random like
/// internal edges. Edge-type conditions (Wired, ExplicitEdge) fix each boundary
/// bond open or closed, every open bond joining the single exterior cluster; its
/// ghost edges are closed.
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Free;
    /// Per boundary bond: spin +-1 (ExplicitSpin) or 0/1 (ExplicitEdge).
    std::vector<std::int8_t> values;

    static BoundaryCondition free() { return {BoundaryKind::Free, {}}; }
    static BoundaryCondition wired() { return {BoundaryKind::Wired, {}}; }
    static BoundaryCondition plus() { return {BoundaryKind::Plus, {}}; }
    static BoundaryCondition minus() { return {BoundaryKind::Minus, {}}; }
    static BoundaryCondition explicit_spin(std::vector<std::int8_t> eta) {
        return {BoundaryKind::ExplicitSpin, std::move(eta)};
    }
    static BoundaryCondition explicit_edge(std::vector<std::int8_t> rho) {
        return {BoundaryKind::ExplicitEdge, std::move(rho)};
    }
};

const char* to_string(BoundaryKind kind);
BoundaryKind parse_boundary_kind(std::string_view text);

/// Lattice domain plus ghost vertex g with one external edge {v, g} per vertex.
class GhostGraph {
public:
    GhostGraph(std::shared_ptr<const LatticeDomain> domain, std::vector<double> field,
               BoundaryCondition bc, double beta = kBetaC);

    const LatticeDomain& domain() const noexcept { return *domain_; }
    std::shared_ptr<const LatticeDomain> domain_ptr() const noexcept { return domain_; }
    double beta() const noexcept { return beta_; }
    double p_internal() const noexcept { return p_internal_; }
    double field(VertexId v) const { return field_[static_cast<std::size_t>(v)]; }
    std::span<const double> fields() const noexcept { return field_; }
    double p_external(VertexId v) const { return p_external_[static_cast<std::size_t>(v)]; }
    bool has_field() const noexcept { return has_field_; }
    /// Renormalized field h when constructed by extend_with_ghost, NaN otherwise.
    double h() const noexcept { return h_; }
    const BoundaryCondition& boundary() const noexcept { return bc_; }

    /// Exterior spin clamped at boundary bond b (0 for edge-type conditions).
    std::int8_t bond_spin(std::size_t b) const { return bond_spin_[b]; }
    /// True when boundary bond b is fixed open into the wired exterior cluster.
    bool bond_wired(std::size_t b) const { return bond_wired_[b] != 0; }
    bool has_wired_exterior() const noexcept { return has_wired_; }

private:
    friend GhostGraph extend_with_ghost(std::shared_ptr<const LatticeDomain>, double, BoundaryCondition);

    std::shared_ptr<const LatticeDomain> domain_;
    double beta_;
    double p_internal_;
    std::vector<double> field_;
    std::vector<double> p_external_;
    bool has_field_ = false;
    double h_;
    BoundaryCondition bc_;
    std::vector<std::int8_t> bond_spin_;
    std::vector<std::uint8_t> bond_wired_;
    bool has_wired_ = false;
};

/// Constant field H_v = a^{15/8} h on every vertex.
GhostGraph extend_with_ghost(std::shared_ptr<const LatticeDomain> domain, double h, BoundaryCondition bc);

/// Dual-edge structure of the annulus between closed rectangles R1 ⊂ int R.
///
/// The primal box B = R^a with B1 = R1^a contracted to a source and the outer
/// ring of B contracted to a sink. Annulus primal edges are the edges of B not
/// inside B1 and not along the outer ring; annulus cells are the unit faces of B
/// not inside B1. primal_edges[k] and dual_edges[k] cross each other.
class DualAnnulus {
public:
    struct Cell {
        std::int64_t i, j;  // lower-left corner index
    };
    struct DualEdge {
        std::int32_t c1, c2;
        bool crosses_cut;  // crosses the ray used for winding parity
    };
    struct PrimalEdge {
        Site u, v;
    };

    Rational spacing() const noexcept { return spacing_; }
    bool has_ring() const noexcept { return has_ring_; }
    std::span<const Cell> cells() const noexcept { return cells_; }
    std::span<const DualEdge> dual_edges() const noexcept { return dual_edges_; }
    std::span<const PrimalEdge> primal_edges() const noexcept { return primal_edges_; }
    std::span<const Site> inner_sites() const noexcept { return inner_sites_; }
    std::span<const Site> outer_sites() const noexcept { return outer_sites_; }
    bool is_inner(Site s) const noexcept;
    bool is_outer(Site s) const noexcept;

private:
    friend DualAnnulus build_dual_annulus(const ClosedRect&, const ClosedRect&, Rational);

    Rational spacing_;
    bool has_ring_ = false;
    std::int64_t bi0_ = 0, bi1_ = -1, bj0_ = 0, bj1_ = -1;  // box B, inclusive
    std::int64_t ii0_ = 0, ii1_ = -1, ij0_ = 0, ij1_ = -1;  // inner B1, inclusive
    std::vector<Cell> cells_;
    std::vector<DualEdge> dual_edges_;
    std::vector<PrimalEdge> primal_edges_;
    std::vector<Site> inner_sites_;
    std::vector<Site> outer_sites_;
};

DualAnnulus build_dual_annulus(const ClosedRect& inner, const ClosedRect& outer, Rational spacing);

} // namespace fkg
