#include "fkg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "fkg/error.hpp"

namespace fkg {

namespace {

// Index range {k : lo <= k a < hi} for half-open [lo, hi).
std::pair<std::int64_t, std::int64_t> half_open_range(Rational lo, Rational hi, Rational a) {
    return {(lo / a).ceil(), (hi / a).ceil() - 1};
}

// Index range {k : lo <= k a <= hi} for closed [lo, hi].
std::pair<std::int64_t, std::int64_t> closed_range(Rational lo, Rational hi, Rational a) {
    return {(lo / a).ceil(), (hi / a).floor()};
}

} // namespace

std::int64_t rect_vertex_count(const Rect& r, Rational a) {
    auto [i0, i1] = half_open_range(r.x0, r.x1, a);
    auto [j0, j1] = half_open_range(r.y0, r.y1, a);
    if (i1 < i0 || j1 < j0) return 0;
    return (i1 - i0 + 1) * (j1 - j0 + 1);
}

LatticeDomain LatticeDomain::build(const std::vector<Rect>& region, Rational spacing) {
    require(spacing > Rational(0), Errc::invalid_argument, "lattice spacing must be positive");
    require(!region.empty(), Errc::empty_domain, "empty region");

    LatticeDomain d;
    d.spacing_ = spacing;
    d.area_unit_ = std::pow(spacing.value(), kAreaExponent);
    d.region_ = region;

    std::int64_t i_lo = 0, i_hi = -1, j_lo = 0, j_hi = -1;
    bool any = false;
    for (const Rect& r : region) {
        require(r.x0 < r.x1 && r.y0 < r.y1, Errc::empty_domain, "region rectangle has zero area");
        auto [a0, a1] = half_open_range(r.x0, r.x1, spacing);
        auto [b0, b1] = half_open_range(r.y0, r.y1, spacing);
        if (a1 < a0 || b1 < b0) continue;
        if (!any) {
            i_lo = a0, i_hi = a1, j_lo = b0, j_hi = b1;
            any = true;
        } else {
            i_lo = std::min(i_lo, a0), i_hi = std::max(i_hi, a1);
            j_lo = std::min(j_lo, b0), j_hi = std::max(j_hi, b1);
        }
    }
    require(any, Errc::empty_domain, "region contains no lattice points at this spacing");

    d.i0_ = i_lo;
    d.j0_ = j_lo;
    d.width_ = i_hi - i_lo + 1;
    d.height_ = j_hi - j_lo + 1;
    require(d.width_ * d.height_ < (std::int64_t{1} << 31), Errc::size_limit, "domain too large");
    d.grid_.assign(static_cast<std::size_t>(d.width_ * d.height_), kNoVertex);

    for (const Rect& r : region) {
        auto [a0, a1] = half_open_range(r.x0, r.x1, spacing);
        auto [b0, b1] = half_open_range(r.y0, r.y1, spacing);
        for (std::int64_t j = b0; j <= b1; ++j)
            for (std::int64_t i = a0; i <= a1; ++i)
                d.grid_[static_cast<std::size_t>((j - d.j0_) * d.width_ + (i - d.i0_))] = 0;
    }
    for (std::int64_t j = 0; j < d.height_; ++j) {
        for (std::int64_t i = 0; i < d.width_; ++i) {
            auto& slot = d.grid_[static_cast<std::size_t>(j * d.width_ + i)];
            if (slot == kNoVertex) continue;
            slot = static_cast<VertexId>(d.sites_.size());
            d.sites_.push_back({i + d.i0_, j + d.j0_});
        }
    }

    const std::size_t n = d.sites_.size();
    d.right_edge_.assign(n, -1);
    d.up_edge_.assign(n, -1);
    d.on_inner_boundary_.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        const Site s = d.sites_[v];
        if (auto r = d.vertex_at({s.i + 1, s.j})) {
            d.right_edge_[v] = static_cast<std::int32_t>(d.edges_.size());
            d.edges_.push_back({static_cast<VertexId>(v), *r});
        }
        if (auto u = d.vertex_at({s.i, s.j + 1})) {
            d.up_edge_[v] = static_cast<std::int32_t>(d.edges_.size());
            d.edges_.push_back({static_cast<VertexId>(v), *u});
        }
        const Site around[4] = {{s.i + 1, s.j}, {s.i, s.j + 1}, {s.i - 1, s.j}, {s.i, s.j - 1}};
        for (const Site& t : around) {
            if (d.vertex_at(t)) continue;
            d.boundary_bonds_.push_back({static_cast<VertexId>(v), t});
            d.on_inner_boundary_[v] = 1;
        }
        if (d.on_inner_boundary_[v]) d.inner_boundary_.push_back(static_cast<VertexId>(v));
    }
    d.outer_boundary_.reserve(d.boundary_bonds_.size());
    for (const auto& b : d.boundary_bonds_) d.outer_boundary_.push_back(b.outside);
    std::sort(d.outer_boundary_.begin(), d.outer_boundary_.end());
    d.outer_boundary_.erase(std::unique(d.outer_boundary_.begin(), d.outer_boundary_.end()),
                            d.outer_boundary_.end());
    return d;
}

std::array<double, 2> LatticeDomain::position(VertexId v) const {
    const Site s = site(v);
    const double a = spacing_.value();
    return {static_cast<double>(s.i) * a, static_cast<double>(s.j) * a};
}

std::optional<VertexId> LatticeDomain::vertex_at(Site s) const noexcept {
    const std::int64_t i = s.i - i0_;
    const std::int64_t j = s.j - j0_;
    if (i < 0 || j < 0 || i >= width_ || j >= height_) return std::nullopt;
    const VertexId v = grid_[static_cast<std::size_t>(j * width_ + i)];
    if (v == kNoVertex) return std::nullopt;
    return v;
}

std::optional<Site> LatticeDomain::site_at(Rational x, Rational y) const {
    const Rational i = x / spacing_;
    const Rational j = y / spacing_;
    if (!i.is_integer() || !j.is_integer()) return std::nullopt;
    return Site{i.num(), j.num()};
}

std::optional<std::size_t> LatticeDomain::edge_between(VertexId u, VertexId v) const {
    if (u > v) std::swap(u, v);
    if (u < 0) return std::nullopt;
    const auto uu = static_cast<std::size_t>(u);
    if (right_edge_[uu] >= 0 && edges_[static_cast<std::size_t>(right_edge_[uu])].v == v)
        return static_cast<std::size_t>(right_edge_[uu]);
    if (up_edge_[uu] >= 0 && edges_[static_cast<std::size_t>(up_edge_[uu])].v == v)
        return static_cast<std::size_t>(up_edge_[uu]);
    return std::nullopt;
}

std::array<VertexId, 4> LatticeDomain::neighbors(VertexId v) const {
    const Site s = site(v);
    return {vertex_at({s.i + 1, s.j}).value_or(kNoVertex), vertex_at({s.i, s.j + 1}).value_or(kNoVertex),
            vertex_at({s.i - 1, s.j}).value_or(kNoVertex), vertex_at({s.i, s.j - 1}).value_or(kNoVertex)};
}

const char* to_string(BoundaryKind kind) {
    switch (kind) {
    case BoundaryKind::Free: return "free";
    case BoundaryKind::Wired: return "wired";
    case BoundaryKind::Plus: return "plus";
    case BoundaryKind::Minus: return "minus";
    case BoundaryKind::ExplicitSpin: return "explicit-spin";
    case BoundaryKind::ExplicitEdge: return "explicit-edge";
    }
    return "?";
}

BoundaryKind parse_boundary_kind(std::string_view text) {
    if (text == "free") return BoundaryKind::Free;
    if (text == "wired") return BoundaryKind::Wired;
    if (text == "plus") return BoundaryKind::Plus;
    if (text == "minus") return BoundaryKind::Minus;
    fail(Errc::config, "unknown boundary condition '" + std::string(text) + "'");
}

GhostGraph::GhostGraph(std::shared_ptr<const LatticeDomain> domain, std::vector<double> field,
                       BoundaryCondition bc, double beta)
    : domain_(std::move(domain)), beta_(beta), field_(std::move(field)),
      h_(std::numeric_limits<double>::quiet_NaN()), bc_(std::move(bc)) {
    require(domain_ != nullptr, Errc::invalid_argument, "null domain");
    require(beta_ > 0 && std::isfinite(beta_), Errc::invalid_argument, "beta must be positive");
    const std::size_t n = domain_->vertex_count();
    require(field_.size() == n, Errc::invalid_argument, "field vector size does not match vertex count");
    p_internal_ = -std::expm1(-2.0 * beta_);
    p_external_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        require(field_[v] >= 0 && std::isfinite(field_[v]), Errc::invalid_argument,
                "field must be finite and nonnegative");
        p_external_[v] = -std::expm1(-2.0 * field_[v]);
        if (field_[v] > 0) has_field_ = true;
    }

    const std::size_t nb = domain_->boundary_bonds().size();
    bond_spin_.assign(nb, 0);
    bond_wired_.assign(nb, 0);
    switch (bc_.kind) {
    case BoundaryKind::Free: break;
    case BoundaryKind::Plus: std::fill(bond_spin_.begin(), bond_spin_.end(), std::int8_t{1}); break;
    case BoundaryKind::Minus: std::fill(bond_spin_.begin(), bond_spin_.end(), std::int8_t{-1}); break;
    case BoundaryKind::Wired: std::fill(bond_wired_.begin(), bond_wired_.end(), std::uint8_t{1}); break;
    case BoundaryKind::ExplicitSpin:
        require(bc_.values.size() == nb, Errc::invalid_argument, "explicit spin boundary has wrong length");
        for (std::size_t b = 0; b < nb; ++b) {
            require(bc_.values[b] == 1 || bc_.values[b] == -1, Errc::invalid_argument,
                    "explicit boundary spins must be +-1");
            bond_spin_[b] = bc_.values[b];
        }
        break;
    case BoundaryKind::ExplicitEdge:
        require(bc_.values.size() == nb, Errc::invalid_argument, "explicit edge boundary has wrong length");
        for (std::size_t b = 0; b < nb; ++b) {
            require(bc_.values[b] == 0 || bc_.values[b] == 1, Errc::invalid_argument,
                    "explicit boundary edges must be 0 or 1");
            bond_wired_[b] = static_cast<std::uint8_t>(bc_.values[b]);
        }
        break;
    }
    has_wired_ = std::any_of(bond_wired_.begin(), bond_wired_.end(), [](std::uint8_t w) { return w != 0; });
}

GhostGraph extend_with_ghost(std::shared_ptr<const LatticeDomain> domain, double h, BoundaryCondition bc) {
    require(domain != nullptr, Errc::invalid_argument, "null domain");
    require(h >= 0 && std::isfinite(h), Errc::invalid_argument, "field strength h must be finite and >= 0");
    const double H = domain->area_unit() * h;
    std::vector<double> field(domain->vertex_count(), H);
    GhostGraph g(std::move(domain), std::move(field), std::move(bc));
    g.h_ = h;
    return g;
}

bool DualAnnulus::is_inner(Site s) const noexcept {
    return s.i >= ii0_ && s.i <= ii1_ && s.j >= ij0_ && s.j <= ij1_;
}

bool DualAnnulus::is_outer(Site s) const noexcept {
    const bool in_box = s.i >= bi0_ && s.i <= bi1_ && s.j >= bj0_ && s.j <= bj1_;
    return in_box && (s.i == bi0_ || s.i == bi1_ || s.j == bj0_ || s.j == bj1_);
}

DualAnnulus build_dual_annulus(const ClosedRect& inner, const ClosedRect& outer, Rational spacing) {
    require(spacing > Rational(0), Errc::invalid_argument, "lattice spacing must be positive");
    require(inner.x0 <= inner.x1 && inner.y0 <= inner.y1 && outer.x0 < outer.x1 && outer.y0 < outer.y1,
            Errc::invalid_argument, "degenerate annulus rectangle");
    require(outer.x0 < inner.x0 && inner.x1 < outer.x1 && outer.y0 < inner.y0 && inner.y1 < outer.y1,
            Errc::invalid_argument, "inner rectangle must lie strictly inside the outer rectangle");

    DualAnnulus an;
    an.spacing_ = spacing;
    std::tie(an.bi0_, an.bi1_) = closed_range(outer.x0, outer.x1, spacing);
    std::tie(an.bj0_, an.bj1_) = closed_range(outer.y0, outer.y1, spacing);
    std::tie(an.ii0_, an.ii1_) = closed_range(inner.x0, inner.x1, spacing);
    std::tie(an.ij0_, an.ij1_) = closed_range(inner.y0, inner.y1, spacing);

    for (std::int64_t j = an.ij0_; j <= an.ij1_; ++j)
        for (std::int64_t i = an.ii0_; i <= an.ii1_; ++i) an.inner_sites_.push_back({i, j});
    for (std::int64_t j = an.bj0_; j <= an.bj1_; ++j)
        for (std::int64_t i = an.bi0_; i <= an.bi1_; ++i)
            if (an.is_outer({i, j})) an.outer_sites_.push_back({i, j});

    const bool inner_nonempty = an.ii0_ <= an.ii1_ && an.ij0_ <= an.ij1_;
    an.has_ring_ = inner_nonempty && an.bi0_ < an.ii0_ && an.ii1_ < an.bi1_ && an.bj0_ < an.ij0_ &&
                   an.ij1_ < an.bj1_;
    if (!an.has_ring_) return an;

    const std::int64_t cw = an.bi1_ - an.bi0_;
    const std::int64_t ch = an.bj1_ - an.bj0_;
    std::vector<std::int32_t> cell_index(static_cast<std::size_t>(cw * ch), -1);
    auto inner_cell = [&](std::int64_t i, std::int64_t j) {
        return i >= an.ii0_ && i + 1 <= an.ii1_ && j >= an.ij0_ && j + 1 <= an.ij1_;
    };
    for (std::int64_t j = an.bj0_; j < an.bj1_; ++j) {
        for (std::int64_t i = an.bi0_; i < an.bi1_; ++i) {
            if (inner_cell(i, j)) continue;
            cell_index[static_cast<std::size_t>((j - an.bj0_) * cw + (i - an.bi0_))] =
                static_cast<std::int32_t>(an.cells_.size());
            an.cells_.push_back({i, j});
        }
    }
    auto cell = [&](std::int64_t i, std::int64_t j) {
        return cell_index[static_cast<std::size_t>((j - an.bj0_) * cw + (i - an.bi0_))];
    };

    auto keep = [&](Site u, Site v) {
        if (an.is_inner(u) && an.is_inner(v)) return false;
        if (an.is_outer(u) && an.is_outer(v)) return false;
        return true;
    };
    for (std::int64_t j = an.bj0_; j <= an.bj1_; ++j) {
        for (std::int64_t i = an.bi0_; i <= an.bi1_; ++i) {
            if (i < an.bi1_ && keep({i, j}, {i + 1, j})) {
                // horizontal primal edge; its dual separates the cells below and above
                an.primal_edges_.push_back({{i, j}, {i + 1, j}});
                an.dual_edges_.push_back({cell(i, j - 1), cell(i, j), j == an.ij0_ && i >= an.ii1_});
            }
            if (j < an.bj1_ && keep({i, j}, {i, j + 1})) {
                an.primal_edges_.push_back({{i, j}, {i, j + 1}});
                an.dual_edges_.push_back({cell(i - 1, j), cell(i, j), false});
            }
        }
    }
    for (const auto& e : an.dual_edges_) {
        require(e.c1 >= 0 && e.c2 >= 0, Errc::numeric, "annulus dual edge leaves the annulus");
    }
    return an;
}

} // namespace fkg
