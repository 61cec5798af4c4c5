#include "fkg/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "fkg/error.hpp"
#include "fkg/stats.hpp"

namespace fkg {

namespace {

/// One Swendsen-Wang update from `in` into `out`, filling `bonds`.
void sweep_impl(const GhostGraph& g, const CounterRng& rng, std::uint64_t s, const SpinConfig& in, SpinConfig& out,
                BondConfig& bonds, MinRootUnionFind& uf, std::uint64_t thr_internal,
                std::span<const std::uint64_t> thr_external) {
    const auto& dom = g.domain();
    const auto n = static_cast<VertexId>(dom.vertex_count());
    const VertexId ghost = n, minus = n + 1, wired = n + 2;
    const auto edges = dom.internal_edges();
    const auto bbonds = dom.boundary_bonds();
    const std::int8_t* sigma = in.spin.data();

    if (uf.size() != static_cast<std::size_t>(n) + 3) uf.resize(static_cast<std::size_t>(n) + 3);
    else uf.reset();
    bonds.internal.resize(edges.size());
    bonds.external.resize(static_cast<std::size_t>(n));
    bonds.boundary.resize(bbonds.size());

    std::array<std::uint32_t, 4> w{};
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if ((e & 3) == 0) w = rng.block(Stream::Internal, s, static_cast<std::uint32_t>(e >> 2));
        const Edge ed = edges[e];
        const bool open = sigma[ed.u] == sigma[ed.v] && w[e & 3] < thr_internal;
        bonds.internal[e] = open;
        if (open) uf.unite(ed.u, ed.v);
    }
    if (g.has_field()) {
        for (VertexId v = 0; v < n; ++v) {
            if ((v & 3) == 0) w = rng.block(Stream::External, s, static_cast<std::uint32_t>(v >> 2));
            const bool open = sigma[v] > 0 && w[v & 3] < thr_external[static_cast<std::size_t>(v)];
            bonds.external[static_cast<std::size_t>(v)] = open;
            if (open) uf.unite(v, ghost);
        }
    } else {
        std::fill(bonds.external.begin(), bonds.external.end(), std::uint8_t{0});
    }
    for (std::size_t b = 0; b < bbonds.size(); ++b) {
        if ((b & 3) == 0) w = rng.block(Stream::Boundary, s, static_cast<std::uint32_t>(b >> 2));
        const VertexId v = bbonds[b].inside;
        const auto ext = g.bond_spin(b);
        bool open = false;
        if (ext != 0) {
            open = sigma[v] == ext && w[b & 3] < thr_internal;
            if (open) uf.unite(v, ext > 0 ? ghost : minus);
        } else if (g.bond_wired(b)) {
            open = true;
            uf.unite(v, wired);
        }
        bonds.boundary[b] = open;
    }

    const VertexId rg = uf.find(ghost), rm = uf.find(minus);
    auto coin = [&](VertexId r) -> std::int8_t {
        const auto word = rng.block(Stream::ClusterCoin, s, static_cast<std::uint32_t>(r >> 2))[r & 3];
        return (word & 1u) ? std::int8_t{1} : std::int8_t{-1};
    };
    out.spin.resize(static_cast<std::size_t>(n));
    for (VertexId v = 0; v < n; ++v) {
        const VertexId r = uf.find(v);
        // Roots are minimal vertices, so a root is visited before the rest of its cluster.
        if (r == v) {
            out.spin[static_cast<std::size_t>(v)] = r == rg ? 1 : r == rm ? -1 : coin(r);
        } else {
            out.spin[static_cast<std::size_t>(v)] = out.spin[static_cast<std::size_t>(r)];
        }
        assert(!bonds.external[static_cast<std::size_t>(v)] || out.spin[static_cast<std::size_t>(v)] == 1);
    }
    const VertexId rw = uf.find(wired);
    out.wired_spin = rw < n ? out.spin[static_cast<std::size_t>(rw)] : coin(wired);
}

std::vector<std::uint64_t> external_thresholds(const GhostGraph& g) {
    std::vector<std::uint64_t> t(g.domain().vertex_count());
    for (std::size_t v = 0; v < t.size(); ++v) t[v] = probability_threshold(g.p_external(static_cast<VertexId>(v)));
    return t;
}

} // namespace

SpinConfig SpinConfig::all_plus(const GhostGraph& g) {
    SpinConfig s;
    s.spin.assign(g.domain().vertex_count(), 1);
    s.wired_spin = 1;
    return s;
}

SwendsenWang::SwendsenWang(std::shared_ptr<const GhostGraph> graph, std::uint64_t seed, std::uint64_t chain_id,
                           InitialState init)
    : graph_(std::move(graph)), rng_(seed, chain_id) {
    require(graph_ != nullptr, Errc::invalid_argument, "sampler needs a graph");
    spins_ = SpinConfig::all_plus(*graph_);
    if (init == InitialState::AllMinus) {
        std::fill(spins_.spin.begin(), spins_.spin.end(), std::int8_t{-1});
        spins_.wired_spin = -1;
    } else if (init == InitialState::Random) {
        for (std::size_t v = 0; v < spins_.spin.size(); ++v) {
            spins_.spin[v] = (rng_.bits32(Stream::Init, 0, v) & 1u) ? 1 : -1;
        }
    }
    previous_ = spins_;
    bonds_ = BondConfig::closed(*graph_);
    thr_internal_ = probability_threshold(graph_->p_internal());
    thr_external_ = external_thresholds(*graph_);
}

void SwendsenWang::sweep() {
    std::swap(previous_, spins_);
    sweep_impl(*graph_, rng_, sweeps_, previous_, spins_, bonds_, uf_, thr_internal_, thr_external_);
    ++sweeps_;
}

void SwendsenWang::restore(SpinConfig spins, std::uint64_t sweeps_done) {
    require(spins.spin.size() == graph_->domain().vertex_count(), Errc::mismatch, "checkpoint spin count mismatch");
    for (auto s : spins.spin) require(s == 1 || s == -1, Errc::mismatch, "checkpoint spins must be +-1");
    spins_ = std::move(spins);
    previous_ = spins_;
    sweeps_ = sweeps_done;
}

BondConfig sw_sweep(SpinConfig& sigma, const GhostGraph& g, const CounterRng& rng, std::uint64_t sweep_index) {
    require(sigma.spin.size() == g.domain().vertex_count(), Errc::mismatch, "spin configuration does not match graph");
    MinRootUnionFind uf;
    BondConfig bonds;
    SpinConfig out;
    const auto thr = external_thresholds(g);
    sweep_impl(g, rng, sweep_index, sigma, out, bonds, uf, probability_threshold(g.p_internal()), thr);
    sigma = std::move(out);
    return bonds;
}

std::vector<double> cluster_uniforms(const ClusterDecomposition& d, const CounterRng& rng, std::uint64_t sweep_index) {
    std::vector<double> u(d.cluster_of.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& c : d.clusters) {
        u[static_cast<std::size_t>(c.key)] =
            rng.uniform(Stream::ClusterUniform, sweep_index, static_cast<std::uint64_t>(c.key));
    }
    return u;
}

SpinConfig assign_cluster_spins(const ClusterDecomposition& d, double h, std::span<const double> uniforms) {
    require(h >= 0, Errc::invalid_argument, "field must be nonnegative");
    std::vector<std::int8_t> cluster_spin(d.count());
    for (std::size_t c = 0; c < d.count(); ++c) {
        const auto& cl = d.clusters[c];
        if (cl.fixed_spin != 0) {
            cluster_spin[c] = cl.fixed_spin;
            continue;
        }
        const auto key = static_cast<std::size_t>(cl.key);
        require(key < uniforms.size() && !std::isnan(uniforms[key]), Errc::invalid_argument,
                "no uniform for cluster key " + std::to_string(cl.key));
        const double threshold = 0.5 * (1.0 + std::tanh(h * d.area(c)));
        cluster_spin[c] = uniforms[key] <= threshold ? 1 : -1;
    }
    SpinConfig s;
    s.spin.resize(d.cluster_of.size());
    for (std::size_t v = 0; v < s.spin.size(); ++v) s.spin[v] = cluster_spin[static_cast<std::size_t>(d.cluster_of[v])];
    if (d.boundary_cluster >= 0) s.wired_spin = cluster_spin[static_cast<std::size_t>(d.boundary_cluster)];
    return s;
}

void ChainParams::validate() const {
    require(graph != nullptr, Errc::config, "chain has no graph");
    require(stride >= 1, Errc::config, "stride must be at least 1");
    require(sweeps >= 1, Errc::config, "sweeps must be positive");
    if (thermalization) require(*thermalization < sweeps, Errc::config, "thermalization must be smaller than sweeps");
    require(std::is_sorted(h_grid.begin(), h_grid.end()), Errc::config, "h grid must be sorted ascending");
    for (double h : h_grid) require(h >= 0, Errc::config, "h grid values must be nonnegative");
}

std::uint64_t auto_thermalization(SwendsenWang& chain, std::uint64_t pilot_sweeps) {
    std::vector<double> m;
    m.reserve(pilot_sweeps);
    for (std::uint64_t s = 0; s < pilot_sweeps; ++s) {
        chain.sweep();
        double sum = 0.0;
        for (auto x : chain.spins().spin) sum += x;
        m.push_back(sum);
    }
    const double tau = integrated_autocorrelation_time(m);
    return std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(std::ceil(20.0 * tau)));
}

std::uint64_t run_chain(const ChainParams& params, const std::function<void(const SwendsenWang&)>& measure) {
    params.validate();
    SwendsenWang chain(params.graph, params.seed, params.chain_id, params.init);
    std::uint64_t therm = 0;
    if (params.thermalization) {
        therm = *params.thermalization;
    } else {
        therm = auto_thermalization(chain, std::min<std::uint64_t>(1000, params.sweeps));
        require(therm < params.sweeps, Errc::config,
                "automatic thermalization (" + std::to_string(therm) + " sweeps) exceeds the run length");
    }
    while (chain.sweeps_done() < params.sweeps) {
        chain.sweep();
        const std::uint64_t s = chain.sweeps_done();
        if (s > therm && (s - therm) % params.stride == 0) measure(chain);
    }
    return therm;
}

std::uint64_t coupled_h_run(const ChainParams& params, const std::function<void(const CoupledSample&)>& emit) {
    require(!params.h_grid.empty(), Errc::config, "coupled run needs an h grid");
    return run_chain(params, [&](const SwendsenWang& chain) {
        const auto d = clusters(chain.graph(), chain.bonds());
        const auto u = cluster_uniforms(d, chain.rng(), chain.sweeps_done());
        CoupledSample out;
        out.sweep = chain.sweeps_done();
        std::vector<std::int8_t> prev;
        for (double h : params.h_grid) {
            const SpinConfig s = assign_cluster_spins(d, h, u);
            double m = 0.0;
            for (auto x : s.spin) m += x;
            out.magnetization.push_back(d.area_unit * m);
            if (!prev.empty()) {
                for (std::size_t c = 0; c < d.count(); ++c) {
                    const auto key = static_cast<std::size_t>(d.clusters[c].key);
                    if (s.spin[key] < prev[key]) ++out.violations;
                }
            }
            prev = s.spin;
        }
        emit(out);
    });
}

} // namespace fkg
