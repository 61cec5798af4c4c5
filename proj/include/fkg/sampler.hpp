#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fkg/clusters.hpp"
#include "fkg/lattice.hpp"
#include "fkg/rng.hpp"
#include "fkg/union_find.hpp"

namespace fkg {

/// Ising spins on the lattice vertices; the ghost is +1 implicitly.
struct SpinConfig {
    std::vector<std::int8_t> spin;
    /// Spin of the wired exterior cluster (unused for other boundary conditions).
    std::int8_t wired_spin = 1;

    static SpinConfig all_plus(const GhostGraph& g);
};

enum class InitialState { AllPlus, AllMinus, Random };

/// Swendsen-Wang dynamics for the joint spin/bond measure on a ghost graph.
///
/// Each sweep draws bonds given the spins (internal, external and boundary
/// bonds) and then recolors every cluster: +1 if joined to the ghost or a plus
/// exterior, -1 if joined to a minus exterior, a fair coin otherwise. All
/// randomness for sweep s is a function of (seed, chain id, s) only.
class SwendsenWang {
public:
    SwendsenWang(std::shared_ptr<const GhostGraph> graph, std::uint64_t seed, std::uint64_t chain_id,
                 InitialState init = InitialState::AllPlus);

    /// Performs one sweep; bonds() then holds the bonds drawn from the previous spins.
    void sweep();

    const GhostGraph& graph() const noexcept { return *graph_; }
    const SpinConfig& spins() const noexcept { return spins_; }
    const BondConfig& bonds() const noexcept { return bonds_; }
    /// Spins before the latest sweep; (spins_before, bonds) is a joint sample.
    const SpinConfig& spins_before() const noexcept { return previous_; }
    std::uint64_t sweeps_done() const noexcept { return sweeps_; }
    const CounterRng& rng() const noexcept { return rng_; }

    /// Restores a checkpointed state.
    void restore(SpinConfig spins, std::uint64_t sweeps_done);

private:
    std::shared_ptr<const GhostGraph> graph_;
    CounterRng rng_;
    std::uint64_t sweeps_ = 0;
    SpinConfig spins_, previous_;
    BondConfig bonds_;
    MinRootUnionFind uf_;
    std::uint64_t thr_internal_ = 0;
    std::vector<std::uint64_t> thr_external_;
};

/// One sweep as a free function: updates sigma in place and returns the bonds used.
BondConfig sw_sweep(SpinConfig& sigma, const GhostGraph& g, const CounterRng& rng, std::uint64_t sweep_index);

/// Per-cluster uniforms U_C indexed by cluster key; other entries are NaN.
std::vector<double> cluster_uniforms(const ClusterDecomposition& d, const CounterRng& rng, std::uint64_t sweep_index);

/// Cluster C gets +1 iff U_C <= (1 + tanh(h a^{15/8} |C|)) / 2; clamped clusters keep their spin.
SpinConfig assign_cluster_spins(const ClusterDecomposition& d, double h, std::span<const double> uniforms);

struct ChainParams {
    std::shared_ptr<const GhostGraph> graph;
    std::uint64_t seed = 0;
    std::uint64_t chain_id = 0;
    std::uint64_t sweeps = 0;
    /// Discarded sweeps; nullopt selects max(1000, 20 tau) from a pilot.
    std::optional<std::uint64_t> thermalization;
    std::uint64_t stride = 1;
    std::vector<double> h_grid;
    InitialState init = InitialState::AllPlus;

    void validate() const;
};

/// Integrated autocorrelation time of the magnetization from a pilot run of
/// the same chain, and the resulting default thermalization length.
std::uint64_t auto_thermalization(SwendsenWang& chain, std::uint64_t pilot_sweeps = 1000);

/// Runs the chain and calls `measure` after every sweep s > thermalization
/// with (s - thermalization) divisible by stride. Returns the thermalization used.
std::uint64_t run_chain(const ChainParams& params, const std::function<void(const SwendsenWang&)>& measure);

struct CoupledSample {
    std::uint64_t sweep = 0;
    std::vector<double> magnetization;  // per h in the grid
    std::uint64_t violations = 0;       // clusters whose spin decreased along the grid
};

/// For each measured bond configuration, assigns cluster spins for every h of
/// the grid from the same uniforms.
std::uint64_t coupled_h_run(const ChainParams& params, const std::function<void(const CoupledSample&)>& emit);

} // namespace fkg
