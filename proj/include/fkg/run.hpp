#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fkg/estimators.hpp"
#include "fkg/lattice.hpp"
#include "fkg/sampler.hpp"

namespace fkg {

/// Measurement rows of one chain under a fixed header.
struct RecordTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws Errc::config when the column is missing.
    std::size_t index_of(std::string_view name) const;
    bool has(std::string_view name) const { return find(name).has_value(); }
    std::vector<double> column(std::string_view name) const;
    /// Appends rows of a table with the same header.
    void append(const RecordTable& other);
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
std::string csv_line(const std::vector<double>& row);
std::string csv_header(const std::vector<std::string>& header);
RecordTable read_csv(std::istream& in);
void write_csv(std::ostream& out, const RecordTable& table);

/// Everything needed to reproduce a set of chains.
struct RunSpec {
    std::vector<Rect> region;
    Rational a{1};
    BoundaryCondition bc = BoundaryCondition::free();
    double h = 0.0;
    std::uint64_t seed = 1;
    std::uint32_t chains = 1;
    std::uint64_t sweeps = 0;
    std::optional<std::uint64_t> thermalization;
    std::uint64_t stride = 1;
    InitialState init = InitialState::AllPlus;
    ObservableSpec observables;

    void validate() const;
    std::shared_ptr<const GhostGraph> build_graph() const;
};

/// Chain state at a sweep boundary; restoring it continues the chain exactly.
struct ChainCheckpoint {
    std::uint64_t sweeps = 0;
    std::uint64_t thermalization = 0;
    std::vector<std::int8_t> spin;
    std::int8_t wired_spin = 1;
};

/// One chain with its measurer, runnable in pieces.
class ChainRunner {
public:
    using RowSink = std::function<void(const std::vector<double>&)>;

    ChainRunner(std::shared_ptr<const GhostGraph> graph, const RunSpec& spec, std::uint64_t chain_id);

    const std::vector<std::string>& header() const noexcept { return measurer_.header(); }
    /// Runs until `until` sweeps are done (capped at the run length), emitting measured rows.
    void advance(std::uint64_t until, const RowSink& sink);
    void run(const RowSink& sink) { advance(sweeps_, sink); }
    bool done() const noexcept { return chain_.sweeps_done() >= sweeps_; }
    std::uint64_t sweeps_done() const noexcept { return chain_.sweeps_done(); }
    /// Discarded sweeps; an automatic choice runs its pilot on first use.
    std::uint64_t thermalization() {
        resolve_thermalization();
        return therm_;
    }

    ChainCheckpoint checkpoint();
    void restore(const ChainCheckpoint& cp);

private:
    std::shared_ptr<const GhostGraph> graph_;
    Measurer measurer_;
    SwendsenWang chain_;
    std::uint64_t sweeps_, stride_, therm_;
    bool therm_known_;

    void resolve_thermalization();
};

/// Runs every chain of the spec on up to `threads` workers (0: hardware concurrency).
std::vector<RecordTable> run_chains(const RunSpec& spec, unsigned threads = 0);

/// Concatenation of the chains in chain order.
RecordTable merge_chains(const std::vector<RecordTable>& chains);

} // namespace fkg
