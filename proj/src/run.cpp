#include "fkg/run.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "fkg/error.hpp"

namespace fkg {

std::optional<std::size_t> RecordTable::find(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t RecordTable::index_of(std::string_view name) const {
    const auto k = find(name);
    require(k.has_value(), Errc::config, "column '" + std::string(name) + "' is not in the records");
    return *k;
}

std::vector<double> RecordTable::column(std::string_view name) const {
    const std::size_t k = index_of(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

void RecordTable::append(const RecordTable& other) {
    if (header.empty() && rows.empty()) header = other.header;
    require(header == other.header, Errc::mismatch, "cannot append records with a different header");
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_line(const std::vector<double>& row) {
    std::string s;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) s += ',';
        s += format_double(row[k]);
    }
    return s;
}

std::string csv_header(const std::vector<std::string>& header) {
    std::string s;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (k) s += ',';
        s += header[k];
    }
    return s;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

RecordTable read_csv(std::istream& in) {
    RecordTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (t.header.empty()) {
            for (auto f : fields) t.header.emplace_back(f);
            continue;
        }
        require(fields.size() == t.header.size(), Errc::io,
                "line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields");
        std::vector<double> row(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k) {
            const auto f = fields[k];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), row[k]);
            require(res.ec == std::errc() && res.ptr == f.data() + f.size(), Errc::io,
                    "line " + std::to_string(lineno) + ": bad number '" + std::string(f) + "'");
        }
        t.rows.push_back(std::move(row));
    }
    require(!t.header.empty(), Errc::io, "empty CSV input");
    return t;
}

void write_csv(std::ostream& out, const RecordTable& table) {
    out << csv_header(table.header) << '\n';
    for (const auto& r : table.rows) out << csv_line(r) << '\n';
}

void RunSpec::validate() const {
    require(!region.empty(), Errc::config, "domain has no rectangles");
    require(a > Rational(0), Errc::config, "lattice spacing must be positive");
    require(h >= 0 && std::isfinite(h), Errc::config, "field h must be finite and nonnegative");
    require(chains >= 1, Errc::config, "need at least one chain");
    require(sweeps >= 1, Errc::config, "sweeps must be positive");
    require(stride >= 1, Errc::config, "stride must be positive");
    require(!thermalization || *thermalization < sweeps, Errc::config, "thermalization must be shorter than the run");
}

std::shared_ptr<const GhostGraph> RunSpec::build_graph() const {
    validate();
    auto dom = std::make_shared<const LatticeDomain>(LatticeDomain::build(region, a));
    return std::make_shared<const GhostGraph>(extend_with_ghost(std::move(dom), h, bc));
}

ChainRunner::ChainRunner(std::shared_ptr<const GhostGraph> graph, const RunSpec& spec, std::uint64_t chain_id)
    : graph_(graph),
      measurer_(graph, spec.observables),
      chain_(graph, spec.seed, chain_id, spec.init),
      sweeps_(spec.sweeps),
      stride_(spec.stride),
      therm_(spec.thermalization.value_or(0)),
      therm_known_(spec.thermalization.has_value()) {
    spec.validate();
}

void ChainRunner::resolve_thermalization() {
    if (therm_known_) return;
    // the pilot sweeps are the first sweeps of this chain and count toward thermalization
    therm_ = auto_thermalization(chain_, std::min<std::uint64_t>(1000, sweeps_));
    therm_known_ = true;
    require(therm_ < sweeps_, Errc::config,
            "automatic thermalization (" + std::to_string(therm_) + " sweeps) exceeds the run length");
}

void ChainRunner::advance(std::uint64_t until, const RowSink& sink) {
    resolve_thermalization();
    until = std::min(until, sweeps_);
    std::vector<double> row;
    while (chain_.sweeps_done() < until) {
        chain_.sweep();
        const std::uint64_t s = chain_.sweeps_done();
        if (s > therm_ && (s - therm_) % stride_ == 0) {
            row.clear();
            measurer_.measure(s, chain_.spins(), chain_.bonds(), row);
            sink(row);
        }
    }
}

ChainCheckpoint ChainRunner::checkpoint() {
    resolve_thermalization();
    return {chain_.sweeps_done(), therm_, chain_.spins().spin, chain_.spins().wired_spin};
}

void ChainRunner::restore(const ChainCheckpoint& cp) {
    require(cp.spin.size() == graph_->domain().vertex_count(), Errc::mismatch, "checkpoint does not match the domain");
    require(cp.sweeps <= sweeps_, Errc::mismatch, "checkpoint is past the end of the run");
    therm_ = cp.thermalization;
    therm_known_ = true;
    chain_.restore(SpinConfig{cp.spin, cp.wired_spin}, cp.sweeps);
}

std::vector<RecordTable> run_chains(const RunSpec& spec, unsigned threads) {
    const auto graph = spec.build_graph();
    std::vector<RecordTable> out(spec.chains);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, spec.chains);

    std::atomic<std::uint32_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::uint32_t c = next++; c < spec.chains; c = next++) {
            try {
                ChainRunner runner(graph, spec, c);
                auto& t = out[c];
                t.header = runner.header();
                runner.run([&](const std::vector<double>& row) { t.rows.push_back(row); });
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

RecordTable merge_chains(const std::vector<RecordTable>& chains) {
    RecordTable all;
    for (const auto& c : chains) all.append(c);
    return all;
}

} // namespace fkg
