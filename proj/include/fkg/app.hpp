#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fkg/run.hpp"

namespace fkg {

/// Flat run configuration: INI-style sections holding `key = value` lines,
/// stored under dotted names ("run.seed", "observables.phi.Q").
///
///     [domain]   x0 y0 x1 y1 a, or L (square of side L*a centred at 0) with a
///     [model]    bc = free|wired|plus|minus, h or H (= a^{15/8} h), q
///     [run]      seed chains sweeps thermalization(=auto) stride init threads checkpoint_every
///     [observables] origin window max_r pairs annulus phi.<name>
///     [sweep]    comma lists over a, L, h or H
///     [fit]      r_min_factor t blocks
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<config>");
    static Config load(const std::string& path);

    /// Sets a dotted key; unknown keys raise Errc::config.
    void set(const std::string& key, const std::string& value);
    void erase(const std::string& key) { values_.erase(key); }
    std::optional<std::string> get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    /// Sorted `key = value` lines of everything that determines the samples.
    std::string canonical() const;
    /// FNV-1a of canonical().
    std::uint64_t hash() const;
    /// Full text in the INI layout, parseable by Config::parse.
    std::string to_ini() const;

private:
    std::map<std::string, std::string> values_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t x);

/// Validates the config and builds the run it describes. q != 2 is rejected.
RunSpec to_run_spec(const Config& cfg);
/// Lattice field h after resolving an H entry against the spacing.
double resolved_h(const Config& cfg);

struct SimulateOptions {
    std::string out;
    bool resume = false;
    /// Stop every chain once it has done this many sweeps, leaving checkpoints.
    std::optional<std::uint64_t> stop_after;
    /// Worker threads; 0 takes run.threads, then the hardware concurrency.
    unsigned threads = 0;
};

/// Writes chain_<k>.csv, checkpoint_<k>.json and manifest.json under opts.out.
/// Returns true when every chain reached its full length.
bool simulate(const Config& cfg, const SimulateOptions& opts);

struct GridPoint {
    std::map<std::string, std::string> params;  // axis name -> value text
    std::string label() const;                   // "a=1/8;h=0"
    std::uint64_t seed = 0;
    Config config;
};

/// Cartesian product of the [sweep] axes with derived seeds seed ^ fnv1a(label).
std::vector<GridPoint> expand_grid(const Config& cfg);

/// Runs every grid point into point_<k>/ and writes index.json.
bool sweep(const Config& cfg, const SimulateOptions& opts);

struct LoadedRun {
    std::string dir;
    Config config;
    RecordTable records;  // all chains, in chain order
    double a = 0, h = 0, H = 0;
    std::size_t vertices = 0;
    double side = 0;  // lattice side of the domain bounding box, in sites
};

/// Loads every run listed in an index; missing or incomplete runs raise Errc::io listing them.
std::vector<LoadedRun> load_index(const std::string& index_path, Config* base = nullptr);

struct FitOutput {
    std::string json;
    std::string summary;
    bool passed = true;  // false only when the identity check fails
};

/// Fits one target ("magnetization", "mass", "one_arm", "identity", "mgf") and
/// stores the JSON under <index dir>/fits/<target>.json.
FitOutput fit_index(const std::string& index_path, const std::string& target);

/// Six decimals with trailing zeros removed: 0.066667, 0.125.
std::string target_text(double x);

/// Writes report/<observable>.csv tables and summary.txt from stored fits.
/// Returns warnings (an index without fits yields an empty report and one warning).
std::vector<std::string> write_report(const std::string& index_path, const std::string& out_dir);

} // namespace fkg
