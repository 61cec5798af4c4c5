#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fkg {

/// One line of a verification corpus: an identity name plus key=value parameters.
///
///     # comment
///     es_identity graph=grid:2x3 h=0,0.5,1
///     ghost_law   H=1 q=3 expected=0.6804790 tol=1e-7
///
/// Comma-separated values of h and q expand into one check per combination.
struct CorpusEntry {
    std::size_t line = 0;
    std::string identity;
    std::map<std::string, std::string> params;
};

struct Corpus {
    std::string source;
    std::vector<CorpusEntry> entries;
};

/// Throws Errc::config naming the line of the first malformed entry.
Corpus parse_corpus(std::string_view text, std::string source = "<corpus>");
Corpus load_corpus(const std::string& path);
/// The corpus shipped with the library (same content as data/corpus.txt).
std::string_view builtin_corpus();

struct CheckResult {
    std::size_t line = 0;
    std::string identity;
    std::string params;  // the expanded parameters, for the report
    double value = 0.0;  // the deviation or the statistic compared with the tolerance
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
    std::size_t failures() const;
    std::string to_json() const;
};

class GhostGraph;

/// Total variation between the Swendsen-Wang empirical spin law on the lattice
/// vertices and exact enumeration, after `burn_in` discarded sweeps.
double sampler_tv(const GhostGraph& g, std::uint64_t sweeps, std::uint64_t seed, std::uint64_t burn_in = 100);

/// Runs every entry. Parameter errors inside an entry raise Errc::config with its line.
VerifyReport run_corpus(const Corpus& corpus, std::uint64_t seed = 1);

} // namespace fkg
