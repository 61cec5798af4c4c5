// Command-line front end; talks to the library only through fkg.h.
//
// Settings are resolved as: command-line flags, then the environment
// (FKG_SEED, FKG_CHAINS, FKG_OUT), then the config file.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fkg/fkg.h"

namespace {

struct Owned {
    char* p = nullptr;
    ~Owned() { fkg_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct ConfigHandle {
    fkg_config* p = nullptr;
    ~ConfigHandle() { fkg_config_free(p); }
};

int report_error(fkg_status s) {
    std::cerr << "fkg: " << fkg_last_error() << "\n";
    return s;
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> chains;
    std::string out;
    bool resume = false;
    std::uint64_t stop_after = 0;
    unsigned threads = 0;
    std::vector<std::string> overrides;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "INI configuration file")->required();
    cmd->add_option("--seed", f.seed, "base seed (overrides FKG_SEED and run.seed)");
    cmd->add_option("--chains", f.chains, "number of chains (overrides FKG_CHAINS and run.chains)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "output directory (overrides FKG_OUT)");
    cmd->add_flag("--resume", f.resume, "continue from the checkpoints in the output directory");
    cmd->add_option("--threads", f.threads, "worker threads (default: run.threads, then all cores)");
    cmd->add_option("--set", f.overrides, "extra setting section.key=value, applied last");
    cmd->add_option("--stop-after", f.stop_after, "stop each chain after this many sweeps (checkpoints are kept)")
        ->group("");
}

int run_command(const RunFlags& f, bool is_sweep) {
    ConfigHandle cfg;
    if (auto s = fkg_config_load(f.config.c_str(), &cfg.p); s != FKG_OK) return report_error(s);

    auto set = [&](const std::string& key, const std::string& value) {
        return fkg_config_set(cfg.p, key.c_str(), value.c_str());
    };
    if (auto v = env("FKG_SEED"))
        if (auto s = set("run.seed", *v); s != FKG_OK) return report_error(s);
    if (auto v = env("FKG_CHAINS"))
        if (auto s = set("run.chains", *v); s != FKG_OK) return report_error(s);
    if (f.seed)
        if (auto s = set("run.seed", std::to_string(*f.seed)); s != FKG_OK) return report_error(s);
    if (f.chains)
        if (auto s = set("run.chains", std::to_string(*f.chains)); s != FKG_OK) return report_error(s);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "fkg: --set expects section.key=value, got '" << kv << "'\n";
            return FKG_CONFIG_ERROR;
        }
        if (auto s = set(kv.substr(0, eq), kv.substr(eq + 1)); s != FKG_OK) return report_error(s);
    }

    std::string out = f.out;
    if (out.empty()) out = env("FKG_OUT").value_or("");
    if (out.empty()) {
        std::cerr << "fkg: no output directory (use --out or FKG_OUT)\n";
        return FKG_CONFIG_ERROR;
    }

    fkg_run_options opts{out.c_str(), f.resume ? 1 : 0, f.stop_after, f.threads};
    int complete = 0;
    const auto s = is_sweep ? fkg_sweep(cfg.p, &opts, &complete) : fkg_simulate(cfg.p, &opts, &complete);
    if (s != FKG_OK) return report_error(s);
    std::cout << (complete ? "complete: " : "stopped, resume with --resume: ") << out << "\n";
    return FKG_OK;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical Ising with a field in the FK/ghost representation"};
    app.set_version_flag("--version", std::string(fkg_version()));
    app.require_subcommand(1);

    std::optional<std::string> corpus;
    std::uint64_t verify_seed = 1;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "run the exact-identity corpus");
    verify->add_option("corpus", corpus, "corpus file (default: built-in)");
    verify->add_option("--seed", verify_seed, "seed for the sampler checks");
    verify->add_option("--out", verify_out, "also write the JSON report to this file");

    RunFlags sim_flags, sweep_flags;
    auto* simulate = app.add_subcommand("simulate", "run Swendsen-Wang chains and record measurements");
    add_run_flags(simulate, sim_flags);
    auto* sweep = app.add_subcommand("sweep", "run a grid of simulations from the [sweep] section");
    add_run_flags(sweep, sweep_flags);

    std::string fit_index, fit_target;
    auto* fit = app.add_subcommand("fit", "fit a scaling target over the runs of a sweep");
    fit->add_option("index", fit_index, "sweep directory or its index.json")->required();
    fit->add_option("target", fit_target, "magnetization | mass | one_arm | identity | mgf")->required();
    bool fit_json = false;
    fit->add_flag("--json", fit_json, "print the JSON result instead of the summary");

    std::string report_index, report_out;
    auto* report = app.add_subcommand("report", "write plot-ready tables from stored fits");
    report->add_option("index", report_index, "sweep directory or its index.json")->required();
    report->add_option("--out", report_out, "report directory (default: <sweep>/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return FKG_CONFIG_ERROR;
    }

    if (*verify) {
        Owned json;
        const auto s = fkg_verify(corpus ? corpus->c_str() : nullptr, verify_seed, &json.p);
        if (s != FKG_OK && s != FKG_VERIFICATION_FAILED) return report_error(s);
        std::cout << json.str();
        if (!verify_out.empty()) {
            std::FILE* f = std::fopen(verify_out.c_str(), "w");
            if (!f) {
                std::cerr << "fkg: cannot write '" << verify_out << "'\n";
                return FKG_IO_ERROR;
            }
            std::fputs(json.str().c_str(), f);
            std::fclose(f);
        }
        std::cerr << (s == FKG_OK ? "verify: all checks passed\n" : "verify: FAILED\n");
        return s;
    }
    if (*simulate) return run_command(sim_flags, false);
    if (*sweep) return run_command(sweep_flags, true);
    if (*fit) {
        Owned json, summary;
        const auto s = fkg_fit(fit_index.c_str(), fit_target.c_str(), &json.p, &summary.p);
        if (s != FKG_OK && s != FKG_VERIFICATION_FAILED) return report_error(s);
        std::cout << (fit_json ? json.str() : summary.str());
        return s;
    }
    if (*report) {
        Owned warnings;
        const auto s = fkg_report(report_index.c_str(), report_out.empty() ? nullptr : report_out.c_str(), &warnings.p);
        if (s != FKG_OK) return report_error(s);
        if (!warnings.str().empty()) std::cerr << "warning: " << warnings.str();
        return FKG_OK;
    }
    return FKG_CONFIG_ERROR;
}
