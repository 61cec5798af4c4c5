#include "fkg/fkg.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "fkg/app.hpp"
#include "fkg/error.hpp"
#include "fkg/verify.hpp"

struct fkg_config {
    fkg::Config cfg;
};

namespace {

thread_local std::string last_error;

fkg_status status_of(fkg::Errc code) {
    switch (code) {
    case fkg::Errc::io: return FKG_IO_ERROR;
    case fkg::Errc::verification: return FKG_VERIFICATION_FAILED;
    default: return FKG_CONFIG_ERROR;
    }
}

template <class F>
fkg_status guarded(F&& body) {
    last_error.clear();
    try {
        return body();
    } catch (const fkg::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return FKG_IO_ERROR;
    } catch (const std::exception& e) {
        last_error = e.what();
        return FKG_CONFIG_ERROR;
    }
}

char* copy_out(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void need(const void* p, const char* what) {
    if (!p) fkg::fail(fkg::Errc::config, std::string("null argument: ") + what);
}

fkg::SimulateOptions options(const fkg_run_options* o) {
    need(o, "options");
    need(o->out_dir, "out_dir");
    fkg::SimulateOptions s;
    s.out = o->out_dir;
    s.resume = o->resume != 0;
    if (o->stop_after > 0) s.stop_after = o->stop_after;
    s.threads = o->threads;
    return s;
}

} // namespace

extern "C" {

const char* fkg_version(void) { return FKG_VERSION; }

const char* fkg_last_error(void) { return last_error.c_str(); }

void fkg_free(void* p) { std::free(p); }

fkg_status fkg_config_new(fkg_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new fkg_config{};
        return FKG_OK;
    });
}

fkg_status fkg_config_parse(const char* text, fkg_config** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new fkg_config{fkg::Config::parse(text)};
        return FKG_OK;
    });
}

fkg_status fkg_config_load(const char* path, fkg_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new fkg_config{fkg::Config::load(path)};
        return FKG_OK;
    });
}

fkg_status fkg_config_set(fkg_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        cfg->cfg.set(key, value);
        return FKG_OK;
    });
}

fkg_status fkg_config_get(const fkg_config* cfg, const char* key, char** value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        const auto v = cfg->cfg.get(key);
        *value = v ? copy_out(*v) : nullptr;
        return FKG_OK;
    });
}

fkg_status fkg_config_hash(const fkg_config* cfg, uint64_t* hash) {
    return guarded([&] {
        need(cfg, "cfg");
        need(hash, "hash");
        *hash = cfg->cfg.hash();
        return FKG_OK;
    });
}

void fkg_config_free(fkg_config* cfg) { delete cfg; }

fkg_status fkg_verify(const char* corpus_path, uint64_t seed, char** report_json) {
    return guarded([&] {
        const auto corpus = corpus_path ? fkg::load_corpus(corpus_path)
                                        : fkg::parse_corpus(fkg::builtin_corpus(), "builtin corpus");
        const auto report = fkg::run_corpus(corpus, seed);
        if (report_json) *report_json = copy_out(report.to_json());
        return report.passed() ? FKG_OK : FKG_VERIFICATION_FAILED;
    });
}

fkg_status fkg_simulate(const fkg_config* cfg, const fkg_run_options* opts, int* complete) {
    return guarded([&] {
        need(cfg, "cfg");
        const bool done = fkg::simulate(cfg->cfg, options(opts));
        if (complete) *complete = done ? 1 : 0;
        return FKG_OK;
    });
}

fkg_status fkg_sweep(const fkg_config* cfg, const fkg_run_options* opts, int* complete) {
    return guarded([&] {
        need(cfg, "cfg");
        const bool done = fkg::sweep(cfg->cfg, options(opts));
        if (complete) *complete = done ? 1 : 0;
        return FKG_OK;
    });
}

fkg_status fkg_fit(const char* index_path, const char* target, char** result_json, char** summary) {
    return guarded([&] {
        need(index_path, "index_path");
        need(target, "target");
        const auto r = fkg::fit_index(index_path, target);
        if (result_json) *result_json = copy_out(r.json);
        if (summary) *summary = copy_out(r.summary);
        return r.passed ? FKG_OK : FKG_VERIFICATION_FAILED;
    });
}

fkg_status fkg_report(const char* index_path, const char* out_dir, char** warnings) {
    return guarded([&] {
        need(index_path, "index_path");
        const auto w = fkg::write_report(index_path, out_dir ? out_dir : "");
        std::string text;
        for (const auto& s : w) text += s + "\n";
        if (warnings) *warnings = copy_out(text);
        return FKG_OK;
    });
}

} // extern "C"
