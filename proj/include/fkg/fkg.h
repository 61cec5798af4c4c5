/* C interface of the fkg library.
 *
 * Every function returns an fkg_status. On failure the message is available
 * from fkg_last_error() until the next call on the same thread. Strings
 * returned through char** outputs are owned by the caller and released with
 * fkg_free().
 */
#ifndef FKG_FKG_H
#define FKG_FKG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FKG_API __declspec(dllexport)
#else
#define FKG_API __attribute__((visibility("default")))
#endif

typedef enum fkg_status {
    FKG_OK = 0,
    FKG_VERIFICATION_FAILED = 1,
    FKG_CONFIG_ERROR = 2,
    FKG_IO_ERROR = 3
} fkg_status;

typedef struct fkg_config fkg_config;

FKG_API const char* fkg_version(void);
FKG_API const char* fkg_last_error(void);
FKG_API void fkg_free(void* p);

/* Configuration: INI text with [domain] [model] [run] [observables] [sweep] [fit]. */
FKG_API fkg_status fkg_config_new(fkg_config** out);
FKG_API fkg_status fkg_config_parse(const char* text, fkg_config** out);
FKG_API fkg_status fkg_config_load(const char* path, fkg_config** out);
/* key is "section.key", e.g. "run.seed". */
FKG_API fkg_status fkg_config_set(fkg_config* cfg, const char* key, const char* value);
/* *value is NULL when the key is unset. */
FKG_API fkg_status fkg_config_get(const fkg_config* cfg, const char* key, char** value);
FKG_API fkg_status fkg_config_hash(const fkg_config* cfg, uint64_t* hash);
FKG_API void fkg_config_free(fkg_config* cfg);

/* Runs an identity corpus (NULL path: the built-in one). The JSON report is
 * returned when report_json is not NULL; FKG_VERIFICATION_FAILED if any check fails. */
FKG_API fkg_status fkg_verify(const char* corpus_path, uint64_t seed, char** report_json);

typedef struct fkg_run_options {
    const char* out_dir;
    int resume;              /* continue from checkpoints in out_dir */
    uint64_t stop_after;     /* 0: run to the end; otherwise stop each chain after this many sweeps */
    unsigned threads;        /* 0: run.threads or the hardware concurrency */
} fkg_run_options;

/* *complete (optional) is set to 1 when every chain reached its full length. */
FKG_API fkg_status fkg_simulate(const fkg_config* cfg, const fkg_run_options* opts, int* complete);
FKG_API fkg_status fkg_sweep(const fkg_config* cfg, const fkg_run_options* opts, int* complete);

/* target: magnetization, mass, one_arm, identity, mgf. FKG_VERIFICATION_FAILED
 * when the identity target finds a violation. */
FKG_API fkg_status fkg_fit(const char* index_path, const char* target, char** result_json, char** summary);

/* out_dir NULL or empty: <index dir>/report. warnings gets newline-separated text, possibly empty. */
FKG_API fkg_status fkg_report(const char* index_path, const char* out_dir, char** warnings);

#ifdef __cplusplus
}
#endif

#endif
