/* qrkit: query reformulation and retrieval experiments, C interface.
 *
 * Every function returns a qrk_status. On failure a message is available
 * from qrk_last_error() on the calling thread until the next call. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with qrk_free_string().
 *
 * `config_path` arguments name an optional YAML file with the sections
 * tokenizer, generator, pipeline, instructions, seed and cache_dir; NULL
 * selects the defaults.
 */
#ifndef QRKIT_QRKIT_H
#define QRKIT_QRKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(QRKIT_BUILDING_LIBRARY)
#define QRK_API __attribute__((visibility("default")))
#else
#define QRK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qrk_status {
  QRK_OK = 0,
  QRK_ERR_VALIDATION = 1,
  QRK_ERR_PARSE = 2,
  QRK_ERR_IO = 3,
  QRK_ERR_GENERATION = 4,
  QRK_ERR_RUNTIME = 5,
  QRK_ERR_INVALID_ARGUMENT = 6
} qrk_status;

typedef struct qrk_index qrk_index;
typedef struct qrk_generator qrk_generator;

typedef void (*qrk_warning_fn)(const char* message, void* user_data);

QRK_API const char* qrk_version(void);
QRK_API const char* qrk_last_error(void);
QRK_API void qrk_free_string(char* s);
/* NULL restores the default (stderr). */
QRK_API void qrk_set_warning_handler(qrk_warning_fn fn, void* user_data);

/* ---- index ---- */
QRK_API qrk_status qrk_index_build(const char* corpus_jsonl_path, const char* config_path,
                                   unsigned threads, qrk_index** out);
QRK_API qrk_status qrk_index_load(const char* snapshot_path, qrk_index** out);
QRK_API qrk_status qrk_index_save(const qrk_index* index, const char* snapshot_path);
/* JSON object: doc_count, term_count, avg_doc_len, tokenizer settings. */
QRK_API qrk_status qrk_index_stats(const qrk_index* index, char** json_out);
QRK_API void qrk_index_free(qrk_index* index);

/* BM25 over the raw topic titles. Uses pipeline.k and pipeline.bm25 from the
 * config. Writes a TREC run. */
QRK_API qrk_status qrk_search_topics(const qrk_index* index, const char* topics_path,
                                     const char* config_path, const char* run_tag,
                                     char** run_out);

/* ---- generation ---- */
/* has_seed != 0 overrides the configured seed. cache_dir may be NULL. */
QRK_API qrk_status qrk_generator_create(const char* config_path, int has_seed, int64_t seed,
                                        const char* cache_dir, qrk_generator** out);
QRK_API qrk_status qrk_generator_complete(qrk_generator* generator, const char* prompt,
                                          char** text_out);
QRK_API void qrk_generator_free(qrk_generator* generator);

/* Bootstraps an n-instruction set from `base`. Writes the instruction-set
 * file text (one instruction per line, provenance comment first). */
QRK_API qrk_status qrk_paraphrase(qrk_generator* generator, const char* base, size_t n,
                                  const char* set_name, char** set_out);

/* Runs the configured pipeline method over every topic. qrels_path is needed
 * only for oracle feedback and may be NULL. `instructions` overrides the
 * configured set (bundled name or file) when non-NULL. provenance_out
 * receives JSON lines and may be NULL. */
QRK_API qrk_status qrk_reformulate(const qrk_index* index, qrk_generator* generator,
                                   const char* topics_path, const char* qrels_path,
                                   const char* config_path, const char* instructions,
                                   const char* run_tag, char** run_out, char** provenance_out);

/* ---- fusion and evaluation ---- */
/* method: "rrf", "score_sum" or "score_max". cutoff 0 keeps every document. */
QRK_API qrk_status qrk_fuse_files(const char* const* run_paths, size_t count, const char* method,
                                  double k_rrf, int impute_missing, size_t cutoff,
                                  const char* run_tag, char** run_out);

/* measures: comma separated, e.g. "ndcg@10,p@10,map,rr(rel=2)". Output is
 * tab separated "measure qid value" lines, per query when per_query != 0,
 * followed by the "all" means. */
QRK_API qrk_status qrk_evaluate_files(const char* run_path, const char* qrels_path,
                                      const char* measures, int per_query, char** report_out);

/* ---- experiments ---- */
typedef struct qrk_experiment_overrides {
  int has_seed;
  int64_t seed;
  const char* cache_dir;  /* NULL keeps the spec value */
  const char* output_dir; /* NULL keeps the spec value */
  unsigned parallelism;   /* 0 keeps the spec value */
} qrk_experiment_overrides;

/* Runs every variant and writes runs, provenance and reports under the
 * output directory. When run_sweeps != 0 the spec's sweeps follow. The
 * report table text is returned through report_out (may be NULL). */
QRK_API qrk_status qrk_experiment_run(const char* spec_path,
                                      const qrk_experiment_overrides* overrides, int run_sweeps,
                                      char** report_out);

/* With axis == NULL runs the sweeps listed in the spec; otherwise one sweep
 * over `variant` with the comma separated `values`. Returns the CSV text of
 * every executed sweep, separated by blank lines. */
QRK_API qrk_status qrk_experiment_sweep(const char* spec_path,
                                        const qrk_experiment_overrides* overrides,
                                        const char* axis, const char* variant,
                                        const char* values, char** csv_out);

/* Renders one reference-values CSV, or every CSV in a directory. */
QRK_API qrk_status qrk_render_reference_tables(const char* path, char** text_out);

#ifdef __cplusplus
}
#endif

#endif
