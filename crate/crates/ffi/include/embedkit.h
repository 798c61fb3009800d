/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef EMBEDKIT_H
#define EMBEDKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum {
  EK_STATUS_OK = 0,
  EK_STATUS_NULL_ARGUMENT = 1,
  EK_STATUS_INVALID_UTF8 = 2,
  EK_STATUS_IO = 3,
  EK_STATUS_PARSE = 4,
  EK_STATUS_CONFIG = 5,
  EK_STATUS_NOT_FOUND = 6,
  EK_STATUS_DOMAIN = 7,
  EK_STATUS_BUFFER_TOO_SMALL = 8,
  EK_STATUS_PANIC = 9,
} EkStatus;

/*
 Opaque vector store handle.
 */
typedef struct EkStore EkStore;

/*
 Aggregate analogy results. Accuracies are percentages.
 */
typedef struct {
  size_t semantic_correct;
  size_t semantic_answered;
  size_t semantic_total;
  size_t syntactic_correct;
  size_t syntactic_answered;
  size_t syntactic_total;
  double semantic_acc;
  double syntactic_acc;
  double all_acc;
  double all_acc_with_oov;
} EkAnalogySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *ek_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ek_version(void);

/*
 Load a word2vec text file.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
EkStatus ek_store_load(const char *path, EkStore **out);

/*
 Release a store. NULL is ignored.

 # Safety
 `store` must come from this library and not be used afterwards.
 */
void ek_store_free(EkStore *store);

/*
 Write a store in word2vec text format.

 # Safety
 Pointers must be valid; `path` NUL-terminated.
 */
EkStatus ek_store_save(const EkStore *store, const char *path);

/*
 Number of words; 0 for NULL.

 # Safety
 `store` must be NULL or a valid handle.
 */
size_t ek_store_len(const EkStore *store);

/*
 Vector dimension; 0 for NULL.

 # Safety
 `store` must be NULL or a valid handle.
 */
size_t ek_store_dim(const EkStore *store);

/*
 Index of `word` (exact match, then case-folded). Returns
 `EK_STATUS_NOT_FOUND` when absent.

 # Safety
 Pointers must be valid; `word` NUL-terminated.
 */
EkStatus ek_store_lookup(const EkStore *store, const char *word, size_t *out_index);

/*
 Copy word `index` into `buf` as a NUL-terminated string. `out_len`
 receives the byte length without the terminator, also when the buffer
 is too small.

 # Safety
 `buf` must point to `buf_len` writable bytes (or be NULL with
 `buf_len == 0`).
 */
EkStatus ek_store_word(const EkStore *store,
                       size_t index,
                       char *buf,
                       size_t buf_len,
                       size_t *out_len);

/*
 Copy the vector of word `index` into `out` (`len` must equal the
 dimension).

 # Safety
 `out` must point to `len` writable floats.
 */
EkStatus ek_store_vector(const EkStore *store, size_t index, float *out, size_t len);

/*
 Cosine similarity of two vectors of length `dim`.

 # Safety
 `u` and `v` must point to `dim` floats.
 */
EkStatus ek_cosine(const float *u, const float *v, size_t dim, double *out);

/*
 Top-`k` neighbors of `query` among the first `search_limit` words,
 skipping the `n_exclude` indices in `exclude`. Results are written to
 `out_indices`/`out_sims` (capacity `k`), count to `out_count`.

 # Safety
 Buffers must be valid for the given lengths; `exclude` may be NULL when
 `n_exclude` is 0.
 */
EkStatus ek_store_nearest(const EkStore *store,
                          const float *query,
                          size_t dim,
                          size_t k,
                          size_t search_limit,
                          const size_t *exclude,
                          size_t n_exclude,
                          size_t *out_indices,
                          double *out_sims,
                          size_t *out_count);

/*
 Solve "a is to b as c is to ?" with 3CosAdd. On success `out_oov` is 1
 when a query word is unknown or beyond `search_limit` (then `out_index`
 is untouched), else 0.

 # Safety
 Strings must be NUL-terminated; out pointers valid.
 */
EkStatus ek_solve_analogy(const EkStore *store,
                          const char *a,
                          const char *b,
                          const char *c,
                          size_t search_limit,
                          size_t *out_index,
                          int *out_oov);

/*
 Evaluate an analogy corpus file. `groups_path` may be NULL, in which case
 every category counts as syntactic.

 # Safety
 Strings must be NUL-terminated (or NULL where allowed); `out` valid.
 */
EkStatus ek_evaluate_analogies(const EkStore *store,
                               const char *corpus_path,
                               const char *groups_path,
                               size_t search_limit,
                               size_t workers,
                               EkAnalogySummary *out);

/*
 Spearman correlation (x100) between a similarity file's human scores and
 the store's cosines.

 # Safety
 `pairs_path` must be NUL-terminated; `out_score` valid.
 */
EkStatus ek_evaluate_similarity(const EkStore *store,
                                const char *pairs_path,
                                double scale_min,
                                double scale_max,
                                double *out_score);

/*
 Train on a corpus file (one sentence per line; sentences shorter than
 five tokens are skipped) using a key=value configuration file, which may
 be NULL for defaults. The vectors are written to `output_path` when it is
 not NULL and returned through `out` when it is not NULL.

 # Safety
 Strings must be NUL-terminated (or NULL where allowed).
 */
EkStatus ek_train_file(const char *corpus_path,
                       const char *config_path,
                       const char *output_path,
                       EkStore **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBEDKIT_H */
