#ifndef MBSL_H
#define MBSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum MbslStatus {
  MBSL_STATUS_OK = 0,
  MBSL_STATUS_NULL_POINTER = 1,
  MBSL_STATUS_INVALID_UTF8 = 2,
  MBSL_STATUS_PARSE = 3,
  MBSL_STATUS_INVALID_ARGUMENT = 4,
  MBSL_STATUS_IO = 5,
  MBSL_STATUS_NOT_FOUND = 6,
  MBSL_STATUS_SNAPSHOT = 7,
  MBSL_STATUS_PANIC = 8,
} MbslStatus;

/**
 * A trained tile memory.
 */
typedef struct MbslMemory MbslMemory;

/**
 * Exact-match evaluation totals.
 */
typedef struct MbslEvalReport {
  uint64_t true_positives;
  uint64_t gold_count;
  uint64_t predicted_count;
  double recall;
  double precision;
  double f_beta;
} MbslEvalReport;

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call on the same thread.
 */
const char *mbsl_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *mbsl_version(void);

/**
 * Builds a memory from bracketed corpus text with `context` tags of
 * context on each side.
 *
 * # Safety
 * `corpus` must be a nul-terminated string; `out_memory` must be writable.
 */
enum MbslStatus mbsl_memory_train(const char *corpus,
                                  size_t context,
                                  struct MbslMemory **out_memory);

/**
 * Loads a snapshot written by [`mbsl_memory_save`] or `mbsl train`.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out_memory` must be writable.
 */
enum MbslStatus mbsl_memory_load(const char *path, struct MbslMemory **out_memory);

/**
 * # Safety
 * `memory` must come from this library; `path` must be nul-terminated.
 */
enum MbslStatus mbsl_memory_save(const struct MbslMemory *memory, const char *path);

/**
 * Releases a memory. Null is ignored.
 *
 * # Safety
 * `memory` must come from this library and not be used afterwards.
 */
void mbsl_memory_free(struct MbslMemory *memory);

/**
 * Context size the memory was built with, 0 for a null handle.
 *
 * # Safety
 * `memory` must be null or come from this library.
 */
size_t mbsl_memory_context(const struct MbslMemory *memory);

/**
 * Counts for a tile written as space-separated tags and brackets, e.g.
 * `"NN ]"`. Returns `NotFound` when the tile was never seen.
 *
 * # Safety
 * `memory` must come from this library; `tile` must be nul-terminated;
 * `pos` and `total` must be writable.
 */
enum MbslStatus mbsl_memory_lookup(const struct MbslMemory *memory,
                                   const char *tile,
                                   uint64_t *pos,
                                   uint64_t *total);

/**
 * Brackets one line of tags (or `word/TAG` tokens). `context` 0 uses the
 * memory's own context size. The result is written to `out_line` and must
 * be released with [`mbsl_string_free`].
 *
 * # Safety
 * `memory` must come from this library; `line` must be nul-terminated;
 * `out_line` must be writable.
 */
enum MbslStatus mbsl_bracket(const struct MbslMemory *memory,
                             const char *line,
                             double tile_threshold,
                             double candidate_threshold,
                             size_t context,
                             char **out_line);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void mbsl_string_free(char *s);

/**
 * Scores predicted bracketed text against gold bracketed text, sentence by
 * sentence.
 *
 * # Safety
 * Both texts must be nul-terminated; `report` must be writable.
 */
enum MbslStatus mbsl_evaluate(const char *gold,
                              const char *predicted,
                              double beta,
                              struct MbslEvalReport *report);

#endif  /* MBSL_H */
