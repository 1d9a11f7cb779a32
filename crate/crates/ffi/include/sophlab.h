#ifndef SOPHLAB_H
#define SOPHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  /**
   * Null pointer, malformed bit string or program, or invalid budgets.
   */
  SL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The string has no entry in the table.
   */
  SL_STATUS_UNKNOWN_STRING = 2,
  SL_STATUS_IO = 3,
  /**
   * The snapshot is damaged or from another format version.
   */
  SL_STATUS_CORRUPT = 4,
  /**
   * The enumeration would exceed its resource cap.
   */
  SL_STATUS_RESOURCE_EXCEEDED = 5,
  /**
   * The output buffer is too small; the required size was reported.
   */
  SL_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * The evaluation aborted; the message names the reason.
   */
  SL_STATUS_ABORTED = 7,
  SL_STATUS_INTERNAL = 8,
} SlStatus;

/**
 * Opaque complexity table.
 */
typedef struct SlTable SlTable;

/**
 * Enumeration budgets.
 */
typedef struct SlBudgets {
  uint32_t max_pair_bits;
  uint32_t max_program_bits;
  uint32_t max_data_bits;
  uint64_t max_steps;
  uint32_t max_string_len;
} SlBudgets;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Message for the last failed call on this thread (empty after a success).
 * Valid until the next call on the same thread.
 */
const char *sl_last_error_message(void);

/**
 * Budgets with program and data caps equal to `pair_bits` and default limits.
 */
struct SlBudgets sl_budgets_default(uint32_t pair_bits);

/**
 * Builds the unconditional table. `workers` of 0 means one per CPU.
 *
 * # Safety
 * `budgets` must be null or point to an `SlBudgets`; `out` must be null or writable.
 */
enum SlStatus sl_table_build(const struct SlBudgets *budgets,
                             uint32_t workers,
                             struct SlTable **out_table);

/**
 * Loads a snapshot file.
 *
 * # Safety
 * `path` must be null or a NUL-terminated string; `out_table` must be null or writable.
 */
enum SlStatus sl_table_load(const char *path, struct SlTable **out_table);

/**
 * Writes a snapshot; `digest_out` (32 bytes, may be null) receives its digest.
 *
 * # Safety
 * `t` must come from this library; `path` must be NUL-terminated; `digest_out`
 * must be null or point to 32 writable bytes.
 */
enum SlStatus sl_table_save(const struct SlTable *t, const char *path, uint8_t *digest_out);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `t` must be null or a handle from this library not yet freed.
 */
void sl_table_free(struct SlTable *t);

/**
 * Number of entries; 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t sl_table_len(const struct SlTable *t);

/**
 * Bounded complexity of `x`.
 *
 * # Safety
 * Pointers must be null or valid; `x` NUL-terminated.
 */
enum SlStatus sl_table_k(const struct SlTable *t, const char *x, uint32_t *k_out);

/**
 * Exact Kraft sum of the table's halting pairs as `p/q` text.
 *
 * # Safety
 * `buf` must be null or hold `cap` bytes; `needed` null or writable.
 */
enum SlStatus sl_table_kraft_sum(const struct SlTable *t, char *buf, size_t cap, size_t *needed);

/**
 * Sophistication of `x` at slack `c`; `k_out` may be null.
 *
 * # Safety
 * Pointers must be null or valid; `x` NUL-terminated.
 */
enum SlStatus sl_sophistication(const struct SlTable *t,
                                const char *x,
                                uint32_t c,
                                uint32_t *soph_out,
                                uint32_t *k_out);

/**
 * `λ_x(α)` for `α = 0, 1, ...` into `lambda_out`, with -1 where no pair fits.
 * `len_out` receives the number of samples, which is written only if it fits in `cap`.
 *
 * # Safety
 * `lambda_out` must be null or hold `cap` values; other pointers null or valid.
 */
enum SlStatus sl_structure_lambda(const struct SlTable *t,
                                  const char *x,
                                  int64_t *lambda_out,
                                  size_t cap,
                                  size_t *len_out);

/**
 * Runs `program` (bits or mnemonics) on `data` with auxiliary tape `aux`.
 * The output is written like [`sl_table_kraft_sum`]; `steps_out` may be null.
 *
 * # Safety
 * String arguments must be NUL-terminated; buffers as in [`sl_table_kraft_sum`].
 */
enum SlStatus sl_eval(const char *program,
                      const char *data,
                      const char *aux,
                      const struct SlBudgets *budgets,
                      char *buf,
                      size_t cap,
                      size_t *needed,
                      uint64_t *steps_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOPHLAB_H */
