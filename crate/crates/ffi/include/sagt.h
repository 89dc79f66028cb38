#ifndef SAGT_H
#define SAGT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SagtStatus {
  SAGT_STATUS_OK = 0,
  SAGT_STATUS_VALIDATION = 1,
  SAGT_STATUS_BUDGET = 2,
  SAGT_STATUS_INVARIANT = 3,
  SAGT_STATUS_NULL_POINTER = 4,
  SAGT_STATUS_PANIC = 5,
} SagtStatus;

typedef struct SagtCodebook SagtCodebook;

typedef struct SagtGenerator SagtGenerator;

typedef struct SagtParams {
  size_t n;
  size_t k;
  size_t t;
  double delta;
  double rf;
  double eps_sec;
  uint64_t seed;
} SagtParams;

/**
 * Real-valued test counts before rounding up; `INFINITY` when unbounded.
 */
typedef struct SagtBounds {
  double sufficient_sagt;
  double corollary;
  double converse_sagt;
  double sufficient_sngt;
  double converse_sngt;
  double sufficient_ngt;
  double converse_ngt;
  double public_feedback;
} SagtBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t sagt_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum SagtStatus sagt_generator_new(size_t k, size_t n, struct SagtGenerator **out);

/**
 * # Safety
 * `g` must be null or come from [`sagt_generator_new`] and not be freed yet.
 */
void sagt_generator_free(struct SagtGenerator *g);

/**
 * # Safety
 * `g` must be a live generator and `out` valid for a write.
 */
enum SagtStatus sagt_generator_entry(const struct SagtGenerator *g,
                                     size_t row,
                                     size_t col,
                                     uint16_t *out);

/**
 * # Safety
 * `g` must be a live generator and `out` valid for a write.
 */
enum SagtStatus sagt_generator_is_mds(const struct SagtGenerator *g, bool *out);

/**
 * Expand `K` source keys of `key_bits` bits (`source`, `K·key_bits` bytes)
 * into `N` keys written to `out` (`N·key_bits` bytes).
 *
 * # Safety
 * Buffers must be valid for the stated lengths.
 */
enum SagtStatus sagt_expand_keys(const struct SagtGenerator *g,
                                 size_t key_bits,
                                 const uint8_t *source,
                                 size_t source_len,
                                 uint8_t *out,
                                 size_t out_len);

/**
 * # Safety
 * `params` must be readable and `out` valid for a pointer write.
 */
enum SagtStatus sagt_codebook_generate(const struct SagtParams *params, struct SagtCodebook **out);

/**
 * # Safety
 * `cb` must be null or come from [`sagt_codebook_generate`] and not be freed yet.
 */
void sagt_codebook_free(struct SagtCodebook *cb);

/**
 * Sub-bins `M` and codewords per sub-bin `F`.
 *
 * # Safety
 * `cb` must be live; `m` and `f` valid for writes.
 */
enum SagtStatus sagt_codebook_shape(const struct SagtCodebook *cb, size_t *m, size_t *f);

/**
 * Codeword `(item, sub_bin, key)` as `T` bytes.
 *
 * # Safety
 * `cb` must be live and `out` valid for `out_len` bytes.
 */
enum SagtStatus sagt_codebook_row(const struct SagtCodebook *cb,
                                  size_t item,
                                  size_t sub_bin,
                                  size_t key,
                                  uint8_t *out,
                                  size_t out_len);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum SagtStatus sagt_bounds(size_t n,
                            size_t k,
                            double delta,
                            double rf,
                            double eps,
                            struct SagtBounds *out);

/**
 * Exact `I(W; Z)` in bits for the given codebook.
 *
 * # Safety
 * `cb` and `g` must be live; `out` valid for a write.
 */
enum SagtStatus sagt_exact_leakage(const struct SagtCodebook *cb,
                                   const struct SagtGenerator *g,
                                   double *out);

/**
 * Decode outcomes `y` (`T` bytes) given every item's key index.
 * `decode_status` receives 0 (unique), 1 (ambiguous) or 2 (inconsistent);
 * `rank` the colex rank of the decoded set when unique.
 *
 * # Safety
 * `f_indices` must hold `N` entries, `y` `y_len` bytes; outputs writable.
 */
enum SagtStatus sagt_decode(const struct SagtCodebook *cb,
                            const size_t *f_indices,
                            const uint8_t *y,
                            size_t y_len,
                            uint64_t budget,
                            int32_t *decode_status,
                            uint64_t *rank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAGT_H */
