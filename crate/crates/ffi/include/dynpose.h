#ifndef DYNPOSE_H
#define DYNPOSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_NULL_POINTER = 1,
  DP_STATUS_INVALID_ARGUMENT = 2,
  DP_STATUS_DIMENSION_MISMATCH = 3,
  DP_STATUS_HASH_MISMATCH = 4,
  DP_STATUS_DEGENERATE_DICTIONARY = 5,
  DP_STATUS_NON_FINITE = 6,
  DP_STATUS_PARSE = 7,
  DP_STATUS_IO = 8,
  DP_STATUS_BUFFER_TOO_SMALL = 9,
  DP_STATUS_INTERNAL = 10,
} DpStatus;

/**
 * Opaque pole dictionary.
 */
typedef struct DpDictionary DpDictionary;

/**
 * Opaque encoder bound to one dictionary.
 */
typedef struct DpEncoder DpEncoder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated). `required` receives the size needed.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes; `required` must be valid.
 */
enum DpStatus dp_last_error(char *buf, size_t cap, size_t *required);

/**
 * Static NUL-terminated library version.
 */
const char *dp_version(void);

/**
 * Default grid dictionary: unit pole, 4 real poles, 80 conjugate pairs.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DpStatus dp_dictionary_default(struct DpDictionary **out);

/**
 * Grid dictionary with explicit counts and magnitude range.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DpStatus dp_dictionary_generate(size_t pair_count,
                                     size_t real_pole_count,
                                     double magnitude_min,
                                     double magnitude_max,
                                     bool normalize_columns,
                                     struct DpDictionary **out);

/**
 * Parses a dictionary text record.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum DpStatus dp_dictionary_parse(const char *text, struct DpDictionary **out);

/**
 * Serializes `dict` as its text record.
 *
 * # Safety
 * `dict` must come from this library; `buf` must point to `cap` writable
 * bytes; `required` must be valid.
 */
enum DpStatus dp_dictionary_text(const struct DpDictionary *dict,
                                 char *buf,
                                 size_t cap,
                                 size_t *required);

/**
 * Hex content hash (first 128 bits of SHA-256: 32 characters plus NUL).
 *
 * # Safety
 * As [`dp_dictionary_text`].
 */
enum DpStatus dp_dictionary_hash(const struct DpDictionary *dict,
                                 char *buf,
                                 size_t cap,
                                 size_t *required);

/**
 * Pole count (length of a binary code) and atom count (coefficient rows).
 *
 * # Safety
 * `dict` must come from this library; the out pointers must be valid.
 */
enum DpStatus dp_dictionary_sizes(const struct DpDictionary *dict, size_t *poles, size_t *atoms);

/**
 * # Safety
 * `dict` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void dp_dictionary_free(struct DpDictionary *dict);

/**
 * Encoder with reweighted sparse coding and a relative-threshold gate
 * (`floor` 1e-4). The dictionary is copied; `dict` may be freed afterwards.
 *
 * # Safety
 * `dict` must come from this library; `out` must be valid for writes.
 */
enum DpStatus dp_encoder_new(const struct DpDictionary *dict,
                             double lambda,
                             size_t reweight_rounds,
                             size_t max_iterations,
                             double tau_rel,
                             struct DpEncoder **out);

/**
 * # Safety
 * `enc` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void dp_encoder_free(struct DpEncoder *enc);

/**
 * Codes a row-major `frames × dims` trajectory jointly and writes one
 * 0/1 byte per dictionary pole, pooling energy over the columns.
 *
 * # Safety
 * `data` must hold `frames·dims` doubles; `bits` must hold `bits_len` bytes.
 */
enum DpStatus dp_encode_bits(const struct DpEncoder *enc,
                             const double *data,
                             size_t frames,
                             size_t dims,
                             uint8_t *bits,
                             size_t bits_len);

/**
 * Writes the row-major `atoms × dims` normalized-basis coefficients and the
 * final objective value.
 *
 * # Safety
 * `data` must hold `frames·dims` doubles; `coefficients` must hold
 * `coefficients_len` doubles; `objective` may be null.
 */
enum DpStatus dp_encode_coefficients(const struct DpEncoder *enc,
                                     const double *data,
                                     size_t frames,
                                     size_t dims,
                                     double *coefficients,
                                     size_t coefficients_len,
                                     double *objective);

/**
 * Thresholds per-pole energies: bit `i` is 1 iff
 * `energy[i] ≥ max(tau_rel · max(energy), floor)`.
 *
 * # Safety
 * `energy` and `bits` must each hold `len` elements.
 */
enum DpStatus dp_threshold(const double *energy,
                           size_t len,
                           double tau_rel,
                           double floor,
                           uint8_t *bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNPOSE_H */
