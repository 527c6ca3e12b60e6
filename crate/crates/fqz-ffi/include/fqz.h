#ifndef FQZ_H
#define FQZ_H

/* Generated by cbindgen from the fqz-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every FFI call.
 */
typedef enum FqzStatus {
  FQZ_STATUS_OK = 0,
  /**
   * A pointer was null, a buffer too small, or an argument out of range.
   */
  FQZ_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The inputs were well-formed but violate a domain rule (non-fibbinary
   * codes, unsupported bitwidth, ...).
   */
  FQZ_STATUS_DOMAIN_ERROR = 2,
  /**
   * Serialized data failed to parse.
   */
  FQZ_STATUS_CORRUPT_STREAM = 3,
  FQZ_STATUS_IO_ERROR = 4,
  FQZ_STATUS_UTF8_ERROR = 5,
  /**
   * A defect inside the library; details in the last error message.
   */
  FQZ_STATUS_INTERNAL = 6,
} FqzStatus;

/**
 * Opaque tensor container.
 */
typedef struct FqzContainer FqzContainer;

/**
 * Opaque gate-level multiplier array.
 */
typedef struct FqzMultiplier FqzMultiplier;

/**
 * Opaque quantized tensor (codes plus affine parameters).
 */
typedef struct FqzQuantized FqzQuantized;

/**
 * Opaque compressed stream.
 */
typedef struct FqzStream FqzStream;

/**
 * Opaque fibbinary lookup table.
 */
typedef struct FqzTable FqzTable;

/**
 * Gate-level cost summary, mirrored as a plain C struct.
 */
typedef struct FqzCostReport {
  uint32_t n;
  uint32_t fa_total;
  uint32_t fa_replaced;
  double replaced_fraction;
  double area_saving;
  double power_saving;
  uint32_t replaced_pct;
  uint32_t area_saving_pct;
  uint32_t power_saving_pct;
} FqzCostReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the explanation of the most recent failure on this thread into
 * `buf` (NUL-terminated, truncating to `cap`).  Returns the full message
 * length in bytes, so callers can size a retry; a null `buf` only queries.
 */
size_t fqz_last_error_message(char *buf, size_t cap);

/**
 * Builds the fibbinary table for `bits`-wide codes (1..=16).
 */
enum FqzStatus fqz_table_new(uint32_t bits, struct FqzTable **out);

void fqz_table_free(struct FqzTable *table);

/**
 * Number of fibbinary values representable at the table's bitwidth.
 */
enum FqzStatus fqz_table_len(const struct FqzTable *table, size_t *out);

/**
 * Zeckendorf rank -> fibbinary value.
 */
enum FqzStatus fqz_table_index_to_value(const struct FqzTable *table, size_t rank, uint32_t *out);

/**
 * Fibbinary value -> Zeckendorf rank.
 */
enum FqzStatus fqz_table_value_to_index(const struct FqzTable *table, uint32_t code, size_t *out);

/**
 * Nearest fibbinary value to `code`, ties resolved downward.
 */
enum FqzStatus fqz_table_nearest(const struct FqzTable *table, uint32_t code, uint32_t *out);

/**
 * Whether `code` has no adjacent 1 bits within `bits`.
 */
enum FqzStatus fqz_is_fibbinary(uint32_t code, uint32_t bits, bool *out);

/**
 * Affine-quantizes `len` doubles to `bits`-wide codes (8 or 16); with
 * `fcq` set, codes are additionally rounded to fibbinary values (8-bit
 * only).
 */
enum FqzStatus fqz_quantize(const double *values,
                            size_t len,
                            uint32_t bits,
                            bool fcq,
                            struct FqzQuantized **out);

void fqz_quantized_free(struct FqzQuantized *q);

enum FqzStatus fqz_quantized_len(const struct FqzQuantized *q, size_t *out);

/**
 * Affine parameters of a quantized tensor.
 */
enum FqzStatus fqz_quantized_params(const struct FqzQuantized *q,
                                    double *scale,
                                    double *min,
                                    uint32_t *zero_point);

/**
 * Copies the integer codes into `buf` (`cap` elements).
 */
enum FqzStatus fqz_quantized_codes(const struct FqzQuantized *q, uint32_t *buf, size_t cap);

/**
 * Reconstructs doubles from the codes into `buf` (`cap` elements).
 */
enum FqzStatus fqz_dequantize(const struct FqzQuantized *q, double *buf, size_t cap);

/**
 * Compresses a fibbinary-quantized tensor into a two-stage stream.  The
 * codes must all be fibbinary at the table's bitwidth.
 */
enum FqzStatus fqz_compress(const struct FqzQuantized *q,
                            const struct FqzTable *table,
                            struct FqzStream **out);

void fqz_stream_free(struct FqzStream *stream);

enum FqzStatus fqz_stream_codeword_count(const struct FqzStream *stream, size_t *out);

/**
 * Octets needed by [`fqz_stream_to_bytes`].
 */
enum FqzStatus fqz_stream_serialized_size(const struct FqzStream *stream, size_t *out);

/**
 * Serializes the stream (self-framing header plus codewords).
 */
enum FqzStatus fqz_stream_to_bytes(const struct FqzStream *stream,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *written);

/**
 * Parses one stream from `bytes`; `consumed` reports how many octets the
 * frame occupied.
 */
enum FqzStatus fqz_stream_from_bytes(const uint8_t *bytes,
                                     size_t len,
                                     struct FqzStream **out,
                                     size_t *consumed);

/**
 * Expands the stream back to 6-bit ranks; `written` reports the count.
 */
enum FqzStatus fqz_stream_decode_ranks(const struct FqzStream *stream,
                                       uint8_t *buf,
                                       size_t cap,
                                       size_t *written);

/**
 * (UL*UB)/(CL*CB); fails on zero compressed size.
 */
enum FqzStatus fqz_compression_ratio(uint64_t ul,
                                     uint32_t ub,
                                     uint64_t cl,
                                     uint32_t cb,
                                     double *out);

/**
 * Builds an `bits`-wide carry-save multiplier; with `or_replaced` set the
 * oracle-discovered safe cells are swapped for OR gates.
 */
enum FqzStatus fqz_multiplier_new(uint32_t bits, bool or_replaced, struct FqzMultiplier **out);

void fqz_multiplier_free(struct FqzMultiplier *m);

/**
 * Gate-level product of `w * x`; exact whenever `w` is fibbinary (or no
 * cells were replaced).
 */
enum FqzStatus fqz_multiplier_multiply(const struct FqzMultiplier *m,
                                       uint64_t w,
                                       uint64_t x,
                                       uint64_t *out);

/**
 * Area/power savings when `fa_replaced` of the array's full adders become
 * OR gates.
 */
enum FqzStatus fqz_cost_report(uint32_t n, uint32_t fa_replaced, struct FqzCostReport *out);

/**
 * The quoted replaceable-cell count (n^2 - n)/2.
 */
uint32_t fqz_quoted_replacement_count(uint32_t n);

enum FqzStatus fqz_container_new(struct FqzContainer **out);

/**
 * Reads a container file.
 */
enum FqzStatus fqz_container_open(const char *path, struct FqzContainer **out);

/**
 * Writes the container to a file.
 */
enum FqzStatus fqz_container_save(const struct FqzContainer *container, const char *path);

void fqz_container_free(struct FqzContainer *container);

enum FqzStatus fqz_container_len(const struct FqzContainer *container, size_t *out);

/**
 * Copies the NUL-terminated name of tensor `index` into `buf`; `written`
 * reports the name length without the terminator.
 */
enum FqzStatus fqz_container_tensor_name(const struct FqzContainer *container,
                                         size_t index,
                                         char *buf,
                                         size_t cap,
                                         size_t *written);

/**
 * Appends a float tensor (shape `[len]`) to the container.
 */
enum FqzStatus fqz_container_push_floats(struct FqzContainer *container,
                                         const char *name,
                                         const double *values,
                                         size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FQZ_H */
