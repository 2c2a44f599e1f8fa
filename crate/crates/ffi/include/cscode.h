#ifndef CSCODE_H
#define CSCODE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_ARGUMENT = 2,
  CS_STATUS_CONFIG = 3,
  CS_STATUS_NUMERIC = 4,
  CS_STATUS_IO = 5,
  CS_STATUS_FORMAT = 6,
  CS_STATUS_BUFFER_TOO_SMALL = 7,
  CS_STATUS_PANIC = 8,
} CsStatus;

typedef enum CsModulation {
  CS_MODULATION_OOK = 0,
  CS_MODULATION_BPSK = 1,
} CsModulation;

// Fixed-length codebook, possibly spanning several frames.
typedef struct CsFlCodebook CsFlCodebook;

// Trained decoder network.
typedef struct CsNetwork CsNetwork;

// Variable-length codebook.
typedef struct CsVlCodebook CsVlCodebook;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *cs_last_error_message(void);

// Capacity in bits per symbol of `dcfree:<N>`, `rll:<d>,<k>` or `rll:<d>,inf`.
//
// # Safety
// `constraint` must be a NUL-terminated string and `out` writable.
enum CsStatus cs_capacity(const char *constraint, double *out);

// Loads a fixed-length codebook: `builtin:4b6b` or a file path.
// `frames` of 0 keeps the file's frame count. A non-negative
// `shuffle_seed` shuffles each frame's mapping; pass -1 for none.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum CsStatus cs_fl_codebook_load(const char *spec,
                                  size_t frames,
                                  int64_t shuffle_seed,
                                  struct CsFlCodebook **out);

// # Safety
// `cb` must come from [`cs_fl_codebook_load`] and not be used afterwards.
void cs_fl_codebook_free(struct CsFlCodebook *cb);

// Source bits per block.
//
// # Safety
// `cb` must be a live handle or null.
size_t cs_fl_codebook_source_len(const struct CsFlCodebook *cb);

// Channel bits per block.
//
// # Safety
// `cb` must be a live handle or null.
size_t cs_fl_codebook_code_len(const struct CsFlCodebook *cb);

// # Safety
// `cb` must be a live handle; `bits` must hold `len` bytes; `out` must
// hold `out_cap` bytes; `out_len` must be writable.
enum CsStatus cs_fl_encode(const struct CsFlCodebook *cb,
                           const uint8_t *bits,
                           size_t len,
                           uint8_t *out,
                           size_t out_cap,
                           size_t *out_len);

// Hard-decision table lookup with nearest-Hamming fallback.
//
// # Safety
// As for [`cs_fl_encode`].
enum CsStatus cs_fl_lut_decode(const struct CsFlCodebook *cb,
                               const uint8_t *bits,
                               size_t len,
                               uint8_t *out,
                               size_t out_cap,
                               size_t *out_len);

// Minimum Euclidean distance decoding of received channel values.
//
// # Safety
// As for [`cs_fl_encode`], with `received` holding `len` doubles.
enum CsStatus cs_fl_map_decode(const struct CsFlCodebook *cb,
                               const double *received,
                               size_t len,
                               enum CsModulation modulation,
                               uint8_t *out,
                               size_t out_cap,
                               size_t *out_len);

// Loads a variable-length codebook: `builtin:rll13`, `builtin:dcfree-vl`
// or a file path.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum CsStatus cs_vl_codebook_load(const char *spec, struct CsVlCodebook **out);

// # Safety
// `cb` must come from [`cs_vl_codebook_load`] and not be used afterwards.
void cs_vl_codebook_free(struct CsVlCodebook *cb);

// Longest codeword length.
//
// # Safety
// `cb` must be a live handle or null.
size_t cs_vl_codebook_max_len(const struct CsVlCodebook *cb);

// # Safety
// As for [`cs_fl_encode`].
enum CsStatus cs_vl_encode(const struct CsVlCodebook *cb,
                           size_t state,
                           const uint8_t *bits,
                           size_t len,
                           uint8_t *out,
                           size_t out_cap,
                           size_t *out_len);

// Greedy decoding of error-free input.
//
// # Safety
// As for [`cs_fl_encode`].
enum CsStatus cs_vl_decode_bitwise(const struct CsVlCodebook *cb,
                                   size_t state,
                                   const uint8_t *bits,
                                   size_t len,
                                   uint8_t *out,
                                   size_t out_cap,
                                   size_t *out_len);

// Decoding that resynchronises after detection errors. A `window` of 0
// uses the longest codeword length.
//
// # Safety
// As for [`cs_fl_encode`].
enum CsStatus cs_vl_decode_resync(const struct CsVlCodebook *cb,
                                  size_t state,
                                  size_t window,
                                  const uint8_t *bits,
                                  size_t len,
                                  uint8_t *out,
                                  size_t out_cap,
                                  size_t *out_len);

// Loads a network checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum CsStatus cs_network_load(const char *path, struct CsNetwork **out);

// # Safety
// `net` must come from [`cs_network_load`] and not be used afterwards.
void cs_network_free(struct CsNetwork *net);

// # Safety
// `net` must be a live handle or null.
size_t cs_network_input_width(const struct CsNetwork *net);

// # Safety
// `net` must be a live handle or null.
size_t cs_network_output_width(const struct CsNetwork *net);

// # Safety
// `net` must be a live handle or null.
size_t cs_network_param_count(const struct CsNetwork *net);

// Runs one forward pass.
//
// # Safety
// `net` must be a live handle; `input` must hold `len` doubles; `out`
// must hold `out_cap` doubles; `out_len` must be writable.
enum CsStatus cs_network_forward(const struct CsNetwork *net,
                                 const double *input,
                                 size_t len,
                                 double *out,
                                 size_t out_cap,
                                 size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSCODE_H */
