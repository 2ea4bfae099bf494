#ifndef RQPD_H
#define RQPD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RqpdStatus {
  RQPD_STATUS_OK = 0,
  RQPD_STATUS_NULL_POINTER = 1,
  RQPD_STATUS_INVALID_UTF8 = 2,
  RQPD_STATUS_PARSE = 3,
  RQPD_STATUS_DIMENSION = 4,
  RQPD_STATUS_INVALID = 5,
  RQPD_STATUS_NUMERICAL = 6,
  RQPD_STATUS_UNSUPPORTED = 7,
  RQPD_STATUS_IO = 8,
  RQPD_STATUS_PANIC = 9,
} RqpdStatus;

// Outcome of a sampled judgment check.
typedef enum RqpdVerdict {
  RQPD_VERDICT_PASSED = 0,
  RQPD_VERDICT_FALSIFIED = 1,
  RQPD_VERDICT_INCONCLUSIVE = 2,
} RqpdVerdict;

// A complex matrix.
typedef struct RqpdMatrix RqpdMatrix;

// A parsed program.
typedef struct RqpdProgram RqpdProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *rqpd_last_error(void);

// Parses program source text.
//
// # Safety
// `src` must be a NUL-terminated string and `out_program` writable.
enum RqpdStatus rqpd_program_parse(const char *src, struct RqpdProgram **out_program);

// # Safety
// `p` must come from [`rqpd_program_parse`] or be null.
void rqpd_program_free(struct RqpdProgram *p);

// Dimension of the input space; zero for a null handle.
//
// # Safety
// `p` must be a live program handle or null.
size_t rqpd_program_input_dim(const struct RqpdProgram *p);

// # Safety
// `p` must be a live program handle or null.
size_t rqpd_program_output_dim(const struct RqpdProgram *p);

// Builds a matrix from `2 * rows * cols` doubles, row-major, with real and
// imaginary parts interleaved.
//
// # Safety
// `data` must point to `2 * rows * cols` readable doubles.
enum RqpdStatus rqpd_matrix_new(size_t rows,
                                size_t cols,
                                const double *data,
                                struct RqpdMatrix **out_matrix);

// # Safety
// `m` must come from this library or be null.
void rqpd_matrix_free(struct RqpdMatrix *m);

// # Safety
// `m` must be a live matrix handle or null.
size_t rqpd_matrix_rows(const struct RqpdMatrix *m);

// # Safety
// `m` must be a live matrix handle or null.
size_t rqpd_matrix_cols(const struct RqpdMatrix *m);

// Copies the entries into `buf` in the layout of [`rqpd_matrix_new`].
// `len` is the number of doubles available.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum RqpdStatus rqpd_matrix_read(const struct RqpdMatrix *m, double *buf, size_t len);

// Output state of a program on an input state.
//
// # Safety
// Handles must be live and `out_state` writable.
enum RqpdStatus rqpd_run(const struct RqpdProgram *p,
                         const struct RqpdMatrix *rho,
                         struct RqpdMatrix **out_state);

// Samples `samples` inputs to test P₁ ∼ P₂ : A ⇒ B.
//
// # Safety
// Handles must be live and the output pointers writable.
enum RqpdStatus rqpd_check_judgment(const struct RqpdProgram *p1,
                                    const struct RqpdProgram *p2,
                                    const struct RqpdMatrix *pre,
                                    const struct RqpdMatrix *post,
                                    size_t samples,
                                    uint64_t seed,
                                    enum RqpdVerdict *out_verdict,
                                    double *out_worst_margin);

// Largest tr(Bσ) over couplings σ of (ρ₁, ρ₂), optionally over PPT
// couplings only.
//
// # Safety
// Handles must be live and `out_value` writable.
enum RqpdStatus rqpd_coupling_value(const struct RqpdMatrix *rho1,
                                    const struct RqpdMatrix *rho2,
                                    const struct RqpdMatrix *objective,
                                    bool ppt,
                                    double *out_value);

// Runs a casebook scenario with default options and the given seed, and
// hands back its JSON report. Free the string with [`rqpd_string_free`].
//
// # Safety
// `id` must be a NUL-terminated string and `out_json` writable.
enum RqpdStatus rqpd_casebook_run(const char *id, uint64_t seed, char **out_json);

// # Safety
// `s` must come from this library or be null.
void rqpd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RQPD_H */
