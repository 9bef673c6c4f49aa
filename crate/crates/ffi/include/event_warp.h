#ifndef EVENT_WARP_H
#define EVENT_WARP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum EwStatus {
  EW_OK = 0,
  EW_NULL_POINTER = 1,
  EW_INVALID_ARGUMENT = 2,
  EW_PARSE = 3,
  EW_VALIDATION = 4,
  EW_DOMAIN = 5,
  EW_CONTRACT = 6,
  EW_NON_FINITE = 7,
  EW_IO = 8,
  EW_PANIC = 9,
} EwStatus;

typedef enum EwKernel {
  EW_NEAREST = 0,
  EW_BILINEAR = 1,
} EwKernel;

/**
 * Objective configuration: raw or corrected, kernel and masking.
 */
typedef struct EwPipeline EwPipeline;

/**
 * A parsed, time-sorted event stream.
 */
typedef struct EwStream EwStream;

typedef struct EwEstimate {
  double vx;
  double vy;
  double objective;
  size_t iterations;
  size_t evaluations;
  bool converged;
} EwEstimate;

typedef struct EwRoc {
  double roc_percent;
  double rms;
  size_t runs;
  size_t successes;
} EwRoc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ew_last_error(void);

/**
 * Parses an in-memory stream. Binary input carries its own geometry;
 * `width` and `height` apply to text input.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum EwStatus ew_stream_from_bytes(const uint8_t *data,
                                   size_t len,
                                   uint16_t width,
                                   uint16_t height,
                                   struct EwStream **out);

/**
 * Reads and parses a file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum EwStatus ew_stream_from_file(const char *path,
                                  uint16_t width,
                                  uint16_t height,
                                  struct EwStream **out);

/**
 * Number of events, or 0 for a null handle.
 *
 * # Safety
 * `stream` must be null or a live handle.
 */
size_t ew_stream_len(const struct EwStream *stream);

/**
 * # Safety
 * `stream` must be a live handle; `width` and `height` must be writable.
 */
enum EwStatus ew_stream_geometry(const struct EwStream *stream, uint16_t *width, uint16_t *height);

/**
 * # Safety
 * `stream` must be null or a handle not yet freed.
 */
void ew_stream_free(struct EwStream *stream);

/**
 * `eta` is the minimum exposure kept in the statistics (0.02 is the
 * default); `clamp` caps correction factors, and values `<= 0` disable it.
 *
 * # Safety
 * `out` must be writable.
 */
enum EwStatus ew_pipeline_new(bool corrected,
                              enum EwKernel kernel,
                              double eta,
                              double clamp,
                              struct EwPipeline **out);

/**
 * # Safety
 * `pipeline` must be null or a handle not yet freed.
 */
void ew_pipeline_free(struct EwPipeline *pipeline);

/**
 * Contrast of `stream` at velocity `(vx, vy)` px/s.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EwStatus ew_contrast(const struct EwStream *stream,
                          const struct EwPipeline *pipeline,
                          double vx,
                          double vy,
                          double *out);

/**
 * Nelder-Mead from `(vx0, vy0)` with an initial simplex edge of
 * `initial_scale` px/s.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EwStatus ew_estimate(const struct EwStream *stream,
                          const struct EwPipeline *pipeline,
                          double vx0,
                          double vy0,
                          double initial_scale,
                          struct EwEstimate *out);

/**
 * Objective over the lattice `[vx_min, vx_max] x [vy_min, vy_max]` with
 * spacing `resolution`, row-major with `vx` varying fastest. Call with
 * `values` null to query `nx` and `ny`; otherwise `capacity` must be at
 * least `nx * ny`.
 *
 * # Safety
 * Handles must be live; `nx` and `ny` writable; `values` null or writable
 * for `capacity` doubles.
 */
enum EwStatus ew_landscape(const struct EwStream *stream,
                           const struct EwPipeline *pipeline,
                           double vx_min,
                           double vx_max,
                           double vy_min,
                           double vy_max,
                           double resolution,
                           double *values,
                           size_t capacity,
                           size_t *nx,
                           size_t *ny);

/**
 * Multi-start rate of convergence over the square `[-half, half]^2`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EwStatus ew_roc(const struct EwStream *stream,
                     const struct EwPipeline *pipeline,
                     double gt_vx,
                     double gt_vy,
                     double half,
                     double step,
                     double tolerance,
                     struct EwRoc *out);

/**
 * Closed-form variance of the sheared 1D noise profile of height `c`.
 */
double ew_variance_1d(double s, double c);

/**
 * Closed-form variance of the sheared 2D noise profile of height `c`.
 */
double ew_variance_2d(double sx, double sy, double c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVENT_WARP_H */
