/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef MSGR_H
#define MSGR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsgrFormat {
  MSGR_FORMAT_JSON = 0,
  MSGR_FORMAT_CSV = 1,
} MsgrFormat;

typedef enum MsgrModel {
  MSGR_MODEL_EH = 0,
  MSGR_MODEL_EP = 1,
} MsgrModel;

typedef enum MsgrStatus {
  MSGR_STATUS_OK = 0,
  MSGR_STATUS_NULL_POINTER = 1,
  // Malformed request: bad metric text, unknown name, bad parameters.
  MSGR_STATUS_INVALID_ARGUMENT = 2,
  // Numeric domain failure: singular or out-of-domain point.
  MSGR_STATUS_DOMAIN = 3,
  // A bug inside the library (caught panic).
  MSGR_STATUS_INTERNAL = 4,
} MsgrStatus;

// A loaded metric.
typedef struct MsgrMetric MsgrMetric;

// The result of a check run.
typedef struct MsgrReport MsgrReport;

// One family of a report. `name` is owned by the report.
typedef struct MsgrFamilyRecord {
  const char *name;
  size_t points;
  double max_resid;
  double mean_resid;
  double tol;
  int pass;
} MsgrFamilyRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *msgr_version(void);

// Message of the last failed call on this thread, or NULL.
const char *msgr_last_error_message(void);

// Load a metric from a builtin name (`name` or `name:key=value,...`) or a
// metric file path.
//
// # Safety
// `spec` must be a valid NUL-terminated string and `out` writable.
enum MsgrStatus msgr_metric_new(const char *spec, struct MsgrMetric **out);

// Load a metric from the text of a metric file.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` writable.
enum MsgrStatus msgr_metric_from_text(const char *text, struct MsgrMetric **out);

// # Safety
// `m` must come from `msgr_metric_new`/`msgr_metric_from_text` and not be
// used afterwards. NULL is ignored.
void msgr_metric_free(struct MsgrMetric *m);

// Metric components at `x` (4 values) into `g` (16 values, row-major).
//
// # Safety
// Pointers must be valid for the stated lengths.
enum MsgrStatus msgr_metric_at(const struct MsgrMetric *m, const double *x, double *g);

// `L = ϱR` of the metric at `x`.
//
// # Safety
// `x` must point to 4 values, `out` must be writable.
enum MsgrStatus msgr_eh_lagrangian(const struct MsgrMetric *m, const double *x, double *out);

// The 10 ordered components `L^{αβ}` (α ≤ β) at `x`.
//
// # Safety
// `x` must point to 4 values, `out` to 10 writable values.
enum MsgrStatus msgr_eh_constraint(const struct MsgrMetric *m, const double *x, double *out);

// Max-norm of the Einstein–Hilbert field-equation contraction at `x`.
//
// # Safety
// `x` must point to 4 values, `out` must be writable.
enum MsgrStatus msgr_eh_field_equation_residual(const struct MsgrMetric *m,
                                                const double *x,
                                                double *out);

// `L_EP` of the metric and its connection at `x`.
//
// # Safety
// `x` must point to 4 values, `out` must be writable.
enum MsgrStatus msgr_ep_lagrangian(const struct MsgrMetric *m, const double *x, double *out);

// Max-norm of the Einstein–Palatini field-equation contraction at `x`.
//
// # Safety
// `x` must point to 4 values, `out` must be writable.
enum MsgrStatus msgr_ep_field_equation_residual(const struct MsgrMetric *m,
                                                const double *x,
                                                double *out);

// Run every check family of `model` on `points` seeded samples. `threads`
// 0 uses the default pool size.
//
// # Safety
// `m` must be a live metric handle and `out` writable.
enum MsgrStatus msgr_check(const struct MsgrMetric *m,
                           enum MsgrModel model,
                           size_t points,
                           uint64_t seed,
                           size_t threads,
                           struct MsgrReport **out);

// 1 if every family passed, 0 if not, -1 for NULL.
//
// # Safety
// `r` must be NULL or a live report handle.
int msgr_report_passed(const struct MsgrReport *r);

// # Safety
// `r` must be NULL or a live report handle.
size_t msgr_report_family_count(const struct MsgrReport *r);

// Family `index` of the report. The name stays valid while `r` lives.
//
// # Safety
// `r` must be a live report handle and `out` writable.
enum MsgrStatus msgr_report_family(const struct MsgrReport *r,
                                   size_t index,
                                   struct MsgrFamilyRecord *out);

// Serialize the report. The string is released with `msgr_string_free`.
//
// # Safety
// `r` must be a live report handle and `out` writable.
enum MsgrStatus msgr_report_render(const struct MsgrReport *r, enum MsgrFormat format, char **out);

// # Safety
// `s` must come from `msgr_report_render` and not be used afterwards.
// NULL is ignored.
void msgr_string_free(char *s);

// # Safety
// `r` must come from `msgr_check` and not be used afterwards. NULL is
// ignored.
void msgr_report_free(struct MsgrReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSGR_H */
