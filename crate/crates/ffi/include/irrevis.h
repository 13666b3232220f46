#ifndef IRREVIS_H
#define IRREVIS_H

#include <stddef.h>
#include <stdint.h>

typedef enum IrrevisStatus {
  IRREVIS_STATUS_OK = 0,
  IRREVIS_STATUS_NULL_POINTER = 1,
  IRREVIS_STATUS_INVALID_ARGUMENT = 2,
  IRREVIS_STATUS_INSUFFICIENT_DATA = 3,
  IRREVIS_STATUS_DOMAIN = 4,
  IRREVIS_STATUS_DIVERGENCE_INFINITE = 5,
  IRREVIS_STATUS_BUFFER_TOO_SMALL = 6,
  IRREVIS_STATUS_INTERNAL = 7,
} IrrevisStatus;

enum IrrevisGraphKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  IRREVIS_GRAPH_KIND_VG = 0,
  IRREVIS_GRAPH_KIND_HVG = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum IrrevisGraphKind IrrevisGraphKind;
#else
typedef uint32_t IrrevisGraphKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum IrrevisDivergence
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  IRREVIS_DIVERGENCE_KLD = 0,
  IRREVIS_DIVERGENCE_L1 = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum IrrevisDivergence IrrevisDivergence;
#else
typedef uint32_t IrrevisDivergence;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum IrrevisBias
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  // Plain divergence; fails on a support violation.
  IRREVIS_BIAS_NONE = 0,
  // Zero frequencies become 1/n with n the window length.
  IRREVIS_BIAS_ONE_OVER_WINDOW = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum IrrevisBias IrrevisBias;
#else
typedef uint32_t IrrevisBias;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum IrrevisGenerator
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  IRREVIS_GENERATOR_WHITE_NOISE = 0,
  IRREVIS_GENERATOR_ADDITIVE_WALK = 1,
  IRREVIS_GENERATOR_MULTIPLICATIVE_WALK = 2,
  IRREVIS_GENERATOR_FBM = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum IrrevisGenerator IrrevisGenerator;
#else
typedef uint32_t IrrevisGenerator;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// A directed visibility graph.
typedef struct IrrevisGraph IrrevisGraph;

// Per-window irreversibility values.
typedef struct IrrevisProfile IrrevisProfile;

// A finite-valued series.
typedef struct IrrevisSeries IrrevisSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a
// success. Valid until the next `irrevis_*` call on the same thread.
const char *irrevis_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *irrevis_version(void);

// Copies `len` values into a new series.
enum IrrevisStatus irrevis_series_new(const double *values, size_t len, struct IrrevisSeries **out);

// Draws a synthetic series; `mu`, `sigma` and `hurst` are used by the
// kinds they apply to.
enum IrrevisStatus irrevis_series_generate(uint32_t kind,
                                           size_t length,
                                           double mu,
                                           double sigma,
                                           double hurst,
                                           uint64_t seed,
                                           struct IrrevisSeries **out);

size_t irrevis_series_len(const struct IrrevisSeries *series);

// Copies up to `cap` values into `out`; `written` receives the count.
enum IrrevisStatus irrevis_series_values(const struct IrrevisSeries *series,
                                         double *out,
                                         size_t cap,
                                         size_t *written);

void irrevis_series_free(struct IrrevisSeries *series);

// Builds the graph of kind `kind` on `values[start .. start + len]` of
// `series`.
enum IrrevisStatus irrevis_graph_build(const struct IrrevisSeries *series,
                                       size_t start,
                                       size_t len,
                                       uint32_t kind,
                                       struct IrrevisGraph **out);

size_t irrevis_graph_node_count(const struct IrrevisGraph *graph);

size_t irrevis_graph_edge_count(const struct IrrevisGraph *graph);

// Writes the edges (source < target, sorted) into `sources`/`targets`,
// each of capacity `cap`.
enum IrrevisStatus irrevis_graph_edges(const struct IrrevisGraph *graph,
                                       size_t *sources,
                                       size_t *targets,
                                       size_t cap,
                                       size_t *written);

// In- and out-degree of every node; both buffers need `node_count` slots.
enum IrrevisStatus irrevis_graph_degrees(const struct IrrevisGraph *graph,
                                         size_t *k_in,
                                         size_t *k_out,
                                         size_t cap);

void irrevis_graph_free(struct IrrevisGraph *graph);

// Irreversibility `D(P_in || P_out)` of a single window.
enum IrrevisStatus irrevis_window_irreversibility(const double *values,
                                                  size_t len,
                                                  uint32_t kind,
                                                  uint32_t divergence,
                                                  uint32_t bias,
                                                  double *out);

// One value per non-overlapping window of size `n`.
enum IrrevisStatus irrevis_profile_compute(const struct IrrevisSeries *series,
                                           size_t n,
                                           uint32_t kind,
                                           uint32_t divergence,
                                           uint32_t bias,
                                           struct IrrevisProfile **out);

size_t irrevis_profile_len(const struct IrrevisProfile *profile);

enum IrrevisStatus irrevis_profile_values(const struct IrrevisProfile *profile,
                                          double *out,
                                          size_t cap,
                                          size_t *written);

void irrevis_profile_free(struct IrrevisProfile *profile);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRREVIS_H */
