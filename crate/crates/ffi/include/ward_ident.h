#ifndef WARD_IDENT_H
#define WARD_IDENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum {
  WI_STATUS_OK = 0,
  /*
   A required pointer argument was NULL.
   */
  WI_STATUS_NULL_ARGUMENT = 1,
  /*
   A string argument was not valid UTF-8.
   */
  WI_STATUS_INVALID_UTF8 = 2,
  /*
   Input document or configuration rejected.
   */
  WI_STATUS_VALIDATION = 3,
  /*
   Numerical failure: singular matrix, non-convergence, divergence.
   */
  WI_STATUS_NUMERICAL = 4,
  /*
   File could not be read or written.
   */
  WI_STATUS_IO = 5,
  /*
   A required earlier step (e.g. the steady-state stage) is missing.
   */
  WI_STATUS_PRECONDITION = 6,
  /*
   An output buffer is shorter than the result.
   */
  WI_STATUS_BUFFER_TOO_SMALL = 7,
  /*
   Internal panic caught at the boundary.
   */
  WI_STATUS_PANIC = 8,
} WiStatus;

/*
 Network model handle.
 */
typedef struct WiNetwork WiNetwork;

/*
 Identification run handle: a loaded run configuration.
 */
typedef struct WiPipeline WiPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on the calling thread, or NULL when no call
 has failed yet. The pointer stays valid until the next failing call on
 the same thread.
 */
const char *wi_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *wi_version(void);

/*
 Parses a network document (JSON text).

 # Safety
 `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
WiStatus wi_network_from_json(const char *json, WiNetwork **out);

/*
 Reads and parses a network document from a file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
WiStatus wi_network_load(const char *path, WiNetwork **out);

/*
 Releases a network handle.

 # Safety
 `net` must be NULL or a handle from this library not yet freed.
 */
void wi_network_free(WiNetwork *net);

/*
 Number of buses of the network.

 # Safety
 `net` must be a live handle; `out` must be valid for writes.
 */
WiStatus wi_network_bus_count(const WiNetwork *net, size_t *out);

/*
 Solves the power flow and writes voltage magnitudes (pu) and angles
 (rad) in bus order into `v` and `theta`, each of length `len`.
 `iterations` may be NULL.

 # Safety
 `net` must be a live handle; `v` and `theta` must be valid for `len`
 writes; `iterations` must be NULL or valid for one write.
 */
WiStatus wi_power_flow(const WiNetwork *net,
                       double *v,
                       double *theta,
                       size_t len,
                       size_t *iterations);

/*
 Three-phase short-circuit power (MVA) and current (kA) at `bus` with
 voltage factor `c`. Either output pointer may be NULL.

 # Safety
 `net` must be a live handle; `bus` a NUL-terminated string; outputs
 NULL or valid for one write.
 */
WiStatus wi_short_circuit(const WiNetwork *net,
                          const char *bus,
                          double c,
                          double *skss_mva,
                          double *ikss_ka);

/*
 Loads a run configuration file (relative paths resolve against its
 directory).

 # Safety
 `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
WiStatus wi_pipeline_load(const char *path, WiPipeline **out);

/*
 Releases a pipeline handle.

 # Safety
 `p` must be NULL or a handle from this library not yet freed.
 */
void wi_pipeline_free(WiPipeline *p);

/*
 Redirects the run directory of a loaded configuration.

 # Safety
 `p` must be a live handle; `run_dir` a NUL-terminated string.
 */
WiStatus wi_pipeline_set_run_dir(WiPipeline *p, const char *run_dir);

/*
 Generates the references and runs the steady-state stage; writes the
 final steady-state objective to `objective` (may be NULL).

 # Safety
 `p` must be a live handle; `objective` NULL or valid for one write.
 */
WiStatus wi_pipeline_identify_steady(const WiPipeline *p, double *objective);

/*
 Runs the dynamic stage on the persisted steady-state result; writes the
 final dynamic objective to `objective` (may be NULL).

 # Safety
 `p` must be a live handle; `objective` NULL or valid for one write.
 */
WiStatus wi_pipeline_identify_dynamic(const WiPipeline *p, double *objective);

/*
 Writes the comparison report into the run directory.

 # Safety
 `p` must be a live handle.
 */
WiStatus wi_pipeline_report(const WiPipeline *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WARD_IDENT_H */
