#ifndef NETKIN_H
#define NETKIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>

/*
 Result of every call.
 */
typedef enum NetkinStatus {
  NETKIN_STATUS_OK = 0,
  NETKIN_STATUS_NULL_POINTER = 1,
  NETKIN_STATUS_INVALID_ARGUMENT = 2,
  /*
   Malformed network or config document.
   */
  NETKIN_STATUS_PARSE_ERROR = 3,
  NETKIN_STATUS_INVALID_NETWORK = 4,
  NETKIN_STATUS_INVALID_PARAMETER = 5,
  NETKIN_STATUS_SINGULAR_SYSTEM = 6,
  /*
   The solution became non-finite or a stability limit was violated.
   */
  NETKIN_STATUS_UNSTABLE = 7,
  /*
   Output buffer shorter than the edge's cell count.
   */
  NETKIN_STATUS_BUFFER_TOO_SMALL = 8,
  NETKIN_STATUS_IO = 9,
  /*
   Internal error; the handle should be discarded.
   */
  NETKIN_STATUS_PANIC = 10,
} NetkinStatus;

/*
 Opaque simulation handle.
 */
typedef struct NetkinSimulation NetkinSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Create a simulation of a built-in scenario (`"interval"`, `"tripod"` or
 `"large"`) for one model (e.g. `"kinetic"`, `"cattaneo:density-continuity"`)
 at scaling `epsilon`. On success `*out` owns a new handle.

 # Safety
 `preset` and `model` must be NUL-terminated strings; `out` must be valid
 for writes.
 */
enum NetkinStatus netkin_simulation_from_preset(const char *preset,
                                                const char *model,
                                                double epsilon,
                                                struct NetkinSimulation **out);

/*
 Create a simulation from a JSON scenario config document. `model` picks
 the model; NULL selects the config's first model. A network given as a
 file path is read relative to the working directory.

 # Safety
 `config_json` must be a NUL-terminated string, `model` NULL or a
 NUL-terminated string, `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_from_config(const char *config_json,
                                                const char *model,
                                                struct NetkinSimulation **out);

/*
 Release a handle. NULL is ignored.

 # Safety
 `sim` must come from a constructor of this library and not be used again.
 */
void netkin_simulation_free(struct NetkinSimulation *sim);

/*
 Advance by one global time step.

 # Safety
 `sim` must be a live handle.
 */
enum NetkinStatus netkin_simulation_step(struct NetkinSimulation *sim);

/*
 Advance to time `t`, shortening the last step to land on it.

 # Safety
 `sim` must be a live handle.
 */
enum NetkinStatus netkin_simulation_advance_to(struct NetkinSimulation *sim, double t);

/*
 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_time(const struct NetkinSimulation *sim, double *out);

/*
 The global time step chosen from the stability limits.

 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_dt(const struct NetkinSimulation *sim, double *out);

/*
 Total cell mass on the network.

 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_total_mass(const struct NetkinSimulation *sim, double *out);

/*
 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_edge_count(const struct NetkinSimulation *sim, size_t *out);

/*
 Number of cells on edge `edge` (0-based position, not id).

 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum NetkinStatus netkin_simulation_cell_count(const struct NetkinSimulation *sim,
                                               size_t edge,
                                               size_t *out);

/*
 Copy the cell densities of edge `edge` into `buf` (at least
 `cell_count` entries).

 # Safety
 `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum NetkinStatus netkin_simulation_density(const struct NetkinSimulation *sim,
                                            size_t edge,
                                            double *buf,
                                            size_t len);

/*
 Copy the chemoattractant of edge `edge` into `buf`.

 # Safety
 `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum NetkinStatus netkin_simulation_chemoattractant(const struct NetkinSimulation *sim,
                                                    size_t edge,
                                                    double *buf,
                                                    size_t len);

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *netkin_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *netkin_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETKIN_H */
