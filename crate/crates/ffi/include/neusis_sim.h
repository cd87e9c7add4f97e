#ifndef NEUSIS_SIM_H
#define NEUSIS_SIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration or JSON.
   */
  NS_STATUS_CONFIG = 3,
  /**
   * Scenario parse, validation or generation failure.
   */
  NS_STATUS_SCENARIO = 4,
  NS_STATUS_IO = 5,
  /**
   * The mission broke a runtime invariant (see the trace's violation record).
   */
  NS_STATUS_INVARIANT = 6,
  NS_STATUS_PANIC = 7,
} NsStatus;

/**
 * How a mission ended, as reported by [`ns_trace_end_reason`].
 */
typedef enum NsEndReason {
  NS_END_REASON_UNKNOWN = 0,
  NS_END_REASON_EOIS_FOUND = 1,
  NS_END_REASON_BUDGET_EXHAUSTED = 2,
  NS_END_REASON_PLAN_EMPTY = 3,
  NS_END_REASON_VIOLATION = 4,
} NsEndReason;

/**
 * Opaque mission configuration handle.
 */
typedef struct NsConfig NsConfig;

/**
 * Opaque scenario handle.
 */
typedef struct NsScenario NsScenario;

/**
 * Opaque mission trace handle.
 */
typedef struct NsTrace NsTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ns_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ns_version(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NsStatus ns_scenario_load(const char *path, struct NsScenario **out);

/**
 * Generates a scenario with the default generator settings.
 *
 * # Safety
 * `out` must be writable.
 */
enum NsStatus ns_scenario_generate(uint64_t seed, struct NsScenario **out);

/**
 * # Safety
 * `s` must be a live scenario handle or null.
 */
size_t ns_scenario_aoi_count(const struct NsScenario *s);

/**
 * # Safety
 * `s` must be a live scenario handle or null.
 */
size_t ns_scenario_eoi_count(const struct NsScenario *s);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is a no-op.
 */
void ns_scenario_free(struct NsScenario *s);

/**
 * Mission configuration from JSON (missing keys take defaults). Null or an
 * empty string gives the default configuration.
 *
 * # Safety
 * `json` must be null or NUL-terminated; `out` must be writable.
 */
enum NsStatus ns_config_from_json(const char *json, struct NsConfig **out);

/**
 * # Safety
 * `c` must come from this library and not be used afterwards. Null is a no-op.
 */
void ns_config_free(struct NsConfig *c);

/**
 * Runs one mission. A mission that breaks an invariant still yields a trace
 * and returns `Invariant`; `out` then holds that trace.
 *
 * # Safety
 * `scenario` and `config` must be live handles; `name` null or NUL-terminated;
 * `out` writable.
 */
enum NsStatus ns_run_mission(const struct NsScenario *scenario,
                             const struct NsConfig *config,
                             const char *name,
                             struct NsTrace **out);

/**
 * # Safety
 * `t` must be a live trace handle or null.
 */
enum NsEndReason ns_trace_end_reason(const struct NsTrace *t);

/**
 * Number of sensing frames in the trace.
 *
 * # Safety
 * `t` must be a live trace handle or null.
 */
size_t ns_trace_frame_count(const struct NsTrace *t);

/**
 * Number of EOIs confirmed by the end of the mission.
 *
 * # Safety
 * `t` must be a live trace handle or null.
 */
size_t ns_trace_found_count(const struct NsTrace *t);

/**
 * Writes the trace as JSON lines (plus its stats sidecar) to `path`.
 *
 * # Safety
 * `t` must be a live trace handle; `path` NUL-terminated.
 */
enum NsStatus ns_trace_write(const struct NsTrace *t, const char *path);

/**
 * The trace as a JSON-lines string; release it with [`ns_string_free`].
 *
 * # Safety
 * `t` must be a live trace handle; `out` writable.
 */
enum NsStatus ns_trace_to_jsonl(const struct NsTrace *t, char **out);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards. Null is a no-op.
 */
void ns_trace_free(struct NsTrace *t);

/**
 * # Safety
 * `s` must come from [`ns_trace_to_jsonl`] and not be used afterwards. Null is a no-op.
 */
void ns_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUSIS_SIM_H */
