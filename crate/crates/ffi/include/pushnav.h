#ifndef PUSHNAV_H
#define PUSHNAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PnActionKind {
  /**
   * `a` = turn rate (rad/s).
   */
  PN_ACTION_KIND_ANGULAR = 0,
  /**
   * `a` = heading (rad).
   */
  PN_ACTION_KIND_HEADING = 1,
  /**
   * `a`, `b` = left, right wheel speed (m/s).
   */
  PN_ACTION_KIND_WHEELS = 2,
} PnActionKind;

typedef enum PnStatus {
  PN_STATUS_OK = 0,
  PN_STATUS_NULL_ARGUMENT = 1,
  PN_STATUS_INVALID_ARGUMENT = 2,
  PN_STATUS_WRONG_ACTION_MODE = 3,
  PN_STATUS_NOT_ACTIVE = 4,
  PN_STATUS_SIMULATION_ERROR = 5,
  PN_STATUS_BUFFER_TOO_SMALL = 6,
  PN_STATUS_PANIC = 7,
} PnStatus;

/**
 * Opaque environment handle.
 */
typedef struct PnEnv PnEnv;

typedef struct PnAction {
  enum PnActionKind kind;
  double a;
  double b;
} PnAction;

typedef struct PnStep {
  double reward;
  bool terminated;
  bool truncated;
} PnStep;

typedef struct PnPose {
  double x;
  double y;
  double theta;
} PnPose;

/**
 * Scores of the current episode; NaN where a score does not apply.
 */
typedef struct PnMetrics {
  double e_nav;
  double i_nav;
  double s_manip;
  double e_manip;
  double i_manip;
} PnMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next call on this thread.
 */
const char *pn_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pn_version(void);

/**
 * Creates an environment by name (`maze`, `ship_ice`, `box_delivery`,
 * `area_clearing`) with optional `key=value,...` overrides.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `variant` null or one, and
 * `out` a valid pointer. Free the handle with `pn_env_free`.
 */
enum PnStatus pn_env_new(const char *name, const char *variant, struct PnEnv **out);

/**
 * Creates an environment from a full spec in JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PnStatus pn_env_from_json(const char *json, struct PnEnv **out);

/**
 * # Safety
 * `env` must be null or a handle from `pn_env_new`/`pn_env_from_json`
 * not freed before.
 */
void pn_env_free(struct PnEnv *env);

/**
 * Starts an episode.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum PnStatus pn_env_reset(struct PnEnv *env, uint64_t seed);

/**
 * Advances one control step.
 *
 * # Safety
 * `env` must be a live handle and `out` null or valid.
 */
enum PnStatus pn_env_step(struct PnEnv *env, struct PnAction action, struct PnStep *out);

/**
 * Observation dimensions (channels, height, width).
 *
 * # Safety
 * `env` must be a live handle; the out pointers must be valid.
 */
enum PnStatus pn_env_observation_shape(struct PnEnv *env,
                                       size_t *channels,
                                       size_t *height,
                                       size_t *width);

/**
 * Renders the current observation into `buf` as channel-major f32.
 *
 * # Safety
 * `env` must be a live handle and `buf` valid for `len` floats.
 */
enum PnStatus pn_env_observe(struct PnEnv *env, float *buf, size_t len);

/**
 * # Safety
 * `env` must be a live handle and `out` valid.
 */
enum PnStatus pn_env_robot_pose(struct PnEnv *env, struct PnPose *out);

/**
 * Scores of the episode so far (final once it has ended).
 *
 * # Safety
 * `env` must be a live handle and `out` valid.
 */
enum PnStatus pn_env_metrics(struct PnEnv *env, struct PnMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PUSHNAV_H */
