#ifndef MECANAV_H
#define MECANAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Grid cell codes used by map buffers.
 */
#define MN_CELL_UNKNOWN 0

#define MN_CELL_FREE 1

#define MN_CELL_OCCUPIED 2

typedef enum MnStatus {
  MN_STATUS_OK = 0,
  MN_STATUS_NULL_POINTER = 1,
  MN_STATUS_INVALID_ARGUMENT = 2,
  MN_STATUS_OUT_OF_BOUNDS = 3,
  MN_STATUS_GOAL_INVALID = 4,
  MN_STATUS_NO_PATH = 5,
  MN_STATUS_BUFFER_TOO_SMALL = 6,
  MN_STATUS_INTERNAL = 99,
} MnStatus;

typedef struct MnOdometry MnOdometry;

typedef struct MnPlanner MnPlanner;

typedef struct MnSlam MnSlam;

typedef struct MnTwist {
  double vx;
  double vy;
  double omega;
} MnTwist;

typedef struct MnWheelSpeeds {
  double fl;
  double fr;
  double rl;
  double rr;
} MnWheelSpeeds;

typedef struct MnPose {
  double x;
  double y;
  double theta;
} MnPose;

typedef struct MnTicks {
  int64_t fl;
  int64_t fr;
  int64_t rl;
  int64_t rr;
} MnTicks;

/**
 * Body-frame motion since the previous SLAM step.
 */
typedef struct MnDelta {
  double ds_x;
  double ds_y;
  double dtheta;
} MnDelta;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status code.
 */
const char *mn_status_message(enum MnStatus status);

/**
 * Library version, NUL-terminated.
 */
const char *mn_version(void);

/**
 * Wheel surface speeds (m/s) for a body twist.
 */
enum MnStatus mn_inverse_kinematics(double distance_per_tick,
                                    double wheel_separation,
                                    const struct MnTwist *twist,
                                    struct MnWheelSpeeds *out);

enum MnStatus mn_odometry_new(double distance_per_tick,
                              double wheel_separation,
                              struct MnPose start,
                              struct MnOdometry **out);

/**
 * Integrates one interval of encoder ticks; writes the new pose and, if
 * `delta` is non-null, the body-frame motion.
 */
enum MnStatus mn_odometry_update(struct MnOdometry *odometry,
                                 const struct MnTicks *ticks,
                                 struct MnPose *pose,
                                 struct MnDelta *delta);

void mn_odometry_free(struct MnOdometry *odometry);

/**
 * Particle-filter SLAM over a fixed `width_m` x `height_m` grid whose
 * lower-left corner is `origin`. Other settings use library defaults.
 */
enum MnStatus mn_slam_new(size_t particle_count,
                          double resolution,
                          double width_m,
                          double height_m,
                          struct MnPose origin,
                          struct MnPose start,
                          uint64_t seed,
                          struct MnSlam **out);

/**
 * One filter step with the motion since the last call and a scan of `n`
 * ranges. Negative or non-finite ranges mean "no return". Writes the
 * current pose estimate.
 */
enum MnStatus mn_slam_step(struct MnSlam *slam,
                           const struct MnDelta *delta,
                           double angle_min,
                           double angle_increment,
                           double range_min,
                           double range_max,
                           const double *ranges,
                           size_t n,
                           struct MnPose *pose);

enum MnStatus mn_slam_map_size(const struct MnSlam *slam, size_t *width, size_t *height);

/**
 * Copies the map as `MN_CELL_*` codes, row-major from the lower-left cell.
 */
enum MnStatus mn_slam_map_cells(const struct MnSlam *slam, uint8_t *cells, size_t capacity);

void mn_slam_free(struct MnSlam *slam);

/**
 * Planner over a `width` x `height` grid of `MN_CELL_*` codes, row-major
 * from the lower-left cell. Unknown cells are treated as obstacles.
 */
enum MnStatus mn_planner_new(double resolution,
                             size_t width,
                             size_t height,
                             struct MnPose origin,
                             const uint8_t *cells,
                             double robot_radius,
                             double clearance_weight,
                             double danger_horizon,
                             struct MnPlanner **out);

/**
 * Plans from `start` to `goal` and writes waypoints as interleaved x, y
 * pairs into `xy` (room for `capacity` waypoints). `len` always receives
 * the waypoint count; a short buffer yields `MN_STATUS_BUFFER_TOO_SMALL`.
 */
enum MnStatus mn_planner_plan(const struct MnPlanner *planner,
                              struct MnPose start,
                              struct MnPose goal,
                              double *xy,
                              size_t capacity,
                              size_t *len);

void mn_planner_free(struct MnPlanner *planner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MECANAV_H */
