/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef DEPTHPOSE_H
#define DEPTHPOSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call. Values 2 to 4 match the command-line exit codes.
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_NULL_POINTER = 1,
  DP_STATUS_INVALID_INPUT = 2,
  DP_STATUS_EMPTY_OR_DEGENERATE = 3,
  DP_STATUS_PIPELINE_FAILURE = 4,
  DP_STATUS_PANIC = 5,
} DpStatus;

// Opaque triangle mesh.
typedef struct DpMesh DpMesh;

// Opaque camera-frame point cloud.
typedef struct DpPointCloud DpPointCloud;

typedef struct DpIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
  uint32_t width;
  uint32_t height;
  // Meters per raw depth unit.
  double depth_scale;
} DpIntrinsics;

// Rigid transform `x_cam = R x_obj + T`; `rotation` is row-major.
typedef struct DpPose {
  double rotation[9];
  double translation[3];
} DpPose;

// Settings for `dp_run_e2e`.
typedef struct DpE2eConfig {
  // Offset noise standard deviation relative to the mesh diameter.
  double noise_sigma_rel;
  double label_flip_rate;
  double occlusion_fraction;
  uint64_t seed;
  size_t n_keypoints;
  bool add_center;
  // Mean shift bandwidth relative to the mesh diameter.
  double bandwidth_rel;
  bool symmetric;
  // Point cap; 0 keeps every visible point.
  size_t max_points;
} DpE2eConfig;

typedef struct DpE2eResult {
  struct DpPose pose;
  double add;
  double adds;
  double threshold;
  size_t visible_points;
} DpE2eResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *dp_last_error_message(void);

// Library version as a NUL-terminated string with static lifetime.
const char *dp_version(void);

// Builds a mesh from `n_vertices` xyz triples and `n_faces` index triples.
//
// # Safety
// `vertices` must hold `3 * n_vertices` doubles, `faces` `3 * n_faces`
// indices, and `out` must be writable.
enum DpStatus dp_mesh_new(const double *vertices,
                          size_t n_vertices,
                          const uint32_t *faces,
                          size_t n_faces,
                          struct DpMesh **out);

// Loads a builtin mesh (`cube`, `unit_cube`, `icosphere`, `l_bracket`,
// `tetrahedron`) or an ASCII PLY file; the same specs as the command line.
//
// # Safety
// `source` must be a NUL-terminated string and `out` writable.
enum DpStatus dp_mesh_load(const char *source, struct DpMesh **out);

// # Safety
// `mesh` must come from a mesh constructor and not be used afterwards.
void dp_mesh_free(struct DpMesh *mesh);

// # Safety
// `mesh` must be a live handle or null.
size_t dp_mesh_vertex_count(const struct DpMesh *mesh);

// Maximum pairwise vertex distance; 0 for a null handle.
//
// # Safety
// `mesh` must be a live handle or null.
double dp_mesh_diameter(const struct DpMesh *mesh);

// Lifts a row-major raw depth image (`width * height` values) to a cloud.
//
// # Safety
// `depth` must hold `len` values; `k` and `out` must be valid.
enum DpStatus dp_cloud_from_depth(const uint16_t *depth,
                                  size_t len,
                                  const struct DpIntrinsics *k,
                                  struct DpPointCloud **out);

// # Safety
// `cloud` must be a live handle or null.
size_t dp_cloud_len(const struct DpPointCloud *cloud);

// Copies the points into `out` (room for `capacity` points).
//
// # Safety
// `cloud` must be live and `out` must hold `3 * capacity` doubles.
enum DpStatus dp_cloud_points(const struct DpPointCloud *cloud, double *out, size_t capacity);

// # Safety
// `cloud` must come from a cloud constructor and not be used afterwards.
void dp_cloud_free(struct DpPointCloud *cloud);

// Normal-vector-angles image of a depth image. Writes `3 * len` channel
// bytes (row-major RGB) and `len` mask bytes (1 valid, 0 invalid).
//
// # Safety
// `depth` must hold `len` values, `rgb` `3 * len` bytes, `mask` `len` bytes.
enum DpStatus dp_angle_image(const uint16_t *depth,
                             size_t len,
                             const struct DpIntrinsics *k,
                             uint8_t *rgb,
                             uint8_t *mask);

// Least-squares rigid fit `camera ≈ R model + T` over `n` correspondences.
//
// # Safety
// Both point arrays must hold `3 * n` doubles; `out` must be writable.
enum DpStatus dp_arun_fit(const double *model, const double *camera, size_t n, struct DpPose *out);

// ADD: mean distance between corresponding transformed mesh vertices.
//
// # Safety
// All pointers must be valid.
enum DpStatus dp_add(const struct DpMesh *mesh,
                     const struct DpPose *pred,
                     const struct DpPose *gt,
                     double *out);

// ADD-S: mean nearest-neighbor distance, for symmetric objects.
//
// # Safety
// All pointers must be valid.
enum DpStatus dp_adds(const struct DpMesh *mesh,
                      const struct DpPose *pred,
                      const struct DpPose *gt,
                      double *out);

// Gaussian mean shift over `n` votes; writes the winning mode and how many
// votes lie within one bandwidth of it.
//
// # Safety
// `votes` must hold `3 * n` doubles, `mode` 3 doubles; `support` may be null.
enum DpStatus dp_mean_shift(const double *votes,
                            size_t n,
                            double bandwidth,
                            uint64_t seed,
                            double *mode,
                            size_t *support);

// Farthest point sampling of `n` mesh vertices, plus the centroid when
// `add_center` is set. `out` has room for `capacity` points; the number
// written goes to `count`.
//
// # Safety
// `mesh` must be live, `out` must hold `3 * capacity` doubles, `count` writable.
enum DpStatus dp_select_keypoints(const struct DpMesh *mesh,
                                  size_t n,
                                  bool add_center,
                                  double *out,
                                  size_t capacity,
                                  size_t *count);

// Default end-to-end settings: noiseless oracle, 8 keypoints plus center,
// bandwidth 0.05 diameters, 12288-point cap.
struct DpE2eConfig dp_e2e_config_default(void);

// Render, oracle prediction, voting, fit and scoring of one synthetic frame.
//
// # Safety
// All pointers must be valid.
enum DpStatus dp_run_e2e(const struct DpMesh *mesh,
                         const struct DpPose *gt,
                         const struct DpIntrinsics *k,
                         const struct DpE2eConfig *config,
                         struct DpE2eResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPTHPOSE_H */
