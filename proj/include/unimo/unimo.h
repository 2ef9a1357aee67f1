/* Copyright 2026 the unimo authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the unimo motion-correction engine. Opaque handles, status
 * codes, and JSON strings; every returned string/handle is owned by the
 * caller and released with the matching free function. Functions return
 * UNIMO_OK on success; on failure unimo_last_error_message() describes
 * the most recent error on the calling thread. */

#ifndef UNIMO_UNIMO_H
#define UNIMO_UNIMO_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum unimo_status {
  UNIMO_OK = 0,
  UNIMO_ERR_INVALID_ARGUMENT = 1,
  UNIMO_ERR_IO = 2,
  UNIMO_ERR_FORMAT = 3,
  UNIMO_ERR_GRID_MISMATCH = 4,
  UNIMO_ERR_DEGENERATE = 5,
  UNIMO_ERR_TOO_FEW_CHANNELS = 6,
  UNIMO_ERR_EMPTY_MASK = 7,
  UNIMO_ERR_CONSTANT_VOLUME = 8,
  UNIMO_ERR_NONFINITE = 9,
  UNIMO_ERR_BAND_EXCEEDS_GRID = 10,
  UNIMO_ERR_TOO_FEW_FRAMES = 11,
  UNIMO_ERR_MISSING_CASE = 12,
  UNIMO_ERR_SOLVER = 13,
  UNIMO_ERR_UNKNOWN = 14
} unimo_status;

/* Scalar volume (f32 on disk) or binary mask (u8 on disk). */
typedef struct unimo_volume unimo_volume;
/* Result of a registration or tracking run. */
typedef struct unimo_result unimo_result;

const char* unimo_version(void);
/* Thread-local message for the last failing call on this thread. */
const char* unimo_last_error_message(void);
void unimo_string_free(char* s);

/* Caps worker threads for voxel-parallel loops. Outputs are identical for
 * any value. */
unimo_status unimo_set_threads(int n);

/* ---- volumes ---- */
unimo_status unimo_volume_read(const char* path, unimo_volume** out);
unimo_status unimo_volume_write(const unimo_volume* vol, const char* path);
void unimo_volume_free(unimo_volume* vol);
unimo_status unimo_volume_dims(const unimo_volume* vol, int dims[3]);
unimo_status unimo_volume_spacing(const unimo_volume* vol, double spacing_mm[3]);
int unimo_volume_is_mask(const unimo_volume* vol);

/* Deterministic synthetic volume + mask; kind is "sphere" or "blobs". */
unimo_status unimo_phantom(const char* kind, const int dims[3], const double spacing_mm[3],
                           uint64_t seed, unimo_volume** out_vol, unimo_volume** out_mask);

/* Seeded rigid motion within the named regime (small|medium|large),
 * rotation about the volume center. out_truth_json holds the applied
 * transform. Masks are moved with the same transform as volumes. */
unimo_status unimo_simulate_motion(const unimo_volume* vol, const char* regime, uint64_t seed,
                                   unimo_volume** out_moved, char** out_truth_json);

/* Resample a volume/mask through a transform JSON (pull-back convention). */
unimo_status unimo_apply_rigid(const unimo_volume* vol, const char* transform_json,
                               unimo_volume** out);

/* ---- registration ---- */
/* config_json: flat config object (NULL for defaults); masks optional but
 * must come in pairs. */
unimo_status unimo_register_pair(const unimo_volume* source, const unimo_volume* target,
                                 const unimo_volume* source_mask, const unimo_volume* target_mask,
                                 const char* config_json, unimo_result** out);

/* frames: array of volume handles; masks NULL or an array of the same
 * length. */
unimo_status unimo_track_sequence(const unimo_volume* const* frames, int num_frames,
                                  const unimo_volume* const* masks, const char* config_json,
                                  unimo_result** out);

void unimo_result_free(unimo_result* result);
unimo_status unimo_result_json(const unimo_result* result, char** out_json);
/* Registration only: corrected (rigid + deformation) source volume. */
unimo_status unimo_result_warped(const unimo_result* result, unimo_volume** out);
/* Tracking only: frame resampled to the reference pose. */
unimo_status unimo_result_corrected_frame(const unimo_result* result, int index,
                                          unimo_volume** out);
/* Registration only: write an estimated initial velocity; channel is
 * "image" or "shape". */
unimo_status unimo_result_write_bvel(const unimo_result* result, const char* channel,
                                     const char* path);

/* ---- evaluation ---- */
/* results_json / truths_json: JSON arrays of per-case objects (the CLI
 * assembles them from files). Emits the report JSON and the CSV table. */
unimo_status unimo_evaluate(const char* results_json, const char* truths_json,
                            char** out_report_json, char** out_report_csv);

#ifdef __cplusplus
}
#endif

#endif /* UNIMO_UNIMO_H */
