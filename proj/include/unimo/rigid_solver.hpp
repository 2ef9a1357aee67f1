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
#ifndef UNIMO_RIGID_SOLVER_HPP
#define UNIMO_RIGID_SOLVER_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unimo/geometry.hpp"
#include "unimo/volume.hpp"

namespace unimo::rigid {

/// Image pair plus optional shape channels (windowed smoothed distance
/// transforms, see make_shape_channel). All grids must be congruent and
/// the shape channels present together or absent together.
struct ModalityPair {
  volume::Volume3 source_image;
  volume::Volume3 target_image;
  std::optional<volume::Volume3> source_shape;
  std::optional<volume::Volume3> target_shape;
  std::string provenance;

  bool has_shape() const { return source_shape.has_value(); }
  void validate() const;
};

struct FusionWeight {
  enum class Mode { Fixed, Auto };
  double lambda = 0.5;  // clamped to [0,1]
  Mode mode = Mode::Auto;
};

struct RigidSettings {
  volume::KeypointBankConfig image_bank;
  volume::KeypointBankConfig shape_bank;
  FusionWeight fusion;
  int refine_max_iters = 20;
  double refine_tol_deg = 0.01;
  double refine_tol_mm = 0.01;
  int lambda_search_evals = 30;
  /// Derivative-free sub-degree polish of the alignment loss after the
  /// keypoint loop (coordinate golden-section over 6 DOF). The keypoint
  /// loop has the capture range; its centroid floor sits near a degree on
  /// coarse grids, which the loss bowl resolves much more finely.
  int polish_sweeps = 4;
  double polish_rot_deg = 3.0;
  double polish_trans_vox = 1.5;

  RigidSettings();
};

struct RigidSolveReport {
  geometry::RigidTransform q_image;
  geometry::RigidTransform q_shape;
  geometry::RigidTransform q_fused;
  double lambda_used = 0.0;
  int iterations = 0;
  double final_loss = 0.0;
  std::optional<geometry::KabschReport> kabsch_image;
  std::optional<geometry::KabschReport> kabsch_shape;
  std::vector<double> loss_trace;
};

/// Shape channel recipe: Euclidean distance transform of the mask,
/// Gaussian-smoothed (sigma = 2 voxels), then windowed to [0,1] as
/// min(D, cap_mm)/cap_mm so the normalization does not depend on where the
/// object sits in the FOV and every keypoint band stays near the object.
volume::Volume3 make_shape_channel(const volume::Mask3& mask, double cap_mm = 30.0);

/// Image channel preprocessing: intensity normalization followed by a
/// light isotropic smoothing (sigma 0 selects 1.2 * max spacing). The
/// smoothing keeps band membership stable under trilinear resampling;
/// without it, percentile-band centroids jitter on coarse grids.
volume::Volume3 prepare_image_channel(const volume::Volume3& vol, double sigma_mm = 0.0);

/// Keypoint centroids on both volumes, matched by channel id; per-channel
/// weight is the min of the two channel weights (renormalized, zero-weight
/// channels dropped). Throws TooFewChannels if fewer than 3 survive.
std::pair<geometry::RigidTransform, geometry::KabschReport> estimate_rigid_single(
    const volume::Volume3& source, const volume::Volume3& target,
    const volume::KeypointBankConfig& cfg);

/// Summed Frobenius alignment loss over the available channels at q.
double alignment_loss(const ModalityPair& pair, const geometry::RigidTransform& q);

/// Per-modality estimation plus SLERP fusion; in Auto mode the weight is
/// chosen by golden-section search on the combined image+shape alignment
/// loss (endpoints included, best evaluated weight returned).
RigidSolveReport fuse_modalities(const ModalityPair& pair, const FusionWeight& w,
                                 const RigidSettings& cfg);

/// Iterative refinement: resample the source by the current transform,
/// re-solve the keypoint residual, compose. Accepted iterations never
/// increase the alignment loss; an increasing residual halts the loop.
/// Never throws (returns best-so-far). lambda_override fuses per-modality
/// residuals at a fixed weight (defaults to the configured fusion weight).
RigidSolveReport refine_rigid(const ModalityPair& pair, const geometry::RigidTransform& initial,
                              const RigidSettings& cfg,
                              std::optional<double> lambda_override = std::nullopt);

/// Bounded coordinate-wise golden-section descent of the alignment loss
/// around q (rotation-vector and translation coordinates). Monotone: the
/// returned transform never has a larger loss than q.
geometry::RigidTransform polish_rigid(const ModalityPair& pair,
                                      const geometry::RigidTransform& q,
                                      const RigidSettings& cfg);

/// Full rigid stage used by the pipeline: fusion estimated on the
/// initial-aligned residual pair, keypoint refinement from the composed
/// guess, then the loss polish.
RigidSolveReport solve_rigid(const ModalityPair& pair, const RigidSettings& cfg,
                             const geometry::RigidTransform& initial = {});

}  // namespace unimo::rigid

#endif
