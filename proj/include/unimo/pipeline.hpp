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
#ifndef UNIMO_PIPELINE_HPP
#define UNIMO_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "unimo/deform_solver.hpp"
#include "unimo/rigid_solver.hpp"

namespace unimo::pipeline {

struct JointConfig {
  int outer_rounds = 3;
  rigid::RigidSettings rigid;
  bool deformation_enabled = true;
  int band = 16;
  double alpha = 3.0;
  int power = 3;
  double sigma2 = 0.01;
  int steps = 10;
  int shoot_max_iters = 100;

  void validate() const;
};

struct RoundLoss {
  int round = 0;
  double rigid_loss = 0.0;
  double data_image = 0.0;
  double reg_image = 0.0;
  double data_shape = 0.0;
  double reg_shape = 0.0;
  double total = 0.0;
};

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct RegistrationResult {
  rigid::RigidSolveReport rigid_report;
  std::optional<deform::ShootingSolution> deform_image;
  std::optional<deform::ShootingSolution> deform_shape;
  std::vector<RoundLoss> rounds;                 // accepted rounds only
  std::optional<double> rejected_round_total;    // set when rollback fired
  std::vector<StageTime> wall_time;
  std::string failure_stage;                     // empty on clean runs
};

/// Alternating rigid + deformation rounds; each round's rigid stage
/// re-estimates on sources corrected by the current deformation, and a
/// round that increases the combined total is rolled back (iteration
/// stops). With deformation disabled this is exactly one rigid solve.
RegistrationResult joint_register(const rigid::ModalityPair& pair, const JointConfig& cfg);

/// Corrected source for the image channel (rigid then deformation).
volume::Volume3 apply_correction(const volume::Volume3& source, const RegistrationResult& result,
                                 const volume::Grid& out_grid);

struct SequenceResult {
  std::vector<geometry::RigidTransform> to_reference;  // frame t -> frame 0
  std::vector<double> link_angle_deg;                  // per-link step size
  std::vector<double> link_trans_mm;                   // at the grid-center pivot
  std::vector<double> link_loss;
  std::vector<bool> link_failed;
  std::vector<double> cum_angle_deg;  // drift diagnostics vs frame 0
  std::vector<double> cum_trans_mm;
};

/// Chained pairwise tracking: frame t registered to frame t-1 (rigid
/// stage, warm-started from the previous link), composed to frame 0.
/// Failed links fall back to identity and are marked.
SequenceResult track_sequence(const std::vector<volume::Volume3>& frames,
                              const std::vector<volume::Mask3>* masks, const JointConfig& cfg);

}  // namespace unimo::pipeline

#endif
