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
#include "unimo/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "unimo/errors.hpp"

namespace unimo::pipeline {

using geometry::operator+;
using geometry::operator-;
using geometry::operator*;

using geometry::RigidTransform;
using volume::Volume3;

void JointConfig::validate() const {
  require(outer_rounds >= 1, ErrorCode::InvalidArgument, "need at least one outer round");
  require(band >= 2, ErrorCode::InvalidArgument, "band must be at least 2");
  require(sigma2 > 0.0, ErrorCode::InvalidArgument, "sigma^2 must be positive");
  require(steps >= 1, ErrorCode::InvalidArgument, "need at least one integration step");
}

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RegistrationResult joint_register(const rigid::ModalityPair& pair, const JointConfig& cfg) {
  cfg.validate();
  pair.validate();

  RegistrationResult result;
  auto t_all = std::chrono::steady_clock::now();

  if (!cfg.deformation_enabled) {
    auto t0 = std::chrono::steady_clock::now();
    result.rigid_report = rigid::solve_rigid(pair, cfg.rigid);
    result.wall_time.push_back({"rigid", seconds_since(t0)});
    RoundLoss row;
    row.round = 1;
    row.rigid_loss = result.rigid_report.final_loss;
    row.total = row.rigid_loss;
    result.rounds.push_back(row);
    result.wall_time.push_back({"total", seconds_since(t_all)});
    return result;
  }

  spectral::SpectralOperators ops = spectral::SpectralOperators::create(
      cfg.band, pair.target_image.grid.dims, cfg.alpha, cfg.power);

  RigidTransform q = RigidTransform::identity();
  rigid::RigidSolveReport rigid_report;
  std::optional<deform::ShootingSolution> sol_image, sol_shape;
  double prev_total = std::numeric_limits<double>::infinity();

  for (int round = 1; round <= cfg.outer_rounds; ++round) {
    // snapshot for rollback
    RigidTransform q_prev = q;
    auto rigid_prev = rigid_report;
    auto image_prev = sol_image;
    auto shape_prev = sol_shape;

    // rigid stage: re-estimate on sources corrected by the current deformation
    auto t_rigid = std::chrono::steady_clock::now();
    rigid::RigidSolveReport rep;
    try {
      if (round == 1 || !sol_image) {
        rep = rigid::solve_rigid(pair, cfg.rigid, q);
      } else {
        rigid::ModalityPair corrected = pair;
        corrected.source_image = volume::warp_deformable(
            volume::resample_rigid(pair.source_image, q, pair.target_image.grid),
            sol_image->realized_field);
        if (pair.has_shape() && sol_shape)
          corrected.source_shape = volume::warp_deformable(
              volume::resample_rigid(*pair.source_shape, q, pair.target_shape->grid),
              sol_shape->realized_field);
        rigid::RigidSolveReport residual = rigid::solve_rigid(corrected, cfg.rigid);
        rep = residual;
        rep.q_fused = geometry::compose(residual.q_fused, q);
        rep.q_image = geometry::compose(residual.q_image, q);
        if (pair.has_shape()) rep.q_shape = geometry::compose(residual.q_shape, q);
        rep.final_loss = rigid::alignment_loss(pair, rep.q_fused);
      }
    } catch (const Error&) {
      result.failure_stage = "rigid";
      break;
    }
    q = rep.q_fused;
    rigid_report = rep;
    result.wall_time.push_back({"rigid_round_" + std::to_string(round), seconds_since(t_rigid)});

    // deformation stage on the rigid-aligned pair, warm-started
    auto t_deform = std::chrono::steady_clock::now();
    try {
      auto [img, shp] = deform::solve_both_channels(
          pair, q, ops, cfg.sigma2, cfg.steps, cfg.shoot_max_iters,
          sol_image ? &sol_image->v0 : nullptr,
          sol_shape ? &sol_shape->v0 : nullptr);
      sol_image = std::move(img);
      sol_shape = std::move(shp);
    } catch (const Error&) {
      result.failure_stage = "deform";
      q = q_prev;
      rigid_report = rigid_prev;
      break;
    }
    result.wall_time.push_back({"deform_round_" + std::to_string(round), seconds_since(t_deform)});

    RoundLoss row;
    row.round = round;
    row.rigid_loss = rigid::alignment_loss(pair, q);
    row.data_image = sol_image->data_term;
    row.reg_image = sol_image->reg_term;
    if (sol_shape) {
      row.data_shape = sol_shape->data_term;
      row.reg_shape = sol_shape->reg_term;
    }
    row.total = row.rigid_loss + row.data_image + row.reg_image + row.data_shape + row.reg_shape;

    if (row.total > prev_total) {
      // roll back the round and stop
      result.rejected_round_total = row.total;
      q = q_prev;
      rigid_report = rigid_prev;
      sol_image = image_prev;
      sol_shape = shape_prev;
      break;
    }
    result.rounds.push_back(row);
    prev_total = row.total;
  }

  result.rigid_report = rigid_report;
  result.deform_image = sol_image;
  result.deform_shape = sol_shape;
  result.wall_time.push_back({"total", seconds_since(t_all)});
  return result;
}

Volume3 apply_correction(const Volume3& source, const RegistrationResult& result,
                         const volume::Grid& out_grid) {
  Volume3 moved = volume::resample_rigid(source, result.rigid_report.q_fused, out_grid);
  if (result.deform_image) return volume::warp_deformable(moved, result.deform_image->realized_field);
  return moved;
}

SequenceResult track_sequence(const std::vector<Volume3>& frames,
                              const std::vector<volume::Mask3>* masks, const JointConfig& cfg) {
  require(frames.size() >= 2, ErrorCode::TooFewFrames, "tracking needs at least 2 frames");
  for (const auto& f : frames)
    require(f.grid.congruent(frames.front().grid), ErrorCode::GridMismatch,
            "sequence frames must share a grid");
  if (masks)
    require(masks->size() == frames.size(), ErrorCode::InvalidArgument,
            "need one mask per frame");

  const size_t n = frames.size();
  SequenceResult seq;
  seq.to_reference.assign(n, RigidTransform::identity());
  seq.link_angle_deg.assign(n, 0.0);
  seq.link_trans_mm.assign(n, 0.0);
  seq.link_loss.assign(n, 0.0);
  seq.link_failed.assign(n, false);
  seq.cum_angle_deg.assign(n, 0.0);
  seq.cum_trans_mm.assign(n, 0.0);

  const geometry::Vec3 pivot = frames.front().grid.center();
  RigidTransform prev_link = RigidTransform::identity();

  for (size_t t = 1; t < n; ++t) {
    rigid::ModalityPair pair;
    pair.source_image = frames[t];
    pair.target_image = frames[t - 1];
    if (masks) {
      pair.source_shape = rigid::make_shape_channel((*masks)[t]);
      pair.target_shape = rigid::make_shape_channel((*masks)[t - 1]);
    }

    RigidTransform link = RigidTransform::identity();
    try {
      rigid::RigidSolveReport rep = rigid::solve_rigid(pair, cfg.rigid, prev_link);
      link = rep.q_fused;
      seq.link_loss[t] = rep.final_loss;
    } catch (const Error&) {
      seq.link_failed[t] = true;  // identity fallback keeps the chain going
    }

    seq.to_reference[t] = geometry::compose(seq.to_reference[t - 1], link);
    seq.link_angle_deg[t] =
        geometry::rotation_geodesic_angle(link, RigidTransform::identity());
    seq.link_trans_mm[t] = geometry::norm(link.apply(pivot) - pivot);
    seq.cum_angle_deg[t] =
        geometry::rotation_geodesic_angle(seq.to_reference[t], RigidTransform::identity());
    seq.cum_trans_mm[t] = geometry::norm(seq.to_reference[t].apply(pivot) - pivot);
    prev_link = link;
  }
  return seq;
}

}  // namespace unimo::pipeline
