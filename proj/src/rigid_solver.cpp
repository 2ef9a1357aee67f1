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
#include "unimo/rigid_solver.hpp"

#include <algorithm>
#include <cmath>

#include "unimo/errors.hpp"

namespace unimo::rigid {

using geometry::operator+;
using geometry::operator-;
using geometry::operator*;

using geometry::RigidTransform;
using volume::Volume3;

void ModalityPair::validate() const {
  require(source_image.grid.congruent(target_image.grid), ErrorCode::GridMismatch,
          "source and target image grids differ");
  require(source_shape.has_value() == target_shape.has_value(), ErrorCode::InvalidArgument,
          "shape channels must be present together or absent together");
  if (source_shape) {
    require(source_shape->grid.congruent(source_image.grid) &&
                target_shape->grid.congruent(source_image.grid),
            ErrorCode::GridMismatch, "shape channel grids differ from image grids");
  }
}

RigidSettings::RigidSettings() {
  // the shape channel is a capped distance map: its plateau at 1.0 is the
  // far field, so the shape bank's last band closes below it
  shape_bank.percentile_edges.clear();
  shape_bank.num_channels = 128;
  const int k = shape_bank.num_channels;
  shape_bank.percentile_edges.resize(k + 1);
  for (int i = 0; i <= k; ++i)
    shape_bank.percentile_edges[i] = 5.0 + 85.0 * static_cast<double>(i) / k;
}

Volume3 make_shape_channel(const volume::Mask3& mask, double cap_mm) {
  require(cap_mm > 0.0, ErrorCode::InvalidArgument, "distance cap must be positive");
  Volume3 dist = volume::distance_transform(mask);
  double sigma = 2.0 * std::max({mask.grid.spacing_mm[0], mask.grid.spacing_mm[1],
                                 mask.grid.spacing_mm[2]});
  Volume3 smooth = volume::gaussian_smooth(dist, sigma);
  for (auto& v : smooth.data) v = std::min(v, cap_mm) / cap_mm;
  return smooth;
}

Volume3 prepare_image_channel(const Volume3& vol, double sigma_mm) {
  if (sigma_mm <= 0.0)
    sigma_mm = 1.2 * std::max({vol.grid.spacing_mm[0], vol.grid.spacing_mm[1],
                               vol.grid.spacing_mm[2]});

  // window referenced to the foreground: whole-volume percentiles sit in
  // the background mode on masked data and would clamp a large slice of
  // the object (and drift between the two volumes of a pair)
  double max_val = 0.0;
  for (double v : vol.data) max_val = std::max(max_val, v);
  require(max_val > 0.0, ErrorCode::ConstantVolume, "volume has no positive intensities");
  std::vector<double> fg;
  for (double v : vol.data)
    if (v > 0.01 * max_val) fg.push_back(v);
  std::sort(fg.begin(), fg.end());
  double hi = fg[static_cast<size_t>(0.99 * (fg.size() - 1))];
  require(hi > 0.0, ErrorCode::ConstantVolume, "degenerate intensity distribution");

  Volume3 out = vol;
  for (auto& v : out.data) v = std::clamp(v / hi, 0.0, 1.0);
  return volume::gaussian_smooth(out, sigma_mm);
}

namespace {

std::pair<RigidTransform, geometry::KabschReport> estimate_from_banks(
    const volume::KeypointSet& src, const volume::KeypointSet& tgt) {
  std::vector<geometry::Vec3> s, t;
  std::vector<double> w;
  for (size_t k = 0; k < src.points.size(); ++k) {
    double cw = std::min(src.weights[k], tgt.weights[k]);
    if (cw <= 0.0) continue;
    s.push_back(src.points[k]);
    t.push_back(tgt.points[k]);
    w.push_back(cw);
  }
  require(s.size() >= 3, ErrorCode::TooFewChannels,
          "fewer than 3 keypoint channels survive the weight combination");
  return geometry::kabsch_solve(
      geometry::PointCorrespondence(std::move(s), std::move(t), std::move(w)));
}

}  // namespace

std::pair<RigidTransform, geometry::KabschReport> estimate_rigid_single(
    const Volume3& source, const Volume3& target, const volume::KeypointBankConfig& cfg) {
  require(source.grid.congruent(target.grid), ErrorCode::GridMismatch,
          "source and target grids differ");
  volume::KeypointSet src = volume::extract_keypoints(source, cfg);
  volume::KeypointSet tgt = volume::extract_keypoints(target, cfg);
  return estimate_from_banks(src, tgt);
}

double alignment_loss(const ModalityPair& pair, const RigidTransform& q) {
  auto frob = [](const Volume3& a, const Volume3& b) {
    double ss = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      double d = a.data[i] - b.data[i];
      ss += d * d;
    }
    return std::sqrt(ss);
  };
  Volume3 moved = volume::resample_rigid(pair.source_image, q, pair.target_image.grid);
  double loss = frob(moved, pair.target_image);
  if (pair.has_shape()) {
    Volume3 moved_shape = volume::resample_rigid(*pair.source_shape, q, pair.target_shape->grid);
    loss += frob(moved_shape, *pair.target_shape);
  }
  return loss;
}

RigidSolveReport fuse_modalities(const ModalityPair& pair, const FusionWeight& w,
                                 const RigidSettings& cfg) {
  pair.validate();

  RigidSolveReport report;
  auto [q_image, rep_image] = estimate_rigid_single(pair.source_image, pair.target_image,
                                                    cfg.image_bank);
  report.q_image = q_image;
  report.kabsch_image = rep_image;

  if (!pair.has_shape()) {
    report.q_fused = q_image;
    report.lambda_used = 0.0;
    report.final_loss = alignment_loss(pair, report.q_fused);
    report.loss_trace = {report.final_loss};
    return report;
  }

  auto [q_shape, rep_shape] = estimate_rigid_single(*pair.source_shape, *pair.target_shape,
                                                    cfg.shape_bank);
  report.q_shape = q_shape;
  report.kabsch_shape = rep_shape;

  double lambda = std::clamp(w.lambda, 0.0, 1.0);
  if (w.mode == FusionWeight::Mode::Auto) {
    // golden-section on the combined alignment loss; endpoints evaluated
    // so the returned weight is never worse than either single modality
    auto loss_at = [&](double l) {
      return alignment_loss(pair, geometry::slerp_fuse(q_image, q_shape, l));
    };
    double best_l = 0.0, best_v = loss_at(0.0);
    double v1 = loss_at(1.0);
    if (v1 < best_v) {
      best_v = v1;
      best_l = 1.0;
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 1.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = loss_at(x1), f2 = loss_at(x2);
    int evals = 4;
    auto consider = [&](double l, double v) {
      if (v < best_v) {
        best_v = v;
        best_l = l;
      }
    };
    consider(x1, f1);
    consider(x2, f2);
    while (evals < cfg.lambda_search_evals) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = loss_at(x1);
        consider(x1, f1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = loss_at(x2);
        consider(x2, f2);
      }
      ++evals;
    }
    lambda = best_l;
  }

  report.lambda_used = lambda;
  report.q_fused = geometry::slerp_fuse(q_image, q_shape, lambda);
  report.final_loss = alignment_loss(pair, report.q_fused);
  report.loss_trace = {report.final_loss};
  return report;
}

RigidSolveReport refine_rigid(const ModalityPair& pair, const RigidTransform& initial,
                              const RigidSettings& cfg, std::optional<double> lambda_override) {
  pair.validate();

  double lambda = 0.0;
  if (pair.has_shape())
    lambda = std::clamp(lambda_override.value_or(cfg.fusion.lambda), 0.0, 1.0);

  RigidSolveReport report;
  report.q_fused = initial;
  report.lambda_used = lambda;
  report.final_loss = alignment_loss(pair, initial);
  report.loss_trace = {report.final_loss};

  // the target never moves, so its keypoint banks are extracted once
  volume::KeypointSet target_bank_image;
  volume::KeypointSet target_bank_shape;
  try {
    target_bank_image = volume::extract_keypoints(pair.target_image, cfg.image_bank);
    if (pair.has_shape())
      target_bank_shape = volume::extract_keypoints(*pair.target_shape, cfg.shape_bank);
  } catch (const Error&) {
    return report;
  }

  for (int iter = 0; iter < cfg.refine_max_iters; ++iter) {
    RigidTransform residual;
    try {
      Volume3 moved = volume::resample_rigid(pair.source_image, report.q_fused,
                                             pair.target_image.grid);
      auto [res_image, rep_image] = estimate_from_banks(
          volume::extract_keypoints(moved, cfg.image_bank), target_bank_image);
      report.kabsch_image = rep_image;
      residual = res_image;
      if (pair.has_shape()) {
        Volume3 moved_shape = volume::resample_rigid(*pair.source_shape, report.q_fused,
                                                     pair.target_shape->grid);
        auto [res_shape, rep_shape] = estimate_from_banks(
            volume::extract_keypoints(moved_shape, cfg.shape_bank), target_bank_shape);
        report.kabsch_shape = rep_shape;
        residual = geometry::slerp_fuse(res_image, res_shape, lambda);
      }
    } catch (const Error&) {
      break;  // estimation failed; keep best-so-far
    }

    RigidTransform candidate = geometry::compose(residual, report.q_fused);
    double candidate_loss = alignment_loss(pair, candidate);
    if (candidate_loss > report.final_loss) break;  // reject and halt

    report.q_fused = candidate;
    report.final_loss = candidate_loss;
    report.loss_trace.push_back(candidate_loss);
    ++report.iterations;

    double res_angle = geometry::rotation_geodesic_angle(residual, RigidTransform::identity());
    double res_trans = geometry::norm(residual.translation);
    if (res_angle < cfg.refine_tol_deg && res_trans < cfg.refine_tol_mm) break;
  }
  return report;
}


namespace {

// rotation-vector delta about the grid center composed onto q
RigidTransform apply_delta(const RigidTransform& q, const geometry::Vec3& rotvec,
                           const geometry::Vec3& t, const geometry::Vec3& pivot) {
  double angle = geometry::norm(rotvec);
  geometry::Quaternion rot = angle > 0.0
                                 ? geometry::Quaternion::from_axis_angle(rotvec, angle)
                                 : geometry::Quaternion::identity();
  RigidTransform delta = geometry::rigid_about_pivot(rot, pivot, t);
  return geometry::compose(delta, q);
}

}  // namespace

namespace {

// every-other-voxel copy (exact decimation, no interpolation)
Volume3 decimate2(const Volume3& vol) {
  volume::Grid half = vol.grid;
  for (int a = 0; a < 3; ++a) {
    half.dims[a] = (vol.grid.dims[a] + 1) / 2;
    half.spacing_mm[a] = 2.0 * vol.grid.spacing_mm[a];
  }
  Volume3 out(half);
  for (int z = 0; z < half.dims[2]; ++z)
    for (int y = 0; y < half.dims[1]; ++y)
      for (int x = 0; x < half.dims[0]; ++x)
        out.at(x, y, z) = vol.at(2 * x, 2 * y, 2 * z);
  return out;
}

}  // namespace

RigidTransform polish_rigid(const ModalityPair& pair, const RigidTransform& q,
                            const RigidSettings& cfg) {
  if (cfg.polish_sweeps <= 0) return q;
  const geometry::Vec3 pivot = pair.target_image.grid.center();
  const double spacing = std::max({pair.target_image.grid.spacing_mm[0],
                                   pair.target_image.grid.spacing_mm[1],
                                   pair.target_image.grid.spacing_mm[2]});
  // parameters: rotation vector (rad) then translation (mm)
  std::array<double, 6> param{0, 0, 0, 0, 0, 0};
  std::array<double, 6> bound{};
  for (int i = 0; i < 3; ++i) bound[i] = cfg.polish_rot_deg * M_PI / 180.0;
  for (int i = 3; i < 6; ++i) bound[i] = cfg.polish_trans_vox * spacing;

  auto transform_at = [&](const std::array<double, 6>& p) {
    return apply_delta(q, {p[0], p[1], p[2]}, {p[3], p[4], p[5]}, pivot);
  };

  // the search runs on an exact stride-2 subgrid of the loss (cheap and
  // minimizer-faithful); the caller re-checks the full loss before accepting
  const int min_dim = std::min({pair.target_image.grid.dims[0], pair.target_image.grid.dims[1],
                                pair.target_image.grid.dims[2]});
  const bool coarse = min_dim >= 32;
  Volume3 tgt_image = coarse ? decimate2(pair.target_image) : pair.target_image;
  std::optional<Volume3> tgt_shape;
  if (pair.has_shape()) tgt_shape = coarse ? decimate2(*pair.target_shape) : *pair.target_shape;

  auto frob = [](const Volume3& a, const Volume3& b) {
    double ss = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      double d = a.data[i] - b.data[i];
      ss += d * d;
    }
    return std::sqrt(ss);
  };
  auto loss_at = [&](const std::array<double, 6>& p) {
    RigidTransform t = transform_at(p);
    double loss = frob(volume::resample_rigid(pair.source_image, t, tgt_image.grid), tgt_image);
    if (tgt_shape)
      loss += frob(volume::resample_rigid(*pair.source_shape, t, tgt_shape->grid), *tgt_shape);
    return loss;
  };

  double best = loss_at(param);
  const double base_loss = best;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < cfg.polish_sweeps; ++sweep) {
    double sweep_start = best;
    for (int dof = 0; dof < 6; ++dof) {
      double lo = param[dof] - bound[dof];
      double hi = param[dof] + bound[dof];
      double x1 = hi - inv_phi * (hi - lo);
      double x2 = lo + inv_phi * (hi - lo);
      auto eval = [&](double v) {
        auto p = param;
        p[dof] = v;
        return loss_at(p);
      };
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 8; ++it) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = eval(x2);
        }
      }
      double cand = f1 <= f2 ? x1 : x2;
      double cand_loss = f1 <= f2 ? f1 : f2;
      if (cand_loss < best) {
        param[dof] = cand;
        best = cand_loss;
      }
    }
    if (sweep_start - best < 1e-3 * std::max(sweep_start, 1e-12)) break;
  }
  if (best >= base_loss) return q;
  return transform_at(param);
}

RigidSolveReport solve_rigid(const ModalityPair& pair, const RigidSettings& cfg,
                             const RigidTransform& initial) {
  pair.validate();

  // fusion on the initial-aligned residual pair
  ModalityPair res_pair = pair;
  res_pair.source_image = volume::resample_rigid(pair.source_image, initial,
                                                 pair.target_image.grid);
  if (pair.has_shape())
    res_pair.source_shape = volume::resample_rigid(*pair.source_shape, initial,
                                                   pair.target_shape->grid);

  RigidSolveReport fuse_report = fuse_modalities(res_pair, cfg.fusion, cfg);
  RigidTransform guess = geometry::compose(fuse_report.q_fused, initial);

  auto refine_and_polish = [&](const RigidTransform& start) {
    RigidSolveReport rep = refine_rigid(pair, start, cfg, fuse_report.lambda_used);
    RigidTransform polished = polish_rigid(pair, rep.q_fused, cfg);
    double polished_loss = alignment_loss(pair, polished);
    if (polished_loss <= rep.final_loss) {
      rep.q_fused = polished;
      rep.final_loss = polished_loss;
      rep.loss_trace.push_back(polished_loss);
    }
    return rep;
  };

  RigidSolveReport report = refine_and_polish(guess);

  // a converged solve sits far below the unaligned loss; when it does not,
  // the closed-form rotation landed in a wrong basin (near-symmetric
  // content) and a restart from the translation part recovers it
  double reference_loss = alignment_loss(pair, initial);
  if (report.final_loss > 0.05 * reference_loss) {
    const geometry::Vec3 pivot = pair.target_image.grid.center();
    RigidTransform translation_only;
    translation_only.translation = report.q_fused.apply(pivot) - pivot;
    RigidSolveReport retry = refine_and_polish(translation_only);
    if (retry.final_loss < report.final_loss) report = retry;
  }

  // alternate keypoint refinement and the loss polish until stable
  for (int round = 0; round < 3; ++round) {
    double prev = report.final_loss;
    RigidSolveReport cont = refine_and_polish(report.q_fused);
    if (cont.final_loss < report.final_loss) {
      cont.iterations += report.iterations;
      report = cont;
    }
    if (prev - report.final_loss < 1e-3 * std::max(prev, 1e-12)) break;
  }

  report.q_image = geometry::compose(fuse_report.q_image, initial);
  if (pair.has_shape())
    report.q_shape = geometry::compose(fuse_report.q_shape, initial);
  report.lambda_used = fuse_report.lambda_used;
  if (!report.kabsch_image) report.kabsch_image = fuse_report.kabsch_image;
  if (!report.kabsch_shape) report.kabsch_shape = fuse_report.kabsch_shape;
  return report;
}

}  // namespace unimo::rigid
