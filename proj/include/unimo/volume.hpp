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
#ifndef UNIMO_VOLUME_HPP
#define UNIMO_VOLUME_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "unimo/geometry.hpp"

namespace unimo::volume {

using geometry::Vec3;
using geometry::operator+;
using geometry::operator-;
using geometry::operator*;

/// Axis-aligned voxel grid: world = origin + index * spacing, no
/// orientation matrix (all data lives on canonical grids).
struct Grid {
  std::array<int, 3> dims{0, 0, 0};
  Vec3 spacing_mm{1.0, 1.0, 1.0};
  Vec3 origin_mm{0.0, 0.0, 0.0};

  std::int64_t voxel_count() const {
    return std::int64_t(dims[0]) * dims[1] * dims[2];
  }
  std::int64_t index(int x, int y, int z) const {
    return x + std::int64_t(dims[0]) * (y + std::int64_t(dims[1]) * z);
  }
  Vec3 world(double x, double y, double z) const {
    return {origin_mm[0] + x * spacing_mm[0], origin_mm[1] + y * spacing_mm[1],
            origin_mm[2] + z * spacing_mm[2]};
  }
  /// World-space center of the grid (pivot for rotations).
  Vec3 center() const {
    return world(0.5 * (dims[0] - 1), 0.5 * (dims[1] - 1), 0.5 * (dims[2] - 1));
  }
  bool congruent(const Grid& other, double tol = 1e-9) const;
  void validate() const;
};

/// 3D scalar volume; intensities held as doubles, stored as f32 on disk.
struct Volume3 {
  Grid grid;
  std::vector<double> data;

  Volume3() = default;
  explicit Volume3(const Grid& g, double fill = 0.0);

  double& at(int x, int y, int z) { return data[grid.index(x, y, z)]; }
  double at(int x, int y, int z) const { return data[grid.index(x, y, z)]; }
};

/// Binary mask on the same grid model.
struct Mask3 {
  Grid grid;
  std::vector<std::uint8_t> data;

  Mask3() = default;
  explicit Mask3(const Grid& g, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int z) { return data[grid.index(x, y, z)]; }
  std::uint8_t at(int x, int y, int z) const { return data[grid.index(x, y, z)]; }
  std::int64_t count_set() const;
};

/// Dense displacement field u over a grid, in voxel units; the realized
/// map is x -> x + u(x).
struct DeformationField {
  Grid grid;
  std::vector<std::array<double, 3>> u;

  DeformationField() = default;
  explicit DeformationField(const Grid& g);
};

/// Trilinear sample at continuous index coordinates; out-of-bounds corner
/// contributions are zero.
double trilinear_sample(const Volume3& vol, const Vec3& index_pos);

/// Pull-back resampling: output(x) = vol(Q^{-1} x), so composing the image
/// with Q moves the object by Q. Out-of-bounds reads return 0.
Volume3 resample_rigid(const Volume3& vol, const geometry::RigidTransform& q, const Grid& out_grid);

/// Rigid resampling of a binary mask (trilinear on {0,1}, threshold 0.5).
Mask3 resample_mask(const Mask3& mask, const geometry::RigidTransform& q, const Grid& out_grid);

/// output(x) = vol(x + u(x)), trilinear; grids must match.
Volume3 warp_deformable(const Volume3& vol, const DeformationField& disp);
Mask3 warp_mask(const Mask3& mask, const DeformationField& disp);

/// Exact Euclidean distance (mm) from each voxel center to the nearest set
/// voxel center; 0 inside the set. Separable lower-envelope passes per axis.
Volume3 distance_transform(const Mask3& mask);

/// Separable Gaussian, kernel truncated at 4 sigma and renormalized;
/// sigma 0 is the identity. Outside-volume reads are zero.
Volume3 gaussian_smooth(const Volume3& vol, double sigma_mm);

/// Linear interpolation percentile (p in [0,100]) of the voxel values.
double percentile(const Volume3& vol, double p);

/// Rescales the [p1, p99] window to [0,1], clamped.
Volume3 normalize_intensity(const Volume3& vol);

/// Weighted keypoints: K world-space points with normalized weights.
struct KeypointSet {
  std::vector<Vec3> points;     // world mm
  std::vector<double> weights;  // sum 1 (all zero if the volume is empty)
  std::vector<int> channel_ids;
  /// RMS spatial radius of each channel about its centroid (mm); large
  /// values mark diffuse or multi-lobed channels whose centroids are the
  /// least reliable landmarks.
  std::vector<double> dispersion_mm;
};

struct KeypointBankConfig {
  int num_channels = 128;
  /// K+1 strictly increasing positions in [0,100], percent of the
  /// normalized [0,1] intensity range; empty selects uniform edges over
  /// [5,100] (the 5% floor keeps the zero background out of every band).
  std::vector<double> percentile_edges;
  /// 0 selects 2 * max(spacing).
  double smoothing_sigma_mm = 0.0;

  std::vector<double> resolved_edges() const;
  double resolved_sigma(const Grid& grid) const;
  void validate() const;
};

/// Smoothed soft-indicator band channels; each keypoint is the channel's
/// mass centroid in world mm, its weight the channel mass (normalized).
/// Channels with mass below 1e-9 get weight 0 and sit at the grid center.
/// Input must be normalized to [0,1].
KeypointSet extract_keypoints(const Volume3& vol, const KeypointBankConfig& cfg);

}  // namespace unimo::volume

#endif
