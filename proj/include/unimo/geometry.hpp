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
#ifndef UNIMO_GEOMETRY_HPP
#define UNIMO_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace unimo::geometry {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 mat_apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

/// Unit quaternion (w, x, y, z). q and -q encode the same rotation; the
/// canonical form picks w >= 0 (tie: first nonzero of x,y,z positive).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle_rad);
  /// Shepperd's branch-on-largest-diagonal conversion; stable for all rotations.
  static Quaternion from_matrix(const Mat3& m);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion negated() const { return {-w, -x, -y, -z}; }
  Quaternion normalized() const;
  Quaternion canonical() const;
  Quaternion operator*(const Quaternion& o) const;

  Mat3 to_matrix() const;
  Vec3 rotate(const Vec3& v) const;
};

/// Rotation angle between two unit quaternions, degrees in [0, 180].
double rotation_angle_deg(const Quaternion& a, const Quaternion& b);

/// Rigid transform Q: v -> R v + T, translation in mm.
struct RigidTransform {
  Quaternion rotation;
  Vec3 translation{0.0, 0.0, 0.0};

  static RigidTransform identity() { return {}; }

  Mat3 matrix() const { return rotation.to_matrix(); }
  /// 4x4 homogeneous matrix, 16 row-major values.
  std::array<double, 16> matrix4() const;

  Vec3 apply(const Vec3& v) const { return rotation.rotate(v) + translation; }
};

/// compose(a, b): apply b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& q);
inline Vec3 apply_to_point(const RigidTransform& q, const Vec3& v) { return q.apply(v); }

/// Rotation about an arbitrary pivot: x -> R (x - pivot) + pivot + t.
RigidTransform rigid_about_pivot(const Quaternion& rotation, const Vec3& pivot, const Vec3& t);

double rotation_geodesic_angle(const RigidTransform& a, const RigidTransform& b);

/// Weighted point correspondence for the closed-form rigid solve.
/// Weights are normalized to sum 1 on construction.
struct PointCorrespondence {
  std::vector<Vec3> source_points;
  std::vector<Vec3> target_points;
  std::vector<double> weights;

  PointCorrespondence(std::vector<Vec3> src, std::vector<Vec3> tgt, std::vector<double> w);
};

struct KabschReport {
  std::array<double, 3> singular_values{0, 0, 0};  // descending
  bool reflection_corrected = false;
  double residual_rms = 0.0;  // mm
};

/// Closed-form weighted least-squares rigid transform source -> target:
/// R = V diag(1,1,det(V U^T)) U^T from the SVD of the weighted cross-covariance
/// of the centered sets, T = centroid_target - R centroid_source.
/// Throws DegenerateConfiguration when the two smallest singular values are
/// both below 1e-9 times the largest.
std::pair<RigidTransform, KabschReport> kabsch_solve(const PointCorrespondence& corr);

/// SO(3)-geodesic fusion: hemisphere-aligned SLERP on rotations at weight
/// lambda in [0,1], linear blend of translations. lambda 0/1 return the
/// inputs bit-identically (rotation in canonical form).
RigidTransform slerp_fuse(const RigidTransform& q_image, const RigidTransform& q_shape, double lambda);

}  // namespace unimo::geometry

#endif
