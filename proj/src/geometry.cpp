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
#include "unimo/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>

#include "unimo/errors.hpp"

namespace unimo::geometry {

Quaternion Quaternion::normalized() const {
  double n = norm();
  require(n > 0.0, ErrorCode::InvalidArgument, "cannot normalize zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::canonical() const {
  if (w > 0.0) return *this;
  if (w < 0.0) return negated();
  for (double c : {x, y, z}) {
    if (c > 0.0) return *this;
    if (c < 0.0) return negated();
  }
  return *this;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  double n = geometry::norm(axis);
  require(n > 0.0, ErrorCode::InvalidArgument, "rotation axis must be nonzero");
  double h = 0.5 * angle_rad;
  double s = std::sin(h) / n;
  Quaternion q{std::cos(h), s * axis[0], s * axis[1], s * axis[2]};
  return q.normalized().canonical();
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z,
          w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x,
          w * o.z + x * o.y - y * o.x + z * o.w};
}

Mat3 Quaternion::to_matrix() const {
  double xx = x * x, yy = y * y, zz = z * z;
  double xy = x * y, xz = x * z, yz = y * z;
  double wx = w * x, wy = w * y, wz = w * z;
  return {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz),       2.0 * (xz + wy),
          2.0 * (xy + wz),       1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
          2.0 * (xz - wy),       2.0 * (yz + wx),       1.0 - 2.0 * (xx + yy)};
}

Quaternion Quaternion::from_matrix(const Mat3& m) {
  const double m00 = m[0], m01 = m[1], m02 = m[2];
  const double m10 = m[3], m11 = m[4], m12 = m[5];
  const double m20 = m[6], m21 = m[7], m22 = m[8];
  const double trace = m00 + m11 + m22;

  Quaternion q;
  if (trace >= m00 && trace >= m11 && trace >= m22) {
    double r = std::sqrt(1.0 + trace);
    double s = 0.5 / r;
    q = {0.5 * r, (m21 - m12) * s, (m02 - m20) * s, (m10 - m01) * s};
  } else if (m00 >= m11 && m00 >= m22) {
    double r = std::sqrt(1.0 + m00 - m11 - m22);
    double s = 0.5 / r;
    q = {(m21 - m12) * s, 0.5 * r, (m01 + m10) * s, (m02 + m20) * s};
  } else if (m11 >= m22) {
    double r = std::sqrt(1.0 - m00 + m11 - m22);
    double s = 0.5 / r;
    q = {(m02 - m20) * s, (m01 + m10) * s, 0.5 * r, (m12 + m21) * s};
  } else {
    double r = std::sqrt(1.0 - m00 - m11 + m22);
    double s = 0.5 / r;
    q = {(m10 - m01) * s, (m02 + m20) * s, (m12 + m21) * s, 0.5 * r};
  }
  return q.normalized().canonical();
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  // q v q* expanded: v + 2 w (u x v) + 2 u x (u x v), u = (x,y,z)
  Vec3 u{x, y, z};
  Vec3 t = cross(u, v);
  Vec3 tt = cross(u, t);
  return {v[0] + 2.0 * (w * t[0] + tt[0]),
          v[1] + 2.0 * (w * t[1] + tt[1]),
          v[2] + 2.0 * (w * t[2] + tt[2])};
}

double rotation_angle_deg(const Quaternion& a, const Quaternion& b) {
  // relative rotation r = a^-1 b; atan2 form is accurate for all angles
  Quaternion r = a.conjugate() * b;
  double v = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z);
  double angle = 2.0 * std::atan2(v, std::abs(r.w));
  return angle * 180.0 / M_PI;
}

std::array<double, 16> RigidTransform::matrix4() const {
  Mat3 r = matrix();
  return {r[0], r[1], r[2], translation[0],
          r[3], r[4], r[5], translation[1],
          r[6], r[7], r[8], translation[2],
          0.0,  0.0,  0.0,  1.0};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = (a.rotation * b.rotation).normalized().canonical();
  out.translation = a.rotation.rotate(b.translation) + a.translation;
  return out;
}

RigidTransform inverse(const RigidTransform& q) {
  RigidTransform out;
  out.rotation = q.rotation.conjugate().normalized().canonical();
  out.translation = -1.0 * out.rotation.rotate(q.translation);
  return out;
}

RigidTransform rigid_about_pivot(const Quaternion& rotation, const Vec3& pivot, const Vec3& t) {
  RigidTransform out;
  out.rotation = rotation.normalized().canonical();
  out.translation = pivot - out.rotation.rotate(pivot) + t;
  return out;
}

double rotation_geodesic_angle(const RigidTransform& a, const RigidTransform& b) {
  return rotation_angle_deg(a.rotation, b.rotation);
}

PointCorrespondence::PointCorrespondence(std::vector<Vec3> src, std::vector<Vec3> tgt,
                                         std::vector<double> w)
    : source_points(std::move(src)), target_points(std::move(tgt)), weights(std::move(w)) {
  require(source_points.size() == target_points.size() && source_points.size() == weights.size(),
          ErrorCode::InvalidArgument, "correspondence arrays must have equal length");
  require(source_points.size() >= 3, ErrorCode::InvalidArgument,
          "need at least 3 point correspondences");
  double sum = 0.0;
  for (double v : weights) {
    require(v >= 0.0, ErrorCode::InvalidArgument, "weights must be nonnegative");
    sum += v;
  }
  require(sum > 0.0, ErrorCode::InvalidArgument, "weights must not all be zero");
  for (double& v : weights) v /= sum;
}

std::pair<RigidTransform, KabschReport> kabsch_solve(const PointCorrespondence& corr) {
  const size_t n = corr.source_points.size();

  Vec3 centroid_src{0, 0, 0}, centroid_tgt{0, 0, 0};
  for (size_t i = 0; i < n; ++i) {
    centroid_src = centroid_src + corr.weights[i] * corr.source_points[i];
    centroid_tgt = centroid_tgt + corr.weights[i] * corr.target_points[i];
  }

  // weighted cross-covariance of the centered sets
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    Vec3 s = corr.source_points[i] - centroid_src;
    Vec3 t = corr.target_points[i] - centroid_tgt;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) h(r, c) += corr.weights[i] * s[r] * t[c];
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = svd.singularValues();  // descending

  KabschReport report;
  report.singular_values = {sv(0), sv(1), sv(2)};

  if (sv(0) <= 0.0 || (sv(1) < 1e-9 * sv(0) && sv(2) < 1e-9 * sv(0))) {
    std::ostringstream msg;
    msg << "degenerate point configuration, rotation not identifiable (singular values "
        << sv(0) << ", " << sv(1) << ", " << sv(2) << ")";
    fail(ErrorCode::DegenerateConfiguration, msg.str());
  }

  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  double d = (v * u.transpose()).determinant();
  report.reflection_corrected = d < 0.0;

  Eigen::Matrix3d rot =
      v * Eigen::Vector3d(1.0, 1.0, d < 0.0 ? -1.0 : 1.0).asDiagonal() * u.transpose();

  Mat3 rm;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rm[3 * r + c] = rot(r, c);

  RigidTransform q;
  q.rotation = Quaternion::from_matrix(rm);
  q.translation = centroid_tgt - q.rotation.rotate(centroid_src);

  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Vec3 resid = q.apply(corr.source_points[i]) - corr.target_points[i];
    ss += corr.weights[i] * dot(resid, resid);
  }
  report.residual_rms = std::sqrt(ss);

  return {q, report};
}

RigidTransform slerp_fuse(const RigidTransform& q_image, const RigidTransform& q_shape,
                          double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument,
          "fusion weight must lie in [0,1]");
  // boundary weights reproduce the inputs bit-identically
  if (lambda == 0.0) return {q_image.rotation.canonical(), q_image.translation};
  if (lambda == 1.0) return {q_shape.rotation.canonical(), q_shape.translation};

  Quaternion qi = q_image.rotation;
  Quaternion qg = q_shape.rotation;
  if (qi.dot(qg) < 0.0) qg = qg.negated();  // hemisphere alignment

  double d = std::clamp(qi.dot(qg), -1.0, 1.0);
  double theta = std::acos(d);

  Quaternion q;
  if (theta < 1e-7) {
    // normalized linear interpolation in the degenerate-angle limit
    q = {(1.0 - lambda) * qi.w + lambda * qg.w, (1.0 - lambda) * qi.x + lambda * qg.x,
         (1.0 - lambda) * qi.y + lambda * qg.y, (1.0 - lambda) * qi.z + lambda * qg.z};
  } else {
    double s = std::sin(theta);
    double a = std::sin((1.0 - lambda) * theta) / s;
    double b = std::sin(lambda * theta) / s;
    q = {a * qi.w + b * qg.w, a * qi.x + b * qg.x, a * qi.y + b * qg.y, a * qi.z + b * qg.z};
  }

  RigidTransform out;
  out.rotation = q.normalized().canonical();
  out.translation = (1.0 - lambda) * q_image.translation + lambda * q_shape.translation;
  return out;
}

}  // namespace unimo::geometry
