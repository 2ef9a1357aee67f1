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
#ifndef UNIMO_EVAL_HPP
#define UNIMO_EVAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unimo/geometry.hpp"
#include "unimo/volume.hpp"

namespace unimo::eval {

/// Simulated-motion magnitude bounds.
struct MotionRegime {
  double t_max_mm = 10.0;
  double r_max_deg = 5.0;
  std::string name = "small";

  static MotionRegime small() { return {10.0, 5.0, "small"}; }
  static MotionRegime medium() { return {20.0, 10.0, "medium"}; }
  static MotionRegime large() { return {30.0, 20.0, "large"}; }
  static MotionRegime named(const std::string& name);
};

/// Rotation axis uniform on the sphere, angle uniform in [0, r_max],
/// translation components uniform in [-t_max, t_max]; rotation taken about
/// the volume center. Deterministic per seed; returns the moved volume and
/// the exact applied world transform.
std::pair<volume::Volume3, geometry::RigidTransform> simulate_motion(
    const volume::Volume3& vol, const MotionRegime& regime, std::uint64_t seed);

/// Draws only the truth transform (same sampling law as simulate_motion).
geometry::RigidTransform sample_motion(const volume::Grid& grid, const MotionRegime& regime,
                                       std::uint64_t seed);

/// (translation error mm, angular error deg); the translational part is
/// pivot-consistent: || pred(pivot) - truth(pivot) ||.
std::pair<double, double> transform_error(const geometry::RigidTransform& pred,
                                          const geometry::RigidTransform& truth,
                                          const geometry::Vec3& pivot);

/// 2|A n B| / (|A| + |B|); both masks empty counts as 1.
double dice(const volume::Mask3& a, const volume::Mask3& b);

struct TsnrResult {
  volume::Volume3 map;          // temporal mean / temporal std (population)
  volume::Mask3 constant_mask;  // voxels with std < 1e-12, mapped to 0
};

/// Needs at least 3 congruent frames.
TsnrResult tsnr(const std::vector<volume::Volume3>& series);

/// Median of the tSNR map, optionally restricted to a mask.
double median_tsnr(const std::vector<volume::Volume3>& series,
                   const volume::Mask3* mask = nullptr);

struct CaseResult {
  std::string case_id;
  std::string regime;
  geometry::RigidTransform predicted;
  geometry::Vec3 pivot{0, 0, 0};
  std::optional<double> dice;
  std::optional<double> tsnr_median;
  double wall_time_s = 0.0;
};

struct CaseTruth {
  std::string case_id;
  geometry::RigidTransform truth;
  std::string regime;
};

struct CaseRow {
  std::string case_id;
  std::string regime;
  double trans_err_mm = 0.0;
  double ang_err_deg = 0.0;
  std::optional<double> dice;
  std::optional<double> tsnr_median;
  double wall_time_s = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct MetricReport {
  std::vector<CaseRow> rows;  // case-id sorted
  Aggregate trans_err_mm;
  Aggregate ang_err_deg;
  Aggregate dice;
  Aggregate tsnr_median;
};

/// Joins predictions and truths by case id (every prediction must have a
/// truth, else MissingCase) and aggregates mean/median/stddev.
MetricReport evaluate_run(const std::vector<CaseResult>& results,
                          const std::vector<CaseTruth>& truths);

double median(std::vector<double> values);

}  // namespace unimo::eval

#endif
