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
#ifndef UNIMO_CONFIG_HPP
#define UNIMO_CONFIG_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "unimo/pipeline.hpp"

namespace unimo::config {

/// Flat key-value run configuration; unknown keys are rejected at load.
struct RunConfig {
  int band = 16;
  int steps = 10;
  int keypoints = 128;
  double alpha = 3.0;
  int p = 3;
  double sigma2 = 0.01;
  double lambda = 0.5;
  std::string lambda_mode = "auto";  // "fixed" | "auto"
  int outer_rounds = 3;
  bool deformation_enabled = true;
  int refine_max_iters = 20;
  double refine_tol_deg = 0.01;
  double refine_tol_mm = 0.01;
  int shoot_max_iters = 100;
  double keypoint_sigma_mm = 0.0;  // 0 selects 2 * max spacing
  double presmooth_sigma_mm = 0.0;  // 0 selects 1.2 * max spacing
  double shape_cap_mm = 30.0;
  std::string regime = "small";
  std::uint64_t seed = 0;
  int threads = 1;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);  // empty path gives defaults

  /// Resolved-config echo embedded in every result JSON. Excludes the
  /// thread count: results must be identical for any --threads value.
  nlohmann::json echo_json() const;

  pipeline::JointConfig joint_config() const;
  void validate() const;
};

}  // namespace unimo::config

#endif
