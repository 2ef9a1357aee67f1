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
#include "unimo/config.hpp"

#include <set>

#include "unimo/errors.hpp"
#include "unimo/io.hpp"

namespace unimo::config {

using nlohmann::json;

RunConfig RunConfig::from_json(const json& j) {
  require(j.is_object(), ErrorCode::Format, "config must be a JSON object");

  static const std::set<std::string> known = {
      "band",        "steps",           "keypoints",        "alpha",
      "p",           "sigma2",          "lambda",           "lambda_mode",
      "outer_rounds", "deformation_enabled", "refine_max_iters", "refine_tol_deg",
      "refine_tol_mm", "shoot_max_iters", "keypoint_sigma_mm", "presmooth_sigma_mm", "shape_cap_mm",
      "regime",      "seed",            "threads"};
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known.count(it.key()) > 0, ErrorCode::Format,
            "unknown config key '" + it.key() + "'");

  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("band", c.band);
  get("steps", c.steps);
  get("keypoints", c.keypoints);
  get("alpha", c.alpha);
  get("p", c.p);
  get("sigma2", c.sigma2);
  get("lambda", c.lambda);
  get("lambda_mode", c.lambda_mode);
  get("outer_rounds", c.outer_rounds);
  get("deformation_enabled", c.deformation_enabled);
  get("refine_max_iters", c.refine_max_iters);
  get("refine_tol_deg", c.refine_tol_deg);
  get("refine_tol_mm", c.refine_tol_mm);
  get("shoot_max_iters", c.shoot_max_iters);
  get("keypoint_sigma_mm", c.keypoint_sigma_mm);
  get("presmooth_sigma_mm", c.presmooth_sigma_mm);
  get("shape_cap_mm", c.shape_cap_mm);
  get("regime", c.regime);
  get("seed", c.seed);
  get("threads", c.threads);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  if (path.empty()) return RunConfig{};
  json j = json::parse(io::read_text_file(path), nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), ErrorCode::Format, "config file '" + path + "' is not valid JSON");
  return from_json(j);
}

void RunConfig::validate() const {
  require(band >= 2, ErrorCode::InvalidArgument, "band must be at least 2");
  require(steps >= 1, ErrorCode::InvalidArgument, "steps must be at least 1");
  require(keypoints >= 4, ErrorCode::InvalidArgument, "keypoints must be at least 4");
  require(alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be nonnegative");
  require(p >= 1, ErrorCode::InvalidArgument, "p must be at least 1");
  require(sigma2 > 0.0, ErrorCode::InvalidArgument, "sigma2 must be positive");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must be in [0,1]");
  require(lambda_mode == "fixed" || lambda_mode == "auto", ErrorCode::InvalidArgument,
          "lambda_mode must be fixed or auto");
  require(outer_rounds >= 1, ErrorCode::InvalidArgument, "outer_rounds must be at least 1");
  require(refine_max_iters >= 0, ErrorCode::InvalidArgument, "refine_max_iters must be >= 0");
  require(shoot_max_iters >= 0, ErrorCode::InvalidArgument, "shoot_max_iters must be >= 0");
  require(keypoint_sigma_mm >= 0.0, ErrorCode::InvalidArgument, "keypoint sigma must be >= 0");
  require(presmooth_sigma_mm >= 0.0, ErrorCode::InvalidArgument, "presmooth sigma must be >= 0");
  require(shape_cap_mm > 0.0, ErrorCode::InvalidArgument, "shape_cap_mm must be positive");
  require(regime == "small" || regime == "medium" || regime == "large",
          ErrorCode::InvalidArgument, "regime must be small, medium, or large");
  require(threads >= 1, ErrorCode::InvalidArgument, "threads must be at least 1");
}

json RunConfig::echo_json() const {
  return json{{"band", band},
              {"steps", steps},
              {"keypoints", keypoints},
              {"alpha", alpha},
              {"p", p},
              {"sigma2", sigma2},
              {"lambda", lambda},
              {"lambda_mode", lambda_mode},
              {"outer_rounds", outer_rounds},
              {"deformation_enabled", deformation_enabled},
              {"refine_max_iters", refine_max_iters},
              {"refine_tol_deg", refine_tol_deg},
              {"refine_tol_mm", refine_tol_mm},
              {"shoot_max_iters", shoot_max_iters},
              {"keypoint_sigma_mm", keypoint_sigma_mm},
              {"presmooth_sigma_mm", presmooth_sigma_mm},
              {"shape_cap_mm", shape_cap_mm},
              {"regime", regime},
              {"seed", seed}};
}

pipeline::JointConfig RunConfig::joint_config() const {
  pipeline::JointConfig jc;
  jc.outer_rounds = outer_rounds;
  jc.deformation_enabled = deformation_enabled;
  jc.band = band;
  jc.alpha = alpha;
  jc.power = p;
  jc.sigma2 = sigma2;
  jc.steps = steps;
  jc.shoot_max_iters = shoot_max_iters;

  jc.rigid.image_bank.num_channels = keypoints;
  jc.rigid.image_bank.smoothing_sigma_mm = keypoint_sigma_mm;
  jc.rigid.shape_bank.num_channels = keypoints;
  // keep the shape bank's closed-top edges but honor the channel count
  jc.rigid.shape_bank.percentile_edges.resize(keypoints + 1);
  for (int i = 0; i <= keypoints; ++i)
    jc.rigid.shape_bank.percentile_edges[i] = 5.0 + 85.0 * static_cast<double>(i) / keypoints;
  jc.rigid.shape_bank.smoothing_sigma_mm = keypoint_sigma_mm;
  jc.rigid.fusion.lambda = lambda;
  jc.rigid.fusion.mode =
      lambda_mode == "auto" ? rigid::FusionWeight::Mode::Auto : rigid::FusionWeight::Mode::Fixed;
  jc.rigid.refine_max_iters = refine_max_iters;
  jc.rigid.refine_tol_deg = refine_tol_deg;
  jc.rigid.refine_tol_mm = refine_tol_mm;
  return jc;
}

}  // namespace unimo::config
