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
#include "unimo/unimo.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "unimo/config.hpp"
#include "unimo/errors.hpp"
#include "unimo/eval.hpp"
#include "unimo/io.hpp"
#include "unimo/parallel.hpp"
#include "unimo/pipeline.hpp"
#include "unimo/synth.hpp"

using nlohmann::json;

struct unimo_volume {
  std::optional<unimo::volume::Volume3> vol;
  std::optional<unimo::volume::Mask3> mask;

  const unimo::volume::Grid& grid() const { return vol ? vol->grid : mask->grid; }
  unimo::volume::Volume3 as_volume() const {
    if (vol) return *vol;
    unimo::volume::Volume3 v(mask->grid);
    for (size_t i = 0; i < v.data.size(); ++i) v.data[i] = mask->data[i] ? 1.0 : 0.0;
    return v;
  }
};

struct unimo_result {
  bool is_sequence = false;
  json result_json;
  // registration payloads
  std::optional<unimo::volume::Volume3> warped;
  std::optional<unimo::pipeline::RegistrationResult> registration;
  std::optional<unimo::spectral::SpectralOperators> ops;
  // tracking payloads
  std::optional<unimo::pipeline::SequenceResult> sequence;
  std::vector<unimo::volume::Volume3> frames;
};

namespace {

thread_local std::string g_last_error;

unimo_status map_code(unimo::ErrorCode code) {
  using unimo::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return UNIMO_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return UNIMO_ERR_IO;
    case ErrorCode::Format: return UNIMO_ERR_FORMAT;
    case ErrorCode::GridMismatch: return UNIMO_ERR_GRID_MISMATCH;
    case ErrorCode::DegenerateConfiguration: return UNIMO_ERR_DEGENERATE;
    case ErrorCode::TooFewChannels: return UNIMO_ERR_TOO_FEW_CHANNELS;
    case ErrorCode::EmptyMask: return UNIMO_ERR_EMPTY_MASK;
    case ErrorCode::ConstantVolume: return UNIMO_ERR_CONSTANT_VOLUME;
    case ErrorCode::NonFinite: return UNIMO_ERR_NONFINITE;
    case ErrorCode::BandExceedsGrid: return UNIMO_ERR_BAND_EXCEEDS_GRID;
    case ErrorCode::TooFewFrames: return UNIMO_ERR_TOO_FEW_FRAMES;
    case ErrorCode::MissingCase: return UNIMO_ERR_MISSING_CASE;
    case ErrorCode::Solver: return UNIMO_ERR_SOLVER;
  }
  return UNIMO_ERR_UNKNOWN;
}

template <typename F>
unimo_status guarded(F&& f) {
  try {
    f();
    return UNIMO_OK;
  } catch (const unimo::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UNIMO_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return UNIMO_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check_arg(bool ok, const char* message) {
  unimo::require(ok, unimo::ErrorCode::InvalidArgument, message);
}

unimo::config::RunConfig parse_config(const char* config_json) {
  if (!config_json || std::strlen(config_json) == 0) return unimo::config::RunConfig{};
  json j = json::parse(config_json, nullptr, /*allow_exceptions=*/false);
  unimo::require(!j.is_discarded(), unimo::ErrorCode::Format, "config is not valid JSON");
  return unimo::config::RunConfig::from_json(j);
}

// shared preprocessing: images intensity-normalized, masks become
// windowed smoothed distance maps
unimo::rigid::ModalityPair build_pair(const unimo_volume* source, const unimo_volume* target,
                                      const unimo_volume* source_mask,
                                      const unimo_volume* target_mask,
                                      const unimo::config::RunConfig& cfg) {
  check_arg(source && target, "source and target volumes are required");
  check_arg((source_mask == nullptr) == (target_mask == nullptr),
            "masks must be provided for both source and target or neither");

  unimo::rigid::ModalityPair pair;
  pair.source_image = unimo::rigid::prepare_image_channel(source->as_volume(), cfg.presmooth_sigma_mm);
  pair.target_image = unimo::rigid::prepare_image_channel(target->as_volume(), cfg.presmooth_sigma_mm);
  if (source_mask) {
    check_arg(source_mask->mask.has_value() && target_mask->mask.has_value(),
              "mask arguments must hold u8 masks");
    pair.source_shape = unimo::rigid::make_shape_channel(*source_mask->mask, cfg.shape_cap_mm);
    pair.target_shape = unimo::rigid::make_shape_channel(*target_mask->mask, cfg.shape_cap_mm);
  }
  pair.validate();
  return pair;
}

}  // namespace

extern "C" {

const char* unimo_version(void) { return "0.1.0"; }

const char* unimo_last_error_message(void) { return g_last_error.c_str(); }

void unimo_string_free(char* s) { std::free(s); }

unimo_status unimo_set_threads(int n) {
  return guarded([&] {
    check_arg(n >= 1, "thread count must be at least 1");
    unimo::set_max_threads(n);
  });
}

unimo_status unimo_volume_read(const char* path, unimo_volume** out) {
  return guarded([&] {
    check_arg(path && out, "path and output handle are required");
    auto content = unimo::io::read_mvol(path);
    auto* handle = new unimo_volume;
    handle->vol = std::move(content.vol);
    handle->mask = std::move(content.mask);
    *out = handle;
  });
}

unimo_status unimo_volume_write(const unimo_volume* vol, const char* path) {
  return guarded([&] {
    check_arg(vol && path, "volume and path are required");
    if (vol->vol)
      unimo::io::write_mvol(path, *vol->vol);
    else
      unimo::io::write_mvol(path, *vol->mask);
  });
}

void unimo_volume_free(unimo_volume* vol) { delete vol; }

unimo_status unimo_volume_dims(const unimo_volume* vol, int dims[3]) {
  return guarded([&] {
    check_arg(vol && dims, "volume and output array are required");
    for (int a = 0; a < 3; ++a) dims[a] = vol->grid().dims[a];
  });
}

unimo_status unimo_volume_spacing(const unimo_volume* vol, double spacing_mm[3]) {
  return guarded([&] {
    check_arg(vol && spacing_mm, "volume and output array are required");
    for (int a = 0; a < 3; ++a) spacing_mm[a] = vol->grid().spacing_mm[a];
  });
}

int unimo_volume_is_mask(const unimo_volume* vol) {
  return vol && vol->mask.has_value() ? 1 : 0;
}

unimo_status unimo_phantom(const char* kind, const int dims[3], const double spacing_mm[3],
                           uint64_t seed, unimo_volume** out_vol, unimo_volume** out_mask) {
  return guarded([&] {
    check_arg(kind && dims && spacing_mm && out_vol && out_mask, "all arguments are required");
    unimo::volume::Grid grid;
    for (int a = 0; a < 3; ++a) {
      grid.dims[a] = dims[a];
      grid.spacing_mm[a] = spacing_mm[a];
      // center the grid on the world origin
      grid.origin_mm[a] = -0.5 * (dims[a] - 1) * spacing_mm[a];
    }
    auto [vol, mask] = unimo::synth::make_phantom(kind, grid, seed);
    auto* hv = new unimo_volume;
    hv->vol = std::move(vol);
    auto* hm = new unimo_volume;
    hm->mask = std::move(mask);
    *out_vol = hv;
    *out_mask = hm;
  });
}

unimo_status unimo_simulate_motion(const unimo_volume* vol, const char* regime, uint64_t seed,
                                   unimo_volume** out_moved, char** out_truth_json) {
  return guarded([&] {
    check_arg(vol && regime && out_moved && out_truth_json, "all arguments are required");
    auto reg = unimo::eval::MotionRegime::named(regime);
    auto truth = unimo::eval::sample_motion(vol->grid(), reg, seed);

    auto* handle = new unimo_volume;
    if (vol->vol) {
      handle->vol = unimo::volume::resample_rigid(*vol->vol, truth, vol->vol->grid);
    } else {
      handle->mask = unimo::volume::resample_mask(*vol->mask, truth, vol->mask->grid);
    }
    *out_moved = handle;

    auto pivot = vol->grid().center();
    json truth_json{{"regime", reg.name},
                    {"seed", seed},
                    {"transform", unimo::io::transform_to_json(truth)},
                    {"correction", unimo::io::transform_to_json(unimo::geometry::inverse(truth))},
                    {"pivot_mm", {pivot[0], pivot[1], pivot[2]}}};
    *out_truth_json = dup_string(truth_json.dump(2));
  });
}

unimo_status unimo_apply_rigid(const unimo_volume* vol, const char* transform_json,
                               unimo_volume** out) {
  return guarded([&] {
    check_arg(vol && transform_json && out, "all arguments are required");
    json j = json::parse(transform_json, nullptr, /*allow_exceptions=*/false);
    unimo::require(!j.is_discarded(), unimo::ErrorCode::Format, "transform is not valid JSON");
    if (j.contains("transform")) j = j.at("transform");
    auto q = unimo::io::transform_from_json(j);
    auto* handle = new unimo_volume;
    if (vol->vol)
      handle->vol = unimo::volume::resample_rigid(*vol->vol, q, vol->vol->grid);
    else
      handle->mask = unimo::volume::resample_mask(*vol->mask, q, vol->mask->grid);
    *out = handle;
  });
}

unimo_status unimo_register_pair(const unimo_volume* source, const unimo_volume* target,
                                 const unimo_volume* source_mask, const unimo_volume* target_mask,
                                 const char* config_json, unimo_result** out) {
  return guarded([&] {
    check_arg(out, "output handle is required");
    auto cfg = parse_config(config_json);
    auto pair = build_pair(source, target, source_mask, target_mask, cfg);
    auto jc = cfg.joint_config();

    auto result = unimo::pipeline::joint_register(pair, jc);
    auto warped = unimo::pipeline::apply_correction(pair.source_image, result,
                                                    pair.target_image.grid);

    json j = unimo::io::registration_result_to_json(result);
    j["config"] = cfg.echo_json();
    if (source_mask) {
      // overlap of the corrected source mask with the target mask
      auto moved_mask = unimo::volume::resample_mask(*source_mask->mask,
                                                     result.rigid_report.q_fused,
                                                     target_mask->mask->grid);
      if (result.deform_image)
        moved_mask = unimo::volume::warp_mask(moved_mask, result.deform_image->realized_field);
      j["dice"] = unimo::eval::dice(moved_mask, *target_mask->mask);
    }
    auto pivot = pair.target_image.grid.center();
    j["pivot_mm"] = {pivot[0], pivot[1], pivot[2]};

    auto* handle = new unimo_result;
    handle->result_json = std::move(j);
    handle->warped = std::move(warped);
    handle->registration = std::move(result);
    if (jc.deformation_enabled)
      handle->ops = unimo::spectral::SpectralOperators::create(jc.band,
                                                               pair.target_image.grid.dims,
                                                               jc.alpha, jc.power);
    *out = handle;
  });
}

unimo_status unimo_track_sequence(const unimo_volume* const* frames, int num_frames,
                                  const unimo_volume* const* masks, const char* config_json,
                                  unimo_result** out) {
  return guarded([&] {
    check_arg(frames && out, "frames and output handle are required");
    check_arg(num_frames >= 2, "tracking needs at least 2 frames");
    auto cfg = parse_config(config_json);

    std::vector<unimo::volume::Volume3> vols;
    vols.reserve(num_frames);
    for (int i = 0; i < num_frames; ++i) {
      check_arg(frames[i] != nullptr, "frame handles must not be null");
      vols.push_back(unimo::rigid::prepare_image_channel(frames[i]->as_volume(), cfg.presmooth_sigma_mm));
    }
    std::vector<unimo::volume::Mask3> mask_vols;
    if (masks) {
      for (int i = 0; i < num_frames; ++i) {
        check_arg(masks[i] != nullptr && masks[i]->mask.has_value(),
                  "mask handles must hold u8 masks");
        mask_vols.push_back(*masks[i]->mask);
      }
    }

    auto jc = cfg.joint_config();
    auto seq = unimo::pipeline::track_sequence(vols, masks ? &mask_vols : nullptr, jc);

    json j = unimo::io::sequence_result_to_json(seq);
    j["config"] = cfg.echo_json();

    auto* handle = new unimo_result;
    handle->is_sequence = true;
    handle->result_json = std::move(j);
    handle->sequence = std::move(seq);
    for (int i = 0; i < num_frames; ++i) handle->frames.push_back(frames[i]->as_volume());
    *out = handle;
  });
}

void unimo_result_free(unimo_result* result) { delete result; }

unimo_status unimo_result_json(const unimo_result* result, char** out_json) {
  return guarded([&] {
    check_arg(result && out_json, "result and output pointer are required");
    *out_json = dup_string(result->result_json.dump(2));
  });
}

unimo_status unimo_result_warped(const unimo_result* result, unimo_volume** out) {
  return guarded([&] {
    check_arg(result && out, "result and output handle are required");
    check_arg(result->warped.has_value(), "result has no warped volume (tracking result?)");
    auto* handle = new unimo_volume;
    handle->vol = *result->warped;
    *out = handle;
  });
}

unimo_status unimo_result_corrected_frame(const unimo_result* result, int index,
                                          unimo_volume** out) {
  return guarded([&] {
    check_arg(result && out, "result and output handle are required");
    check_arg(result->is_sequence && result->sequence.has_value(),
              "corrected frames exist only on tracking results");
    check_arg(index >= 0 && index < static_cast<int>(result->frames.size()),
              "frame index out of range");
    auto* handle = new unimo_volume;
    handle->vol = unimo::volume::resample_rigid(result->frames[index],
                                                result->sequence->to_reference[index],
                                                result->frames[index].grid);
    *out = handle;
  });
}

unimo_status unimo_result_write_bvel(const unimo_result* result, const char* channel,
                                     const char* path) {
  return guarded([&] {
    check_arg(result && channel && path, "all arguments are required");
    check_arg(result->registration.has_value(), "velocities exist only on registration results");
    check_arg(result->ops.has_value(), "deformation was disabled for this run");
    std::string ch = channel;
    const auto& reg = *result->registration;
    if (ch == "image") {
      check_arg(reg.deform_image.has_value(), "no image-channel deformation in this result");
      unimo::io::write_bvel(path, reg.deform_image->v0, *result->ops);
    } else if (ch == "shape") {
      check_arg(reg.deform_shape.has_value(), "no shape-channel deformation in this result");
      unimo::io::write_bvel(path, reg.deform_shape->v0, *result->ops);
    } else {
      check_arg(false, "channel must be 'image' or 'shape'");
    }
  });
}

unimo_status unimo_evaluate(const char* results_json, const char* truths_json,
                            char** out_report_json, char** out_report_csv) {
  return guarded([&] {
    check_arg(results_json && truths_json && out_report_json && out_report_csv,
              "all arguments are required");
    json jr = json::parse(results_json, nullptr, false);
    json jt = json::parse(truths_json, nullptr, false);
    unimo::require(!jr.is_discarded() && !jt.is_discarded(), unimo::ErrorCode::Format,
                   "evaluation inputs are not valid JSON");
    unimo::require(jr.is_array() && jt.is_array(), unimo::ErrorCode::Format,
                   "evaluation inputs must be JSON arrays");

    std::vector<unimo::eval::CaseResult> results;
    for (const auto& e : jr) {
      unimo::eval::CaseResult r;
      r.case_id = e.at("case_id").get<std::string>();
      r.predicted = unimo::io::transform_from_json(e.at("transform"));
      if (e.contains("regime")) r.regime = e.at("regime").get<std::string>();
      if (e.contains("pivot_mm")) {
        auto p = e.at("pivot_mm");
        r.pivot = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
      }
      if (e.contains("dice")) r.dice = e.at("dice").get<double>();
      if (e.contains("tsnr_median")) r.tsnr_median = e.at("tsnr_median").get<double>();
      if (e.contains("wall_time_s")) r.wall_time_s = e.at("wall_time_s").get<double>();
      results.push_back(std::move(r));
    }
    std::vector<unimo::eval::CaseTruth> truths;
    for (const auto& e : jt) {
      unimo::eval::CaseTruth t;
      t.case_id = e.at("case_id").get<std::string>();
      t.truth = unimo::io::transform_from_json(e.at("transform"));
      if (e.contains("regime")) t.regime = e.at("regime").get<std::string>();
      truths.push_back(std::move(t));
    }

    auto report = unimo::eval::evaluate_run(results, truths);
    *out_report_json = dup_string(unimo::io::metric_report_to_json(report).dump(2));
    *out_report_csv = dup_string(unimo::io::metric_report_to_csv(report));
  });
}

}  // extern "C"
