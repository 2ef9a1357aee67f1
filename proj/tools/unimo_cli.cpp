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

// Command-line front end; talks to the engine exclusively through the
// C API in unimo/unimo.h.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unimo/unimo.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

int exit_code_for(unimo_status status) {
  switch (status) {
    case UNIMO_OK:
      return kExitOk;
    case UNIMO_ERR_INVALID_ARGUMENT:
    case UNIMO_ERR_IO:
    case UNIMO_ERR_FORMAT:
    case UNIMO_ERR_GRID_MISMATCH:
    case UNIMO_ERR_EMPTY_MASK:
    case UNIMO_ERR_TOO_FEW_FRAMES:
    case UNIMO_ERR_MISSING_CASE:
      return kExitInput;
    default:
      return kExitSolver;
  }
}

// thrown to unwind into main's handler with the proper exit code
struct CliError {
  int code;
  std::string message;
};

void check(unimo_status status, const std::string& context) {
  if (status == UNIMO_OK) return;
  throw CliError{exit_code_for(status), context + ": " + unimo_last_error_message()};
}

struct VolumeHandle {
  unimo_volume* ptr = nullptr;
  VolumeHandle() = default;
  explicit VolumeHandle(unimo_volume* p) : ptr(p) {}
  VolumeHandle(VolumeHandle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
  VolumeHandle& operator=(VolumeHandle&& o) noexcept {
    if (this != &o) {
      unimo_volume_free(ptr);
      ptr = o.ptr;
      o.ptr = nullptr;
    }
    return *this;
  }
  VolumeHandle(const VolumeHandle&) = delete;
  VolumeHandle& operator=(const VolumeHandle&) = delete;
  ~VolumeHandle() { unimo_volume_free(ptr); }
};

VolumeHandle read_volume(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitInput, "input file does not exist: " + path};
  unimo_volume* v = nullptr;
  check(unimo_volume_read(path.c_str(), &v), "reading " + path);
  return VolumeHandle{v};
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  unimo_string_free(s);
  return out;
}

std::string read_text(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitInput, "file does not exist: " + path};
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw CliError{kExitInput, "cannot write " + path};
  out << content;
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw CliError{kExitInput, what + " is not valid JSON"};
  return j;
}

std::string load_config_text(const std::string& path) {
  if (path.empty()) return "";
  return read_text(path);
}

std::string case_id_from_prefix(const std::string& prefix) {
  return fs::path(prefix).filename().string();
}

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("UNIMO_THREADS")) threads = std::atoi(env);
  }
  if (threads <= 0) threads = 1;
  check(unimo_set_threads(threads), "setting threads");
}

std::vector<std::string> collect_mvols(const std::string& dir) {
  if (!fs::is_directory(dir)) throw CliError{kExitInput, "not a directory: " + dir};
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mvol")
      paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

int cmd_register(const std::string& source, const std::string& target,
                 const std::string& source_mask, const std::string& target_mask,
                 const std::string& config_path, const std::string& out_prefix, int threads,
                 std::string case_id) {
  apply_threads(threads);
  if (source_mask.empty() != target_mask.empty())
    throw CliError{kExitInput, "--source-mask and --target-mask must be given together"};

  VolumeHandle src = read_volume(source);
  VolumeHandle tgt = read_volume(target);
  VolumeHandle smask, tmask;
  if (!source_mask.empty()) {
    smask = read_volume(source_mask);
    tmask = read_volume(target_mask);
  }

  std::string config = load_config_text(config_path);
  unimo_result* result = nullptr;
  check(unimo_register_pair(src.ptr, tgt.ptr, smask.ptr, tmask.ptr,
                            config.empty() ? nullptr : config.c_str(), &result),
        "registration");
  std::unique_ptr<unimo_result, decltype(&unimo_result_free)> guard(result, unimo_result_free);

  char* raw = nullptr;
  check(unimo_result_json(result, &raw), "result serialization");
  json j = parse_json(take_string(raw), "result");
  if (case_id.empty()) case_id = case_id_from_prefix(out_prefix);
  j["case_id"] = case_id;
  write_text(out_prefix + "_result.json", j.dump(2) + "\n");

  unimo_volume* warped = nullptr;
  check(unimo_result_warped(result, &warped), "warped volume");
  VolumeHandle wh{warped};
  check(unimo_volume_write(warped, (out_prefix + "_warped.mvol").c_str()), "writing warped");

  if (j.contains("deform_image"))
    check(unimo_result_write_bvel(result, "image", (out_prefix + "_v0_image.bvel").c_str()),
          "writing image velocity");
  if (j.contains("deform_shape"))
    check(unimo_result_write_bvel(result, "shape", (out_prefix + "_v0_shape.bvel").c_str()),
          "writing shape velocity");

  std::cout << "registered " << case_id << ": lambda=" << j["rigid"]["lambda"]
            << " final_loss=" << j["rigid"]["final_loss"] << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& input, const std::string& mask_path,
                 const std::string& regime, std::uint64_t seed, const std::string& out_prefix,
                 int threads) {
  apply_threads(threads);
  VolumeHandle vol = read_volume(input);

  unimo_volume* moved = nullptr;
  char* truth_raw = nullptr;
  check(unimo_simulate_motion(vol.ptr, regime.c_str(), seed, &moved, &truth_raw), "simulation");
  VolumeHandle mh{moved};

  json truth = parse_json(take_string(truth_raw), "truth");
  truth["case_id"] = case_id_from_prefix(out_prefix);
  write_text(out_prefix + "_truth.json", truth.dump(2) + "\n");
  check(unimo_volume_write(moved, (out_prefix + "_moved.mvol").c_str()), "writing moved volume");

  if (!mask_path.empty()) {
    VolumeHandle mask = read_volume(mask_path);
    unimo_volume* moved_mask = nullptr;
    check(unimo_apply_rigid(mask.ptr, truth["transform"].dump().c_str(), &moved_mask),
          "moving mask");
    VolumeHandle mm{moved_mask};
    check(unimo_volume_write(moved_mask, (out_prefix + "_moved_mask.mvol").c_str()),
          "writing moved mask");
  }
  std::cout << "simulated " << regime << " motion (seed " << seed << ") -> " << out_prefix
            << "_moved.mvol\n";
  return kExitOk;
}

int cmd_track(const std::string& frames_dir, const std::string& masks_dir,
              const std::string& config_path, const std::string& out_prefix, bool write_corrected,
              int threads) {
  apply_threads(threads);
  auto frame_paths = collect_mvols(frames_dir);
  if (frame_paths.size() < 2)
    throw CliError{kExitInput, "need at least 2 .mvol frames in " + frames_dir};

  std::vector<VolumeHandle> frames;
  std::vector<const unimo_volume*> frame_ptrs;
  for (const auto& p : frame_paths) {
    frames.push_back(read_volume(p));
    frame_ptrs.push_back(frames.back().ptr);
  }

  std::vector<VolumeHandle> masks;
  std::vector<const unimo_volume*> mask_ptrs;
  if (!masks_dir.empty()) {
    auto mask_paths = collect_mvols(masks_dir);
    if (mask_paths.size() != frame_paths.size())
      throw CliError{kExitInput, "need one mask per frame"};
    for (const auto& p : mask_paths) {
      masks.push_back(read_volume(p));
      mask_ptrs.push_back(masks.back().ptr);
    }
  }

  std::string config = load_config_text(config_path);
  unimo_result* result = nullptr;
  check(unimo_track_sequence(frame_ptrs.data(), static_cast<int>(frame_ptrs.size()),
                             mask_ptrs.empty() ? nullptr : mask_ptrs.data(),
                             config.empty() ? nullptr : config.c_str(), &result),
        "tracking");
  std::unique_ptr<unimo_result, decltype(&unimo_result_free)> guard(result, unimo_result_free);

  char* raw = nullptr;
  check(unimo_result_json(result, &raw), "result serialization");
  json j = parse_json(take_string(raw), "result");
  j["case_id"] = case_id_from_prefix(out_prefix);
  j["frame_files"] = frame_paths;
  write_text(out_prefix + "_track.json", j.dump(2) + "\n");

  if (write_corrected) {
    for (size_t t = 0; t < frame_paths.size(); ++t) {
      unimo_volume* corrected = nullptr;
      check(unimo_result_corrected_frame(result, static_cast<int>(t), &corrected),
            "corrected frame");
      VolumeHandle ch{corrected};
      std::ostringstream name;
      name << out_prefix << "_corrected_" << std::setw(3) << std::setfill('0') << t << ".mvol";
      check(unimo_volume_write(corrected, name.str().c_str()), "writing corrected frame");
    }
  }
  std::cout << "tracked " << frame_paths.size() << " frames -> " << out_prefix << "_track.json\n";
  return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& result_paths,
                 const std::vector<std::string>& truth_paths, const std::string& out_prefix,
                 int threads) {
  apply_threads(threads);
  json results = json::array();
  for (const auto& p : result_paths) {
    json r = parse_json(read_text(p), p);
    json entry;
    entry["case_id"] = r.at("case_id");
    entry["transform"] = r.at("rigid").at("q_fused");
    if (r.contains("pivot_mm")) entry["pivot_mm"] = r.at("pivot_mm");
    if (r.contains("dice")) entry["dice"] = r.at("dice");
    if (r.contains("tsnr_median")) entry["tsnr_median"] = r.at("tsnr_median");
    if (r.contains("wall_time_s") && r.at("wall_time_s").contains("total"))
      entry["wall_time_s"] = r.at("wall_time_s").at("total");
    results.push_back(std::move(entry));
  }
  json truths = json::array();
  for (const auto& p : truth_paths) {
    json t = parse_json(read_text(p), p);
    json entry;
    entry["case_id"] = t.at("case_id");
    // truth files record the applied motion; its inverse is what a
    // register run of moved->original estimates
    entry["transform"] = t.contains("correction") ? t.at("correction") : t.at("transform");
    if (t.contains("regime")) entry["regime"] = t.at("regime");
    truths.push_back(std::move(entry));
  }

  char* report_json = nullptr;
  char* report_csv = nullptr;
  check(unimo_evaluate(results.dump().c_str(), truths.dump().c_str(), &report_json, &report_csv),
        "evaluation");
  std::string js = take_string(report_json);
  std::string csv = take_string(report_csv);
  write_text(out_prefix + "_report.json", js + "\n");
  write_text(out_prefix + "_report.csv", csv);

  json parsed = parse_json(js, "report");
  std::cout << "evaluated " << result_paths.size() << " cases: median trans err "
            << parsed["aggregates"]["trans_err_mm"]["median"] << " mm, median ang err "
            << parsed["aggregates"]["ang_err_deg"]["median"] << " deg\n";
  return kExitOk;
}

int cmd_phantom(const std::string& kind, std::vector<int> dims, std::vector<double> spacing,
                std::uint64_t seed, const std::string& out_prefix, int threads) {
  apply_threads(threads);
  if (dims.size() == 1) dims = {dims[0], dims[0], dims[0]};
  if (spacing.size() == 1) spacing = {spacing[0], spacing[0], spacing[0]};
  if (dims.size() != 3 || spacing.size() != 3)
    throw CliError{kExitInput, "--dims and --spacing take 1 or 3 values"};
  int d[3] = {dims[0], dims[1], dims[2]};
  double s[3] = {spacing[0], spacing[1], spacing[2]};

  unimo_volume* vol = nullptr;
  unimo_volume* mask = nullptr;
  check(unimo_phantom(kind.c_str(), d, s, seed, &vol, &mask), "phantom generation");
  VolumeHandle vh{vol}, mh{mask};
  check(unimo_volume_write(vol, (out_prefix + ".mvol").c_str()), "writing phantom");
  check(unimo_volume_write(mask, (out_prefix + "_mask.mvol").c_str()), "writing mask");
  std::cout << "phantom " << kind << " " << d[0] << "x" << d[1] << "x" << d[2] << " -> "
            << out_prefix << ".mvol\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "unimo - motion correction for 3D volumes (rigid fusion + bandlimited geodesic shooting)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(unimo_version()));

  int threads = 0;  // 0: UNIMO_THREADS env, then 1

  auto* reg = app.add_subcommand("register", "Register a source volume onto a target");
  std::string reg_source, reg_target, reg_smask, reg_tmask, reg_config, reg_out, reg_case;
  reg->add_option("--source", reg_source, "source MVOL")->required();
  reg->add_option("--target", reg_target, "target MVOL")->required();
  reg->add_option("--source-mask", reg_smask, "source mask MVOL (u8)");
  reg->add_option("--target-mask", reg_tmask, "target mask MVOL (u8)");
  reg->add_option("--config", reg_config, "JSON config file");
  reg->add_option("--out-prefix", reg_out, "output prefix")->required();
  reg->add_option("--case-id", reg_case, "case id for evaluation joins");
  reg->add_option("--threads", threads, "worker threads (UNIMO_THREADS fallback)");

  auto* sim = app.add_subcommand("simulate", "Apply seeded rigid motion to a volume");
  std::string sim_input, sim_mask, sim_regime = "small", sim_out;
  std::uint64_t sim_seed = 0;
  sim->add_option("--input", sim_input, "input MVOL")->required();
  sim->add_option("--mask", sim_mask, "optional mask moved with the same transform");
  sim->add_option("--regime", sim_regime, "small|medium|large");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out-prefix", sim_out, "output prefix")->required();
  sim->add_option("--threads", threads, "worker threads");

  auto* trk = app.add_subcommand("track", "Chained tracking of a frame sequence");
  std::string trk_frames, trk_masks, trk_config, trk_out;
  bool trk_corrected = false;
  trk->add_option("--frames-dir", trk_frames, "directory of .mvol frames (sorted)")->required();
  trk->add_option("--masks-dir", trk_masks, "directory of .mvol masks (sorted)");
  trk->add_option("--config", trk_config, "JSON config file");
  trk->add_option("--out-prefix", trk_out, "output prefix")->required();
  trk->add_flag("--write-corrected", trk_corrected, "emit motion-corrected frames");
  trk->add_option("--threads", threads, "worker threads");

  auto* ev = app.add_subcommand("evaluate", "Join result/truth JSONs into a metric report");
  std::vector<std::string> ev_results, ev_truths;
  std::string ev_out;
  ev->add_option("--results", ev_results, "result JSON files")->required()->expected(-1);
  ev->add_option("--truths", ev_truths, "truth JSON files")->required()->expected(-1);
  ev->add_option("--out-prefix", ev_out, "output prefix")->required();
  ev->add_option("--threads", threads, "worker threads");

  auto* ph = app.add_subcommand("phantom", "Generate a synthetic volume + mask");
  std::string ph_kind = "blobs", ph_out;
  std::vector<int> ph_dims{64};
  std::vector<double> ph_spacing{3.0};
  std::uint64_t ph_seed = 0;
  ph->add_option("--kind", ph_kind, "sphere|blobs");
  ph->add_option("--dims", ph_dims, "grid dims (1 or 3 values)")->expected(-1);
  ph->add_option("--spacing", ph_spacing, "voxel spacing mm (1 or 3 values)")->expected(-1);
  ph->add_option("--seed", ph_seed, "RNG seed");
  ph->add_option("--out-prefix", ph_out, "output prefix")->required();
  ph->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (reg->parsed())
      return cmd_register(reg_source, reg_target, reg_smask, reg_tmask, reg_config, reg_out,
                          threads, reg_case);
    if (sim->parsed())
      return cmd_simulate(sim_input, sim_mask, sim_regime, sim_seed, sim_out, threads);
    if (trk->parsed())
      return cmd_track(trk_frames, trk_masks, trk_config, trk_out, trk_corrected, threads);
    if (ev->parsed()) return cmd_evaluate(ev_results, ev_truths, ev_out, threads);
    if (ph->parsed()) return cmd_phantom(ph_kind, ph_dims, ph_spacing, ph_seed, ph_out, threads);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInput;
}
