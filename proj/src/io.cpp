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
#include "unimo/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "unimo/errors.hpp"

namespace unimo::io {

namespace {

void write_bytes(std::ostream& out, const void* data, size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  write_bytes(out, b, 4);
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in.good(), ErrorCode::Format, "truncated container header");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

// f32 little-endian pack/unpack (host assumed IEEE-754; byte order handled)
void write_f32le(std::ostream& out, const std::vector<float>& values) {
  static_assert(sizeof(float) == 4);
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32le(out, bits);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

json grid_header(const volume::Grid& g, const char* dtype) {
  return json{{"dims", {g.dims[0], g.dims[1], g.dims[2]}},
              {"spacing_mm", {g.spacing_mm[0], g.spacing_mm[1], g.spacing_mm[2]}},
              {"origin_mm", {g.origin_mm[0], g.origin_mm[1], g.origin_mm[2]}},
              {"dtype", dtype}};
}

void write_container(const std::string& path, const char magic[8], const json& header,
                     const void* payload, size_t payload_bytes) {
  std::ofstream out = open_out(path);
  write_bytes(out, magic, 8);
  std::string hdr = header.dump();
  write_u32le(out, static_cast<std::uint32_t>(hdr.size()));
  write_bytes(out, hdr.data(), hdr.size());
  write_bytes(out, payload, payload_bytes);
  require(out.good(), ErrorCode::Io, "write failed for '" + path + "'");
}

json read_container_header(std::istream& in, const char expected_magic[8],
                           const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, expected_magic, 8) == 0, ErrorCode::Format,
          "'" + path + "' is not a " + std::string(expected_magic, 8) + " container");
  std::uint32_t len = read_u32le(in);
  std::string hdr(len, '\0');
  in.read(hdr.data(), len);
  require(in.good(), ErrorCode::Format, "truncated header in '" + path + "'");
  json j = json::parse(hdr, nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), ErrorCode::Format, "invalid JSON header in '" + path + "'");
  return j;
}

volume::Grid grid_from_header(const json& j) {
  volume::Grid g;
  auto dims = j.at("dims");
  auto spacing = j.at("spacing_mm");
  auto origin = j.at("origin_mm");
  for (int a = 0; a < 3; ++a) {
    g.dims[a] = dims.at(a).get<int>();
    g.spacing_mm[a] = spacing.at(a).get<double>();
    g.origin_mm[a] = origin.at(a).get<double>();
  }
  g.validate();
  return g;
}

}  // namespace

void write_mvol(const std::string& path, const volume::Volume3& vol) {
  std::vector<float> buf(vol.data.size());
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(vol.data[i]);
  std::ofstream out = open_out(path);
  write_bytes(out, "MVOL0001", 8);
  std::string hdr = grid_header(vol.grid, "f32le").dump();
  write_u32le(out, static_cast<std::uint32_t>(hdr.size()));
  write_bytes(out, hdr.data(), hdr.size());
  write_f32le(out, buf);
  require(out.good(), ErrorCode::Io, "write failed for '" + path + "'");
}

void write_mvol(const std::string& path, const volume::Mask3& mask) {
  write_container(path, "MVOL0001", grid_header(mask.grid, "u8"), mask.data.data(),
                  mask.data.size());
}

MvolContent read_mvol(const std::string& path) {
  std::ifstream in = open_in(path);
  json hdr = read_container_header(in, "MVOL0001", path);
  volume::Grid grid = grid_from_header(hdr);
  std::string dtype = hdr.at("dtype").get<std::string>();
  std::int64_t n = grid.voxel_count();

  MvolContent content;
  if (dtype == "f32le") {
    volume::Volume3 vol(grid);
    std::vector<unsigned char> raw(static_cast<size_t>(n) * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()), ErrorCode::Format,
            "truncated voxel payload in '" + path + "'");
    for (std::int64_t i = 0; i < n; ++i) {
      std::uint32_t bits = std::uint32_t(raw[4 * i]) | (std::uint32_t(raw[4 * i + 1]) << 8) |
                           (std::uint32_t(raw[4 * i + 2]) << 16) |
                           (std::uint32_t(raw[4 * i + 3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      require(std::isfinite(f), ErrorCode::Format, "non-finite voxel in '" + path + "'");
      vol.data[i] = f;
    }
    content.vol = std::move(vol);
  } else if (dtype == "u8") {
    volume::Mask3 mask(grid);
    in.read(reinterpret_cast<char*>(mask.data.data()), n);
    require(in.gcount() == n, ErrorCode::Format, "truncated voxel payload in '" + path + "'");
    for (auto& v : mask.data)
      require(v <= 1, ErrorCode::Format, "mask voxels must be 0 or 1 in '" + path + "'");
    content.mask = std::move(mask);
  } else {
    fail(ErrorCode::Format, "unknown dtype '" + dtype + "' in '" + path + "'");
  }
  return content;
}

volume::Volume3 read_volume(const std::string& path) {
  MvolContent c = read_mvol(path);
  if (c.vol) return std::move(*c.vol);
  volume::Volume3 vol(c.mask->grid);
  for (size_t i = 0; i < vol.data.size(); ++i) vol.data[i] = c.mask->data[i] ? 1.0 : 0.0;
  return vol;
}

volume::Mask3 read_mask(const std::string& path) {
  MvolContent c = read_mvol(path);
  require(c.mask.has_value(), ErrorCode::Format, "'" + path + "' does not hold a u8 mask");
  return std::move(*c.mask);
}

void write_bvel(const std::string& path, const spectral::BandlimitedVelocity& v,
                const spectral::SpectralOperators& ops) {
  json hdr{{"band", ops.band},
           {"grid_dims", {ops.grid_dims[0], ops.grid_dims[1], ops.grid_dims[2]}},
           {"alpha", ops.alpha},
           {"p", ops.power}};
  std::vector<float> buf;
  buf.reserve(v.coeffs.modes_per_component() * 6);
  for (int c = 0; c < 3; ++c)
    for (const auto& z : v.coeffs.comp[c]) {
      buf.push_back(static_cast<float>(z.real()));
      buf.push_back(static_cast<float>(z.imag()));
    }
  std::ofstream out = open_out(path);
  write_bytes(out, "BVEL0001", 8);
  std::string h = hdr.dump();
  write_u32le(out, static_cast<std::uint32_t>(h.size()));
  write_bytes(out, h.data(), h.size());
  write_f32le(out, buf);
  require(out.good(), ErrorCode::Io, "write failed for '" + path + "'");
}

BvelFile read_bvel(const std::string& path) {
  std::ifstream in = open_in(path);
  json hdr = read_container_header(in, "BVEL0001", path);

  BvelFile file;
  file.band = hdr.at("band").get<int>();
  require(file.band >= 2, ErrorCode::Format, "invalid band in '" + path + "'");
  auto gd = hdr.at("grid_dims");
  for (int a = 0; a < 3; ++a) file.grid_dims[a] = gd.at(a).get<int>();
  file.alpha = hdr.at("alpha").get<double>();
  file.power = hdr.at("p").get<int>();

  file.velocity.coeffs = spectral::SpectralCoeffs::zeros(file.band);
  std::int64_t modes = file.velocity.coeffs.modes_per_component();
  std::vector<unsigned char> raw(static_cast<size_t>(modes) * 3 * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(in.gcount() == static_cast<std::streamsize>(raw.size()), ErrorCode::Format,
          "truncated coefficient payload in '" + path + "'");
  auto f32_at = [&](size_t idx) {
    std::uint32_t bits = std::uint32_t(raw[4 * idx]) | (std::uint32_t(raw[4 * idx + 1]) << 8) |
                         (std::uint32_t(raw[4 * idx + 2]) << 16) |
                         (std::uint32_t(raw[4 * idx + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  };
  size_t k = 0;
  for (int c = 0; c < 3; ++c)
    for (std::int64_t i = 0; i < modes; ++i) {
      double re = f32_at(k++);
      double im = f32_at(k++);
      file.velocity.coeffs.comp[c][i] = spectral::Cplx(re, im);
    }
  return file;
}

json transform_to_json(const geometry::RigidTransform& q) {
  auto m = q.matrix4();
  return json{{"quaternion", {q.rotation.w, q.rotation.x, q.rotation.y, q.rotation.z}},
              {"translation_mm", {q.translation[0], q.translation[1], q.translation[2]}},
              {"matrix", m}};
}

geometry::RigidTransform transform_from_json(const json& j) {
  auto quat = j.at("quaternion");
  auto trans = j.at("translation_mm");
  geometry::RigidTransform q;
  q.rotation = geometry::Quaternion{quat.at(0).get<double>(), quat.at(1).get<double>(),
                                    quat.at(2).get<double>(), quat.at(3).get<double>()};
  require(std::abs(q.rotation.norm() - 1.0) <= 1e-9, ErrorCode::Format,
          "quaternion is not unit length");
  q.translation = {trans.at(0).get<double>(), trans.at(1).get<double>(),
                   trans.at(2).get<double>()};

  if (j.contains("matrix")) {
    auto m = j.at("matrix");
    require(m.size() == 16, ErrorCode::Format, "matrix must have 16 row-major entries");
    auto expect = q.matrix4();
    for (int i = 0; i < 16; ++i)
      require(std::abs(m.at(i).get<double>() - expect[i]) <= 1e-9, ErrorCode::Format,
              "matrix disagrees with quaternion/translation beyond 1e-9");
  }
  return q;
}

json kabsch_report_to_json(const geometry::KabschReport& r) {
  return json{{"singular_values", r.singular_values},
              {"reflection_corrected", r.reflection_corrected},
              {"residual_rms_mm", r.residual_rms}};
}

json rigid_report_to_json(const rigid::RigidSolveReport& r) {
  json j{{"q_image", transform_to_json(r.q_image)},
         {"q_shape", transform_to_json(r.q_shape)},
         {"q_fused", transform_to_json(r.q_fused)},
         {"lambda", r.lambda_used},
         {"iterations", r.iterations},
         {"final_loss", r.final_loss},
         {"loss_trace", r.loss_trace}};
  if (r.kabsch_image) j["kabsch_image"] = kabsch_report_to_json(*r.kabsch_image);
  if (r.kabsch_shape) j["kabsch_shape"] = kabsch_report_to_json(*r.kabsch_shape);
  return j;
}

json shooting_solution_to_json(const deform::ShootingSolution& s) {
  return json{{"energy_trace", s.energy_trace},
              {"data_term", s.data_term},
              {"reg_term", s.reg_term},
              {"min_jacobian", s.min_jacobian},
              {"iterations", s.iterations}};
}

json registration_result_to_json(const pipeline::RegistrationResult& r) {
  json rounds = json::array();
  for (const auto& row : r.rounds)
    rounds.push_back(json{{"round", row.round},
                          {"rigid_loss", row.rigid_loss},
                          {"data_image", row.data_image},
                          {"reg_image", row.reg_image},
                          {"data_shape", row.data_shape},
                          {"reg_shape", row.reg_shape},
                          {"total", row.total}});
  json times = json::object();
  for (const auto& t : r.wall_time) times[t.stage] = t.seconds;

  json j{{"rigid", rigid_report_to_json(r.rigid_report)},
         {"rounds", rounds},
         {"wall_time_s", times}};
  if (r.deform_image) j["deform_image"] = shooting_solution_to_json(*r.deform_image);
  if (r.deform_shape) j["deform_shape"] = shooting_solution_to_json(*r.deform_shape);
  if (r.rejected_round_total) j["rejected_round_total"] = *r.rejected_round_total;
  if (!r.failure_stage.empty()) j["failure_stage"] = r.failure_stage;
  return j;
}

json sequence_result_to_json(const pipeline::SequenceResult& r) {
  json frames = json::array();
  for (size_t t = 0; t < r.to_reference.size(); ++t)
    frames.push_back(json{{"frame", t},
                          {"to_reference", transform_to_json(r.to_reference[t])},
                          {"link_angle_deg", r.link_angle_deg[t]},
                          {"link_trans_mm", r.link_trans_mm[t]},
                          {"link_loss", r.link_loss[t]},
                          {"link_failed", static_cast<bool>(r.link_failed[t])},
                          {"cum_angle_deg", r.cum_angle_deg[t]},
                          {"cum_trans_mm", r.cum_trans_mm[t]}});
  return json{{"frames", frames}, {"num_frames", r.to_reference.size()}};
}

namespace {

json aggregate_to_json(const eval::Aggregate& a) {
  return json{{"mean", a.mean}, {"median", a.median}, {"stddev", a.stddev}, {"count", a.count}};
}

}  // namespace

json metric_report_to_json(const eval::MetricReport& r) {
  json rows = json::array();
  std::map<std::string, std::vector<double>> ang_by_regime, trans_by_regime;
  for (const auto& row : r.rows) {
    json jr{{"case_id", row.case_id},
            {"regime", row.regime},
            {"trans_err_mm", row.trans_err_mm},
            {"ang_err_deg", row.ang_err_deg},
            {"wall_time_s", row.wall_time_s}};
    if (row.dice) jr["dice"] = *row.dice;
    if (row.tsnr_median) jr["tsnr_median"] = *row.tsnr_median;
    rows.push_back(std::move(jr));
    ang_by_regime[row.regime].push_back(row.ang_err_deg);
    trans_by_regime[row.regime].push_back(row.trans_err_mm);
  }
  // per-regime series for external plotting
  json series = json::object();
  for (const auto& [regime, vals] : ang_by_regime)
    series[regime] = json{{"ang_err_deg", vals}, {"trans_err_mm", trans_by_regime[regime]}};

  return json{{"cases", rows},
              {"aggregates",
               {{"trans_err_mm", aggregate_to_json(r.trans_err_mm)},
                {"ang_err_deg", aggregate_to_json(r.ang_err_deg)},
                {"dice", aggregate_to_json(r.dice)},
                {"tsnr_median", aggregate_to_json(r.tsnr_median)}}},
              {"series", series}};
}

std::string metric_report_to_csv(const eval::MetricReport& r) {
  std::ostringstream out;
  out << "case_id,regime,trans_err_mm,ang_err_deg,dice,tsnr_median,wall_time_s\n";
  out.precision(12);
  for (const auto& row : r.rows) {
    out << row.case_id << ',' << row.regime << ',' << row.trans_err_mm << ','
        << row.ang_err_deg << ',';
    if (row.dice) out << *row.dice;
    out << ',';
    if (row.tsnr_median) out << *row.tsnr_median;
    out << ',' << row.wall_time_s << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << content;
  require(out.good(), ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace unimo::io
