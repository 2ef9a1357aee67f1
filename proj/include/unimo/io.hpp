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
#ifndef UNIMO_IO_HPP
#define UNIMO_IO_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "unimo/eval.hpp"
#include "unimo/pipeline.hpp"
#include "unimo/spectral.hpp"
#include "unimo/volume.hpp"

namespace unimo::io {

using nlohmann::json;

// -- MVOL container: "MVOL0001" magic, u32le JSON header length, JSON
//    header, raw voxels x fastest-varying (dtype f32le or u8) --

void write_mvol(const std::string& path, const volume::Volume3& vol);
void write_mvol(const std::string& path, const volume::Mask3& mask);

/// Exactly one of the two members is engaged, by dtype.
struct MvolContent {
  std::optional<volume::Volume3> vol;
  std::optional<volume::Mask3> mask;
};
MvolContent read_mvol(const std::string& path);
volume::Volume3 read_volume(const std::string& path);  // u8 promotes to {0,1}
volume::Mask3 read_mask(const std::string& path);      // rejects f32le

// -- BVEL container: "BVEL0001" magic, u32le JSON header length, JSON
//    {band, grid_dims, alpha, p}, interleaved complex64 (f32 re/im pairs),
//    component-major, little-endian --

struct BvelFile {
  spectral::BandlimitedVelocity velocity;
  int band = 0;
  std::array<int, 3> grid_dims{0, 0, 0};
  double alpha = 0.0;
  int power = 0;
};

void write_bvel(const std::string& path, const spectral::BandlimitedVelocity& v,
                const spectral::SpectralOperators& ops);
BvelFile read_bvel(const std::string& path);

// -- JSON forms --

/// {"quaternion":[w,x,y,z], "translation_mm":[x,y,z], "matrix":[16 row-major]}
json transform_to_json(const geometry::RigidTransform& q);
/// Rejects payloads whose matrix disagrees with the quaternion beyond 1e-9.
geometry::RigidTransform transform_from_json(const json& j);

json kabsch_report_to_json(const geometry::KabschReport& r);
json rigid_report_to_json(const rigid::RigidSolveReport& r);
json shooting_solution_to_json(const deform::ShootingSolution& s);
json registration_result_to_json(const pipeline::RegistrationResult& r);
json sequence_result_to_json(const pipeline::SequenceResult& r);
json metric_report_to_json(const eval::MetricReport& r);
std::string metric_report_to_csv(const eval::MetricReport& r);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace unimo::io

#endif
