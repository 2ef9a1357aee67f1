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
#ifndef UNIMO_SYNTH_HPP
#define UNIMO_SYNTH_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "unimo/spectral.hpp"
#include "unimo/volume.hpp"

namespace unimo::synth {

/// Deterministic synthetic test volumes. "blobs" is a seeded Gaussian
/// mixture kept well inside the FOV (asymmetric, so keypoints pin the
/// rotation); "sphere" is a centered soft-edged ball.
std::pair<volume::Volume3, volume::Mask3> make_phantom(const std::string& kind,
                                                       const volume::Grid& grid,
                                                       std::uint64_t seed);

/// Adds i.i.d. Gaussian noise of the given sigma, deterministic per seed.
volume::Volume3 add_noise(const volume::Volume3& vol, double sigma, std::uint64_t seed);

/// Random conjugate-symmetric velocity with a decaying spectrum, rescaled
/// so the realized field's max displacement magnitude is max_voxels.
spectral::BandlimitedVelocity random_velocity(const spectral::SpectralOperators& ops,
                                              const volume::Grid& grid, double max_voxels,
                                              std::uint64_t seed);

}  // namespace unimo::synth

#endif
