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
#include "unimo/synth.hpp"

#include <algorithm>
#include <cmath>

#include "unimo/errors.hpp"
#include "unimo/rng.hpp"

namespace unimo::synth {

using geometry::operator+;
using geometry::operator-;
using geometry::operator*;

using geometry::Vec3;
using volume::Grid;
using volume::Mask3;
using volume::Volume3;

namespace {

std::pair<Volume3, Mask3> blob_phantom(const Grid& grid, std::uint64_t seed) {
  Rng rng(seed);
  Vec3 center = grid.center();
  double fov = std::min({grid.dims[0] * grid.spacing_mm[0], grid.dims[1] * grid.spacing_mm[1],
                         grid.dims[2] * grid.spacing_mm[2]});
  double max_spacing = std::max({grid.spacing_mm[0], grid.spacing_mm[1], grid.spacing_mm[2]});

  // separated compact bumps with an amplitude staircase: intensity bands
  // localize on different bumps, which spreads the band centroids (a
  // single merged lump gives concentric shells and an unidentifiable
  // rotation). Compact support keeps every tail strictly inside the FOV,
  // like skull-stripped data; a Gaussian mixture's infinite tails get
  // clipped at the boundary and bias the low-intensity bands.
  const int num_blobs = 6;
  struct Blob {
    Vec3 c;
    double radius;
    double amp;
  };
  std::vector<Blob> blobs(num_blobs);
  for (int i = 0; i < num_blobs; ++i) {
    Vec3 c = center;
    for (int tries = 0; tries < 40; ++tries) {
      auto dir = rng.unit_vector();
      double r = fov * rng.uniform(0.04, 0.12);
      c = center + r * Vec3{dir[0], dir[1], dir[2]};
      bool separated = true;
      for (int j = 0; j < i; ++j)
        if (geometry::norm(blobs[j].c - c) < 0.08 * fov) separated = false;
      if (separated) break;
    }
    blobs[i].c = c;
    blobs[i].radius = std::max(fov * rng.uniform(0.10, 0.16), 4.0 * max_spacing);
    blobs[i].amp = 0.4 + 0.6 * i / (num_blobs - 1.0) + 0.05 * rng.uniform(-1.0, 1.0);
  }

  Volume3 vol(grid);
  const auto& d = grid.dims;
  double max_val = 0.0;
  std::int64_t i = 0;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x, ++i) {
        Vec3 p = grid.world(x, y, z);
        double v = 0.0;
        for (const auto& b : blobs) {
          Vec3 r = p - b.c;
          double s = geometry::dot(r, r) / (b.radius * b.radius);
          if (s < 1.0) v += b.amp * (1.0 - s) * (1.0 - s) * (1.0 - s);
        }
        vol.data[i] = v;
        max_val = std::max(max_val, v);
      }
  require(max_val > 0.0, ErrorCode::Solver, "degenerate phantom");
  for (auto& v : vol.data) v /= max_val;

  Mask3 mask(grid);
  for (size_t j = 0; j < vol.data.size(); ++j) mask.data[j] = vol.data[j] >= 0.2 ? 1 : 0;
  return {std::move(vol), std::move(mask)};
}

std::pair<Volume3, Mask3> sphere_phantom(const Grid& grid) {
  Vec3 center = grid.center();
  double fov = std::min({grid.dims[0] * grid.spacing_mm[0], grid.dims[1] * grid.spacing_mm[1],
                         grid.dims[2] * grid.spacing_mm[2]});
  double radius = 0.22 * fov;
  double edge = 1.5 * std::max({grid.spacing_mm[0], grid.spacing_mm[1], grid.spacing_mm[2]});

  Volume3 vol(grid);
  Mask3 mask(grid);
  const auto& d = grid.dims;
  std::int64_t i = 0;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x, ++i) {
        Vec3 p = grid.world(x, y, z);
        double r = geometry::norm(p - center);
        double t = std::clamp((radius - r) / edge + 0.5, 0.0, 1.0);
        vol.data[i] = t * t * (3.0 - 2.0 * t);
        mask.data[i] = r <= radius ? 1 : 0;
      }
  return {std::move(vol), std::move(mask)};
}

}  // namespace

std::pair<Volume3, Mask3> make_phantom(const std::string& kind, const Grid& grid,
                                       std::uint64_t seed) {
  grid.validate();
  if (kind == "blobs") return blob_phantom(grid, seed);
  if (kind == "sphere") return sphere_phantom(grid);
  fail(ErrorCode::InvalidArgument, "unknown phantom kind '" + kind + "' (use sphere|blobs)");
}

Volume3 add_noise(const Volume3& vol, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, ErrorCode::InvalidArgument, "noise sigma must be nonnegative");
  Rng rng(seed);
  Volume3 out = vol;
  for (auto& v : out.data) v += sigma * rng.normal();
  return out;
}

spectral::BandlimitedVelocity random_velocity(const spectral::SpectralOperators& ops,
                                              const Grid& grid, double max_voxels,
                                              std::uint64_t seed) {
  Rng rng(seed);
  const int b = ops.band;
  spectral::SpectralCoeffs c = spectral::SpectralCoeffs::zeros(b);
  for (int comp = 0; comp < 3; ++comp) {
    std::int64_t i = 0;
    for (int f2 = 0; f2 < b; ++f2)
      for (int f1 = 0; f1 < b; ++f1)
        for (int f0 = 0; f0 < b; ++f0, ++i) {
          auto sf = [&](int f) { return f < (b + 1) / 2 ? f : f - b; };
          double m2 = double(sf(f0)) * sf(f0) + double(sf(f1)) * sf(f1) + double(sf(f2)) * sf(f2);
          double fall = 1.0 / (1.0 + m2);
          c.comp[comp][i] = spectral::Cplx(rng.normal() * fall, rng.normal() * fall);
        }
  }
  spectral::project_conjugate_symmetric(c);

  spectral::BandlimitedVelocity v{std::move(c)};
  if (max_voxels <= 0.0) return v;

  volume::DeformationField field = spectral::velocity_to_spatial(v, grid);
  double max_mag = 0.0;
  for (const auto& u : field.u)
    max_mag = std::max(max_mag, std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]));
  if (max_mag > 0.0) v.coeffs = (max_voxels / max_mag) * v.coeffs;
  return v;
}

}  // namespace unimo::synth
