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
#include "unimo/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unimo/errors.hpp"
#include "unimo/parallel.hpp"

namespace unimo::volume {

bool Grid::congruent(const Grid& other, double tol) const {
  if (dims != other.dims) return false;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(spacing_mm[a] - other.spacing_mm[a]) > tol) return false;
    if (std::abs(origin_mm[a] - other.origin_mm[a]) > tol) return false;
  }
  return true;
}

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(dims[a] > 0, ErrorCode::InvalidArgument, "grid dims must be positive");
    require(spacing_mm[a] > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
    require(std::isfinite(origin_mm[a]), ErrorCode::InvalidArgument, "grid origin must be finite");
  }
}

Volume3::Volume3(const Grid& g, double fill) : grid(g) {
  grid.validate();
  data.assign(static_cast<size_t>(grid.voxel_count()), fill);
}

Mask3::Mask3(const Grid& g, std::uint8_t fill) : grid(g) {
  grid.validate();
  data.assign(static_cast<size_t>(grid.voxel_count()), fill);
}

std::int64_t Mask3::count_set() const {
  std::int64_t n = 0;
  for (auto v : data) n += v ? 1 : 0;
  return n;
}

DeformationField::DeformationField(const Grid& g) : grid(g) {
  grid.validate();
  u.assign(static_cast<size_t>(grid.voxel_count()), {0.0, 0.0, 0.0});
}

double trilinear_sample(const Volume3& vol, const Vec3& p) {
  const auto& d = vol.grid.dims;
  int x0 = static_cast<int>(std::floor(p[0]));
  int y0 = static_cast<int>(std::floor(p[1]));
  int z0 = static_cast<int>(std::floor(p[2]));
  double fx = p[0] - x0, fy = p[1] - y0, fz = p[2] - z0;

  double acc = 0.0;
  for (int cz = 0; cz <= 1; ++cz) {
    int z = z0 + cz;
    if (z < 0 || z >= d[2]) continue;
    double wz = cz ? fz : 1.0 - fz;
    for (int cy = 0; cy <= 1; ++cy) {
      int y = y0 + cy;
      if (y < 0 || y >= d[1]) continue;
      double wy = cy ? fy : 1.0 - fy;
      for (int cx = 0; cx <= 1; ++cx) {
        int x = x0 + cx;
        if (x < 0 || x >= d[0]) continue;
        double wx = cx ? fx : 1.0 - fx;
        acc += wx * wy * wz * vol.at(x, y, z);
      }
    }
  }
  return acc;
}

Volume3 resample_rigid(const Volume3& vol, const geometry::RigidTransform& q,
                       const Grid& out_grid) {
  out_grid.validate();
  Volume3 out(out_grid);
  const geometry::RigidTransform qinv = geometry::inverse(q);
  const auto& d = out_grid.dims;

  parallel_for(d[2], [&](std::int64_t z) {
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        Vec3 w = out_grid.world(x, y, static_cast<double>(z));
        Vec3 s = qinv.apply(w);
        Vec3 idx{(s[0] - vol.grid.origin_mm[0]) / vol.grid.spacing_mm[0],
                 (s[1] - vol.grid.origin_mm[1]) / vol.grid.spacing_mm[1],
                 (s[2] - vol.grid.origin_mm[2]) / vol.grid.spacing_mm[2]};
        out.at(x, y, static_cast<int>(z)) = trilinear_sample(vol, idx);
      }
  });
  return out;
}

Mask3 resample_mask(const Mask3& mask, const geometry::RigidTransform& q, const Grid& out_grid) {
  Volume3 tmp(mask.grid);
  for (size_t i = 0; i < mask.data.size(); ++i) tmp.data[i] = mask.data[i] ? 1.0 : 0.0;
  Volume3 res = resample_rigid(tmp, q, out_grid);
  Mask3 out(out_grid);
  for (size_t i = 0; i < res.data.size(); ++i) out.data[i] = res.data[i] >= 0.5 ? 1 : 0;
  return out;
}

Volume3 warp_deformable(const Volume3& vol, const DeformationField& disp) {
  require(vol.grid.congruent(disp.grid), ErrorCode::GridMismatch,
          "displacement grid does not match volume grid");
  Volume3 out(vol.grid);
  const auto& d = vol.grid.dims;
  parallel_for(d[2], [&](std::int64_t z) {
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        const auto& u = disp.u[disp.grid.index(x, y, static_cast<int>(z))];
        Vec3 p{x + u[0], y + u[1], z + u[2]};
        out.at(x, y, static_cast<int>(z)) = trilinear_sample(vol, p);
      }
  });
  return out;
}

Mask3 warp_mask(const Mask3& mask, const DeformationField& disp) {
  Volume3 tmp(mask.grid);
  for (size_t i = 0; i < mask.data.size(); ++i) tmp.data[i] = mask.data[i] ? 1.0 : 0.0;
  Volume3 res = warp_deformable(tmp, disp);
  Mask3 out(mask.grid);
  for (size_t i = 0; i < res.data.size(); ++i) out.data[i] = res.data[i] >= 0.5 ? 1 : 0;
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (lower envelope of parabolas), abscissas
// at i*spacing. f holds squared distances on entry and exit.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& zbound, int n, double spacing) {
  int k = 0;
  v[0] = 0;
  zbound[0] = -kInf;
  zbound[1] = kInf;
  auto sq = [](double a) { return a * a; };
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k == 0 && f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      int p = v[k];
      s = ((f[q] + sq(q * spacing)) - (f[p] + sq(p * spacing))) / (2.0 * spacing * (q - p));
      if (s > zbound[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    zbound[k] = s;
    zbound[k + 1] = kInf;
  }
  if (f[v[0]] == kInf) {  // whole line empty
    for (int q = 0; q < n; ++q) d[q] = kInf;
    std::copy(d.begin(), d.begin() + n, f.begin());
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    double xq = q * spacing;
    while (zbound[k + 1] < xq) ++k;
    d[q] = f[v[k]] + sq((q - v[k]) * spacing);
  }
  std::copy(d.begin(), d.begin() + n, f.begin());
}

}  // namespace

Volume3 distance_transform(const Mask3& mask) {
  require(mask.count_set() >= 1, ErrorCode::EmptyMask,
          "distance transform requires at least one set voxel");
  const auto& dims = mask.grid.dims;
  Volume3 out(mask.grid);
  for (size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] ? 0.0 : kInf;

  int nmax = std::max({dims[0], dims[1], dims[2]});
  std::vector<double> line(nmax), d(nmax), zbound(nmax + 1);
  std::vector<int> v(nmax);

  // x lines
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) line[x] = out.at(x, y, z);
      edt_1d(line, d, v, zbound, dims[0], mask.grid.spacing_mm[0]);
      for (int x = 0; x < dims[0]; ++x) out.at(x, y, z) = line[x];
    }
  // y lines
  for (int z = 0; z < dims[2]; ++z)
    for (int x = 0; x < dims[0]; ++x) {
      for (int y = 0; y < dims[1]; ++y) line[y] = out.at(x, y, z);
      edt_1d(line, d, v, zbound, dims[1], mask.grid.spacing_mm[1]);
      for (int y = 0; y < dims[1]; ++y) out.at(x, y, z) = line[y];
    }
  // z lines
  for (int y = 0; y < dims[1]; ++y)
    for (int x = 0; x < dims[0]; ++x) {
      for (int z = 0; z < dims[2]; ++z) line[z] = out.at(x, y, z);
      edt_1d(line, d, v, zbound, dims[2], mask.grid.spacing_mm[2]);
      for (int z = 0; z < dims[2]; ++z) out.at(x, y, z) = line[z];
    }

  for (auto& val : out.data) val = std::sqrt(val);
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma_mm, double spacing_mm) {
  // truncated at 4 sigma, renormalized; radius 0 collapses to identity
  int radius = sigma_mm > 0.0 ? static_cast<int>(std::floor(4.0 * sigma_mm / spacing_mm)) : 0;
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double t = i * spacing_mm;
    k[i + radius] = std::exp(-0.5 * t * t / (sigma_mm * sigma_mm > 0 ? sigma_mm * sigma_mm : 1.0));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// One separable pass along `axis` with zero padding outside the array.
void smooth_axis(std::vector<double>& data, const std::array<int, 3>& dims, int axis,
                 const std::vector<double>& kernel, bool threaded = true) {
  if (kernel.size() == 1) return;
  int radius = static_cast<int>(kernel.size() / 2);
  std::array<std::int64_t, 3> stride{1, dims[0], std::int64_t(dims[0]) * dims[1]};
  std::vector<double> src = data;

  auto line = [&](std::int64_t z) {
    std::array<int, 3> idx;
    idx[2] = static_cast<int>(z);
    for (idx[1] = 0; idx[1] < dims[1]; ++idx[1])
      for (idx[0] = 0; idx[0] < dims[0]; ++idx[0]) {
        std::int64_t base = idx[0] * stride[0] + idx[1] * stride[1] + idx[2] * stride[2];
        double acc = 0.0;
        int lo = std::max(-radius, -idx[axis]);
        int hi = std::min(radius, dims[axis] - 1 - idx[axis]);
        for (int t = lo; t <= hi; ++t) acc += kernel[t + radius] * src[base + t * stride[axis]];
        data[base] = acc;
      }
  };
  if (threaded) {
    parallel_for(dims[2], line);
  } else {
    for (std::int64_t z = 0; z < dims[2]; ++z) line(z);
  }
}

}  // namespace

Volume3 gaussian_smooth(const Volume3& vol, double sigma_mm) {
  require(sigma_mm >= 0.0, ErrorCode::InvalidArgument, "sigma must be nonnegative");
  Volume3 out = vol;
  if (sigma_mm == 0.0) return out;
  for (int axis = 0; axis < 3; ++axis) {
    auto kernel = gaussian_kernel(sigma_mm, vol.grid.spacing_mm[axis]);
    smooth_axis(out.data, out.grid.dims, axis, kernel);
  }
  return out;
}

double percentile(const Volume3& vol, double p) {
  require(!vol.data.empty(), ErrorCode::InvalidArgument, "empty volume");
  require(p >= 0.0 && p <= 100.0, ErrorCode::InvalidArgument, "percentile out of range");
  std::vector<double> sorted = vol.data;
  std::sort(sorted.begin(), sorted.end());
  double rank = p / 100.0 * (sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(rank));
  size_t hi = static_cast<size_t>(std::ceil(rank));
  double frac = rank - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Volume3 normalize_intensity(const Volume3& vol) {
  double p1 = percentile(vol, 1.0);
  double p99 = percentile(vol, 99.0);
  require(p99 - p1 >= 1e-12, ErrorCode::ConstantVolume,
          "intensity window is degenerate (p99 - p1 < 1e-12)");
  Volume3 out = vol;
  double scale = 1.0 / (p99 - p1);
  for (auto& v : out.data) v = std::clamp((v - p1) * scale, 0.0, 1.0);
  return out;
}

std::vector<double> KeypointBankConfig::resolved_edges() const {
  if (!percentile_edges.empty()) return percentile_edges;
  std::vector<double> edges(num_channels + 1);
  for (int i = 0; i <= num_channels; ++i)
    edges[i] = 5.0 + 95.0 * static_cast<double>(i) / num_channels;
  return edges;
}

double KeypointBankConfig::resolved_sigma(const Grid& grid) const {
  if (smoothing_sigma_mm > 0.0) return smoothing_sigma_mm;
  return 2.0 * std::max({grid.spacing_mm[0], grid.spacing_mm[1], grid.spacing_mm[2]});
}

void KeypointBankConfig::validate() const {
  require(num_channels >= 4, ErrorCode::InvalidArgument, "keypoint bank needs at least 4 channels");
  auto edges = resolved_edges();
  require(static_cast<int>(edges.size()) == num_channels + 1, ErrorCode::InvalidArgument,
          "need num_channels + 1 percentile edges");
  for (size_t i = 0; i + 1 < edges.size(); ++i)
    require(edges[i] < edges[i + 1], ErrorCode::InvalidArgument,
            "percentile edges must be strictly increasing");
  require(edges.front() >= 0.0 && edges.back() <= 100.0, ErrorCode::InvalidArgument,
          "percentile edges must lie in [0,100]");
  require(smoothing_sigma_mm >= 0.0, ErrorCode::InvalidArgument, "sigma must be nonnegative");
}

namespace {

// smoothstep shoulder of width w centered at edge e
inline double rise(double v, double e, double w) {
  double t = (v - e) / w + 0.5;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

constexpr double kSoftWidth = 0.05;  // 5% of the normalized intensity range

}  // namespace

KeypointSet extract_keypoints(const Volume3& vol, const KeypointBankConfig& cfg) {
  cfg.validate();
  const int K = cfg.num_channels;
  auto edges = cfg.resolved_edges();
  std::vector<double> thr(edges.size());
  for (size_t i = 0; i < edges.size(); ++i) thr[i] = edges[i] / 100.0;

  const auto& dims = vol.grid.dims;
  const double sigma = cfg.resolved_sigma(vol.grid);

  // pass 1: per-channel bounding boxes of the soft-indicator supports
  struct Box {
    int lo[3] = {0, 0, 0};
    int hi[3] = {-1, -1, -1};
    bool empty() const { return hi[0] < lo[0]; }
  };
  std::vector<Box> boxes(K);
  {
    std::int64_t i = 0;
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x, ++i) {
          double v = vol.data[i];
          if (v <= thr.front() - kSoftWidth / 2 || v >= thr.back() + kSoftWidth / 2) continue;
          // channel k is supported on (thr[k] - w/2, thr[k+1] + w/2)
          auto it_hi = std::upper_bound(thr.begin(), thr.end(), v + kSoftWidth / 2);
          auto it_lo = std::lower_bound(thr.begin(), thr.end(), v - kSoftWidth / 2);
          int k_last = std::min<int>(K - 1, static_cast<int>(it_hi - thr.begin()) - 1);
          int k_first = std::max(0, static_cast<int>(it_lo - thr.begin()) - 1);
          for (int k = k_first; k <= k_last; ++k) {
            Box& b = boxes[k];
            if (b.empty()) {
              b.lo[0] = b.hi[0] = x;
              b.lo[1] = b.hi[1] = y;
              b.lo[2] = b.hi[2] = z;
            } else {
              b.lo[0] = std::min(b.lo[0], x);
              b.hi[0] = std::max(b.hi[0], x);
              b.lo[1] = std::min(b.lo[1], y);
              b.hi[1] = std::max(b.hi[1], y);
              b.lo[2] = std::min(b.lo[2], z);
              b.hi[2] = std::max(b.hi[2], z);
            }
          }
        }
  }

  std::array<std::vector<double>, 3> kernels;
  std::array<int, 3> radius;
  for (int a = 0; a < 3; ++a) {
    kernels[a] = gaussian_kernel(sigma, vol.grid.spacing_mm[a]);
    radius[a] = static_cast<int>(kernels[a].size() / 2);
  }

  KeypointSet set;
  set.points.resize(K, vol.grid.center());
  set.weights.assign(K, 0.0);
  set.channel_ids.resize(K);
  set.dispersion_mm.assign(K, 0.0);
  for (int k = 0; k < K; ++k) set.channel_ids[k] = k;

  // channels are independent: per-channel buffers and accumulators make
  // this loop safe to parallelize with bit-identical results
  parallel_for(K, [&](std::int64_t k64) {
    const int k = static_cast<int>(k64);
    std::vector<double> buf;
    const Box& b = boxes[k];
    if (b.empty()) return;

    // expand by the kernel radius so the smoothed support is covered
    std::array<int, 3> lo, hi, bd;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, b.lo[a] - radius[a]);
      hi[a] = std::min(dims[a] - 1, b.hi[a] + radius[a]);
      bd[a] = hi[a] - lo[a] + 1;
    }

    buf.assign(std::size_t(bd[0]) * bd[1] * bd[2], 0.0);
    std::int64_t j = 0;
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x, ++j) {
          double v = vol.at(x, y, z);
          buf[j] = rise(v, thr[k], kSoftWidth) * (1.0 - rise(v, thr[k + 1], kSoftWidth));
        }

    for (int a = 0; a < 3; ++a) smooth_axis(buf, bd, a, kernels[a], /*threaded=*/false);

    double mass = 0.0;
    Vec3 moment{0.0, 0.0, 0.0};
    double second = 0.0;
    j = 0;
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x, ++j) {
          double c = buf[j];
          if (c == 0.0) continue;
          mass += c;
          Vec3 p = vol.grid.world(x, y, z);
          moment = moment + c * p;
          second += c * geometry::dot(p, p);
        }

    if (mass >= 1e-9) {
      set.points[k] = (1.0 / mass) * moment;
      set.weights[k] = mass;
      double var = second / mass - geometry::dot(set.points[k], set.points[k]);
      set.dispersion_mm[k] = std::sqrt(std::max(0.0, var));
    }
  });

  double total = 0.0;
  for (double w : set.weights) total += w;
  if (total > 0.0)
    for (double& w : set.weights) w /= total;
  return set;
}

}  // namespace unimo::volume
