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
#include "unimo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "unimo/errors.hpp"
#include "unimo/rng.hpp"

namespace unimo::eval {

using geometry::operator+;
using geometry::operator-;
using geometry::operator*;

using geometry::RigidTransform;
using geometry::Vec3;
using volume::Mask3;
using volume::Volume3;

MotionRegime MotionRegime::named(const std::string& name) {
  if (name == "small") return small();
  if (name == "medium") return medium();
  if (name == "large") return large();
  fail(ErrorCode::InvalidArgument, "unknown motion regime '" + name + "' (small|medium|large)");
}

geometry::RigidTransform sample_motion(const volume::Grid& grid, const MotionRegime& regime,
                                       std::uint64_t seed) {
  require(regime.t_max_mm >= 0.0 && regime.r_max_deg >= 0.0, ErrorCode::InvalidArgument,
          "regime bounds must be nonnegative");
  Rng rng(seed);
  // fixed draw order: axis (2 draws), angle, translation components
  Vec3 axis = {0, 0, 1};
  {
    auto a = rng.unit_vector();
    axis = {a[0], a[1], a[2]};
  }
  double angle_deg = rng.uniform(0.0, regime.r_max_deg);
  Vec3 t{rng.uniform(-regime.t_max_mm, regime.t_max_mm),
         rng.uniform(-regime.t_max_mm, regime.t_max_mm),
         rng.uniform(-regime.t_max_mm, regime.t_max_mm)};

  geometry::Quaternion rot =
      regime.r_max_deg > 0.0
          ? geometry::Quaternion::from_axis_angle(axis, angle_deg * M_PI / 180.0)
          : geometry::Quaternion::identity();
  return geometry::rigid_about_pivot(rot, grid.center(), t);
}

std::pair<Volume3, RigidTransform> simulate_motion(const Volume3& vol, const MotionRegime& regime,
                                                   std::uint64_t seed) {
  RigidTransform truth = sample_motion(vol.grid, regime, seed);
  Volume3 moved = volume::resample_rigid(vol, truth, vol.grid);
  return {std::move(moved), truth};
}

std::pair<double, double> transform_error(const RigidTransform& pred, const RigidTransform& truth,
                                          const Vec3& pivot) {
  double ang = geometry::rotation_geodesic_angle(pred, truth);
  double trans = geometry::norm(pred.apply(pivot) - truth.apply(pivot));
  return {trans, ang};
}

double dice(const Mask3& a, const Mask3& b) {
  require(a.grid.congruent(b.grid), ErrorCode::GridMismatch, "dice needs congruent grids");
  std::int64_t na = 0, nb = 0, inter = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    bool sa = a.data[i] != 0, sb = b.data[i] != 0;
    na += sa;
    nb += sb;
    inter += sa && sb;
  }
  if (na + nb == 0) return 1.0;  // both empty
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

TsnrResult tsnr(const std::vector<Volume3>& series) {
  require(series.size() >= 3, ErrorCode::TooFewFrames, "tSNR needs at least 3 frames");
  for (const auto& f : series)
    require(f.grid.congruent(series.front().grid), ErrorCode::GridMismatch,
            "tSNR frames must share a grid");

  const double n = static_cast<double>(series.size());
  TsnrResult out{Volume3(series.front().grid), Mask3(series.front().grid)};
  for (size_t i = 0; i < out.map.data.size(); ++i) {
    double mean = 0.0;
    for (const auto& f : series) mean += f.data[i];
    mean /= n;
    double var = 0.0;
    for (const auto& f : series) {
      double d = f.data[i] - mean;
      var += d * d;
    }
    var /= n;  // population
    double sd = std::sqrt(var);
    if (sd < 1e-12) {
      out.map.data[i] = 0.0;
      out.constant_mask.data[i] = 1;
    } else {
      out.map.data[i] = mean / sd;
    }
  }
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "median of empty set");
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_tsnr(const std::vector<Volume3>& series, const Mask3* mask) {
  TsnrResult r = tsnr(series);
  std::vector<double> vals;
  vals.reserve(r.map.data.size());
  for (size_t i = 0; i < r.map.data.size(); ++i) {
    if (mask && !mask->data[i]) continue;
    vals.push_back(r.map.data[i]);
  }
  require(!vals.empty(), ErrorCode::InvalidArgument, "tSNR mask is empty");
  return median(vals);
}

namespace {

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(ss / values.size());
  a.median = median(values);
  return a;
}

}  // namespace

MetricReport evaluate_run(const std::vector<CaseResult>& results,
                          const std::vector<CaseTruth>& truths) {
  require(!results.empty(), ErrorCode::InvalidArgument, "no results to evaluate");
  std::map<std::string, const CaseTruth*> by_id;
  for (const auto& t : truths) by_id[t.case_id] = &t;

  MetricReport report;
  std::vector<double> trans, ang, dices, tsnrs;
  for (const auto& r : results) {
    auto it = by_id.find(r.case_id);
    require(it != by_id.end(), ErrorCode::MissingCase,
            "no ground truth for case '" + r.case_id + "'");
    auto [t_err, a_err] = transform_error(r.predicted, it->second->truth, r.pivot);
    CaseRow row;
    row.case_id = r.case_id;
    row.regime = r.regime.empty() ? it->second->regime : r.regime;
    row.trans_err_mm = t_err;
    row.ang_err_deg = a_err;
    row.dice = r.dice;
    row.tsnr_median = r.tsnr_median;
    row.wall_time_s = r.wall_time_s;
    report.rows.push_back(std::move(row));
    trans.push_back(t_err);
    ang.push_back(a_err);
    if (r.dice) dices.push_back(*r.dice);
    if (r.tsnr_median) tsnrs.push_back(*r.tsnr_median);
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const CaseRow& a, const CaseRow& b) { return a.case_id < b.case_id; });

  report.trans_err_mm = aggregate(trans);
  report.ang_err_deg = aggregate(ang);
  report.dice = aggregate(dices);
  report.tsnr_median = aggregate(tsnrs);
  return report;
}

}  // namespace unimo::eval
