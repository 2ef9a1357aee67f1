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
#include "unimo/deform_solver.hpp"

#include <algorithm>
#include <cmath>

#include "unimo/errors.hpp"
#include "unimo/fft.hpp"

namespace unimo::deform {

using spectral::BandlimitedVelocity;
using spectral::Cplx;
using spectral::SpectralCoeffs;
using volume::DeformationField;
using volume::Volume3;

void ShootingProblem::validate() const {
  require(moving.grid.congruent(fixed.grid), ErrorCode::GridMismatch,
          "moving and fixed volumes must share a grid");
  require(sigma2 > 0.0, ErrorCode::InvalidArgument, "sigma^2 must be positive");
  require(steps >= 1, ErrorCode::InvalidArgument, "need at least one integration step");
}

namespace {

// trilinear value and d(value)/d(position); out-of-bounds corners contribute
// nothing to either, matching the forward sampling convention
double trilinear_with_grad(const Volume3& vol, const geometry::Vec3& p, double grad[3]) {
  const auto& d = vol.grid.dims;
  int x0 = static_cast<int>(std::floor(p[0]));
  int y0 = static_cast<int>(std::floor(p[1]));
  int z0 = static_cast<int>(std::floor(p[2]));
  double fx = p[0] - x0, fy = p[1] - y0, fz = p[2] - z0;

  double value = 0.0;
  grad[0] = grad[1] = grad[2] = 0.0;
  for (int cz = 0; cz <= 1; ++cz) {
    int z = z0 + cz;
    if (z < 0 || z >= d[2]) continue;
    double wz = cz ? fz : 1.0 - fz;
    double dz = cz ? 1.0 : -1.0;
    for (int cy = 0; cy <= 1; ++cy) {
      int y = y0 + cy;
      if (y < 0 || y >= d[1]) continue;
      double wy = cy ? fy : 1.0 - fy;
      double dy = cy ? 1.0 : -1.0;
      for (int cx = 0; cx <= 1; ++cx) {
        int x = x0 + cx;
        if (x < 0 || x >= d[0]) continue;
        double wx = cx ? fx : 1.0 - fx;
        double dx = cx ? 1.0 : -1.0;
        double v = vol.at(x, y, z);
        value += wx * wy * wz * v;
        grad[0] += dx * wy * wz * v;
        grad[1] += wx * dy * wz * v;
        grad[2] += wx * wy * dz * v;
      }
    }
  }
  return value;
}

struct ForwardTape {
  std::vector<BandlimitedVelocity> vs;  // steps+1 entries
  std::vector<SpectralCoeffs> us;       // steps+1 entries, us[0] = 0
  DeformationField field;
  Volume3 warped;
};

EnergyBreakdown forward_pass(const BandlimitedVelocity& v0, const ShootingProblem& prob,
                             ForwardTape* tape) {
  prob.validate();
  require(v0.coeffs.band == prob.ops.band, ErrorCode::InvalidArgument,
          "velocity band does not match the operators");

  auto vs = spectral::integrate_geodesic(v0, prob.steps, prob.ops);

  const double dt = 1.0 / prob.steps;
  std::vector<SpectralCoeffs> us;
  us.reserve(prob.steps + 1);
  us.push_back(SpectralCoeffs::zeros(prob.ops.band));
  for (int t = 0; t < prob.steps; ++t) {
    SpectralCoeffs adv = spectral::transform_bilinear(us.back(), vs[t].coeffs, prob.ops);
    SpectralCoeffs next = us.back() - dt * (vs[t].coeffs + adv);
    require(next.finite(), ErrorCode::NonFinite, "transform integration blew up");
    us.push_back(std::move(next));
  }

  spectral::BandlimitedTransform bt;
  bt.disp_coeffs = us.back();
  DeformationField field = spectral::to_spatial(bt, prob.moving.grid);
  Volume3 warped = volume::warp_deformable(prob.moving, field);

  EnergyBreakdown e;
  double ssd = 0.0;
  for (size_t i = 0; i < warped.data.size(); ++i) {
    double diff = warped.data[i] - prob.fixed.data[i];
    ssd += diff * diff;
  }
  e.data = ssd / prob.sigma2;

  double reg = 0.0;
  for (int c = 0; c < 3; ++c)
    for (size_t m = 0; m < v0.coeffs.comp[c].size(); ++m)
      reg += prob.ops.l_table[m] * std::norm(v0.coeffs.comp[c][m]);
  e.reg = reg;
  e.total = e.data + e.reg;

  if (tape) {
    tape->vs = std::move(vs);
    tape->us = std::move(us);
    tape->field = std::move(field);
    tape->warped = std::move(warped);
  }
  return e;
}

// adjoint of to_spatial: complexify, unnormalized forward transform,
// gather the band (the synthesis there was the unnormalized inverse)
SpectralCoeffs spatial_adjoint(const std::vector<std::array<double, 3>>& ubar_spatial,
                               const volume::Grid& grid, int band) {
  const auto& n = grid.dims;
  SpectralCoeffs out = SpectralCoeffs::zeros(band);
  std::vector<Cplx> buf;
  for (int c = 0; c < 3; ++c) {
    buf.assign(ubar_spatial.size(), Cplx(0.0, 0.0));
    for (size_t i = 0; i < ubar_spatial.size(); ++i) buf[i] = Cplx(ubar_spatial[i][c], 0.0);
    fft::transform(buf, n, /*forward=*/true);
    std::int64_t i = 0;
    for (int f2 = 0; f2 < band; ++f2)
      for (int f1 = 0; f1 < band; ++f1)
        for (int f0 = 0; f0 < band; ++f0, ++i) {
          auto nyq = [&](int f) { return band % 2 == 0 && f == band / 2; };
          if (nyq(f0) || nyq(f1) || nyq(f2)) continue;
          auto padi = [&](int f, int nn) {
            int m = f < (band + 1) / 2 ? f : f - band;
            return (m + nn) % nn;
          };
          std::int64_t j = padi(f0, n[0]) +
                           std::int64_t(n[0]) * (padi(f1, n[1]) +
                                                 std::int64_t(n[1]) * padi(f2, n[2]));
          out.comp[c][i] = buf[j];
        }
  }
  return out;
}

}  // namespace

EnergyBreakdown shooting_energy(const BandlimitedVelocity& v0, const ShootingProblem& prob) {
  return forward_pass(v0, prob, nullptr);
}

BandlimitedVelocity shooting_gradient(const BandlimitedVelocity& v0, const ShootingProblem& prob) {
  ForwardTape tape;
  forward_pass(v0, prob, &tape);
  const int band = prob.ops.band;
  const double dt = 1.0 / prob.steps;
  const auto& grid = prob.moving.grid;

  // data-term seed on the spatial displacement field:
  // dE/du_c(x) = (2/sigma^2) (W - J)(x) * dInterp/dp_c at x + u(x)
  std::vector<std::array<double, 3>> ubar_spatial(tape.field.u.size(), {0.0, 0.0, 0.0});
  {
    const auto& d = grid.dims;
    const double scale = 2.0 / prob.sigma2;
    std::int64_t i = 0;
    for (int z = 0; z < d[2]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[0]; ++x, ++i) {
          const auto& u = tape.field.u[i];
          geometry::Vec3 p{x + u[0], y + u[1], z + u[2]};
          double g[3];
          trilinear_with_grad(prob.moving, p, g);
          double r = scale * (tape.warped.data[i] - prob.fixed.data[i]);
          ubar_spatial[i] = {r * g[0], r * g[1], r * g[2]};
        }
  }

  SpectralCoeffs ubar = spatial_adjoint(ubar_spatial, grid, band);

  // reverse through u_{t+1} = u_t - dt (v_t + T(u_t, v_t))
  std::vector<SpectralCoeffs> vbar_seed(prob.steps + 1, SpectralCoeffs::zeros(band));
  for (int t = prob.steps - 1; t >= 0; --t) {
    SpectralCoeffs tmp_u = SpectralCoeffs::zeros(band);
    SpectralCoeffs tmp_v = SpectralCoeffs::zeros(band);
    spectral::transform_bilinear_adjoint(tape.us[t], tape.vs[t].coeffs, ubar, prob.ops, &tmp_u,
                                         &tmp_v);
    vbar_seed[t] = vbar_seed[t] - dt * (ubar + tmp_v);
    ubar = ubar - dt * tmp_u;
  }

  // reverse through v_{t+1} = v_t + dt * B(v_t, v_t)
  SpectralCoeffs vbar = vbar_seed[prob.steps];
  for (int t = prob.steps - 1; t >= 0; --t) {
    BandlimitedVelocity rbar{vbar};
    SpectralCoeffs tmp_p = SpectralCoeffs::zeros(band);
    SpectralCoeffs tmp_q = SpectralCoeffs::zeros(band);
    spectral::epdiff_bilinear_adjoint(tape.vs[t], tape.vs[t], rbar, prob.ops, &tmp_p, &tmp_q);
    vbar = vbar_seed[t] + vbar + dt * (tmp_p + tmp_q);
  }

  // regularizer gradient 2 L v0
  for (int c = 0; c < 3; ++c)
    for (size_t m = 0; m < vbar.comp[c].size(); ++m)
      vbar.comp[c][m] += 2.0 * prob.ops.l_table[m] * v0.coeffs.comp[c][m];

  spectral::project_conjugate_symmetric(vbar);
  return BandlimitedVelocity{std::move(vbar)};
}

ShootingSolution optimize_v0(const ShootingProblem& prob, const BandlimitedVelocity* init,
                             int max_iters) {
  prob.validate();
  BandlimitedVelocity v;
  if (init) {
    v = *init;
    spectral::project_conjugate_symmetric(v.coeffs);
  } else {
    v.coeffs = SpectralCoeffs::zeros(prob.ops.band);
  }

  EnergyBreakdown e = shooting_energy(v, prob);
  std::vector<double> trace{e.total};
  int iterations = 0;
  double step_init = 1.0;  // first trial step; later iterations warm-start

  for (int iter = 0; iter < max_iters; ++iter) {
    BandlimitedVelocity g = shooting_gradient(v, prob);
    double gn2 = spectral::inner_real(g.coeffs, g.coeffs);
    if (gn2 < 1e-24) break;

    double s = step_init;
    bool accepted = false;
    BandlimitedVelocity trial;
    EnergyBreakdown et;
    while (s >= 1e-16) {
      trial.coeffs = v.coeffs - s * g.coeffs;
      bool ok = true;
      try {
        et = shooting_energy(trial, prob);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NonFinite) throw;
        ok = false;
      }
      if (ok && et.total <= e.total - 1e-4 * s * gn2) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;

    v = std::move(trial);
    e = et;
    trace.push_back(e.total);
    ++iterations;
    step_init = std::min(1.0, 2.0 * s);

    if (trace.size() > 5) {
      double past = trace[trace.size() - 6];
      if (past - e.total < 1e-6 * std::max(std::abs(past), 1e-12)) break;
    }
  }

  ForwardTape tape;
  EnergyBreakdown final_e = forward_pass(v, prob, &tape);

  ShootingSolution sol;
  sol.v0 = std::move(v);
  sol.energy_trace = std::move(trace);
  sol.data_term = final_e.data;
  sol.reg_term = final_e.reg;
  sol.realized_field = std::move(tape.field);
  sol.min_jacobian = spectral::jacobian_min_det(sol.realized_field);
  sol.iterations = iterations;
  return sol;
}

std::pair<ShootingSolution, std::optional<ShootingSolution>> solve_both_channels(
    const rigid::ModalityPair& pair, const geometry::RigidTransform& q_fused,
    const spectral::SpectralOperators& ops, double sigma2, int steps, int max_iters,
    const BandlimitedVelocity* init_image, const BandlimitedVelocity* init_shape) {
  pair.validate();

  ShootingProblem image_prob{volume::resample_rigid(pair.source_image, q_fused,
                                                    pair.target_image.grid),
                             pair.target_image, ops, sigma2, steps};
  ShootingSolution image_sol = optimize_v0(image_prob, init_image, max_iters);

  std::optional<ShootingSolution> shape_sol;
  if (pair.has_shape()) {
    ShootingProblem shape_prob{volume::resample_rigid(*pair.source_shape, q_fused,
                                                      pair.target_shape->grid),
                               *pair.target_shape, ops, sigma2, steps};
    shape_sol = optimize_v0(shape_prob, init_shape, max_iters);
  }
  return {std::move(image_sol), std::move(shape_sol)};
}

}  // namespace unimo::deform
