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
#include "unimo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unimo/errors.hpp"
#include "unimo/fft.hpp"

namespace unimo::spectral {

namespace {

inline int signed_freq(int f, int band) { return f < (band + 1) / 2 ? f : f - band; }
inline bool is_nyquist(int f, int band) { return band % 2 == 0 && f == band / 2; }
inline int mirror_index(int f, int band) { return (band - f) % band; }

template <typename F>
void for_each_mode(int band, F&& f) {
  std::int64_t i = 0;
  for (int f2 = 0; f2 < band; ++f2)
    for (int f1 = 0; f1 < band; ++f1)
      for (int f0 = 0; f0 < band; ++f0, ++i) f(i, f0, f1, f2);
}

}  // namespace

SpectralCoeffs SpectralCoeffs::zeros(int band) {
  require(band >= 2, ErrorCode::InvalidArgument, "band must be at least 2");
  SpectralCoeffs c;
  c.band = band;
  for (auto& v : c.comp) v.assign(std::size_t(band) * band * band, Cplx(0.0, 0.0));
  return c;
}

bool SpectralCoeffs::finite() const {
  for (const auto& v : comp)
    for (const auto& z : v)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

SpectralCoeffs operator+(const SpectralCoeffs& a, const SpectralCoeffs& b) {
  SpectralCoeffs out = a;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < out.comp[c].size(); ++i) out.comp[c][i] += b.comp[c][i];
  return out;
}

SpectralCoeffs operator-(const SpectralCoeffs& a, const SpectralCoeffs& b) {
  SpectralCoeffs out = a;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < out.comp[c].size(); ++i) out.comp[c][i] -= b.comp[c][i];
  return out;
}

SpectralCoeffs operator*(double s, const SpectralCoeffs& a) {
  SpectralCoeffs out = a;
  for (int c = 0; c < 3; ++c)
    for (auto& z : out.comp[c]) z *= s;
  return out;
}

double inner_real(const SpectralCoeffs& a, const SpectralCoeffs& b) {
  double acc = 0.0;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < a.comp[c].size(); ++i)
      acc += a.comp[c][i].real() * b.comp[c][i].real() + a.comp[c][i].imag() * b.comp[c][i].imag();
  return acc;
}

double norm2(const SpectralCoeffs& a) { return std::sqrt(inner_real(a, a)); }

double conjugate_symmetry_error(const SpectralCoeffs& c) {
  double worst = 0.0;
  const int b = c.band;
  for (int comp = 0; comp < 3; ++comp) {
    for_each_mode(b, [&](std::int64_t i, int f0, int f1, int f2) {
      if (is_nyquist(f0, b) || is_nyquist(f1, b) || is_nyquist(f2, b)) {
        worst = std::max(worst, std::abs(c.comp[comp][i]));
        return;
      }
      std::int64_t j = mirror_index(f0, b) +
                       std::int64_t(b) * (mirror_index(f1, b) + std::int64_t(b) * mirror_index(f2, b));
      worst = std::max(worst, std::abs(c.comp[comp][i] - std::conj(c.comp[comp][j])));
    });
  }
  return worst;
}

void project_conjugate_symmetric(SpectralCoeffs& c) {
  const int b = c.band;
  for (int comp = 0; comp < 3; ++comp) {
    std::vector<Cplx> out = c.comp[comp];
    for_each_mode(b, [&](std::int64_t i, int f0, int f1, int f2) {
      if (is_nyquist(f0, b) || is_nyquist(f1, b) || is_nyquist(f2, b)) {
        out[i] = Cplx(0.0, 0.0);
        return;
      }
      std::int64_t j = mirror_index(f0, b) +
                       std::int64_t(b) * (mirror_index(f1, b) + std::int64_t(b) * mirror_index(f2, b));
      out[i] = 0.5 * (c.comp[comp][i] + std::conj(c.comp[comp][j]));
    });
    c.comp[comp] = std::move(out);
  }
}

SpectralOperators SpectralOperators::create(int band, const std::array<int, 3>& grid_dims,
                                            double alpha, int power) {
  require(band >= 2, ErrorCode::InvalidArgument, "band must be at least 2");
  require(alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be nonnegative");
  require(power >= 1, ErrorCode::InvalidArgument, "operator power must be at least 1");
  int min_dim = std::min({grid_dims[0], grid_dims[1], grid_dims[2]});
  require(2 * band <= min_dim, ErrorCode::BandExceedsGrid,
          "band exceeds half the smallest grid dimension");

  SpectralOperators ops;
  ops.band = band;
  ops.grid_dims = grid_dims;
  ops.alpha = alpha;
  ops.power = power;

  std::array<std::vector<double>, 3> lap_axis;
  for (int a = 0; a < 3; ++a) {
    ops.sin_axis[a].resize(band);
    lap_axis[a].resize(band);
    for (int f = 0; f < band; ++f) {
      double xi = static_cast<double>(signed_freq(f, band)) / grid_dims[a];
      ops.sin_axis[a][f] = std::sin(2.0 * M_PI * xi);
      lap_axis[a][f] = 2.0 - 2.0 * std::cos(2.0 * M_PI * xi);
    }
  }

  ops.l_table.resize(std::size_t(band) * band * band);
  for_each_mode(band, [&](std::int64_t i, int f0, int f1, int f2) {
    double base = alpha * (lap_axis[0][f0] + lap_axis[1][f1] + lap_axis[2][f2]) + 1.0;
    double val = 1.0;
    for (int k = 0; k < power; ++k) val *= base;
    ops.l_table[i] = val;
  });
  return ops;
}

void SpectralOperators::apply_l(SpectralCoeffs& c) const {
  for (int comp = 0; comp < 3; ++comp)
    for (size_t i = 0; i < c.comp[comp].size(); ++i) c.comp[comp][i] *= l_table[i];
}

void SpectralOperators::apply_k(SpectralCoeffs& c) const {
  for (int comp = 0; comp < 3; ++comp)
    for (size_t i = 0; i < c.comp[comp].size(); ++i) c.comp[comp][i] /= l_table[i];
}

void apply_d_axis(std::vector<Cplx>& coeffs, const SpectralOperators& ops, int axis) {
  const int b = ops.band;
  for_each_mode(b, [&](std::int64_t i, int f0, int f1, int f2) {
    int f = axis == 0 ? f0 : axis == 1 ? f1 : f2;
    coeffs[i] *= Cplx(0.0, ops.sin_axis[axis][f]);
  });
}

void apply_d_axis_adjoint(std::vector<Cplx>& coeffs, const SpectralOperators& ops, int axis) {
  const int b = ops.band;
  for_each_mode(b, [&](std::int64_t i, int f0, int f1, int f2) {
    int f = axis == 0 ? f0 : axis == 1 ? f1 : f2;
    coeffs[i] *= Cplx(0.0, -ops.sin_axis[axis][f]);
  });
}

namespace {

// maps between band-index f and an index on a larger P-periodic grid
inline int pad_index(int f, int band, int p) {
  int m = signed_freq(f, band);
  return (m + p) % p;
}

}  // namespace

std::vector<Cplx> synth_pad(const std::vector<Cplx>& coeffs, int band) {
  const int p = 2 * band;
  std::vector<Cplx> padded(std::size_t(p) * p * p, Cplx(0.0, 0.0));
  for_each_mode(band, [&](std::int64_t i, int f0, int f1, int f2) {
    if (is_nyquist(f0, band) || is_nyquist(f1, band) || is_nyquist(f2, band)) return;
    std::int64_t j = pad_index(f0, band, p) +
                     std::int64_t(p) * (pad_index(f1, band, p) +
                                        std::int64_t(p) * pad_index(f2, band, p));
    padded[j] = coeffs[i];
  });
  fft::transform(padded, {p, p, p}, /*forward=*/false);
  return padded;
}

std::vector<Cplx> analyze_trunc(std::vector<Cplx> spatial, int band) {
  const int p = 2 * band;
  fft::transform(spatial, {p, p, p}, /*forward=*/true);
  const double scale = 1.0 / (static_cast<double>(p) * p * p);
  std::vector<Cplx> out(std::size_t(band) * band * band, Cplx(0.0, 0.0));
  for_each_mode(band, [&](std::int64_t i, int f0, int f1, int f2) {
    if (is_nyquist(f0, band) || is_nyquist(f1, band) || is_nyquist(f2, band)) return;
    std::int64_t j = pad_index(f0, band, p) +
                     std::int64_t(p) * (pad_index(f1, band, p) +
                                        std::int64_t(p) * pad_index(f2, band, p));
    out[i] = spatial[j] * scale;
  });
  return out;
}

std::vector<Cplx> synth_pad_adjoint(std::vector<Cplx> spatial, int band) {
  const int p = 2 * band;
  fft::transform(spatial, {p, p, p}, /*forward=*/true);
  std::vector<Cplx> out(std::size_t(band) * band * band, Cplx(0.0, 0.0));
  for_each_mode(band, [&](std::int64_t i, int f0, int f1, int f2) {
    if (is_nyquist(f0, band) || is_nyquist(f1, band) || is_nyquist(f2, band)) return;
    std::int64_t j = pad_index(f0, band, p) +
                     std::int64_t(p) * (pad_index(f1, band, p) +
                                        std::int64_t(p) * pad_index(f2, band, p));
    out[i] = spatial[j];
  });
  return out;
}

std::vector<Cplx> analyze_trunc_adjoint(const std::vector<Cplx>& coeffs, int band) {
  const int p = 2 * band;
  const double scale = 1.0 / (static_cast<double>(p) * p * p);
  std::vector<Cplx> padded(std::size_t(p) * p * p, Cplx(0.0, 0.0));
  for_each_mode(band, [&](std::int64_t i, int f0, int f1, int f2) {
    if (is_nyquist(f0, band) || is_nyquist(f1, band) || is_nyquist(f2, band)) return;
    std::int64_t j = pad_index(f0, band, p) +
                     std::int64_t(p) * (pad_index(f1, band, p) +
                                        std::int64_t(p) * pad_index(f2, band, p));
    padded[j] = coeffs[i] * scale;
  });
  fft::transform(padded, {p, p, p}, /*forward=*/false);
  return padded;
}

namespace {

void mul_accumulate(std::vector<Cplx>& acc, const std::vector<Cplx>& a,
                    const std::vector<Cplx>& b) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * b[i];
}

std::vector<Cplx> mul(const std::vector<Cplx>& a, const std::vector<Cplx>& b) {
  std::vector<Cplx> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

std::vector<Cplx> conj_mul(const std::vector<Cplx>& a, const std::vector<Cplx>& b) {
  std::vector<Cplx> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = std::conj(a[i]) * b[i];
  return out;
}

void add_into(std::vector<Cplx>& acc, const std::vector<Cplx>& a) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += a[i];
}

}  // namespace

BandlimitedVelocity epdiff_bilinear(const BandlimitedVelocity& p, const BandlimitedVelocity& q,
                                    const SpectralOperators& ops) {
  const int b = ops.band;
  require(p.coeffs.band == b && q.coeffs.band == b, ErrorCode::InvalidArgument,
          "band mismatch between velocity and operators");

  SpectralCoeffs lq = q.coeffs;
  ops.apply_l(lq);
  SpectralCoeffs lp = p.coeffs;
  ops.apply_l(lp);

  // padded spatial realizations
  std::array<std::vector<Cplx>, 3> q_sp, lq_sp, lp_sp;
  for (int c = 0; c < 3; ++c) {
    q_sp[c] = synth_pad(q.coeffs.comp[c], b);
    lq_sp[c] = synth_pad(lq.comp[c], b);
    lp_sp[c] = synth_pad(lp.comp[c], b);
  }

  BandlimitedVelocity out;
  out.coeffs = SpectralCoeffs::zeros(b);

  const std::size_t pad_size = lq_sp[0].size();
  for (int i = 0; i < 3; ++i) {
    // (Dp)^T term: sum_j (d p_j / d x_i) . (Lq)_j
    std::vector<Cplx> acc(pad_size, Cplx(0.0, 0.0));
    for (int j = 0; j < 3; ++j) {
      std::vector<Cplx> g = p.coeffs.comp[j];
      apply_d_axis(g, ops, i);
      mul_accumulate(acc, synth_pad(g, b), lq_sp[j]);
    }
    std::vector<Cplx> term = analyze_trunc(std::move(acc), b);

    // divergence term: sum_j D_j [(Lp)_i . q_j]
    for (int j = 0; j < 3; ++j) {
      std::vector<Cplx> pij = analyze_trunc(mul(lp_sp[i], q_sp[j]), b);
      apply_d_axis(pij, ops, j);
      add_into(term, pij);
    }

    for (size_t m = 0; m < term.size(); ++m)
      out.coeffs.comp[i][m] = -term[m] / ops.l_table[m];
  }
  return out;
}

BandlimitedVelocity epdiff_rhs(const BandlimitedVelocity& v, const SpectralOperators& ops) {
  return epdiff_bilinear(v, v, ops);
}

void epdiff_bilinear_adjoint(const BandlimitedVelocity& p, const BandlimitedVelocity& q,
                             const BandlimitedVelocity& rbar, const SpectralOperators& ops,
                             SpectralCoeffs* pbar, SpectralCoeffs* qbar) {
  const int b = ops.band;

  SpectralCoeffs lq = q.coeffs;
  ops.apply_l(lq);
  SpectralCoeffs lp = p.coeffs;
  ops.apply_l(lp);

  std::array<std::vector<Cplx>, 3> q_sp, lq_sp, lp_sp;
  for (int c = 0; c < 3; ++c) {
    q_sp[c] = synth_pad(q.coeffs.comp[c], b);
    lq_sp[c] = synth_pad(lq.comp[c], b);
    lp_sp[c] = synth_pad(lp.comp[c], b);
  }
  // gradients of p: spatial d p_j / d x_i, indexed [i][j]
  std::array<std::array<std::vector<Cplx>, 3>, 3> gp_sp;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::vector<Cplx> g = p.coeffs.comp[j];
      apply_d_axis(g, ops, i);
      gp_sp[i][j] = synth_pad(g, b);
    }

  for (int i = 0; i < 3; ++i) {
    // cotangent through -K
    std::vector<Cplx> ri(rbar.coeffs.comp[i].size());
    for (size_t m = 0; m < ri.size(); ++m) ri[m] = -rbar.coeffs.comp[i][m] / ops.l_table[m];

    // adjoint of the (Dp)^T term
    std::vector<Cplx> ri_pad = analyze_trunc_adjoint(ri, b);
    for (int j = 0; j < 3; ++j) {
      if (pbar) {
        std::vector<Cplx> g = synth_pad_adjoint(conj_mul(lq_sp[j], ri_pad), b);
        apply_d_axis_adjoint(g, ops, i);
        add_into(pbar->comp[j], g);
      }
      if (qbar) {
        std::vector<Cplx> g = synth_pad_adjoint(conj_mul(gp_sp[i][j], ri_pad), b);
        for (size_t m = 0; m < g.size(); ++m) g[m] *= ops.l_table[m];
        add_into(qbar->comp[j], g);
      }
    }

    // adjoint of the divergence term
    for (int j = 0; j < 3; ++j) {
      std::vector<Cplx> rij = ri;
      apply_d_axis_adjoint(rij, ops, j);
      std::vector<Cplx> rij_pad = analyze_trunc_adjoint(rij, b);
      if (pbar) {
        std::vector<Cplx> g = synth_pad_adjoint(conj_mul(q_sp[j], rij_pad), b);
        for (size_t m = 0; m < g.size(); ++m) g[m] *= ops.l_table[m];
        add_into(pbar->comp[i], g);
      }
      if (qbar) {
        std::vector<Cplx> g = synth_pad_adjoint(conj_mul(lp_sp[i], rij_pad), b);
        add_into(qbar->comp[j], g);
      }
    }
  }
}

SpectralCoeffs transform_bilinear(const SpectralCoeffs& u, const SpectralCoeffs& v,
                                  const SpectralOperators& ops) {
  const int b = ops.band;
  std::array<std::vector<Cplx>, 3> v_sp;
  for (int c = 0; c < 3; ++c) v_sp[c] = synth_pad(v.comp[c], b);

  SpectralCoeffs out = SpectralCoeffs::zeros(b);
  const std::size_t pad_size = v_sp[0].size();
  for (int i = 0; i < 3; ++i) {
    std::vector<Cplx> acc(pad_size, Cplx(0.0, 0.0));
    for (int j = 0; j < 3; ++j) {
      std::vector<Cplx> g = u.comp[i];
      apply_d_axis(g, ops, j);
      mul_accumulate(acc, synth_pad(g, b), v_sp[j]);
    }
    out.comp[i] = analyze_trunc(std::move(acc), b);
  }
  return out;
}

void transform_bilinear_adjoint(const SpectralCoeffs& u, const SpectralCoeffs& v,
                                const SpectralCoeffs& rbar, const SpectralOperators& ops,
                                SpectralCoeffs* ubar, SpectralCoeffs* vbar) {
  const int b = ops.band;
  std::array<std::vector<Cplx>, 3> v_sp;
  for (int c = 0; c < 3; ++c) v_sp[c] = synth_pad(v.comp[c], b);

  for (int i = 0; i < 3; ++i) {
    std::vector<Cplx> ri_pad = analyze_trunc_adjoint(rbar.comp[i], b);
    for (int j = 0; j < 3; ++j) {
      if (ubar) {
        std::vector<Cplx> g = synth_pad_adjoint(conj_mul(v_sp[j], ri_pad), b);
        apply_d_axis_adjoint(g, ops, j);
        add_into(ubar->comp[i], g);
      }
      if (vbar) {
        std::vector<Cplx> g = u.comp[i];
        apply_d_axis(g, ops, j);
        std::vector<Cplx> gu_sp = synth_pad(g, b);
        add_into(vbar->comp[j], synth_pad_adjoint(conj_mul(gu_sp, ri_pad), b));
      }
    }
  }
}

std::vector<BandlimitedVelocity> integrate_geodesic(const BandlimitedVelocity& v0, int steps,
                                                    const SpectralOperators& ops) {
  require(steps >= 1, ErrorCode::InvalidArgument, "integration needs at least one step");
  const double dt = 1.0 / steps;
  std::vector<BandlimitedVelocity> out;
  out.reserve(steps + 1);
  out.push_back(v0);
  for (int t = 0; t < steps; ++t) {
    BandlimitedVelocity rhs = epdiff_rhs(out.back(), ops);
    BandlimitedVelocity next;
    next.coeffs = out.back().coeffs + dt * rhs.coeffs;
    if (!next.coeffs.finite()) {
      std::ostringstream msg;
      msg << "geodesic integration blew up at step " << (t + 1) << " of " << steps;
      fail(ErrorCode::NonFinite, msg.str());
    }
    out.push_back(std::move(next));
  }
  return out;
}

BandlimitedTransform integrate_transform(const std::vector<BandlimitedVelocity>& vs,
                                         const SpectralOperators& ops) {
  require(vs.size() >= 2, ErrorCode::InvalidArgument,
          "need at least two velocities (one Euler step)");
  const int steps = static_cast<int>(vs.size()) - 1;
  const double dt = 1.0 / steps;

  BandlimitedTransform bt;
  bt.disp_coeffs = SpectralCoeffs::zeros(ops.band);
  for (int t = 0; t < steps; ++t) {
    SpectralCoeffs adv = transform_bilinear(bt.disp_coeffs, vs[t].coeffs, ops);
    // du/dt = -v - (Du) * v
    bt.disp_coeffs = bt.disp_coeffs - dt * (vs[t].coeffs + adv);
    if (!bt.disp_coeffs.finite()) {
      std::ostringstream msg;
      msg << "transform integration blew up at step " << (t + 1) << " of " << steps;
      fail(ErrorCode::NonFinite, msg.str());
    }
  }
  return bt;
}

namespace {

volume::DeformationField coeffs_to_spatial(const SpectralCoeffs& c, const volume::Grid& grid) {
  const int b = c.band;
  const auto& n = grid.dims;
  int min_dim = std::min({n[0], n[1], n[2]});
  require(2 * b <= min_dim, ErrorCode::BandExceedsGrid,
          "band exceeds half the smallest grid dimension");

  volume::DeformationField field(grid);
  std::vector<Cplx> buf;
  for (int comp = 0; comp < 3; ++comp) {
    buf.assign(std::size_t(n[0]) * n[1] * n[2], Cplx(0.0, 0.0));
    for_each_mode(b, [&](std::int64_t i, int f0, int f1, int f2) {
      if (is_nyquist(f0, b) || is_nyquist(f1, b) || is_nyquist(f2, b)) return;
      std::int64_t j = pad_index(f0, b, n[0]) +
                       std::int64_t(n[0]) * (pad_index(f1, b, n[1]) +
                                             std::int64_t(n[1]) * pad_index(f2, b, n[2]));
      buf[j] = c.comp[comp][i];
    });
    fft::transform(buf, n, /*forward=*/false);

    double max_real = 0.0, max_imag = 0.0;
    for (const auto& z : buf) {
      max_real = std::max(max_real, std::abs(z.real()));
      max_imag = std::max(max_imag, std::abs(z.imag()));
    }
    require(max_imag <= 1e-8 * std::max(1.0, max_real), ErrorCode::InvalidArgument,
            "coefficients are not conjugate-symmetric (imaginary residue too large)");

    for (size_t i = 0; i < buf.size(); ++i) field.u[i][comp] = buf[i].real();
  }
  return field;
}

}  // namespace

volume::DeformationField to_spatial(const BandlimitedTransform& bt, const volume::Grid& grid) {
  return coeffs_to_spatial(bt.disp_coeffs, grid);
}

volume::DeformationField velocity_to_spatial(const BandlimitedVelocity& v,
                                             const volume::Grid& grid) {
  return coeffs_to_spatial(v.coeffs, grid);
}

double jacobian_min_det(const volume::DeformationField& field) {
  const auto& d = field.grid.dims;
  require(d[0] >= 3 && d[1] >= 3 && d[2] >= 3, ErrorCode::InvalidArgument,
          "jacobian needs a grid of at least 3^3");

  double min_det = std::numeric_limits<double>::infinity();
  for (int z = 1; z < d[2] - 1; ++z)
    for (int y = 1; y < d[1] - 1; ++y)
      for (int x = 1; x < d[0] - 1; ++x) {
        double jac[3][3];
        const std::array<int, 3> pos{x, y, z};
        for (int c = 0; c < 3; ++c) {
          std::array<int, 3> hi = pos, lo = pos;
          ++hi[c];
          --lo[c];
          auto uh = field.u[field.grid.index(hi[0], hi[1], hi[2])];
          auto ul = field.u[field.grid.index(lo[0], lo[1], lo[2])];
          for (int r = 0; r < 3; ++r)
            jac[r][c] = (r == c ? 1.0 : 0.0) + 0.5 * (uh[r] - ul[r]);
        }
        double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                     jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                     jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        min_det = std::min(min_det, det);
      }
  return min_det;
}

}  // namespace unimo::spectral
