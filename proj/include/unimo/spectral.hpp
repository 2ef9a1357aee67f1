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
#ifndef UNIMO_SPECTRAL_HPP
#define UNIMO_SPECTRAL_HPP

#include <array>
#include <complex>
#include <vector>

#include "unimo/volume.hpp"

namespace unimo::spectral {

using Cplx = std::complex<double>;

/// band^3 complex coefficients per vector component, frequencies in FFT
/// index order per axis (f < band/2 means +f, else f - band). The plane
/// f = band/2 (whose mirror +band/2 falls outside the set) is kept
/// structurally zero so conjugate symmetry coeffs(-xi) = conj(coeffs(xi))
/// is well-defined and every realized field is real.
struct SpectralCoeffs {
  int band = 0;
  std::array<std::vector<Cplx>, 3> comp;

  static SpectralCoeffs zeros(int band);
  std::int64_t modes_per_component() const {
    return std::int64_t(band) * band * band;
  }
  bool finite() const;
};

SpectralCoeffs operator+(const SpectralCoeffs& a, const SpectralCoeffs& b);
SpectralCoeffs operator-(const SpectralCoeffs& a, const SpectralCoeffs& b);
SpectralCoeffs operator*(double s, const SpectralCoeffs& a);

/// Real pairing sum Re(conj(a) b) over all components (coefficients viewed
/// as real parameter pairs).
double inner_real(const SpectralCoeffs& a, const SpectralCoeffs& b);
double norm2(const SpectralCoeffs& a);

/// Max deviation from coeffs(-xi) = conj(coeffs(xi)) (includes the
/// required zero Nyquist plane).
double conjugate_symmetry_error(const SpectralCoeffs& c);
/// Orthogonal projection onto the conjugate-symmetric subspace.
void project_conjugate_symmetric(SpectralCoeffs& c);

/// Fourier-domain operator tables on a band^3 support embedded in an
/// N^3 grid: L(xi) = (alpha * sum_j (2 - 2 cos(2 pi xi_j)) + 1)^p, K = 1/L,
/// D_j(xi) = i sin(2 pi xi_j), xi_j = m_j / N_j.
struct SpectralOperators {
  int band = 16;
  std::array<int, 3> grid_dims{0, 0, 0};
  double alpha = 3.0;
  int power = 3;

  std::vector<double> l_table;                  // band^3
  std::array<std::vector<double>, 3> sin_axis;  // per-axis sin(2 pi m/N), length band

  static SpectralOperators create(int band, const std::array<int, 3>& grid_dims,
                                  double alpha = 3.0, int power = 3);

  void apply_l(SpectralCoeffs& c) const;
  void apply_k(SpectralCoeffs& c) const;
};

struct BandlimitedVelocity {
  SpectralCoeffs coeffs;
};

/// Displacement part u of the bandlimited transform psi = id + u.
struct BandlimitedTransform {
  SpectralCoeffs disp_coeffs;
};

/// Right-hand side of the bandlimited EPDiff equation,
/// -K[(Dv)^T * Lv + div(Lv (x) v)], with every quadratic term computed by
/// zero-padding to 2*band per axis, multiplying in the padded spatial
/// domain, and truncating back to the band.
BandlimitedVelocity epdiff_rhs(const BandlimitedVelocity& v, const SpectralOperators& ops);

/// Forward Euler v_{t+dt} = v_t + dt * epdiff_rhs(v_t), dt = 1/steps;
/// returns steps+1 velocities including both endpoints. Throws NonFinite
/// (with the offending step in the message) on blow-up.
std::vector<BandlimitedVelocity> integrate_geodesic(const BandlimitedVelocity& v0, int steps,
                                                    const SpectralOperators& ops);

/// Forward Euler on du/dt = -v - (Du) * v (the identity part of psi
/// contributes -v); uses the left-endpoint velocity per step.
BandlimitedTransform integrate_transform(const std::vector<BandlimitedVelocity>& vs,
                                         const SpectralOperators& ops);

/// Zero-pad to the grid, inverse transform per component, discard the
/// imaginary residue; displacement in voxel units.
volume::DeformationField to_spatial(const BandlimitedTransform& bt, const volume::Grid& grid);

/// Spatial realization of a velocity (same transform path as to_spatial).
volume::DeformationField velocity_to_spatial(const BandlimitedVelocity& v,
                                             const volume::Grid& grid);

/// Minimum central-difference Jacobian determinant of x + u(x) over
/// interior voxels; positive means no folding.
double jacobian_min_det(const volume::DeformationField& field);

// -- low-level spectral plumbing (shared with the shooting adjoints) --

/// Padded spatial synthesis: embed band^3 coeffs into a (2 band)^3 grid and
/// run the unnormalized inverse transform.
std::vector<Cplx> synth_pad(const std::vector<Cplx>& coeffs, int band);
/// Forward transform of a (2 band)^3 field, scaled by 1/(2 band)^3, then
/// truncated to the band (Nyquist plane zeroed).
std::vector<Cplx> analyze_trunc(std::vector<Cplx> spatial, int band);
/// Adjoints of the two maps above under the real pairing.
std::vector<Cplx> synth_pad_adjoint(std::vector<Cplx> spatial, int band);
std::vector<Cplx> analyze_trunc_adjoint(const std::vector<Cplx>& coeffs, int band);

/// Multiply by the central-difference symbol i sin(2 pi m/N) along axis.
void apply_d_axis(std::vector<Cplx>& coeffs, const SpectralOperators& ops, int axis);
/// Adjoint of apply_d_axis (conjugate symbol).
void apply_d_axis_adjoint(std::vector<Cplx>& coeffs, const SpectralOperators& ops, int axis);

/// Bilinear form underlying the EPDiff right side: epdiff_rhs(v) = B(v, v),
/// B(p, q) = -K[(Dp)^T * (Lq) + div(Lp (x) q)].
BandlimitedVelocity epdiff_bilinear(const BandlimitedVelocity& p, const BandlimitedVelocity& q,
                                    const SpectralOperators& ops);
/// Accumulates the slot adjoints of epdiff_bilinear for cotangent rbar.
/// Either output may be null.
void epdiff_bilinear_adjoint(const BandlimitedVelocity& p, const BandlimitedVelocity& q,
                             const BandlimitedVelocity& rbar, const SpectralOperators& ops,
                             SpectralCoeffs* pbar, SpectralCoeffs* qbar);

/// Advection term of the transform evolution: T(u, v)_i = sum_j (D_j u_i) * v_j
/// (truncated products), so du/dt = -v - T(u, v).
SpectralCoeffs transform_bilinear(const SpectralCoeffs& u, const SpectralCoeffs& v,
                                  const SpectralOperators& ops);
void transform_bilinear_adjoint(const SpectralCoeffs& u, const SpectralCoeffs& v,
                                const SpectralCoeffs& rbar, const SpectralOperators& ops,
                                SpectralCoeffs* ubar, SpectralCoeffs* vbar);

}  // namespace unimo::spectral

#endif
