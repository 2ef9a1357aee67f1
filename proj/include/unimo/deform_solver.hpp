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
#ifndef UNIMO_DEFORM_SOLVER_HPP
#define UNIMO_DEFORM_SOLVER_HPP

#include <optional>
#include <utility>
#include <vector>

#include "unimo/rigid_solver.hpp"
#include "unimo/spectral.hpp"
#include "unimo/volume.hpp"

namespace unimo::deform {

struct ShootingProblem {
  volume::Volume3 moving;  // rigid-aligned source
  volume::Volume3 fixed;   // target
  spectral::SpectralOperators ops;
  double sigma2 = 0.01;  // noise variance weight on the SSD term
  int steps = 10;

  void validate() const;
};

struct EnergyBreakdown {
  double total = 0.0;
  double data = 0.0;
  double reg = 0.0;
};

struct ShootingSolution {
  spectral::BandlimitedVelocity v0;
  std::vector<double> energy_trace;  // accepted energies, non-increasing
  double data_term = 0.0;
  double reg_term = 0.0;
  volume::DeformationField realized_field;
  double min_jacobian = 1.0;
  int iterations = 0;
};

/// E(v0) = (1/sigma^2) SSD(moving o psi_1, fixed) + <L v0, v0>, with psi_1
/// realized through the discrete geodesic + transform integration.
EnergyBreakdown shooting_energy(const spectral::BandlimitedVelocity& v0,
                                const ShootingProblem& prob);

/// Exact gradient of the discrete shooting energy with respect to the v0
/// coefficients, by reverse accumulation through the Euler integrators,
/// the spectral realization, and the trilinear warp; projected back onto
/// the conjugate-symmetric subspace.
spectral::BandlimitedVelocity shooting_gradient(const spectral::BandlimitedVelocity& v0,
                                                const ShootingProblem& prob);

/// Gradient descent with Armijo backtracking (c = 1e-4, shrink 0.5, first
/// trial step 1.0); stops on relative energy decrease < 1e-6 over 5
/// iterations or max_iters. Non-finite trial states are rejected by
/// shrinking the step; the best iterate is always returned.
ShootingSolution optimize_v0(const ShootingProblem& prob,
                             const spectral::BandlimitedVelocity* init = nullptr,
                             int max_iters = 100);

/// Independent shooting solves on the image channel and (when present) the
/// shape channel of the pair, sources resampled by q_fused first.
std::pair<ShootingSolution, std::optional<ShootingSolution>> solve_both_channels(
    const rigid::ModalityPair& pair, const geometry::RigidTransform& q_fused,
    const spectral::SpectralOperators& ops, double sigma2 = 0.01, int steps = 10,
    int max_iters = 100, const spectral::BandlimitedVelocity* init_image = nullptr,
    const spectral::BandlimitedVelocity* init_shape = nullptr);

}  // namespace unimo::deform

#endif
