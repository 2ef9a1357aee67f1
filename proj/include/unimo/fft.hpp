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
#ifndef UNIMO_FFT_HPP
#define UNIMO_FFT_HPP

#include <array>
#include <complex>
#include <vector>

namespace unimo::fft {

/// In-place 3D complex DFT over a dims[0] x dims[1] x dims[2] array,
/// x fastest-varying. forward uses e^{-i2pi...} and is unnormalized;
/// backward uses e^{+i2pi...} and is unnormalized. Plans are cached with
/// FFTW_ESTIMATE only, so planning is deterministic; execution is
/// single-threaded by construction.
void transform(std::vector<std::complex<double>>& data, const std::array<int, 3>& dims,
               bool forward);

}  // namespace unimo::fft

#endif
