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
#include "unimo/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "unimo/errors.hpp"

namespace unimo::fft {

namespace {

struct PlanKey {
  std::array<int, 3> dims;
  bool forward;
  bool operator<(const PlanKey& o) const {
    if (dims != o.dims) return dims < o.dims;
    return forward < o.forward;
  }
};

// fftw planning is not thread-safe; execution on distinct buffers is.
std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan> g_plans;

fftw_plan plan_for(const std::array<int, 3>& dims, bool forward,
                   std::complex<double>* buffer) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  PlanKey key{dims, forward};
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  // x is fastest-varying in our layout; fftw wants the slowest first
  fftw_plan plan = fftw_plan_dft_3d(dims[2], dims[1], dims[0],
                                    reinterpret_cast<fftw_complex*>(buffer),
                                    reinterpret_cast<fftw_complex*>(buffer),
                                    forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(plan != nullptr, ErrorCode::Solver, "fftw plan creation failed");
  g_plans.emplace(key, plan);
  return plan;
}

}  // namespace

void transform(std::vector<std::complex<double>>& data, const std::array<int, 3>& dims,
               bool forward) {
  require(data.size() == std::size_t(dims[0]) * dims[1] * dims[2], ErrorCode::InvalidArgument,
          "fft buffer size does not match dims");
  fftw_plan plan = plan_for(dims, forward, data.data());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()),
                   reinterpret_cast<fftw_complex*>(data.data()));
}

}  // namespace unimo::fft
