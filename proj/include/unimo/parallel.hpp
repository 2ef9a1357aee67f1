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
#ifndef UNIMO_PARALLEL_HPP
#define UNIMO_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace unimo {

/// Process-wide cap on worker threads (1 = serial). Set from --threads or
/// UNIMO_THREADS; outputs must be identical for any value.
void set_max_threads(int n);
int max_threads();

/// Runs f(i) for i in [0, n) split into contiguous chunks across threads.
/// Only valid for bodies with disjoint writes and no shared accumulation —
/// that restriction is what keeps results bit-identical for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f);

}  // namespace unimo

#endif
