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
#ifndef UNIMO_ERRORS_HPP
#define UNIMO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace unimo {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Format,
  GridMismatch,
  DegenerateConfiguration,
  TooFewChannels,
  EmptyMask,
  ConstantVolume,
  NonFinite,
  BandExceedsGrid,
  TooFewFrames,
  MissingCase,
  Solver,
};

/// Single exception type for the whole library; the code survives the
/// trip across the C API as a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace unimo

#endif
