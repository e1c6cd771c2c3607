/*
 * Copyright 2026 The gdecal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GDECAL_ERRORS_HPP_
#define GDECAL_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gdecal {

// Error categories surfaced by the library. The numeric values are mirrored
// by gde_status in the C API and must stay in sync with it.
enum class Errc {
  kInvalidArgument = 1,
  kNormalization = 2,
  kRange = 3,
  kAlignment = 4,
  kIndex = 5,
  kSize = 6,
  kDegenerate = 7,
  kParse = 8,
  kDuplicateId = 9,
  kClassRange = 10,
  kSchema = 11,
  kConstraint = 12,
  kConstruction = 13,
  kKappaRange = 14,
  kIo = 15,
};

std::string_view ErrcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gdecal

#endif  // GDECAL_ERRORS_HPP_
