// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "decomp/trace.hpp"

namespace decomp {

inline constexpr int kDefaultHampelHalfWidth = 3;
inline constexpr double kDefaultHampelThreshold = 3.0;
inline constexpr std::size_t kMinDecompositionLength = 28;

struct OutlierReport {
  std::vector<std::size_t> indices;
  std::vector<double> original_values;
  std::vector<double> replacement_values;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

struct HampelOutput {
  Trace trace;
  OutlierReport report;
};

// Sliding median/MAD outlier replacement. Windows are truncated at the
// series ends. With MAD == 0 any nonzero deviation from the window median
// is replaced.
HampelOutput hampel_filter(const Trace& trace,
                           int window_half_width = kDefaultHampelHalfWidth,
                           double threshold = kDefaultHampelThreshold);

enum class IssueKind { non_finite, too_short, zero_variance };

struct ValidationIssue {
  IssueKind kind;
  std::optional<std::size_t> index;
  std::string message;
};

struct ValidationVerdict {
  bool valid = true;
  std::vector<ValidationIssue> issues;

  std::string summary() const;
};

ValidationVerdict validate(const Trace& trace);

// Throws Error{validation} carrying the verdict summary when invalid.
void require_valid(const Trace& trace);

}  // namespace decomp
