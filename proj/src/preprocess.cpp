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

#include "decomp/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "decomp/error.hpp"

namespace decomp {

namespace {

// Scale factor making MAD a consistent estimator of sigma for Gaussian data.
constexpr double kMadScale = 1.4826;

double median_of(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  const std::size_t mid = n / 2;
  std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
  double hi = buf[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(buf.begin(), buf.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

HampelOutput hampel_filter(const Trace& trace, int window_half_width,
                           double threshold) {
  require(window_half_width >= 1, "hampel_filter: window_half_width must be >= 1");
  require(threshold > 0.0, "hampel_filter: threshold must be > 0");
  const std::size_t n = trace.size();
  const auto w = static_cast<std::size_t>(window_half_width);
  require(n > 2 * w, "hampel_filter: trace of length " + std::to_string(n) +
                         " is too short for a window of half-width " +
                         std::to_string(w));

  const auto x = trace.values();
  Series out(x.begin(), x.end());
  OutlierReport report;
  std::vector<double> window, dev;
  window.reserve(2 * w + 1);
  dev.reserve(2 * w + 1);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= w ? i - w : 0;
    const std::size_t hi = std::min(n - 1, i + w);
    window.assign(x.begin() + lo, x.begin() + hi + 1);
    const double med = median_of(window);
    dev.clear();
    for (std::size_t j = lo; j <= hi; ++j) dev.push_back(std::abs(x[j] - med));
    const double mad = median_of(dev);
    const double deviation = std::abs(x[i] - med);
    if (deviation > threshold * kMadScale * mad) {
      out[i] = med;
      report.indices.push_back(i);
      report.original_values.push_back(x[i]);
      report.replacement_values.push_back(med);
    }
  }
  return {trace.with_values(std::move(out)), std::move(report)};
}

std::string ValidationVerdict::summary() const {
  if (valid) return "valid";
  std::string s;
  for (const auto& issue : issues) {
    if (!s.empty()) s += "; ";
    s += issue.message;
  }
  return s;
}

ValidationVerdict validate(const Trace& trace) {
  ValidationVerdict verdict;
  const auto x = trace.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      verdict.issues.push_back({IssueKind::non_finite, i,
                                "non-finite value at index " + std::to_string(i) +
                                    " (" + format_date(trace.date_at(i)) + ")"});
    }
  }
  if (x.size() < kMinDecompositionLength) {
    verdict.issues.push_back(
        {IssueKind::too_short, std::nullopt,
         "trace has " + std::to_string(x.size()) +
             " samples; at least " + std::to_string(kMinDecompositionLength) +
             " are needed for seasonal analysis"});
  }
  bool all_finite = std::all_of(x.begin(), x.end(),
                                [](double v) { return std::isfinite(v); });
  if (all_finite) {
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mn == *mx) {
      verdict.issues.push_back(
          {IssueKind::zero_variance, std::nullopt, "zero variance: trace is constant"});
    }
  }
  verdict.valid = verdict.issues.empty();
  return verdict;
}

void require_valid(const Trace& trace) {
  auto verdict = validate(trace);
  if (!verdict.valid) fail(ErrorKind::validation, verdict.summary());
}

}  // namespace decomp
