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
#include <span>
#include <vector>

#include "decomp/execution.hpp"
#include "decomp/trace.hpp"

namespace decomp::fit {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sse = 0.0;
  Series fitted;
};

LinearFit fit_linear(std::span<const double> series);

struct Segment {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  double slope = 0.0;
  double intercept = 0.0;  // in global time, y = intercept + slope * t
};

struct PiecewiseLinearFit {
  std::vector<std::size_t> breakpoints;  // segment starts after the first
  std::vector<Segment> segments;
  double sse = 0.0;
  double bic = 0.0;
  Series fitted;
};

inline constexpr std::size_t kBreakpointStride = 7;

// Exhaustive breakpoint search on a stride-7 grid; 1, 2 or 3 segments are
// compared by BIC = n ln(sse/n) + k ln n with k counting slopes,
// intercepts and breakpoints.
PiecewiseLinearFit fit_piecewise_linear(std::span<const double> series,
                                        int max_segments = 3,
                                        std::size_t min_segment_len = 14);

// Fits the given breakpoints exactly (no search); used for pinned recipes.
PiecewiseLinearFit fit_piecewise_fixed(std::span<const double> series,
                                       std::vector<std::size_t> breakpoints);

double piecewise_bic(double sse, std::size_t n, std::size_t segments);

struct SinusoidFit {
  double amplitude = 0.0;
  double period = 0.0;
  double phase = 0.0;  // y = A sin(2 pi t / P + phase) + offset
  double offset = 0.0;
  double sse = 0.0;
  Series fitted;

  double at(double t) const;
};

// Geometric period grid lo, lo*step, ... <= hi, merged with `pinned` and
// sorted ascending.
std::vector<double> period_grid(double lo, double hi, double step = 1.02,
                                std::span<const double> pinned = {});
std::vector<double> default_period_grid(std::size_t n,
                                        std::span<const double> pinned = {});

// Best sinusoid over a period grid by linear least squares on
// {sin, cos, 1}. Equal SSE resolves to the smaller period.
SinusoidFit fit_sinusoid(std::span<const double> series,
                         std::span<const double> period_grid,
                         Execution exec = Execution::parallel);

struct HwesParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  friend bool operator==(const HwesParams&, const HwesParams&) = default;
};

struct HwesFit {
  HwesParams params;
  int period = 0;
  double initial_level = 0.0;
  double initial_trend = 0.0;
  Series initial_seasonal;  // one index per phase 0..m-1
  // States after the last training sample.
  double level = 0.0;
  double trend = 0.0;
  Series seasonal_tail;  // s_{n-m} .. s_{n-1}
  Series fitted;         // one-step-ahead in-sample predictions
  double sse = 0.0;

  Series forecast(std::size_t horizon) const;
};

// Grid 0.01, 0.03, ..., 0.99 used by the coordinate search.
std::vector<double> hwes_smoothing_grid();

// Additive Holt-Winters. With `optimize`, alpha/beta/gamma come from a
// coordinate grid search minimizing one-step SSE, starting from `start`.
HwesFit fit_hwes(std::span<const double> series, int period, bool optimize = true,
                 HwesParams start = {0.31, 0.11, 0.11},
                 Execution exec = Execution::parallel);

// One-step SSE only; the hot path of the parameter search.
double hwes_sse(std::span<const double> series, int period, const HwesParams& p);

// Local linear regression with tricube weights over the nearest
// ceil(span * n) points.
Series loess_smooth(std::span<const double> series, double span);

// Centered moving average, window truncated at the ends.
Series moving_average(std::span<const double> series, std::size_t window);

FittedModel to_model(const LinearFit& f);
FittedModel to_model(const PiecewiseLinearFit& f);
FittedModel to_model(const SinusoidFit& f);
FittedModel to_model(const HwesFit& f);

// Extends a fitted model over t = train_length .. train_length + horizon - 1.
// LOESS and moving-average models are not extrapolable.
Series forecast_model(const FittedModel& model, std::size_t horizon,
                      std::size_t train_length);

}  // namespace decomp::fit
