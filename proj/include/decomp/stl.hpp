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

#include "decomp/trace.hpp"

namespace decomp::stl {

struct StlConfig {
  int period = 7;
  int n_inner = 2;
  int n_outer = 1;
  // Window lengths in samples. seasonal_span <= 0 selects periodic
  // seasonality (window covering every subseries point); trend_span <= 0
  // selects the classic default next_odd(1.5 p / (1 - 1.5 / ns)).
  double seasonal_span = 0.0;
  double trend_span = 0.0;
};

struct StlResult {
  Series trend;
  Series seasonal;
  Series remainder;
  int period = 0;
};

StlResult stl(std::span<const double> series, const StlConfig& config = {});

// Seasonal-naive continuation of the last cycle plus a line fitted to the
// last third of the trend.
Series stl_forecast(const StlResult& result, std::size_t horizon);

}  // namespace decomp::stl
