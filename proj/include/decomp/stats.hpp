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

#include "decomp/trace.hpp"

namespace decomp::stats {

inline constexpr double kDefaultRunsAlpha = 0.05;
inline constexpr std::size_t kRunsMinLength = 20;
inline constexpr std::size_t kRunsMinPerSide = 10;

struct AcfResult {
  std::vector<int> lags;
  std::vector<double> correlations;

  // Largest correlation among lags in [min_lag, max_lag]; ties go to the
  // smaller lag.
  int dominant_lag(int min_lag = 1) const;
};

struct RunsVerdict {
  std::size_t n_runs = 0;
  std::size_t n_above = 0;
  std::size_t n_below = 0;
  double z_statistic = 0.0;
  double p_value = 1.0;
  bool random = true;
};

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // population (n denominator)
double stddev(std::span<const double> x);
double median(std::span<const double> x);

double normal_cdf(double z);
// Two-sided tail probability of a standard normal statistic.
double two_sided_p(double z);

// Biased (n-denominator) sample autocorrelation for lags 0..max_lag.
AcfResult acf(std::span<const double> series, int max_lag);

// Runs test about the median; median ties are dropped.
RunsVerdict runs_test(std::span<const double> series,
                      double alpha = kDefaultRunsAlpha);

double mape(std::span<const double> predicted, std::span<const double> actual);

// Edit distance with real penalty against a constant gap value.
double erp(std::span<const double> predicted, std::span<const double> actual,
           double gap = 0.0);
// erp / length(actual).
double erp_normalized(std::span<const double> predicted,
                      std::span<const double> actual, double gap = 0.0);

// Period estimate as twice the mean spacing between consecutive mean
// crossings (crossing positions linearly interpolated between samples).
// Needs at least kMinMeanCrossings crossings.
inline constexpr std::size_t kMinMeanCrossings = 3;
double mean_period(std::span<const double> series);

// Ordinary least squares line over t = t0 .. t0+n-1.
struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double t) const { return intercept + slope * t; }
};
Line ols_line(std::span<const double> y, double t0 = 0.0);

}  // namespace decomp::stats
