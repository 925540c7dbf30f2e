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

#include "decomp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "decomp/error.hpp"

namespace decomp::stats {

int AcfResult::dominant_lag(int min_lag) const {
  int best = -1;
  double best_r = -2.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < min_lag) continue;
    if (correlations[i] > best_r) {
      best_r = correlations[i];
      best = lags[i];
    }
  }
  return best;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double median(std::span<const double> x) {
  require(!x.empty(), "median of empty series");
  std::vector<double> buf(x.begin(), x.end());
  const std::size_t mid = buf.size() / 2;
  std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
  const double hi = buf[mid];
  if (buf.size() % 2 == 1) return hi;
  const double lo = *std::max_element(buf.begin(), buf.begin() + mid);
  return 0.5 * (lo + hi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double z) {
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

AcfResult acf(std::span<const double> x, int max_lag) {
  const std::size_t n = x.size();
  require(max_lag >= 1, "acf: max_lag must be >= 1");
  require(n > static_cast<std::size_t>(max_lag),
          "acf: series length must exceed max_lag");
  const double m = mean(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (!(denom > 0.0)) fail(ErrorKind::zero_variance, "acf: series is constant");

  AcfResult r;
  r.lags.resize(max_lag + 1);
  r.correlations.resize(max_lag + 1);
  r.lags[0] = 0;
  r.correlations[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = k; t < n; ++t) num += (x[t] - m) * (x[t - k] - m);
    r.lags[k] = k;
    r.correlations[k] = std::clamp(num / denom, -1.0, 1.0);
  }
  return r;
}

RunsVerdict runs_test(std::span<const double> x, double alpha) {
  require(x.size() >= kRunsMinLength, "runs_test: series needs at least 20 points");
  require(alpha > 0.0 && alpha <= 0.5, "runs_test: alpha must be in (0, 0.5]");
  const double med = median(x);

  RunsVerdict v;
  int prev = 0;
  for (double value : x) {
    if (value == med) continue;
    const int side = value > med ? 1 : -1;
    (side > 0 ? v.n_above : v.n_below)++;
    if (side != prev) ++v.n_runs;
    prev = side;
  }
  if (v.n_above < kRunsMinPerSide || v.n_below < kRunsMinPerSide) {
    fail(ErrorKind::insufficient_data,
         "runs_test: need at least 10 points on each side of the median (above=" +
             std::to_string(v.n_above) + ", below=" + std::to_string(v.n_below) + ")");
  }
  const double a = static_cast<double>(v.n_above);
  const double b = static_cast<double>(v.n_below);
  const double s = a + b;
  const double expected = 2.0 * a * b / s + 1.0;
  const double var = 2.0 * a * b * (2.0 * a * b - a - b) / (s * s * (s - 1.0));
  v.z_statistic = (static_cast<double>(v.n_runs) - expected) / std::sqrt(var);
  v.p_value = two_sided_p(v.z_statistic);
  v.random = v.p_value >= alpha;
  return v;
}

double mape(std::span<const double> predicted, std::span<const double> actual) {
  require(predicted.size() == actual.size(), "mape: length mismatch");
  require(!actual.empty(), "mape: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      fail(ErrorKind::precondition,
           "mape: actual value is zero at index " + std::to_string(i));
    }
    s += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
  }
  return 100.0 * s / static_cast<double>(actual.size());
}

double erp(std::span<const double> p, std::span<const double> a, double gap) {
  require(!p.empty() && !a.empty(), "erp: both series must be non-empty");
  const std::size_t m = p.size(), n = a.size();
  // Rolling rows of the (m+1) x (n+1) table.
  std::vector<double> prev(n + 1), cur(n + 1);
  prev[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) prev[j] = prev[j - 1] + std::abs(a[j - 1] - gap);
  for (std::size_t i = 1; i <= m; ++i) {
    const double gap_p = std::abs(p[i - 1] - gap);
    cur[0] = prev[0] + gap_p;
    for (std::size_t j = 1; j <= n; ++j) {
      const double match = prev[j - 1] + std::abs(p[i - 1] - a[j - 1]);
      const double skip_p = prev[j] + gap_p;
      const double skip_a = cur[j - 1] + std::abs(a[j - 1] - gap);
      cur[j] = std::min({match, skip_p, skip_a});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double erp_normalized(std::span<const double> p, std::span<const double> a,
                      double gap) {
  return erp(p, a, gap) / static_cast<double>(a.size());
}

double mean_period(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double d0 = x[i] - m;
    const double d1 = x[i + 1] - m;
    // A sample sitting exactly on the mean counts once, via the (d0 == 0) case.
    if (d0 == 0.0) {
      if (i > 0 && (x[i - 1] - m) * d1 < 0.0) crossings.push_back(static_cast<double>(i));
      continue;
    }
    if (d0 * d1 < 0.0) crossings.push_back(static_cast<double>(i) + d0 / (d0 - d1));
  }
  if (crossings.size() < kMinMeanCrossings) {
    fail(ErrorKind::no_period, "mean_period: series crosses its mean " +
                                   std::to_string(crossings.size()) +
                                   " times; need at least " +
                                   std::to_string(kMinMeanCrossings));
  }
  const double span = crossings.back() - crossings.front();
  return 2.0 * span / static_cast<double>(crossings.size() - 1);
}

Line ols_line(std::span<const double> y, double t0) {
  const std::size_t n = y.size();
  require(n >= 2, "ols_line: need at least 2 points");
  // Centered sums.
  const double tbar = t0 + 0.5 * static_cast<double>(n - 1);
  const double ybar = mean(y);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = t0 + static_cast<double>(i) - tbar;
    stt += dt * dt;
    sty += dt * (y[i] - ybar);
  }
  Line line;
  line.slope = sty / stt;
  line.intercept = ybar - line.slope * tbar;
  return line;
}

}  // namespace decomp::stats
