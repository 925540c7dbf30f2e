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

#include "decomp/stl.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "decomp/error.hpp"
#include "decomp/stats.hpp"
#include "loess_detail.hpp"

namespace decomp::stl {

namespace {

std::size_t next_odd(double v) {
  auto k = static_cast<std::size_t>(std::ceil(v));
  if (k % 2 == 0) ++k;
  return std::max<std::size_t>(k, 3);
}

// LOESS evaluated at integer positions `at_begin .. at_begin + count - 1`
// (may lie outside the data, which is how subseries get their end extension).
void smooth(std::span<const double> y, std::span<const double> rw, std::size_t q,
            int degree, long at_begin, std::size_t count, double* out) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(at_begin + static_cast<long>(i));
    const auto w = detail::nearest_window(x, n, q);
    const auto v = detail::loess_estimate(y, rw, x, w.lo, w.hi, w.h, degree);
    if (v) {
      out[i] = *v;
    } else {
      const long nearest = std::clamp(at_begin + static_cast<long>(i), 0L,
                                      static_cast<long>(n) - 1);
      out[i] = y[static_cast<std::size_t>(nearest)];
    }
  }
}

// Moving average of width `len`; output is len - 1 shorter than the input.
std::vector<double> moving_sum_avg(const std::vector<double>& x, std::size_t len) {
  std::vector<double> out(x.size() - len + 1);
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[i];
  out[0] = s / static_cast<double>(len);
  for (std::size_t i = 1; i < out.size(); ++i) {
    s += x[i + len - 1] - x[i - 1];
    out[i] = s / static_cast<double>(len);
  }
  return out;
}

struct Windows {
  std::size_t seasonal, trend, lowpass;
  int seasonal_degree;
};

void inner_pass(std::span<const double> y, std::span<const double> rw, std::size_t np,
                const Windows& win, Series& seasonal, Series& trend) {
  const std::size_t n = y.size();
  std::vector<double> detrended(n);
  for (std::size_t i = 0; i < n; ++i) detrended[i] = y[i] - trend[i];

  // Cycle-subseries smoothing, each extended by one point at both ends.
  std::vector<double> cycle(n + 2 * np, 0.0);
  std::vector<double> sub, sub_rw, sub_out;
  for (std::size_t j = 0; j < np; ++j) {
    sub.clear();
    sub_rw.clear();
    for (std::size_t i = j; i < n; i += np) {
      sub.push_back(detrended[i]);
      if (!rw.empty()) sub_rw.push_back(rw[i]);
    }
    const std::size_t k = sub.size();
    sub_out.assign(k + 2, 0.0);
    smooth(sub, sub_rw, win.seasonal, win.seasonal_degree, -1, k + 2, sub_out.data());
    for (std::size_t m = 0; m < k + 2; ++m) cycle[j + np * m] = sub_out[m];
  }

  // Low-pass filter of the cycle series: MA(np), MA(np), MA(3), LOESS.
  auto low = moving_sum_avg(cycle, np);
  low = moving_sum_avg(low, np);
  low = moving_sum_avg(low, 3);
  std::vector<double> lowpass(n);
  smooth(low, {}, win.lowpass, 1, 0, n, lowpass.data());

  for (std::size_t i = 0; i < n; ++i) seasonal[i] = cycle[np + i] - lowpass[i];

  std::vector<double> deseason(n);
  for (std::size_t i = 0; i < n; ++i) deseason[i] = y[i] - seasonal[i];
  smooth(deseason, rw, win.trend, 1, 0, n, trend.data());
}

std::vector<double> robustness_weights(std::span<const double> y, const Series& trend,
                                       const Series& seasonal) {
  const std::size_t n = y.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::abs(y[i] - trend[i] - seasonal[i]);
  const double h = 6.0 * stats::median(r);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (h <= 0.0) {
      w[i] = 1.0;
      continue;
    }
    const double u = r[i] / h;
    w[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
  }
  return w;
}

}  // namespace

StlResult stl(std::span<const double> y, const StlConfig& cfg) {
  const std::size_t n = y.size();
  require(cfg.period >= 2, "stl: period must be >= 2");
  require(n >= 2 * static_cast<std::size_t>(cfg.period),
          "stl: series must cover at least two periods");
  require(cfg.n_inner >= 1 && cfg.n_outer >= 0, "stl: iteration counts out of range");
  const auto np = static_cast<std::size_t>(cfg.period);

  Windows win{};
  const bool periodic = !(cfg.seasonal_span > 0.0);
  if (periodic) {
    win.seasonal = 10 * n + 1;
    win.seasonal_degree = 0;
  } else {
    win.seasonal = next_odd(cfg.seasonal_span);
    win.seasonal_degree = 1;
  }
  win.trend = cfg.trend_span > 0.0
                  ? next_odd(cfg.trend_span)
                  : next_odd(1.5 * static_cast<double>(np) /
                             (1.0 - 1.5 / static_cast<double>(win.seasonal)));
  win.lowpass = next_odd(static_cast<double>(np));

  StlResult out;
  out.period = cfg.period;
  out.trend.assign(n, 0.0);
  out.seasonal.assign(n, 0.0);
  std::vector<double> rw;
  for (int outer = 0; outer <= cfg.n_outer; ++outer) {
    for (int it = 0; it < cfg.n_inner; ++it) {
      inner_pass(y, rw, np, win, out.seasonal, out.trend);
    }
    if (outer < cfg.n_outer) rw = robustness_weights(y, out.trend, out.seasonal);
  }
  out.remainder.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.remainder[i] = y[i] - out.trend[i] - out.seasonal[i];
  return out;
}

Series stl_forecast(const StlResult& r, std::size_t horizon) {
  require(horizon >= 1, "stl_forecast: horizon must be >= 1");
  const std::size_t n = r.trend.size();
  const auto np = static_cast<std::size_t>(r.period);
  const std::size_t start = n - n / 3;
  const auto line = stats::ols_line(std::span<const double>(r.trend).subspan(start),
                                    static_cast<double>(start));
  Series out(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    out[h] = line.at(static_cast<double>(n + h)) + r.seasonal[n - np + (h % np)];
  }
  return out;
}

}  // namespace decomp::stl
