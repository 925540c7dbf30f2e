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

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

namespace decomp::detail {

inline double tricube(double r) {
  if (r >= 1.0) return 0.0;
  const double a = 1.0 - r * r * r;
  return a * a * a;
}

// Local polynomial estimate (degree 0 or 1) at position x using samples
// y[lo..hi] located at their indices. `h` is the bandwidth; samples at
// distance >= h get zero weight. `robustness` may be empty.
inline std::optional<double> loess_estimate(std::span<const double> y,
                                            std::span<const double> robustness,
                                            double x, std::size_t lo,
                                            std::size_t hi, double h, int degree) {
  const double h9 = 0.999 * h;
  const double h1 = 0.001 * h;
  double wsum = 0.0;
  // Weighted moments relative to x.
  double sw = 0.0, swd = 0.0, swdd = 0.0, swy = 0.0, swdy = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double d = static_cast<double>(j) - x;
    const double r = std::abs(d);
    double w;
    if (r > h9) {
      continue;
    } else if (r <= h1) {
      w = 1.0;
    } else {
      w = tricube(r / h);
    }
    if (!robustness.empty()) w *= robustness[j];
    if (w <= 0.0) continue;
    wsum += w;
    sw += w;
    swd += w * d;
    swdd += w * d * d;
    swy += w * y[j];
    swdy += w * d * y[j];
  }
  if (!(wsum > 0.0)) return std::nullopt;
  const double ybar = swy / sw;
  if (degree == 0) return ybar;
  const double dbar = swd / sw;
  const double sdd = swdd / sw - dbar * dbar;
  // Range check mirrors the classic STL guard against a degenerate spread.
  const double range = static_cast<double>(hi - lo);
  if (sdd <= (0.001 * range) * (0.001 * range)) return ybar;
  const double slope = (swdy / sw - dbar * ybar) / sdd;
  return ybar + slope * (0.0 - dbar);
}

// Window of the q nearest integer positions to x within [0, n-1] and the
// matching bandwidth. For q > n the bandwidth grows by (q - n) / 2.
struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double h = 0.0;
};

inline Window nearest_window(double x, std::size_t n, std::size_t q) {
  Window w;
  if (q >= n) {
    w.lo = 0;
    w.hi = n - 1;
    w.h = std::max(x - 0.0, static_cast<double>(n - 1) - x);
    if (q > n) w.h += static_cast<double>((q - n) / 2);
    return w;
  }
  long lo = std::lround(std::floor(x)) - static_cast<long>((q - 1) / 2);
  lo = std::max(0L, std::min(lo, static_cast<long>(n - q)));
  // Slide right while the right neighbour is closer than the current left end.
  while (lo + static_cast<long>(q) < static_cast<long>(n) &&
         static_cast<double>(lo + static_cast<long>(q)) - x < x - static_cast<double>(lo)) {
    ++lo;
  }
  w.lo = static_cast<std::size_t>(lo);
  w.hi = w.lo + q - 1;
  w.h = std::max(x - static_cast<double>(w.lo), static_cast<double>(w.hi) - x);
  return w;
}

}  // namespace decomp::detail
