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

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "decomp/kernels.hpp"
#include "decomp/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace decomp {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace decomp

namespace decomp::kernels {

namespace {

// Solves the 3x3 system in place with partial pivoting. Columns whose pivot
// collapses (basis degenerate at this period) get a zero coefficient.
std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
  const double scale = std::max({std::abs(m[0][0]), std::abs(m[1][1]),
                                 std::abs(m[2][2]), 1e-300});
  std::array<bool, 3> dead{};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    std::swap(m[col], m[piv]);
    if (std::abs(m[col][col]) <= 1e-12 * scale) {
      dead[col] = true;
      continue;
    }
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<double, 3> x{};
  for (int row = 2; row >= 0; --row) {
    if (dead[row]) {
      x[row] = 0.0;
      continue;
    }
    double s = m[row][3];
    for (int c = row + 1; c < 3; ++c) s -= m[row][c] * x[c];
    x[row] = s / m[row][row];
  }
  return x;
}

}  // namespace

SinusoidCandidate fit_period(std::span<const double> y, double period) {
  const std::size_t n = y.size();
  const double w = 2.0 * std::numbers::pi / period;
  double ss = 0, sc = 0, s1 = 0, cc = 0, c1 = 0, ys = 0, yc = 0, y1 = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double s = std::sin(w * static_cast<double>(t));
    const double c = std::cos(w * static_cast<double>(t));
    ss += s * s;
    sc += s * c;
    s1 += s;
    cc += c * c;
    c1 += c;
    ys += y[t] * s;
    yc += y[t] * c;
    y1 += y[t];
  }
  const auto coef = solve3({{{ss, sc, s1, ys},
                             {sc, cc, c1, yc},
                             {s1, c1, static_cast<double>(n), y1}}});
  SinusoidCandidate out{period, coef[0], coef[1], coef[2], 0.0};
  double sse = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double arg = w * static_cast<double>(t);
    const double r = y[t] - (out.sin_coef * std::sin(arg) +
                             out.cos_coef * std::cos(arg) + out.offset);
    sse += r * r;
  }
  out.sse = sse;
  return out;
}

std::size_t argmin_sse(const std::vector<SinusoidCandidate>& candidates) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].sse < candidates[best].sse) best = i;
  }
  return best;
}

emd::EmdResult ensemble_trial(std::span<const double> signal,
                              const emd::EemdConfig& config, double noise_sigma,
                              int trial) {
  Series noisy(signal.begin(), signal.end());
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(config.master_seed + static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : noisy) v += noise(rng);
  }
  return emd::emd(noisy, config.base);
}

}  // namespace decomp::kernels
