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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "decomp/execution.hpp"
#include "decomp/trace.hpp"

namespace decomp::emd {

struct EmdConfig {
  double sd_threshold = 0.2;
  int max_sift_iterations = 10;
  int max_imfs = 10;
  // Number of extrema mirrored past each end before spline fitting.
  int boundary_extrema = 2;
};

struct EemdConfig {
  EmdConfig base;
  int ensemble_size = 200;
  double noise_amplitude = 0.2;  // fraction of the input standard deviation
  std::uint64_t master_seed = 0;
};

struct Imf {
  Series values;
  int index = 1;  // 1 = highest frequency
  std::optional<double> mean_period_days;
};

struct EmdResult {
  std::vector<Imf> imfs;
  Series residue;
};

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
};

// Local extrema; flat plateaus report their middle sample.
Extrema find_extrema(std::span<const double> signal);
std::size_t count_zero_crossings(std::span<const double> signal);

// Natural cubic spline through (knots_t, knots_v), evaluated at 0..n-1.
// knots_t must be strictly increasing.
Series natural_spline(std::span<const double> knots_t,
                      std::span<const double> knots_v, std::size_t n);

struct SiftStep {
  Series candidate;
  Series envelope_mean;
  Series upper;
  Series lower;
};

// One sifting pass. Throws Error{too_few_extrema} when the signal lacks a
// maximum and a minimum or has fewer than three extrema in total; that is
// the monotone-residue signal that ends decomposition.
SiftStep sift_once(std::span<const double> signal, int boundary_extrema = 2);

EmdResult emd(std::span<const double> signal, const EmdConfig& config = {});

// Ensemble EMD. Trial j perturbs the input with Gaussian noise seeded by
// master_seed + j; IMFs are averaged by index (missing modes count as
// zero) and residue = signal - sum of averaged IMFs.
EmdResult eemd(std::span<const double> signal, const EemdConfig& config = {},
               Execution exec = Execution::parallel);

// Averages per-trial decompositions of the same signal.
EmdResult average_trials(std::span<const double> signal,
                         const std::vector<EmdResult>& trials);

// Band assignment by mean period (days).
Band band_for_period(double period, std::size_t n);

// Fills Imf::mean_period_days and turns the decomposition into components:
// oscillatory IMFs get a band from their period, the residue and any IMF
// without a usable period become trend components. Contributions are the
// raw modes; models are left at their defaults for the caller to fill.
std::vector<Component> label_imfs(std::vector<Imf>& imfs, const Series& residue);

}  // namespace decomp::emd
