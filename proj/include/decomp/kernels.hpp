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

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; the two must agree
// bit-for-bit (tests/unit/test_kernels.cpp). Reductions happen after the
// parallel region, in index order.

#include <span>
#include <vector>

#include "decomp/emd.hpp"
#include "decomp/fitters.hpp"

namespace decomp::kernels {

struct SinusoidCandidate {
  double period = 0.0;
  double sin_coef = 0.0;
  double cos_coef = 0.0;
  double offset = 0.0;
  double sse = 0.0;
};

// Least-squares fit of {sin, cos, 1} at a single period.
SinusoidCandidate fit_period(std::span<const double> y, double period);

// Index of the lowest SSE; first index wins ties.
std::size_t argmin_sse(const std::vector<SinusoidCandidate>& candidates);

namespace serial {
std::vector<SinusoidCandidate> scan_periods(std::span<const double> y,
                                            std::span<const double> grid);
std::vector<double> hwes_scan(std::span<const double> y, int period,
                              std::span<const fit::HwesParams> candidates);
std::vector<emd::EmdResult> ensemble_trials(std::span<const double> signal,
                                            const emd::EemdConfig& config,
                                            double noise_sigma);
}  // namespace serial

namespace omp {
std::vector<SinusoidCandidate> scan_periods(std::span<const double> y,
                                            std::span<const double> grid);
std::vector<double> hwes_scan(std::span<const double> y, int period,
                              std::span<const fit::HwesParams> candidates);
std::vector<emd::EmdResult> ensemble_trials(std::span<const double> signal,
                                            const emd::EemdConfig& config,
                                            double noise_sigma);
}  // namespace omp

// Runs one EEMD trial (noise generation + EMD) for trial index j.
emd::EmdResult ensemble_trial(std::span<const double> signal,
                              const emd::EemdConfig& config, double noise_sigma,
                              int trial);

}  // namespace decomp::kernels
