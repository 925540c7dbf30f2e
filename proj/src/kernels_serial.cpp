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

#include "decomp/kernels.hpp"

namespace decomp::kernels::serial {

std::vector<SinusoidCandidate> scan_periods(std::span<const double> y,
                                            std::span<const double> grid) {
  std::vector<SinusoidCandidate> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fit_period(y, grid[i]);
  return out;
}

std::vector<double> hwes_scan(std::span<const double> y, int period,
                              std::span<const fit::HwesParams> candidates) {
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out[i] = fit::hwes_sse(y, period, candidates[i]);
  }
  return out;
}

std::vector<emd::EmdResult> ensemble_trials(std::span<const double> signal,
                                            const emd::EemdConfig& config,
                                            double noise_sigma) {
  std::vector<emd::EmdResult> trials(static_cast<std::size_t>(config.ensemble_size));
  for (int j = 0; j < config.ensemble_size; ++j) {
    trials[static_cast<std::size_t>(j)] = ensemble_trial(signal, config, noise_sigma, j);
  }
  return trials;
}

}  // namespace decomp::kernels::serial
