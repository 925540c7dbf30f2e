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

#include <exception>
#include <mutex>

#include "decomp/kernels.hpp"

namespace decomp::kernels::omp {

namespace {

// Exceptions must not escape an OpenMP region; the first one is rethrown
// after the loop.
class FirstError {
 public:
  template <typename Fn>
  void run(Fn&& fn) {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

std::vector<SinusoidCandidate> scan_periods(std::span<const double> y,
                                            std::span<const double> grid) {
  std::vector<SinusoidCandidate> out(grid.size());
  const auto count = static_cast<long>(grid.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) out[i] = fit_period(y, grid[i]);
  return out;
}

std::vector<double> hwes_scan(std::span<const double> y, int period,
                              std::span<const fit::HwesParams> candidates) {
  std::vector<double> out(candidates.size());
  const auto count = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) out[i] = fit::hwes_sse(y, period, candidates[i]);
  return out;
}

std::vector<emd::EmdResult> ensemble_trials(std::span<const double> signal,
                                            const emd::EemdConfig& config,
                                            double noise_sigma) {
  std::vector<emd::EmdResult> trials(static_cast<std::size_t>(config.ensemble_size));
  FirstError errors;
#pragma omp parallel for schedule(dynamic, 4)
  for (int j = 0; j < config.ensemble_size; ++j) {
    errors.run([&] { trials[j] = ensemble_trial(signal, config, noise_sigma, j); });
  }
  errors.rethrow();
  return trials;
}

}  // namespace decomp::kernels::omp
