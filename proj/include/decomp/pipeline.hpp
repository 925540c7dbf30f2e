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

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decomp/emd.hpp"
#include "decomp/execution.hpp"
#include "decomp/stats.hpp"
#include "decomp/stl.hpp"
#include "decomp/trace.hpp"

namespace decomp {

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

// Per-step parameters. Anything left unset is chosen automatically.
struct StepParams {
  std::optional<double> period;      // sinusoid: pin the period; hwes: season length m
  std::optional<double> period_min;  // sinusoid grid bounds
  std::optional<double> period_max;
  std::optional<double> span;        // loess
  std::optional<int> window;         // ma
  std::optional<int> max_segments;   // piecewise_linear
  std::optional<int> min_segment_len;
  std::vector<std::size_t> breakpoints;  // piecewise_linear, pinned
  std::optional<double> alpha;  // hwes, pinned smoothing factors (all three or none)
  std::optional<double> beta;
  std::optional<double> gamma;

  bool is_auto() const;
  friend bool operator==(const StepParams&, const StepParams&) = default;
};

struct RecipeStep {
  Band band = Band::trend;
  ModelFamily family = ModelFamily::linear;
  StepParams params;
  friend bool operator==(const RecipeStep&, const RecipeStep&) = default;
};

struct Recipe {
  std::string name;
  double runs_alpha = stats::kDefaultRunsAlpha;
  // Backfitting passes over the leading run of non-HWES steps; 0 keeps the
  // plain fit-and-subtract chain.
  int refine_passes = 0;
  std::vector<RecipeStep> steps;
  friend bool operator==(const Recipe&, const Recipe&) = default;
};

// Throws Error{schema} on an empty recipe, a first step outside the trend
// band, a family that does not fit its band, or inconsistent parameters.
void validate_recipe(const Recipe& recipe);
void validate_step(const RecipeStep& step, std::size_t index);

// Linear trend; sinusoids over 120-260, 20-100 and 10-20 day grids;
// HWES m = 7; HWES m = 5.
Recipe sab_default_recipe();

// Fits one step on `residual` and returns the component it explains.
// `step_index` is 1-based and only used in labels and error messages.
Component fit_step(const RecipeStep& step, std::span<const double> residual,
                   std::size_t step_index, Execution exec = Execution::parallel);

// ---------------------------------------------------------------------------
// Residual assessment
// ---------------------------------------------------------------------------

struct ResidualAssessment {
  bool random = false;
  double p_value = 0.0;
  bool degenerate = false;
  std::optional<stats::RunsVerdict> runs;
  std::optional<int> suggested_period;
  std::optional<Band> suggested_band;
  std::string note;
};

// Runs test on the residual. A residual that is zero to within 1e-9 of the
// source scale is reported as degenerate-random. Non-random residuals get
// the dominant ACF lag as a suggested next period.
ResidualAssessment assess_residual(std::span<const double> residual,
                                   std::span<const double> source, double alpha);

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct HybridOptions {
  bool hampel = true;
  Execution exec = Execution::parallel;
};

DecompositionResult run_hybrid(const Trace& trace, const Recipe& recipe,
                               const HybridOptions& options = {});

struct AutoOptions {
  bool hampel = true;
  Execution exec = Execution::parallel;
};

// Hampel + EEMD + band labelling. Each oscillatory IMF carries an HWES
// forecasting model with m = round(period) clamped to [2, min(92, n/3)];
// trend components carry a line fitted to their last third.
DecompositionResult run_auto(const Trace& trace, const emd::EemdConfig& config,
                             const AutoOptions& options = {});

// Same as run_auto but from an already computed decomposition.
DecompositionResult auto_result_from_emd(const Trace& source, emd::EmdResult decomposition,
                                         double runs_alpha = stats::kDefaultRunsAlpha,
                                         Execution exec = Execution::parallel);

int imf_season_length(double period, std::size_t n);

// ---------------------------------------------------------------------------
// Forecasting and evaluation
// ---------------------------------------------------------------------------

struct Metrics {
  double mape_percent = 0.0;
  double erp_normalized = 0.0;
};

struct ForecastResult {
  std::size_t horizon = 0;
  Date start_date;
  Series predicted;
  std::vector<std::pair<std::string, Series>> per_component;
  std::optional<Metrics> metrics;
  std::vector<std::string> notes;
};

Metrics evaluate(std::span<const double> predicted, std::span<const double> actual);

// Sums per-component extrapolations. LOESS / moving-average trends fall back
// to a line over the last third of their contribution unless
// `allow_fallback` is false, in which case they raise not_extrapolable.
ForecastResult forecast(const DecompositionResult& result, std::size_t horizon,
                        std::optional<std::span<const double>> actual = std::nullopt,
                        bool allow_fallback = true);

// ---------------------------------------------------------------------------
// Method comparison
// ---------------------------------------------------------------------------

struct ComponentSummary {
  std::string label;
  Band band;
  std::optional<double> period_days;
  double energy = 0.0;  // variance of the contribution
};

struct MethodReport {
  std::string method;
  std::vector<ComponentSummary> components;
  Series forecast;
  std::optional<Metrics> metrics;
  bool residual_random = false;
};

struct BandDelta {
  Band band;
  double hybrid_period = 0.0;
  double auto_period = 0.0;
  double relative_delta = 0.0;  // (auto - hybrid) / hybrid
};

struct ComparisonReport {
  MethodReport hybrid;
  MethodReport automatic;
  MethodReport stl;
  std::vector<BandDelta> deltas;
  DecompositionResult hybrid_result;
  DecompositionResult auto_result;
  stl::StlResult stl_result;
};

inline constexpr int kStlComparisonPeriod = 7;

ComparisonReport compare_methods(const Trace& trace, const Recipe& recipe,
                                 const emd::EemdConfig& eemd_config, std::size_t horizon,
                                 std::optional<std::span<const double>> actual = std::nullopt,
                                 Execution exec = Execution::parallel);

// Period of the highest-energy component in `band`, if any.
std::optional<double> dominant_period(const std::vector<ComponentSummary>& components,
                                      Band band);

// ---------------------------------------------------------------------------
// Weekday planning
// ---------------------------------------------------------------------------

struct WeekdayPlan {
  std::array<double, 7> per_weekday_deviation{};  // Monday first
  std::vector<std::chrono::weekday> slow_days;
  double threshold_used = 0.0;
};

inline constexpr double kDefaultSlowFraction = 0.5;
inline constexpr std::size_t kMaxSlowDays = 5;

// Slow weekdays from the summed weekly + subweekly contributions. Weekday
// means are taken relative to their own average, so constant offsets drop out.
WeekdayPlan plan_weekdays(const DecompositionResult& result, const Trace& calendar,
                          double fraction = kDefaultSlowFraction);
WeekdayPlan plan_weekdays(const DecompositionResult& result,
                          double fraction = kDefaultSlowFraction);

}  // namespace decomp
