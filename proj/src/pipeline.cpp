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

#include "decomp/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "decomp/error.hpp"
#include "decomp/fitters.hpp"
#include "decomp/preprocess.hpp"

namespace decomp {

bool StepParams::is_auto() const { return *this == StepParams{}; }

namespace {

[[noreturn]] void schema_error(std::size_t index, const std::string& msg) {
  fail(ErrorKind::schema, "recipe step " + std::to_string(index) + ": " + msg);
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

void validate_step(const RecipeStep& s, std::size_t index) {
  const auto& p = s.params;
  const bool trend_band = s.band == Band::trend;
  if (trend_band && !is_trend_family(s.family)) {
    schema_error(index, std::string(to_string(s.family)) +
                            " is a cyclic family and cannot model the trend band");
  }
  if (!trend_band && !is_cyclic_family(s.family)) {
    schema_error(index, std::string(to_string(s.family)) + " cannot model the " +
                            std::string(to_string(s.band)) + " band");
  }

  auto reject_unless = [&](bool allowed, bool present, const char* name) {
    if (present && !allowed) {
      schema_error(index, std::string("parameter '") + name + "' does not apply to " +
                              std::string(to_string(s.family)));
    }
  };
  const auto f = s.family;
  reject_unless(f == ModelFamily::sinusoid || f == ModelFamily::hwes, p.period.has_value(), "period");
  reject_unless(f == ModelFamily::sinusoid, p.period_min.has_value(), "period_min");
  reject_unless(f == ModelFamily::sinusoid, p.period_max.has_value(), "period_max");
  reject_unless(f == ModelFamily::loess, p.span.has_value(), "span");
  reject_unless(f == ModelFamily::ma, p.window.has_value(), "window");
  reject_unless(f == ModelFamily::piecewise_linear, p.max_segments.has_value(), "max_segments");
  reject_unless(f == ModelFamily::piecewise_linear, p.min_segment_len.has_value(), "min_segment_len");
  reject_unless(f == ModelFamily::piecewise_linear, !p.breakpoints.empty(), "breakpoints");
  reject_unless(f == ModelFamily::hwes, p.alpha.has_value(), "alpha");
  reject_unless(f == ModelFamily::hwes, p.beta.has_value(), "beta");
  reject_unless(f == ModelFamily::hwes, p.gamma.has_value(), "gamma");

  switch (f) {
    case ModelFamily::sinusoid:
      if (p.period && !(*p.period > 2.0)) schema_error(index, "sinusoid period must exceed 2 days");
      if (p.period && (p.period_min || p.period_max)) {
        schema_error(index, "a pinned period excludes period_min/period_max");
      }
      if (p.period_min && !(*p.period_min > 2.0)) schema_error(index, "period_min must exceed 2 days");
      if (p.period_min && p.period_max && !(*p.period_min <= *p.period_max)) {
        schema_error(index, "period_min must not exceed period_max");
      }
      break;
    case ModelFamily::hwes: {
      if (!p.period) schema_error(index, "hwes needs an integer season length 'period'");
      if (!is_integral(*p.period) || *p.period < 2.0) {
        schema_error(index, "hwes period must be an integer >= 2");
      }
      const int pinned = p.alpha.has_value() + p.beta.has_value() + p.gamma.has_value();
      if (pinned != 0 && pinned != 3) schema_error(index, "pin all of alpha, beta, gamma or none");
      for (const auto& v : {p.alpha, p.beta, p.gamma}) {
        if (v && !(*v >= 0.0 && *v <= 1.0)) schema_error(index, "smoothing factors must lie in [0, 1]");
      }
      break;
    }
    case ModelFamily::loess:
      if (p.span && !(*p.span > 0.0 && *p.span <= 1.0)) schema_error(index, "span must be in (0, 1]");
      break;
    case ModelFamily::ma:
      if (p.window && *p.window < 1) schema_error(index, "window must be >= 1");
      break;
    case ModelFamily::piecewise_linear:
      if (p.max_segments && *p.max_segments != 2 && *p.max_segments != 3) {
        schema_error(index, "max_segments must be 2 or 3");
      }
      if (p.min_segment_len && *p.min_segment_len < 2) schema_error(index, "min_segment_len must be >= 2");
      if (p.breakpoints.size() > 2) schema_error(index, "at most 2 breakpoints");
      break;
    case ModelFamily::linear:
      break;
  }
}

void validate_recipe(const Recipe& r) {
  if (r.steps.empty()) fail(ErrorKind::schema, "recipe has no steps");
  if (r.steps.front().band != Band::trend) {
    fail(ErrorKind::schema, "recipe must start with a trend step");
  }
  if (!(r.runs_alpha > 0.0 && r.runs_alpha <= 0.5)) {
    fail(ErrorKind::schema, "runs_alpha must be in (0, 0.5]");
  }
  if (r.refine_passes < 0 || r.refine_passes > 1000) {
    fail(ErrorKind::schema, "refine_passes must be in [0, 1000]");
  }
  for (std::size_t i = 0; i < r.steps.size(); ++i) validate_step(r.steps[i], i + 1);
}

Recipe sab_default_recipe() {
  Recipe r;
  r.name = "sab-default";
  r.runs_alpha = stats::kDefaultRunsAlpha;
  r.refine_passes = 20;
  auto sine = [](Band band, double lo, double hi) {
    RecipeStep s{band, ModelFamily::sinusoid, {}};
    s.params.period_min = lo;
    s.params.period_max = hi;
    return s;
  };
  auto hwes = [](Band band, double m) {
    RecipeStep s{band, ModelFamily::hwes, {}};
    s.params.period = m;
    return s;
  };
  r.steps = {
      {Band::trend, ModelFamily::linear, {}},
      sine(Band::quarterly, 120.0, 260.0),
      sine(Band::monthly, 20.0, 100.0),
      sine(Band::monthly, 10.0, 20.0),
      hwes(Band::weekly, 7.0),
      hwes(Band::subweekly, 5.0),
  };
  return r;
}

Component fit_step(const RecipeStep& step, std::span<const double> y, std::size_t index,
                   Execution exec) {
  validate_step(step, index);
  const std::size_t n = y.size();
  const auto& p = step.params;
  Component c;
  c.band = step.band;
  c.label = "s" + std::to_string(index) + ":" + std::string(to_string(step.band)) + ":" +
            std::string(to_string(step.family));
  try {
    switch (step.family) {
      case ModelFamily::linear: {
        auto f = fit::fit_linear(y);
        c.model = fit::to_model(f);
        c.contribution = std::move(f.fitted);
        break;
      }
      case ModelFamily::piecewise_linear: {
        fit::PiecewiseLinearFit f;
        if (!p.breakpoints.empty()) {
          f = fit::fit_piecewise_fixed(y, p.breakpoints);
        } else {
          f = fit::fit_piecewise_linear(
              y, p.max_segments.value_or(3),
              static_cast<std::size_t>(p.min_segment_len.value_or(14)));
        }
        c.model = fit::to_model(f);
        c.contribution = std::move(f.fitted);
        break;
      }
      case ModelFamily::loess: {
        const double span = p.span.value_or(0.5);
        c.contribution = fit::loess_smooth(y, span);
        c.model = {ModelFamily::loess, {{"span", span}}, {}};
        break;
      }
      case ModelFamily::ma: {
        const int window = p.window.value_or(31);
        c.contribution = fit::moving_average(y, static_cast<std::size_t>(window));
        c.model = {ModelFamily::ma, {{"window", static_cast<double>(window)}}, {}};
        break;
      }
      case ModelFamily::sinusoid: {
        std::vector<double> grid;
        const double cap = 2.0 * static_cast<double>(n) * (1.0 - 1e-9);
        if (p.period) {
          grid = {*p.period};
        } else {
          const double lo = p.period_min.value_or(3.0);
          const double hi = std::min(p.period_max.value_or(static_cast<double>(n) / 1.5), cap);
          grid = fit::period_grid(lo, hi, 1.02);
        }
        auto f = fit::fit_sinusoid(y, grid, exec);
        c.model = fit::to_model(f);
        c.period_days = f.period;
        c.contribution = std::move(f.fitted);
        break;
      }
      case ModelFamily::hwes: {
        const int m = static_cast<int>(*p.period);
        const bool pinned = p.alpha.has_value();
        fit::HwesParams start{0.31, 0.11, 0.11};
        if (pinned) start = {*p.alpha, *p.beta, *p.gamma};
        auto f = fit::fit_hwes(y, m, !pinned, start, exec);
        c.model = fit::to_model(f);
        c.period_days = static_cast<double>(m);
        c.contribution = std::move(f.fitted);
        break;
      }
    }
  } catch (const Error& e) {
    throw Error(e.kind(), "step " + std::to_string(index) + " (" +
                              std::string(to_string(step.family)) + "): " + e.what());
  }
  return c;
}

ResidualAssessment assess_residual(std::span<const double> residual,
                                   std::span<const double> source, double alpha) {
  ResidualAssessment a;
  double scale = 0.0, max_r = 0.0;
  for (double v : source) scale = std::max(scale, std::abs(v));
  for (double v : residual) max_r = std::max(max_r, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  if (max_r <= 1e-9 * scale) {
    a.random = true;
    a.p_value = 1.0;
    a.degenerate = true;
    a.note = "degenerate-random: residual is zero to numerical precision";
    return a;
  }
  try {
    a.runs = stats::runs_test(residual, alpha);
    a.random = a.runs->random;
    a.p_value = a.runs->p_value;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::precondition) throw;
    a.random = false;
    a.p_value = 0.0;
    a.note = std::string("runs test not applicable: ") + e.what();
  }
  if (!a.random) {
    const int max_lag = static_cast<int>(std::min<std::size_t>(residual.size() / 2, 120));
    if (max_lag >= 2) {
      try {
        const auto r = stats::acf(residual, max_lag);
        const int lag = r.dominant_lag(2);
        if (lag > 0) {
          a.suggested_period = lag;
          a.suggested_band = emd::band_for_period(static_cast<double>(lag), source.size());
          if (a.note.empty()) {
            a.note = "residual is not random; dominant ACF lag " + std::to_string(lag) +
                     " suggests another cyclic step";
          }
        }
      } catch (const Error&) {
        // Constant residuals have no ACF; nothing to suggest.
      }
    }
  }
  return a;
}

namespace {

Series subtract(std::span<const double> a, std::span<const double> b) {
  Series out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void apply_assessment(DecompositionResult& r, const ResidualAssessment& a) {
  r.residual_random = a.random;
  r.residual_p_value = a.p_value;
  r.diagnostics.degenerate_residual = a.degenerate;
  r.diagnostics.suggested_period = a.suggested_period;
  if (a.suggested_band) r.diagnostics.suggested_band = std::string(to_string(*a.suggested_band));
  if (!a.note.empty()) r.diagnostics.notes.push_back(a.note);
}

}  // namespace

DecompositionResult run_hybrid(const Trace& trace, const Recipe& recipe,
                               const HybridOptions& options) {
  require_valid(trace);
  validate_recipe(recipe);
  Trace source = trace;
  std::vector<std::string> notes;
  if (options.hampel) {
    auto h = hampel_filter(trace);
    if (!h.report.empty()) {
      notes.push_back("hampel filter replaced " + std::to_string(h.report.size()) + " outlier(s)");
    }
    source = std::move(h.trace);
  }
  const auto y = source.values();
  const std::size_t n = y.size();
  const auto& steps = recipe.steps;

  // Leading steps that may be refined together by backfitting.
  std::size_t prefix = 0;
  while (prefix < steps.size() && steps[prefix].family != ModelFamily::hwes) ++prefix;

  std::vector<Component> comps;
  Series residual(y.begin(), y.end());
  for (std::size_t k = 0; k < prefix; ++k) {
    comps.push_back(fit_step(steps[k], residual, k + 1, options.exec));
    residual = subtract(residual, comps.back().contribution);
  }

  if (recipe.refine_passes > 0 && prefix >= 2) {
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    int passes = 0;
    for (; passes < recipe.refine_passes; ++passes) {
      double change = 0.0;
      for (std::size_t k = 0; k < prefix; ++k) {
        Series partial(y.begin(), y.end());
        for (std::size_t j = 0; j < prefix; ++j) {
          if (j == k) continue;
          for (std::size_t i = 0; i < n; ++i) partial[i] -= comps[j].contribution[i];
        }
        Component refit = fit_step(steps[k], partial, k + 1, options.exec);
        for (std::size_t i = 0; i < n; ++i) {
          change = std::max(change, std::abs(refit.contribution[i] - comps[k].contribution[i]));
        }
        comps[k] = std::move(refit);
      }
      if (change <= 1e-10 * scale) {
        ++passes;
        break;
      }
    }
    notes.push_back("backfitting refined steps 1-" + std::to_string(prefix) + " over " +
                    std::to_string(passes) + " pass(es)");
    // Rebuild the exact subtraction chain from the refined contributions.
    residual.assign(y.begin(), y.end());
    for (std::size_t k = 0; k < prefix; ++k) residual = subtract(residual, comps[k].contribution);
  }

  for (std::size_t k = prefix; k < steps.size(); ++k) {
    comps.push_back(fit_step(steps[k], residual, k + 1, options.exec));
    residual = subtract(residual, comps.back().contribution);
  }

  DecompositionResult r{source, std::move(comps), std::move(residual), false, 0.0, {}};
  apply_assessment(r, assess_residual(r.residual, y, recipe.runs_alpha));
  r.diagnostics.notes.insert(r.diagnostics.notes.begin(), notes.begin(), notes.end());
  return r;
}

int imf_season_length(double period, std::size_t n) {
  const int cap = std::max(2, std::min(92, static_cast<int>(n / 3)));
  return std::clamp(static_cast<int>(std::lround(period)), 2, cap);
}

namespace {

FittedModel last_third_line(std::span<const double> contribution) {
  const std::size_t n = contribution.size();
  const std::size_t start = n - n / 3;
  const auto line = stats::ols_line(contribution.subspan(start), static_cast<double>(start));
  return {ModelFamily::linear,
          {{"slope", line.slope},
           {"intercept", line.intercept},
           {"fit_start", static_cast<double>(start)}},
          {}};
}

}  // namespace

DecompositionResult auto_result_from_emd(const Trace& source, emd::EmdResult dec,
                                         double runs_alpha, Execution exec) {
  const std::size_t n = source.size();
  auto comps = emd::label_imfs(dec.imfs, dec.residue);
  for (auto& c : comps) {
    if (c.band == Band::trend) {
      c.model = last_third_line(c.contribution);
    } else {
      const int m = imf_season_length(*c.period_days, n);
      c.model = fit::to_model(fit::fit_hwes(c.contribution, m, true, {0.31, 0.11, 0.11}, exec));
    }
  }

  DecompositionResult r{source, std::move(comps), Series(n, 0.0), true, 1.0, {}};
  if (!dec.imfs.empty()) {
    auto a = assess_residual(dec.imfs.front().values, source.values(), runs_alpha);
    r.residual_random = a.random;
    r.residual_p_value = a.p_value;
    r.diagnostics.notes.push_back(
        "residual is identically zero; randomness verdict computed on IMF1 (p=" +
        std::to_string(a.p_value) + ")");
    if (!a.note.empty()) r.diagnostics.notes.push_back(a.note);
  } else {
    r.diagnostics.notes.push_back("EEMD produced no oscillatory modes");
  }
  return r;
}

DecompositionResult run_auto(const Trace& trace, const emd::EemdConfig& config,
                             const AutoOptions& options) {
  require_valid(trace);
  Trace source = trace;
  std::size_t replaced = 0;
  if (options.hampel) {
    auto h = hampel_filter(trace);
    replaced = h.report.size();
    source = std::move(h.trace);
  }
  auto dec = emd::eemd(source.values(), config, options.exec);
  auto r = auto_result_from_emd(source, std::move(dec), stats::kDefaultRunsAlpha, options.exec);
  if (replaced > 0) {
    r.diagnostics.notes.insert(r.diagnostics.notes.begin(),
                               "hampel filter replaced " + std::to_string(replaced) + " outlier(s)");
  }
  r.diagnostics.seeds["master_seed"] = static_cast<double>(config.master_seed);
  r.diagnostics.seeds["ensemble_size"] = config.ensemble_size;
  r.diagnostics.seeds["noise_amplitude"] = config.noise_amplitude;
  return r;
}

Metrics evaluate(std::span<const double> predicted, std::span<const double> actual) {
  require(predicted.size() == actual.size(), "evaluate: predicted and actual lengths differ");
  return {stats::mape(predicted, actual), stats::erp_normalized(predicted, actual)};
}

ForecastResult forecast(const DecompositionResult& result, std::size_t horizon,
                        std::optional<std::span<const double>> actual, bool allow_fallback) {
  require(horizon >= 1, "forecast: horizon must be >= 1");
  const std::size_t n = result.source.size();
  ForecastResult out;
  out.horizon = horizon;
  out.start_date = result.source.date_at(n);
  out.predicted.assign(horizon, 0.0);
  for (const auto& c : result.components) {
    Series part;
    const bool smoother =
        c.model.family == ModelFamily::loess || c.model.family == ModelFamily::ma;
    if (smoother && allow_fallback) {
      part = fit::forecast_model(last_third_line(c.contribution), horizon, n);
      out.notes.push_back(c.label + ": extrapolated with a line over the last third");
    } else {
      try {
        part = fit::forecast_model(c.model, horizon, n);
      } catch (const Error& e) {
        throw Error(e.kind(), "component '" + c.label + "': " + e.what());
      }
    }
    for (std::size_t h = 0; h < horizon; ++h) out.predicted[h] += part[h];
    out.per_component.emplace_back(c.label, std::move(part));
  }
  if (actual) {
    require(actual->size() == horizon, "forecast: actual series length " +
                                           std::to_string(actual->size()) +
                                           " != horizon " + std::to_string(horizon));
    out.metrics = evaluate(out.predicted, *actual);
  }
  return out;
}

namespace {

std::vector<ComponentSummary> summarize(const std::vector<Component>& comps) {
  std::vector<ComponentSummary> out;
  for (const auto& c : comps) {
    out.push_back({c.label, c.band, c.period_days, stats::variance(c.contribution)});
  }
  return out;
}

}  // namespace

std::optional<double> dominant_period(const std::vector<ComponentSummary>& comps, Band band) {
  const ComponentSummary* best = nullptr;
  for (const auto& c : comps) {
    if (c.band != band || !c.period_days) continue;
    if (!best || c.energy > best->energy) best = &c;
  }
  if (!best) return std::nullopt;
  return best->period_days;
}

ComparisonReport compare_methods(const Trace& trace, const Recipe& recipe,
                                 const emd::EemdConfig& eemd_config, std::size_t horizon,
                                 std::optional<std::span<const double>> actual,
                                 Execution exec) {
  require_valid(trace);
  const Trace filtered = hampel_filter(trace).trace;
  ComparisonReport rep{.hybrid = {},
                       .automatic = {},
                       .stl = {},
                       .deltas = {},
                       .hybrid_result = run_hybrid(trace, recipe, {true, exec}),
                       .auto_result = run_auto(trace, eemd_config, {true, exec}),
                       .stl_result = stl::stl(filtered.values(), {kStlComparisonPeriod})};

  auto method = [&](const std::string& name, const DecompositionResult& r) {
    MethodReport m;
    m.method = name;
    m.components = summarize(r.components);
    auto f = forecast(r, horizon, actual);
    m.forecast = std::move(f.predicted);
    m.metrics = f.metrics;
    m.residual_random = r.residual_random;
    return m;
  };
  rep.hybrid = method("hybrid", rep.hybrid_result);
  rep.automatic = method("automatic", rep.auto_result);

  rep.stl.method = "stl";
  rep.stl.components = {
      {"stl:trend", Band::trend, std::nullopt, stats::variance(rep.stl_result.trend)},
      {"stl:seasonal", emd::band_for_period(kStlComparisonPeriod, trace.size()),
       static_cast<double>(kStlComparisonPeriod), stats::variance(rep.stl_result.seasonal)}};
  rep.stl.forecast = stl::stl_forecast(rep.stl_result, horizon);
  if (actual) rep.stl.metrics = evaluate(rep.stl.forecast, *actual);
  try {
    rep.stl.residual_random = stats::runs_test(rep.stl_result.remainder).random;
  } catch (const Error&) {
    rep.stl.residual_random = false;
  }

  for (Band b : {Band::quarterly, Band::monthly, Band::weekly, Band::subweekly}) {
    const auto hp = dominant_period(rep.hybrid.components, b);
    const auto ap = dominant_period(rep.automatic.components, b);
    if (hp && ap) rep.deltas.push_back({b, *hp, *ap, (*ap - *hp) / *hp});
  }
  return rep;
}

WeekdayPlan plan_weekdays(const DecompositionResult& result, const Trace& calendar,
                          double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "plan_weekdays: fraction must be in (0, 1]");
  const std::size_t n = calendar.size();
  Series weekly(n, 0.0);
  bool found = false;
  for (const auto& c : result.components) {
    if (c.band != Band::weekly && c.band != Band::subweekly) continue;
    if (c.contribution.size() != n) {
      fail(ErrorKind::structural, "plan_weekdays: component '" + c.label +
                                      "' does not match the calendar length");
    }
    found = true;
    for (std::size_t i = 0; i < n; ++i) weekly[i] += c.contribution[i];
  }
  require(found, "plan_weekdays: result has no weekly or subweekly component");

  std::array<double, 7> sum{};
  std::array<std::size_t, 7> count{};
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned d = iso_index(weekday_of(calendar, i));
    sum[d] += weekly[i];
    ++count[d];
  }
  WeekdayPlan plan;
  double centre = 0.0;
  unsigned present = 0;
  for (unsigned d = 0; d < 7; ++d) {
    if (count[d] == 0) continue;
    plan.per_weekday_deviation[d] = sum[d] / static_cast<double>(count[d]);
    centre += plan.per_weekday_deviation[d];
    ++present;
  }
  centre /= static_cast<double>(present);
  double max_dev = 0.0;
  for (unsigned d = 0; d < 7; ++d) {
    if (count[d] == 0) continue;
    plan.per_weekday_deviation[d] -= centre;
    max_dev = std::max(max_dev, plan.per_weekday_deviation[d]);
  }
  // Rounding-level spread counts as flat.
  double scale = 0.0;
  for (double v : weekly) scale = std::max(scale, std::abs(v));
  if (!(max_dev > 1e-12 * std::max(scale, 1e-300))) return plan;

  plan.threshold_used = fraction * max_dev;
  std::vector<unsigned> slow;
  for (unsigned d = 0; d < 7; ++d) {
    if (count[d] > 0 && plan.per_weekday_deviation[d] >= plan.threshold_used) slow.push_back(d);
  }
  if (slow.size() > kMaxSlowDays) {
    std::stable_sort(slow.begin(), slow.end(), [&](unsigned a, unsigned b) {
      return plan.per_weekday_deviation[a] > plan.per_weekday_deviation[b];
    });
    slow.resize(kMaxSlowDays);
    std::sort(slow.begin(), slow.end());
  }
  for (unsigned d : slow) plan.slow_days.push_back(std::chrono::weekday{d + 1});
  return plan;
}

WeekdayPlan plan_weekdays(const DecompositionResult& result, double fraction) {
  return plan_weekdays(result, result.source, fraction);
}

}  // namespace decomp
