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

#include <doctest.h>

#include <random>

#include "check.hpp"
#include "decomp/pipeline.hpp"
#include "decomp/preprocess.hpp"
#include "synthetic.hpp"

using namespace decomp;
using decomp::testing::kTwoPi;
using doctest::Approx;

namespace {

RecipeStep step(Band band, ModelFamily family, StepParams params = {}) {
  return RecipeStep{band, family, std::move(params)};
}

Recipe four_step_recipe() {
  StepParams weekly;
  weekly.period = 7;
  return Recipe{"four-step",
                stats::kDefaultRunsAlpha,
                0,
                {step(Band::trend, ModelFamily::linear),
                 step(Band::quarterly, ModelFamily::sinusoid),
                 step(Band::monthly, ModelFamily::sinusoid),
                 step(Band::weekly, ModelFamily::hwes, weekly)}};
}

const Component* find_band(const DecompositionResult& r, Band band) {
  for (const auto& c : r.components) {
    if (c.band == band) return &c;
  }
  return nullptr;
}

DecompositionResult with_weekly(const Series& weekly, double baseline = 0.0) {
  Series src(weekly);
  for (auto& v : src) v += baseline;
  Component c;
  c.label = "s1:weekly:sinusoid";
  c.band = Band::weekly;
  c.model = {ModelFamily::sinusoid, {{"amplitude", 0.0}, {"period", 7.0}, {"phase", 0.0}, {"offset", 0.0}}, {}};
  c.contribution = weekly;
  c.period_days = 7.0;
  return DecompositionResult{Trace(testing::default_start(), src, "ms"), {c},
                             Series(weekly.size(), baseline), true, 1.0, {}};
}

Series continuation(std::size_t n, std::size_t h, double baseline) {
  Series out(h);
  for (std::size_t i = 0; i < h; ++i) out[i] = testing::multi_tone_clean(static_cast<double>(n + i), baseline);
  return out;
}

}  // namespace

TEST_CASE("recipe validation") {
  CHECK_NOTHROW(validate_recipe(four_step_recipe()));
  CHECK_NOTHROW(validate_recipe(sab_default_recipe()));
  CHECK(sab_default_recipe().steps.size() == 6);

  Recipe r = four_step_recipe();
  r.steps.clear();
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  std::swap(r.steps[0], r.steps[1]);
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.steps[1].family = ModelFamily::linear;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.steps[0].family = ModelFamily::hwes;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.steps[3].params.period = 1;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.steps[3].params.alpha = 0.5;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.steps[0].params.span = 0.5;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  r = four_step_recipe();
  r.runs_alpha = 0.0;
  CHECK_ERROR_KIND(validate_recipe(r), ErrorKind::schema);

  CHECK(StepParams{}.is_auto());
  StepParams pinned;
  pinned.period = 30.0;
  CHECK(!pinned.is_auto());
}

TEST_CASE("hybrid recovers the multi-tone generator") {
  const auto trace = testing::multi_tone_trace(301, 3.0, 42);
  const auto r = run_hybrid(trace, four_step_recipe());
  REQUIRE(r.components.size() == 4);
  CHECK(r.components[0].label == "s1:trend:linear");
  CHECK(r.components[0].model.param("slope") == Approx(0.3).epsilon(0.1));
  CHECK(*r.components[1].period_days == Approx(180.0).epsilon(0.1));
  CHECK(*r.components[2].period_days == Approx(56.0).epsilon(0.1));
  CHECK(*r.components[3].period_days == 7.0);
  CHECK(r.residual_random);
  CHECK(reconstruction_error(r) <= 1e-9);
  CHECK(!r.diagnostics.degenerate_residual);

  // The subtraction chain is exact step by step.
  Series resid(r.source.values().begin(), r.source.values().end());
  for (const auto& c : r.components) {
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= c.contribution[i];
  }
  CHECK(resid == r.residual);
}

TEST_CASE("hybrid with the shipped recipe") {
  const auto trace = testing::multi_tone_trace(301, 3.0, 7, 100.0);
  const auto r = run_hybrid(trace, sab_default_recipe());
  REQUIRE(r.components.size() == 6);
  CHECK(*r.components[1].period_days == Approx(180.0).epsilon(0.1));
  CHECK(*r.components[2].period_days == Approx(56.0).epsilon(0.1));
  CHECK(reconstruction_error(r) <= 1e-9);
}

TEST_CASE("hybrid on a noiseless line is degenerate-random") {
  Series y(60);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = 5.0 + 0.5 * t;
  const Recipe recipe{"line", 0.05, 0, {step(Band::trend, ModelFamily::linear)}};
  const auto r = run_hybrid(Trace(testing::default_start(), y, "ms"), recipe);
  CHECK(r.residual_random);
  CHECK(r.diagnostics.degenerate_residual);
  CHECK(testing::max_abs_diff(r.residual, Series(60, 0.0)) <= 1e-9);
}

TEST_CASE("non-random residual carries a suggestion") {
  const auto trace = testing::multi_tone_trace(301, 1.0, 3);
  const Recipe recipe{"trend-only", 0.05, 0, {step(Band::trend, ModelFamily::linear)}};
  const auto r = run_hybrid(trace, recipe);
  CHECK(!r.residual_random);
  CHECK(r.diagnostics.suggested_period.has_value());
  CHECK(r.diagnostics.suggested_band.has_value());
}

TEST_CASE("fitter errors carry the step index") {
  const auto trace = testing::multi_tone_trace(40, 1.0, 3);
  StepParams weekly;
  weekly.period = 20;
  const Recipe recipe{"bad", 0.05, 0,
                      {step(Band::trend, ModelFamily::linear),
                       step(Band::monthly, ModelFamily::hwes, weekly)}};
  try {
    (void)run_hybrid(trace, recipe);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precondition);
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}

TEST_CASE("automatic pipeline") {
  const auto trace = testing::multi_tone_trace(301, 3.0, 42, 100.0);
  emd::EemdConfig cfg;
  cfg.ensemble_size = 50;
  cfg.master_seed = 1;
  const auto r = run_auto(trace, cfg);
  CHECK(r.residual == Series(301, 0.0));
  CHECK(reconstruction_error(r) <= 1e-9);
  CHECK(r.components.back().band == Band::trend);
  CHECK(r.diagnostics.seeds.at("master_seed") == 1.0);
  for (std::size_t k = 1; k < r.components.size(); ++k) {
    if (r.components[k].period_days && r.components[k - 1].period_days) {
      CHECK(*r.components[k].period_days > 0.8 * *r.components[k - 1].period_days);
    }
  }
  for (const auto& c : r.components) {
    if (c.band == Band::trend) {
      CHECK(c.model.family == ModelFamily::linear);
    } else {
      CHECK(c.model.family == ModelFamily::hwes);
      CHECK(c.model.param("period") >= 2);
    }
  }
  bool weekly = false;
  for (const auto& c : r.components) {
    if (c.period_days && std::abs(*c.period_days - 7.0) <= 0.25 * 7.0) weekly = true;
  }
  CHECK(weekly);

  CHECK_ERROR_KIND(run_auto(Trace(testing::default_start(), Series(60, 3.0), "ms"), cfg),
                   ErrorKind::validation);
}

TEST_CASE("degenerate ensemble matches plain EMD labelling") {
  Series y(301);
  for (std::size_t t = 0; t < y.size(); ++t) {
    y[t] = 50.0 + 4.0 * std::sin(kTwoPi * t / 7.0) + 6.0 * std::sin(kTwoPi * t / 54.0);
  }
  const Trace trace(testing::default_start(), y, "ms");
  emd::EemdConfig cfg;
  cfg.ensemble_size = 1;
  cfg.noise_amplitude = 0.0;
  const auto a = run_auto(trace, cfg);
  const auto filtered = hampel_filter(trace).trace;
  const auto b = auto_result_from_emd(filtered, emd::emd(filtered.values(), cfg.base));
  REQUIRE(a.components.size() == b.components.size());
  for (std::size_t k = 0; k < a.components.size(); ++k) {
    CHECK(a.components[k].label == b.components[k].label);
    CHECK(a.components[k].band == b.components[k].band);
    CHECK(testing::max_abs_diff(a.components[k].contribution, b.components[k].contribution) <= 1e-9);
  }
}

TEST_CASE("imf season length clamp") {
  CHECK(imf_season_length(7.4, 301) == 7);
  CHECK(imf_season_length(1.2, 301) == 2);
  CHECK(imf_season_length(180.0, 301) == 92);
  CHECK(imf_season_length(80.0, 120) == 40);
}

TEST_CASE("evaluate") {
  const Series a{100, 110, 90, 105};
  const auto same = evaluate(a, a);
  CHECK(same.mape_percent == 0.0);
  CHECK(same.erp_normalized == 0.0);
  Series scaled(a);
  for (auto& v : scaled) v *= 1.018;
  CHECK(evaluate(scaled, a).mape_percent == Approx(1.8));
  CHECK_ERROR_KIND(evaluate(Series{1, 2}, a), ErrorKind::precondition);
}

TEST_CASE("forecast") {
  SUBCASE("single line") {
    Series y(301);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 1.0 + 2.0 * t;
    Component c;
    c.label = "s1:trend:linear";
    c.model = {ModelFamily::linear, {{"slope", 2.0}, {"intercept", 1.0}}, {}};
    c.contribution = y;
    const DecompositionResult r{Trace(testing::default_start(), y, "ms"), {c}, Series(301, 0.0),
                                true, 1.0, {}};
    const auto f = forecast(r, 28);
    REQUIRE(f.predicted.size() == 28);
    for (std::size_t h = 0; h < 28; ++h) CHECK(f.predicted[h] == Approx(1.0 + 2.0 * (301 + h)));
    CHECK(f.start_date == add_days(testing::default_start(), 301));
    CHECK(!f.metrics);
  }
  SUBCASE("noiseless hybrid is near exact") {
    const std::size_t n = 301;
    const auto trace = testing::multi_tone_trace(n, 0.0, 1, 100.0);
    const auto r = run_hybrid(trace, sab_default_recipe());
    const auto actual = continuation(n, 28, 100.0);
    const auto f = forecast(r, 28, std::span<const double>(actual));
    REQUIRE(f.metrics);
    CHECK(f.metrics->mape_percent <= 0.5);
  }
  SUBCASE("noisy hybrid stays within twice the noise level") {
    const std::size_t n = 301, h = 28;
    const double baseline = 100.0;
    const auto train = testing::multi_tone(n, 1.0, 5, baseline);
    const double sigma = 0.03 * stats::mean(train);
    const auto noisy = testing::multi_tone(n, sigma, 5, baseline);
    const auto actual = testing::multi_tone(h, sigma, 5, baseline, n);
    const auto r = run_hybrid(Trace(testing::default_start(), noisy, "ms"), four_step_recipe());
    const auto f = forecast(r, h, std::span<const double>(actual));
    CHECK(f.metrics->mape_percent <= 2.0 * 3.0);
  }
  SUBCASE("predicted is the component sum") {
    const auto trace = testing::multi_tone_trace(301, 3.0, 9, 100.0);
    emd::EemdConfig cfg;
    cfg.ensemble_size = 20;
    for (const auto& r : {run_hybrid(trace, sab_default_recipe()), run_auto(trace, cfg)}) {
      const auto f = forecast(r, 28);
      REQUIRE(f.per_component.size() == r.components.size());
      for (std::size_t h = 0; h < 28; ++h) {
        double s = 0.0;
        for (const auto& [label, v] : f.per_component) s += v[h];
        CHECK(f.predicted[h] == s);
      }
    }
  }
  SUBCASE("smoother trends") {
    const auto trace = testing::multi_tone_trace(301, 1.0, 2, 100.0);
    const Recipe recipe{"loess", 0.05, 0, {step(Band::trend, ModelFamily::loess)}};
    const auto r = run_hybrid(trace, recipe);
    const auto f = forecast(r, 7);
    CHECK(f.predicted.size() == 7);
    CHECK(!f.notes.empty());
    CHECK_ERROR_KIND(forecast(r, 7, std::nullopt, false), ErrorKind::not_extrapolable);
  }
  SUBCASE("preconditions") {
    const auto r = with_weekly(Series(28, 1.0));
    CHECK_ERROR_KIND(forecast(r, 0), ErrorKind::precondition);
    const Series short_actual(3, 1.0);
    CHECK_ERROR_KIND(forecast(r, 5, std::span<const double>(short_actual)), ErrorKind::precondition);
  }
}

TEST_CASE("compare methods") {
  emd::EemdConfig cfg;
  cfg.ensemble_size = 30;
  cfg.master_seed = 4;
  SUBCASE("deterministic") {
    const auto trace = testing::multi_tone_trace(301, 3.0, 42, 100.0);
    const auto a = compare_methods(trace, sab_default_recipe(), cfg, 28);
    const auto b = compare_methods(trace, sab_default_recipe(), cfg, 28);
    CHECK(a.hybrid_result == b.hybrid_result);
    CHECK(a.auto_result == b.auto_result);
    CHECK(a.stl.forecast == b.stl.forecast);
    CHECK(a.automatic.forecast == b.automatic.forecast);
    REQUIRE(a.deltas.size() == b.deltas.size());
    for (std::size_t i = 0; i < a.deltas.size(); ++i) {
      CHECK(a.deltas[i].relative_delta == b.deltas[i].relative_delta);
    }
  }
  SUBCASE("weekly-only trace") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 0.5);
    Series y(301);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 100.0 + 10.0 * std::sin(kTwoPi * t / 7.0) + g(rng);
    const Recipe recipe{"weekly", 0.05, 0,
                        {step(Band::trend, ModelFamily::linear),
                         step(Band::weekly, ModelFamily::sinusoid)}};
    const auto rep = compare_methods(Trace(testing::default_start(), y, "ms"), recipe, cfg, 28);
    for (const auto* m : {&rep.hybrid, &rep.automatic, &rep.stl}) {
      const auto p = dominant_period(m->components, Band::weekly);
      REQUIRE_MESSAGE(p, m->method);
      CHECK_MESSAGE(std::abs(*p - 7.0) <= 1.0, m->method);
    }
  }
  SUBCASE("constant trace") {
    CHECK_ERROR_KIND(compare_methods(Trace(testing::default_start(), Series(90, 1.0), "ms"),
                                     sab_default_recipe(), cfg, 28),
                     ErrorKind::validation);
  }
}

TEST_CASE("weekday planning") {
  // The calendar starts on a Wednesday, so t % 7 == 0 is Wednesday.
  REQUIRE(weekday_of(Trace(testing::default_start(), Series(2, 0.0), "ms"), 0) ==
          std::chrono::Wednesday);
  const std::size_t n = 70;
  SUBCASE("sharp Wednesday peak") {
    Series w(n, 0.0);
    for (std::size_t t = 0; t < n; t += 7) w[t] = 10.0;
    const auto plan = plan_weekdays(with_weekly(w));
    CHECK(plan.slow_days == std::vector<std::chrono::weekday>{std::chrono::Wednesday});
  }
  SUBCASE("sinusoid peaking Wednesday") {
    Series w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = 5.0 * std::cos(kTwoPi * t / 7.0);
    const auto plan = plan_weekdays(with_weekly(w));
    // cos(2 pi / 7) = 0.62 clears half of the peak, cos(4 pi / 7) < 0 does not.
    CHECK(plan.slow_days == std::vector<std::chrono::weekday>{
                                std::chrono::Tuesday, std::chrono::Wednesday, std::chrono::Thursday});
    CHECK(plan.per_weekday_deviation[2] == Approx(5.0));
    CHECK(plan.per_weekday_deviation[1] == Approx(5.0 * std::cos(kTwoPi / 7.0)));
    CHECK(plan.threshold_used == Approx(2.5));
  }
  SUBCASE("flat pattern") {
    const auto plan = plan_weekdays(with_weekly(Series(n, 0.0)));
    CHECK(plan.slow_days.empty());
  }
  SUBCASE("constant shift changes nothing") {
    Series w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = 3.0 * std::sin(kTwoPi * t / 7.0) + std::sin(kTwoPi * t / 3.5);
    const auto a = plan_weekdays(with_weekly(w));
    Series shifted(w);
    for (auto& v : shifted) v += 1000.0;
    const auto b = plan_weekdays(with_weekly(shifted, 1000.0));
    CHECK(a.slow_days == b.slow_days);
    for (unsigned d = 0; d < 7; ++d) {
      CHECK(a.per_weekday_deviation[d] == Approx(b.per_weekday_deviation[d]).scale(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("at most five slow days") {
    Series w(n);
    const double pattern[7] = {1, 1, 1, 1, 1, 1, -6};
    for (std::size_t t = 0; t < n; ++t) w[t] = pattern[t % 7];
    const auto plan = plan_weekdays(with_weekly(w), 0.1);
    CHECK(plan.slow_days.size() == kMaxSlowDays);
  }
  SUBCASE("preconditions") {
    auto r = with_weekly(Series(n, 1.0));
    r.components[0].band = Band::monthly;
    CHECK_ERROR_KIND(plan_weekdays(r), ErrorKind::precondition);
    CHECK_ERROR_KIND(plan_weekdays(with_weekly(Series(n, 1.0)), 0.0), ErrorKind::precondition);
  }
}
