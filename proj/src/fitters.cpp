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

#include "decomp/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "decomp/error.hpp"
#include "decomp/kernels.hpp"
#include "decomp/stats.hpp"
#include "loess_detail.hpp"

namespace decomp::fit {

namespace {

double sum_sq_resid(std::span<const double> y, std::span<const double> fitted) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - fitted[i];
    s += r * r;
  }
  return s;
}

// Prefix sums for O(1) segment OLS during the breakpoint search.
struct Prefix {
  std::vector<double> t, tt, y, ty, yy;

  explicit Prefix(std::span<const double> v) {
    const std::size_t n = v.size();
    t.assign(n + 1, 0.0);
    tt = y = ty = yy = t;
    for (std::size_t i = 0; i < n; ++i) {
      const double ti = static_cast<double>(i);
      t[i + 1] = t[i] + ti;
      tt[i + 1] = tt[i] + ti * ti;
      y[i + 1] = y[i] + v[i];
      ty[i + 1] = ty[i] + ti * v[i];
      yy[i + 1] = yy[i] + v[i] * v[i];
    }
  }

  double segment_sse(std::size_t b, std::size_t e) const {
    const double k = static_cast<double>(e - b);
    const double st = t[e] - t[b], stt = tt[e] - tt[b];
    const double sy = y[e] - y[b], sty = ty[e] - ty[b], syy = yy[e] - yy[b];
    const double sxx = stt - st * st / k;
    const double sxy = sty - st * sy / k;
    const double s = syy - sy * sy / k - sxy * sxy / sxx;
    return std::max(s, 0.0);
  }
};

Segment fit_segment(std::span<const double> y, std::size_t b, std::size_t e) {
  const auto line = stats::ols_line(y.subspan(b, e - b), static_cast<double>(b));
  return {b, e, line.slope, line.intercept};
}

PiecewiseLinearFit assemble(std::span<const double> y,
                            std::vector<std::size_t> breakpoints) {
  PiecewiseLinearFit out;
  out.breakpoints = std::move(breakpoints);
  std::vector<std::size_t> edges{0};
  edges.insert(edges.end(), out.breakpoints.begin(), out.breakpoints.end());
  edges.push_back(y.size());
  out.fitted.assign(y.size(), 0.0);
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    Segment seg = fit_segment(y, edges[s], edges[s + 1]);
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      out.fitted[i] = seg.intercept + seg.slope * static_cast<double>(i);
    }
    out.segments.push_back(seg);
  }
  out.sse = sum_sq_resid(y, out.fitted);
  return out;
}

}  // namespace

LinearFit fit_linear(std::span<const double> y) {
  require(y.size() >= 3, "fit_linear: need at least 3 points");
  const auto line = stats::ols_line(y);
  LinearFit f;
  f.slope = line.slope;
  f.intercept = line.intercept;
  f.fitted.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) f.fitted[i] = line.at(static_cast<double>(i));
  f.sse = sum_sq_resid(y, f.fitted);
  return f;
}

double piecewise_bic(double sse, std::size_t n, std::size_t segments) {
  const double k = 2.0 * static_cast<double>(segments) + static_cast<double>(segments - 1);
  const double nn = static_cast<double>(n);
  return nn * std::log(sse / nn) + k * std::log(nn);
}

PiecewiseLinearFit fit_piecewise_fixed(std::span<const double> y,
                                       std::vector<std::size_t> breakpoints) {
  std::sort(breakpoints.begin(), breakpoints.end());
  std::size_t prev = 0;
  for (std::size_t b : breakpoints) {
    require(b >= prev + 2 && b + 2 <= y.size(),
            "piecewise_linear: breakpoints must leave at least 2 points per segment");
    prev = b;
  }
  auto fit = assemble(y, std::move(breakpoints));
  double tss = 0.0;
  const double m = stats::mean(y);
  for (double v : y) tss += (v - m) * (v - m);
  const double floor = std::max(1e-12 * tss, std::numeric_limits<double>::min());
  fit.bic = piecewise_bic(std::max(fit.sse, floor), y.size(), fit.segments.size());
  return fit;
}

PiecewiseLinearFit fit_piecewise_linear(std::span<const double> y, int max_segments,
                                        std::size_t min_len) {
  const std::size_t n = y.size();
  require(max_segments == 2 || max_segments == 3,
          "fit_piecewise_linear: max_segments must be 2 or 3");
  require(min_len >= 2, "fit_piecewise_linear: min_segment_len must be >= 2");
  require(n >= static_cast<std::size_t>(max_segments) * min_len,
          "fit_piecewise_linear: series of length " + std::to_string(n) +
              " cannot hold " + std::to_string(max_segments) + " segments of " +
              std::to_string(min_len) + " points");

  const Prefix pre(y);
  std::vector<std::size_t> grid;
  for (std::size_t b = min_len; b + min_len <= n; b += kBreakpointStride) grid.push_back(b);

  // Best breakpoint set for each segment count, by SSE.
  std::vector<std::vector<std::size_t>> best(4);
  std::vector<double> best_sse(4, std::numeric_limits<double>::infinity());
  best_sse[1] = pre.segment_sse(0, n);
  for (std::size_t b : grid) {
    const double s = pre.segment_sse(0, b) + pre.segment_sse(b, n);
    if (s < best_sse[2]) {
      best_sse[2] = s;
      best[2] = {b};
    }
  }
  if (max_segments == 3) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = i + 1; j < grid.size(); ++j) {
        if (grid[j] - grid[i] < min_len) continue;
        const double s = pre.segment_sse(0, grid[i]) +
                         pre.segment_sse(grid[i], grid[j]) +
                         pre.segment_sse(grid[j], n);
        if (s < best_sse[3]) {
          best_sse[3] = s;
          best[3] = {grid[i], grid[j]};
        }
      }
    }
  }

  double tss = 0.0;
  const double m = stats::mean(y);
  for (double v : y) tss += (v - m) * (v - m);
  // sse floor for noiseless fits.
  const double floor = std::max(1e-12 * tss, std::numeric_limits<double>::min());

  PiecewiseLinearFit chosen;
  bool have = false;
  for (int segs = 1; segs <= max_segments; ++segs) {
    if (segs > 1 && best[segs].empty()) continue;
    auto fit = assemble(y, best[segs]);
    fit.bic = piecewise_bic(std::max(fit.sse, floor), n, fit.segments.size());
    if (!have || fit.bic < chosen.bic) {
      chosen = std::move(fit);
      have = true;
    }
  }
  return chosen;
}

double SinusoidFit::at(double t) const {
  return amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase) + offset;
}

std::vector<double> period_grid(double lo, double hi, double step,
                                std::span<const double> pinned) {
  require(lo > 0.0 && step > 1.0, "period_grid: need lo > 0 and step > 1");
  std::vector<double> g;
  for (double p = lo; p <= hi * (1.0 + 1e-12); p *= step) g.push_back(p);
  g.insert(g.end(), pinned.begin(), pinned.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<double> default_period_grid(std::size_t n, std::span<const double> pinned) {
  return period_grid(3.0, static_cast<double>(n) / 1.5, 1.02, pinned);
}

SinusoidFit fit_sinusoid(std::span<const double> y, std::span<const double> grid,
                         Execution exec) {
  const std::size_t n = y.size();
  require(n >= 8, "fit_sinusoid: need at least 8 points");
  require(!grid.empty(), "fit_sinusoid: empty period grid");
  for (double p : grid) {
    require(p > 2.0 && p < 2.0 * static_cast<double>(n),
            "fit_sinusoid: grid period " + std::to_string(p) +
                " outside (2, 2n)");
  }
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  const auto candidates = exec == Execution::parallel
                              ? kernels::omp::scan_periods(y, sorted)
                              : kernels::serial::scan_periods(y, sorted);
  const auto& best = candidates[kernels::argmin_sse(candidates)];

  SinusoidFit f;
  f.period = best.period;
  f.amplitude = std::hypot(best.sin_coef, best.cos_coef);
  f.phase = std::atan2(best.cos_coef, best.sin_coef);
  f.offset = best.offset;
  f.fitted.resize(n);
  for (std::size_t t = 0; t < n; ++t) f.fitted[t] = f.at(static_cast<double>(t));
  f.sse = sum_sq_resid(y, f.fitted);
  return f;
}

namespace {

struct HwesInit {
  double level;
  double trend;
  Series seasonal;
};

HwesInit hwes_init(std::span<const double> y, int m) {
  const auto mm = static_cast<std::size_t>(m);
  const double first = stats::mean(y.subspan(0, mm));
  const double second = stats::mean(y.subspan(mm, mm));
  HwesInit init{first, (second - first) / static_cast<double>(m), Series(mm)};
  for (std::size_t i = 0; i < mm; ++i) init.seasonal[i] = y[i] - first;
  return init;
}

void check_hwes(std::span<const double> y, int m) {
  require(m >= 2, "fit_hwes: period must be >= 2");
  if (y.size() < 3 * static_cast<std::size_t>(m)) {
    fail(ErrorKind::precondition,
         "fit_hwes: series of length " + std::to_string(y.size()) +
             " is shorter than 3 periods of " + std::to_string(m));
  }
}

// Runs the recursion. State before t = 0 is level l0 - b0 and trend b0, so
// with zero smoothing the prediction at t is l0 + t*b0 + s[t mod m].
template <typename OnStep>
void hwes_run(std::span<const double> y, int m, const HwesParams& p,
              const HwesInit& init, Series& seasonal, double& level, double& trend,
              OnStep&& on_step) {
  seasonal = init.seasonal;
  level = init.level - init.trend;
  trend = init.trend;
  const auto mm = static_cast<std::size_t>(m);
  for (std::size_t t = 0; t < y.size(); ++t) {
    const std::size_t idx = t % mm;
    const double pred = level + trend + seasonal[idx];
    on_step(t, pred);
    const double new_level = p.alpha * (y[t] - seasonal[idx]) + (1.0 - p.alpha) * (level + trend);
    trend = p.beta * (new_level - level) + (1.0 - p.beta) * trend;
    seasonal[idx] = p.gamma * (y[t] - new_level) + (1.0 - p.gamma) * seasonal[idx];
    level = new_level;
  }
}

}  // namespace

double hwes_sse(std::span<const double> y, int m, const HwesParams& p) {
  const HwesInit init = hwes_init(y, m);
  Series seasonal;
  double level, trend, sse = 0.0;
  hwes_run(y, m, p, init, seasonal, level, trend, [&](std::size_t t, double pred) {
    const double e = y[t] - pred;
    sse += e * e;
  });
  return sse;
}

std::vector<double> hwes_smoothing_grid() {
  std::vector<double> g;
  for (int k = 0; k < 50; ++k) g.push_back(0.01 + 0.02 * k);
  return g;
}

namespace {

double snap_to_grid(double v, const std::vector<double>& grid) {
  return *std::min_element(grid.begin(), grid.end(), [v](double a, double b) {
    return std::abs(a - v) < std::abs(b - v);
  });
}

}  // namespace

HwesFit fit_hwes(std::span<const double> y, int m, bool optimize, HwesParams start,
                 Execution exec) {
  check_hwes(y, m);
  HwesParams p = start;
  if (optimize) {
    const auto grid = hwes_smoothing_grid();
    p = {snap_to_grid(start.alpha, grid), snap_to_grid(start.beta, grid),
         snap_to_grid(start.gamma, grid)};
    constexpr int kMaxRounds = 25;
    std::vector<HwesParams> candidates(grid.size());
    for (int round = 0; round < kMaxRounds; ++round) {
      bool changed = false;
      for (double HwesParams::*coord :
           {&HwesParams::alpha, &HwesParams::beta, &HwesParams::gamma}) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
          candidates[i] = p;
          candidates[i].*coord = grid[i];
        }
        const auto sse = exec == Execution::parallel
                             ? kernels::omp::hwes_scan(y, m, candidates)
                             : kernels::serial::hwes_scan(y, m, candidates);
        const auto best = static_cast<std::size_t>(
            std::min_element(sse.begin(), sse.end()) - sse.begin());
        if (grid[best] != p.*coord) {
          p.*coord = grid[best];
          changed = true;
        }
      }
      if (!changed) break;
    }
  } else {
    require(p.alpha >= 0 && p.alpha <= 1 && p.beta >= 0 && p.beta <= 1 &&
                p.gamma >= 0 && p.gamma <= 1,
            "fit_hwes: smoothing factors must lie in [0, 1]");
  }

  HwesFit f;
  f.params = p;
  f.period = m;
  const HwesInit init = hwes_init(y, m);
  f.initial_level = init.level;
  f.initial_trend = init.trend;
  f.initial_seasonal = init.seasonal;
  f.fitted.resize(y.size());
  Series seasonal;
  hwes_run(y, m, p, init, seasonal, f.level, f.trend, [&](std::size_t t, double pred) {
    f.fitted[t] = pred;
    const double e = y[t] - pred;
    f.sse += e * e;
  });
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t n = y.size();
  f.seasonal_tail.resize(mm);
  for (std::size_t k = 0; k < mm; ++k) f.seasonal_tail[k] = seasonal[(n - mm + k) % mm];
  return f;
}

Series HwesFit::forecast(std::size_t horizon) const {
  Series out(horizon);
  const std::size_t m = seasonal_tail.size();
  for (std::size_t h = 1; h <= horizon; ++h) {
    out[h - 1] = level + static_cast<double>(h) * trend + seasonal_tail[(h - 1) % m];
  }
  return out;
}

Series loess_smooth(std::span<const double> y, double span) {
  require(span > 0.0 && span <= 1.0, "loess_smooth: span must be in (0, 1]");
  const std::size_t n = y.size();
  const auto q = static_cast<std::size_t>(std::ceil(span * static_cast<double>(n)));
  if (q < 4) {
    fail(ErrorKind::precondition, "loess_smooth: window of " + std::to_string(q) +
                                      " points is degenerate (need >= 4)");
  }
  Series out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = detail::nearest_window(static_cast<double>(i), n, q);
    const auto v = detail::loess_estimate(y, {}, static_cast<double>(i), w.lo, w.hi, w.h, 1);
    out[i] = v.value_or(y[i]);
  }
  return out;
}

Series moving_average(std::span<const double> y, std::size_t window) {
  require(window >= 1, "moving_average: window must be >= 1");
  const std::size_t n = y.size();
  Series out(n);
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += y[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

FittedModel to_model(const LinearFit& f) {
  return {ModelFamily::linear,
          {{"slope", f.slope}, {"intercept", f.intercept}, {"sse", f.sse}},
          {}};
}

FittedModel to_model(const PiecewiseLinearFit& f) {
  FittedModel m{ModelFamily::piecewise_linear, {{"sse", f.sse}, {"bic", f.bic}}, {}};
  Series bps, slopes, intercepts;
  for (std::size_t b : f.breakpoints) bps.push_back(static_cast<double>(b));
  for (const auto& s : f.segments) {
    slopes.push_back(s.slope);
    intercepts.push_back(s.intercept);
  }
  m.params["segments"] = static_cast<double>(f.segments.size());
  m.arrays["breakpoints"] = std::move(bps);
  m.arrays["slopes"] = std::move(slopes);
  m.arrays["intercepts"] = std::move(intercepts);
  return m;
}

FittedModel to_model(const SinusoidFit& f) {
  return {ModelFamily::sinusoid,
          {{"amplitude", f.amplitude},
           {"period", f.period},
           {"phase", f.phase},
           {"offset", f.offset},
           {"sse", f.sse}},
          {}};
}

FittedModel to_model(const HwesFit& f) {
  FittedModel m{ModelFamily::hwes,
                {{"alpha", f.params.alpha},
                 {"beta", f.params.beta},
                 {"gamma", f.params.gamma},
                 {"period", static_cast<double>(f.period)},
                 {"level", f.level},
                 {"trend", f.trend},
                 {"sse", f.sse}},
                {}};
  m.arrays["seasonal_tail"] = f.seasonal_tail;
  return m;
}

Series forecast_model(const FittedModel& model, std::size_t horizon,
                      std::size_t train_length) {
  require(horizon >= 1, "forecast_model: horizon must be >= 1");
  Series out(horizon);
  auto t_at = [&](std::size_t h) { return static_cast<double>(train_length + h); };
  switch (model.family) {
    case ModelFamily::linear: {
      const double slope = model.param("slope"), icpt = model.param("intercept");
      for (std::size_t h = 0; h < horizon; ++h) out[h] = icpt + slope * t_at(h);
      return out;
    }
    case ModelFamily::piecewise_linear: {
      const auto& slopes = model.array("slopes");
      const auto& icpts = model.array("intercepts");
      if (slopes.empty() || slopes.size() != icpts.size()) {
        fail(ErrorKind::structural, "piecewise_linear model has no segments");
      }
      for (std::size_t h = 0; h < horizon; ++h) out[h] = icpts.back() + slopes.back() * t_at(h);
      return out;
    }
    case ModelFamily::sinusoid: {
      SinusoidFit s;
      s.amplitude = model.param("amplitude");
      s.period = model.param("period");
      s.phase = model.param("phase");
      s.offset = model.param("offset");
      for (std::size_t h = 0; h < horizon; ++h) out[h] = s.at(t_at(h));
      return out;
    }
    case ModelFamily::hwes: {
      HwesFit f;
      f.level = model.param("level");
      f.trend = model.param("trend");
      f.seasonal_tail = model.array("seasonal_tail");
      if (f.seasonal_tail.empty()) fail(ErrorKind::structural, "hwes model has no seasonal state");
      return f.forecast(horizon);
    }
    case ModelFamily::loess:
    case ModelFamily::ma:
      fail(ErrorKind::not_extrapolable,
           std::string(to_string(model.family)) + " models cannot be extrapolated");
  }
  fail(ErrorKind::not_extrapolable, "unknown model family");
}

}  // namespace decomp::fit
