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

#include "decomp/emd.hpp"

#include <algorithm>
#include <cmath>

#include "decomp/error.hpp"
#include "decomp/kernels.hpp"
#include "decomp/stats.hpp"

namespace decomp::emd {

Extrema find_extrema(std::span<const double> x) {
  Extrema e;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] == x[i - 1]) {
      ++i;
      continue;
    }
    // Walk across a plateau starting at i.
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 >= n) break;
    const bool rising = x[i] > x[i - 1];
    const bool falling_after = x[j + 1] < x[j];
    if (rising && falling_after) e.maxima.push_back((i + j) / 2);
    if (!rising && !falling_after) e.minima.push_back((i + j) / 2);
    i = j + 1;
  }
  return e;
}

std::size_t count_zero_crossings(std::span<const double> x) {
  std::size_t count = 0;
  int prev = 0;
  for (double v : x) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

Series natural_spline(std::span<const double> kt, std::span<const double> kv,
                      std::size_t n) {
  const std::size_t k = kt.size();
  require(k >= 2 && kv.size() == k, "natural_spline: need at least 2 knots");
  Series out(n);
  if (k == 2) {
    const double slope = (kv[1] - kv[0]) / (kt[1] - kt[0]);
    for (std::size_t i = 0; i < n; ++i) out[i] = kv[0] + slope * (static_cast<double>(i) - kt[0]);
    return out;
  }
  // Second derivatives M with M[0] = M[k-1] = 0 (natural ends), Thomas solve.
  std::vector<double> h(k - 1), m(k, 0.0), c(k, 0.0), d(k, 0.0);
  for (std::size_t i = 0; i + 1 < k; ++i) h[i] = kt[i + 1] - kt[i];
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double a = h[i - 1];
    const double b = 2.0 * (h[i - 1] + h[i]);
    const double cc = h[i];
    const double rhs = 6.0 * ((kv[i + 1] - kv[i]) / h[i] - (kv[i] - kv[i - 1]) / h[i - 1]);
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = k - 2; i >= 1; --i) {
    m[i] = d[i] - c[i] * m[i + 1];
    if (i == 1) break;
  }
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    while (seg + 2 < k && t > kt[seg + 1]) ++seg;
    const double hh = h[seg];
    const double a = (kt[seg + 1] - t) / hh;
    const double b = (t - kt[seg]) / hh;
    out[i] = a * kv[seg] + b * kv[seg + 1] +
             ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * hh * hh / 6.0;
  }
  return out;
}

namespace {

// Boundary knots in the style of Rilling's EMD: up to `depth` extrema are
// reflected at each end, about the end sample or about the outermost
// extremum, whichever keeps the envelopes enclosing the end value.
struct Knots {
  std::vector<double> max_t, max_v, min_t, min_v;
};

using Idx = std::vector<std::size_t>;

Idx take(const Idx& v, std::size_t from, std::size_t to) {
  to = std::min(to, v.size());
  if (from >= to) return {};
  return Idx(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to));
}

Knots boundary_knots(std::span<const double> x, const Extrema& e, std::size_t nb) {
  const auto& mx = e.maxima;
  const auto& mn = e.minima;
  const std::size_t last = x.size() - 1;
  const std::size_t nmax = mx.size(), nmin = mn.size();

  // Left end. Index lists are in ascending order; reflection reverses them.
  Idx lmax, lmin;
  std::size_t lsym = 0;
  if (mx[0] < mn[0]) {
    if (x[0] > x[mn[0]]) {
      lmax = take(mx, 1, nb + 1);
      lmin = take(mn, 0, nb);
      lsym = mx[0];
    } else {
      lmax = take(mx, 0, nb);
      lmin = take(mn, 0, nb - 1);
      lmin.insert(lmin.begin(), 0);
    }
  } else {
    if (x[0] < x[mx[0]]) {
      lmax = take(mx, 0, nb);
      lmin = take(mn, 1, nb + 1);
      lsym = mn[0];
    } else {
      lmax = take(mx, 0, nb - 1);
      lmax.insert(lmax.begin(), 0);
      lmin = take(mn, 0, nb);
    }
  }

  // Right end.
  Idx rmax, rmin;
  std::size_t rsym = last;
  auto tail = [](const Idx& v, std::size_t count, std::size_t drop) {
    const std::size_t end = v.size() - std::min(drop, v.size());
    const std::size_t begin = end > count ? end - count : 0;
    return take(v, begin, end);
  };
  if (mx[nmax - 1] < mn[nmin - 1]) {
    if (x[last] < x[mx[nmax - 1]]) {
      rmax = tail(mx, nb, 0);
      rmin = tail(mn, nb, 1);
      rsym = mn[nmin - 1];
    } else {
      rmax = tail(mx, nb - 1, 0);
      rmax.push_back(last);
      rmin = tail(mn, nb, 0);
    }
  } else {
    if (x[last] > x[mn[nmin - 1]]) {
      rmax = tail(mx, nb, 1);
      rmin = tail(mn, nb, 0);
      rsym = mx[nmax - 1];
    } else {
      rmax = tail(mx, nb, 0);
      rmin = tail(mn, nb - 1, 0);
      rmin.push_back(last);
    }
  }
  if (lmax.empty()) lmax = take(mx, 0, nb);
  if (lmin.empty()) lmin = take(mn, 0, nb);
  if (rmax.empty()) rmax = tail(mx, nb, 0);
  if (rmin.empty()) rmin = tail(mn, nb, 0);

  auto mirror = [](double c, std::size_t i) { return 2.0 * c - static_cast<double>(i); };
  // Reflected knots landing inside the series: reflect about the end sample.
  if (lsym != 0 && (mirror(static_cast<double>(lsym), lmin.back()) > 0.0 ||
                    mirror(static_cast<double>(lsym), lmax.back()) > 0.0)) {
    if (lsym == mx[0]) {
      lmax = take(mx, 0, nb);
    } else {
      lmin = take(mn, 0, nb);
    }
    lsym = 0;
  }
  if (rsym != last &&
      (mirror(static_cast<double>(rsym), rmin.front()) < static_cast<double>(last) ||
       mirror(static_cast<double>(rsym), rmax.front()) < static_cast<double>(last))) {
    if (rsym == mx[nmax - 1]) {
      rmax = tail(mx, nb, 0);
    } else {
      rmin = tail(mn, nb, 0);
    }
    rsym = last;
  }

  auto assemble = [&](const Idx& left, const Idx& interior, const Idx& right,
                      std::vector<double>& kt, std::vector<double>& kv) {
    for (std::size_t r = left.size(); r-- > 0;) {
      kt.push_back(mirror(static_cast<double>(lsym), left[r]));
      kv.push_back(x[left[r]]);
    }
    for (std::size_t i : interior) {
      kt.push_back(static_cast<double>(i));
      kv.push_back(x[i]);
    }
    for (std::size_t r = right.size(); r-- > 0;) {
      kt.push_back(mirror(static_cast<double>(rsym), right[r]));
      kv.push_back(x[right[r]]);
    }
  };
  Knots k;
  assemble(lmin, mn, rmin, k.min_t, k.min_v);
  assemble(lmax, mx, rmax, k.max_t, k.max_v);
  return k;
}

}  // namespace

SiftStep sift_once(std::span<const double> x, int boundary_extrema) {
  const auto ext = find_extrema(x);
  if (ext.maxima.empty() || ext.minima.empty() ||
      ext.maxima.size() + ext.minima.size() < 3) {
    fail(ErrorKind::too_few_extrema,
         "sift_once: " + std::to_string(ext.maxima.size()) + " maxima and " +
             std::to_string(ext.minima.size()) + " minima");
  }
  const auto k = boundary_knots(x, ext, static_cast<std::size_t>(std::max(boundary_extrema, 1)));
  SiftStep s;
  s.upper = natural_spline(k.max_t, k.max_v, x.size());
  s.lower = natural_spline(k.min_t, k.min_v, x.size());
  s.envelope_mean.resize(x.size());
  s.candidate.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.envelope_mean[i] = 0.5 * (s.upper[i] + s.lower[i]);
    s.candidate[i] = x[i] - s.envelope_mean[i];
  }
  return s;
}

namespace {

bool has_enough_extrema(std::span<const double> x) {
  const auto e = find_extrema(x);
  return !e.maxima.empty() && !e.minima.empty() &&
         e.maxima.size() + e.minima.size() >= 3;
}

}  // namespace

EmdResult emd(std::span<const double> signal, const EmdConfig& config) {
  require(signal.size() >= 16, "emd: signal needs at least 16 samples");
  require(config.sd_threshold > 0.0 && config.max_sift_iterations > 0 &&
              config.max_imfs > 0 && config.boundary_extrema > 0,
          "emd: configuration values must be positive");

  EmdResult out;
  Series remainder(signal.begin(), signal.end());
  for (int k = 0; k < config.max_imfs; ++k) {
    if (!has_enough_extrema(remainder)) break;
    Series h = remainder;
    for (int it = 0; it < config.max_sift_iterations; ++it) {
      if (!has_enough_extrema(h)) break;
      SiftStep step = sift_once(h, config.boundary_extrema);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double diff = h[i] - step.candidate[i];
        num += diff * diff;
        den += h[i] * h[i];
      }
      h = std::move(step.candidate);
      if (den == 0.0 || num / den < config.sd_threshold) break;
    }
    for (std::size_t i = 0; i < remainder.size(); ++i) remainder[i] -= h[i];
    out.imfs.push_back({std::move(h), k + 1, std::nullopt});
  }
  out.residue = std::move(remainder);
  return out;
}

EmdResult average_trials(std::span<const double> signal,
                         const std::vector<EmdResult>& trials) {
  require(!trials.empty(), "average_trials: no trials");
  std::size_t modes = 0;
  for (const auto& t : trials) modes = std::max(modes, t.imfs.size());
  const std::size_t n = signal.size();
  const double count = static_cast<double>(trials.size());

  EmdResult out;
  for (std::size_t k = 0; k < modes; ++k) {
    Series acc(n, 0.0);
    for (const auto& t : trials) {
      if (k >= t.imfs.size()) continue;
      for (std::size_t i = 0; i < n; ++i) acc[i] += t.imfs[k].values[i];
    }
    for (double& v : acc) v /= count;
    out.imfs.push_back({std::move(acc), static_cast<int>(k) + 1, std::nullopt});
  }
  out.residue.assign(signal.begin(), signal.end());
  for (const auto& imf : out.imfs) {
    for (std::size_t i = 0; i < n; ++i) out.residue[i] -= imf.values[i];
  }
  return out;
}

EmdResult eemd(std::span<const double> signal, const EemdConfig& config, Execution exec) {
  require(signal.size() >= 16, "eemd: signal needs at least 16 samples");
  require(config.ensemble_size >= 1, "eemd: ensemble_size must be >= 1");
  require(config.noise_amplitude >= 0.0 && config.noise_amplitude <= 1.0,
          "eemd: noise_amplitude must be in [0, 1]");
  const double sigma = config.noise_amplitude * stats::stddev(signal);
  const auto trials = exec == Execution::parallel
                          ? kernels::omp::ensemble_trials(signal, config, sigma)
                          : kernels::serial::ensemble_trials(signal, config, sigma);
  return average_trials(signal, trials);
}

Band band_for_period(double p, std::size_t n) {
  const double long_limit = static_cast<double>(n) / 1.2;
  if (p > long_limit) return Band::trend;
  if (p <= 2.0) return Band::unclassified;
  if (p <= 5.0) return Band::subweekly;
  if (p <= 10.0) return Band::weekly;
  if (p <= 135.0) return Band::monthly;
  return Band::quarterly;
}

namespace {

std::string descriptor(Band band, double period) {
  switch (band) {
    case Band::subweekly: return "semi-weekly";
    case Band::weekly: return "weekly";
    case Band::monthly: return period > 45.0 ? "bi-monthly" : "monthly";
    case Band::quarterly: return "quarterly";
    case Band::unclassified: return "unclassified";
    case Band::trend: return "trend";
  }
  return "unclassified";
}

}  // namespace

std::vector<Component> label_imfs(std::vector<Imf>& imfs, const Series& residue) {
  std::vector<Component> out;
  const std::size_t n = residue.size();
  for (auto& imf : imfs) {
    Component c;
    c.contribution = imf.values;
    std::optional<double> period;
    try {
      period = stats::mean_period(imf.values);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_period) throw;
    }
    imf.mean_period_days = period;
    const Band band = period ? band_for_period(*period, n) : Band::trend;
    c.band = band;
    if (band != Band::trend) c.period_days = period;
    c.label = "IMF" + std::to_string(imf.index) + ":" +
              descriptor(band, period.value_or(0.0));
    out.push_back(std::move(c));
  }
  Component res;
  res.label = "residue:trend";
  res.band = Band::trend;
  res.contribution = residue;
  out.push_back(std::move(res));
  return out;
}

}  // namespace decomp::emd
