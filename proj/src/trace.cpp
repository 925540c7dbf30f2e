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

#include "decomp/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "decomp/error.hpp"

namespace decomp {

namespace chr = std::chrono;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::validation: return "validation";
    case ErrorKind::structural: return "structural";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::zero_variance: return "zero_variance";
    case ErrorKind::no_period: return "no_period";
    case ErrorKind::too_few_extrema: return "too_few_extrema";
    case ErrorKind::not_extrapolable: return "not_extrapolable";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()));
  return buf;
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && ptr == part.data() + part.size();
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) ||
      !parse(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  Date date{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

Date add_days(Date date, long days) {
  return Date{chr::sys_days{date} + chr::days{days}};
}

Trace::Trace(Date start_date, Series values, std::string units)
    : start_(start_date), values_(std::move(values)), units_(std::move(units)) {
  require(start_.ok(), "trace start date is not a valid calendar date");
  require(values_.size() >= 2, "trace needs at least 2 samples");
}

Date Trace::date_at(std::size_t index) const {
  return add_days(start_, static_cast<long>(index));
}

Trace Trace::with_values(Series values) const {
  return Trace(start_, std::move(values), units_);
}

chr::weekday weekday_of(const Trace& trace, std::size_t index) {
  require(index < trace.size(), "weekday_of: index " + std::to_string(index) +
                                    " out of range for trace of length " +
                                    std::to_string(trace.size()));
  return chr::weekday{chr::sys_days{trace.date_at(index)}};
}

std::string_view weekday_name(chr::weekday day) {
  static constexpr std::array<std::string_view, 7> names = {
      "Monday", "Tuesday", "Wednesday", "Thursday",
      "Friday", "Saturday", "Sunday"};
  return names[iso_index(day)];
}

unsigned iso_index(chr::weekday day) { return day.iso_encoding() - 1; }

std::string_view to_string(Band band) {
  switch (band) {
    case Band::trend: return "trend";
    case Band::quarterly: return "quarterly";
    case Band::monthly: return "monthly";
    case Band::weekly: return "weekly";
    case Band::subweekly: return "subweekly";
    case Band::unclassified: return "unclassified";
  }
  return "unclassified";
}

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::linear: return "linear";
    case ModelFamily::piecewise_linear: return "piecewise_linear";
    case ModelFamily::loess: return "loess";
    case ModelFamily::sinusoid: return "sinusoid";
    case ModelFamily::hwes: return "hwes";
    case ModelFamily::ma: return "ma";
  }
  return "linear";
}

std::optional<Band> parse_band(std::string_view text) {
  for (Band b : {Band::trend, Band::quarterly, Band::monthly, Band::weekly,
                 Band::subweekly, Band::unclassified}) {
    if (to_string(b) == text) return b;
  }
  return std::nullopt;
}

std::optional<ModelFamily> parse_family(std::string_view text) {
  for (ModelFamily f :
       {ModelFamily::linear, ModelFamily::piecewise_linear, ModelFamily::loess,
        ModelFamily::sinusoid, ModelFamily::hwes, ModelFamily::ma}) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

bool is_trend_family(ModelFamily family) {
  return family == ModelFamily::linear ||
         family == ModelFamily::piecewise_linear ||
         family == ModelFamily::loess || family == ModelFamily::ma;
}

bool is_cyclic_family(ModelFamily family) {
  return family == ModelFamily::sinusoid || family == ModelFamily::hwes;
}

double FittedModel::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) {
    fail(ErrorKind::structural, std::string(to_string(family)) +
                                    " model is missing parameter '" + name + "'");
  }
  return it->second;
}

const Series& FittedModel::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) {
    fail(ErrorKind::structural, std::string(to_string(family)) +
                                    " model is missing array '" + name + "'");
  }
  return it->second;
}

void check_component(const Component& component, std::size_t length) {
  if (component.contribution.size() != length) {
    fail(ErrorKind::structural,
         "component '" + component.label + "' has " +
             std::to_string(component.contribution.size()) +
             " samples, source has " + std::to_string(length));
  }
  const bool trend = component.band == Band::trend;
  if (trend == component.period_days.has_value()) {
    fail(ErrorKind::structural, "component '" + component.label +
                                    "': period must be set exactly when band "
                                    "is not trend");
  }
  // Mean-crossing estimates bottom out at exactly 2 samples; only the
  // unclassified band may carry that floor value.
  if (component.period_days) {
    const double p = *component.period_days;
    const bool ok = component.band == Band::unclassified ? p >= 2.0 : p > 2.0;
    if (!ok || !std::isfinite(p)) {
      fail(ErrorKind::structural,
           "component '" + component.label + "': period must exceed 2 days");
    }
  }
}

Series reconstruct(const DecompositionResult& result) {
  const std::size_t n = result.source.size();
  if (result.residual.size() != n) {
    fail(ErrorKind::structural, "residual length " +
                                    std::to_string(result.residual.size()) +
                                    " != source length " + std::to_string(n));
  }
  Series out(n, 0.0);
  for (const auto& c : result.components) {
    if (c.contribution.size() != n) {
      fail(ErrorKind::structural, "component '" + c.label + "' length " +
                                      std::to_string(c.contribution.size()) +
                                      " != source length " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) out[i] += c.contribution[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] += result.residual[i];
  return out;
}

double reconstruction_error(const DecompositionResult& result) {
  const Series rebuilt = reconstruct(result);
  double max_err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    max_err = std::max(max_err, std::abs(rebuilt[i] - result.source[i]));
    scale = std::max(scale, std::abs(result.source[i]));
  }
  return scale > 0.0 ? max_err / scale : max_err;
}

}  // namespace decomp
