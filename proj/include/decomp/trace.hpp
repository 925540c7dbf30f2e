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

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decomp {

using Series = std::vector<double>;
using Date = std::chrono::year_month_day;

std::string format_date(Date date);
// Parses YYYY-MM-DD; returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view text);
Date add_days(Date date, long days);

// Daily-sampled performance series. Dates are implicit: sample i belongs to
// start_date + i days. Values may hold non-finite markers straight out of a
// file; validate() in preprocess is the gate that rejects them.
class Trace {
 public:
  Trace(Date start_date, Series values, std::string units = {});

  Date start_date() const noexcept { return start_; }
  std::span<const double> values() const noexcept { return values_; }
  const Series& series() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& units() const noexcept { return units_; }

  Date date_at(std::size_t index) const;
  Trace with_values(Series values) const;

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  Date start_;
  Series values_;
  std::string units_;
};

std::chrono::weekday weekday_of(const Trace& trace, std::size_t index);
std::string_view weekday_name(std::chrono::weekday day);
// Monday = 0 ... Sunday = 6.
unsigned iso_index(std::chrono::weekday day);

enum class Band { trend, quarterly, monthly, weekly, subweekly, unclassified };

enum class ModelFamily { linear, piecewise_linear, loess, sinusoid, hwes, ma };

std::string_view to_string(Band band);
std::string_view to_string(ModelFamily family);
std::optional<Band> parse_band(std::string_view text);
std::optional<ModelFamily> parse_family(std::string_view text);

bool is_trend_family(ModelFamily family);
bool is_cyclic_family(ModelFamily family);

// Family plus named parameters. Scalars live in `params`; state vectors
// (piecewise segments, Holt-Winters seasonal tail) live in `arrays`.
struct FittedModel {
  ModelFamily family = ModelFamily::linear;
  std::map<std::string, double> params;
  std::map<std::string, Series> arrays;

  double param(const std::string& name) const;
  const Series& array(const std::string& name) const;

  friend bool operator==(const FittedModel&, const FittedModel&) = default;
};

struct Component {
  std::string label;
  Band band = Band::trend;
  FittedModel model;
  Series contribution;
  std::optional<double> period_days;

  friend bool operator==(const Component&, const Component&) = default;
};

struct Diagnostics {
  bool degenerate_residual = false;
  std::optional<int> suggested_period;
  std::optional<std::string> suggested_band;
  std::vector<std::string> notes;
  std::map<std::string, double> seeds;

  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct DecompositionResult {
  Trace source;
  std::vector<Component> components;
  Series residual;
  bool residual_random = false;
  double residual_p_value = 0.0;
  Diagnostics diagnostics;

  friend bool operator==(const DecompositionResult&,
                         const DecompositionResult&) = default;
};

// Sum of contributions plus residual. Throws structural error on any length
// mismatch with the source.
Series reconstruct(const DecompositionResult& result);

// Max |source - reconstruct| relative to max |source|.
double reconstruction_error(const DecompositionResult& result);

void check_component(const Component& component, std::size_t length);

}  // namespace decomp
