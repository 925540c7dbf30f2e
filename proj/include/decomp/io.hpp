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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "decomp/pipeline.hpp"
#include "decomp/trace.hpp"

namespace decomp::io {

inline constexpr std::string_view kToolVersion = "0.1.0";

using Json = nlohmann::json;

// Trace CSV: header `date,value`, ISO dates on consecutive days, `#`
// comment lines. Empty / nan / NA cells load as NaN and are left for
// validate() to reject. Errors carry the 1-based line number.
Trace parse_trace_csv(std::string_view text, std::string units = {});
Trace read_trace_csv(const std::filesystem::path& path, std::string units = {});
std::string format_trace_csv(const Trace& trace);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);

// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double v);

Json to_json(const Trace& trace);
Trace trace_from_json(const Json& j);

Json to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);

Json to_json(const Component& component);
Component component_from_json(const Json& j);

Json to_json(const DecompositionResult& result);
DecompositionResult result_from_json(const Json& j);

// One row per day: date, source, each contribution, residual.
std::string components_csv(const DecompositionResult& result);

// Strict recipe schema; unknown keys or wrong types raise Error{schema}.
Recipe recipe_from_json(const Json& j);
Json to_json(const Recipe& recipe);
Json to_json(const RecipeStep& step);
RecipeStep step_from_json(const Json& j, std::size_t index = 1);
// Accepts a file path, "-" for standard input, or a builtin recipe name.
Recipe load_recipe(const std::string& source, std::istream& stdin_stream);

Json to_json(const ResidualAssessment& assessment);
Json to_json(const stats::RunsVerdict& verdict);
Json to_json(const stats::AcfResult& acf, std::size_t n);

Json to_json(const ForecastResult& forecast);
std::string forecast_csv(const ForecastResult& forecast,
                         std::optional<std::span<const double>> actual = std::nullopt);

Json to_json(const WeekdayPlan& plan, double fraction);
Json to_json(const ComparisonReport& report);

Json parse_json(std::string_view text, std::string_view what);
Json read_json(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace decomp::io
