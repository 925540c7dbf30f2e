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

#include "decomp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "decomp/error.hpp"

namespace decomp::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_missing(std::string_view cell) {
  static const std::set<std::string_view> markers = {"", "nan", "NaN", "NAN", "NA", "na",
                                                     "null", "NULL"};
  return markers.contains(cell);
}

[[noreturn]] void csv_error(std::size_t line, const std::string& msg) {
  fail(ErrorKind::validation, "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Trace parse_trace_csv(std::string_view text, std::string units) {
  std::optional<Date> start;
  Date expected{};
  Series values;
  bool header_seen = false;
  std::size_t line_no = 0;
  // Byte order mark.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    const auto comma = line.find(',');
    if (comma == std::string_view::npos) csv_error(line_no, "expected 'date,value'");
    const auto date_cell = trim(line.substr(0, comma));
    const auto value_cell = trim(line.substr(comma + 1));
    if (value_cell.find(',') != std::string_view::npos) {
      csv_error(line_no, "expected exactly two columns");
    }
    if (!header_seen) {
      header_seen = true;
      if (date_cell == "date" && value_cell == "value") continue;
      csv_error(line_no, "missing 'date,value' header");
    }
    const auto date = parse_date(date_cell);
    if (!date) csv_error(line_no, "invalid date '" + std::string(date_cell) + "'");
    if (start) {
      if (*date != expected) {
        csv_error(line_no, "date " + format_date(*date) + " breaks the daily sequence (expected " +
                               format_date(expected) + ")");
      }
    } else {
      start = *date;
    }
    expected = add_days(*date, 1);

    double v = std::numeric_limits<double>::quiet_NaN();
    if (!is_missing(value_cell)) {
      const char* first = value_cell.data();
      const char* last = first + value_cell.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) {
        csv_error(line_no, "invalid number '" + std::string(value_cell) + "'");
      }
    }
    values.push_back(v);
  }
  if (!header_seen) fail(ErrorKind::validation, "empty trace file");
  if (values.size() < 2) {
    fail(ErrorKind::validation, "trace has " + std::to_string(values.size()) +
                                    " sample(s); at least 2 are required");
  }
  return Trace(*start, std::move(values), std::move(units));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << contents;
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

Trace read_trace_csv(const std::filesystem::path& path, std::string units) {
  try {
    return parse_trace_csv(read_file(path), std::move(units));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_trace_csv(const Trace& trace) {
  std::string out = "date,value\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += format_date(trace.date_at(i));
    out += ',';
    out += format_double(trace[i]);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  write_file(path, format_trace_csv(trace));
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::schema, std::string(what) + ": invalid JSON: " + e.what());
  }
}

Json read_json(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Strict field access for documents we read back.

namespace {

[[noreturn]] void schema(const std::string& msg) { fail(ErrorKind::schema, msg); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema(where + ": missing field '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) schema(where + ": expected a number");
  return j.get<double>();
}

Series series(const Json& j, const std::string& where) {
  if (!j.is_array()) schema(where + ": expected an array of numbers");
  Series out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number(v, where));
  return out;
}

std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) schema(where + ": expected a string");
  return j.get<std::string>();
}

Json numbers(std::span<const double> xs) {
  Json a = Json::array();
  for (double v : xs) {
    if (std::isfinite(v)) {
      a.push_back(v);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

Date date_field(const Json& j, const std::string& where) {
  const auto s = text(j, where);
  const auto d = parse_date(s);
  if (!d) schema(where + ": invalid date '" + s + "'");
  return *d;
}

}  // namespace

Json to_json(const Trace& t) {
  return {{"start_date", format_date(t.start_date())},
          {"units", t.units()},
          {"values", numbers(t.values())}};
}

Trace trace_from_json(const Json& j) {
  const std::string where = "source";
  const Date start = date_field(field(j, "start_date", where), where + ".start_date");
  std::string units;
  if (j.contains("units")) units = text(j["units"], where + ".units");
  auto values = series(field(j, "values", where), where + ".values");
  if (values.size() < 2) schema(where + ": trace needs at least 2 values");
  return Trace(start, std::move(values), std::move(units));
}

Json to_json(const FittedModel& m) {
  Json params = Json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  Json j = {{"family", std::string(to_string(m.family))}, {"params", params}};
  if (!m.arrays.empty()) {
    Json arrays = Json::object();
    for (const auto& [k, v] : m.arrays) arrays[k] = numbers(v);
    j["arrays"] = arrays;
  }
  return j;
}

FittedModel model_from_json(const Json& j) {
  const std::string where = "model";
  FittedModel m;
  const auto fam = text(field(j, "family", where), where + ".family");
  const auto parsed = parse_family(fam);
  if (!parsed) schema(where + ": unknown family '" + fam + "'");
  m.family = *parsed;
  const auto& params = field(j, "params", where);
  if (!params.is_object()) schema(where + ".params: expected an object");
  for (const auto& [k, v] : params.items()) m.params[k] = number(v, where + ".params." + k);
  if (j.contains("arrays")) {
    const auto& arrays = j["arrays"];
    if (!arrays.is_object()) schema(where + ".arrays: expected an object");
    for (const auto& [k, v] : arrays.items()) m.arrays[k] = series(v, where + ".arrays." + k);
  }
  return m;
}

Json to_json(const Component& c) {
  Json j = {{"label", c.label},
            {"band", std::string(to_string(c.band))},
            {"model", to_json(c.model)},
            {"period_days", nullptr},
            {"contribution", numbers(c.contribution)}};
  if (c.period_days) j["period_days"] = *c.period_days;
  return j;
}

Component component_from_json(const Json& j) {
  const std::string where = "component";
  Component c;
  c.label = text(field(j, "label", where), where + ".label");
  const auto band = text(field(j, "band", where), where + ".band");
  const auto b = parse_band(band);
  if (!b) schema(where + ": unknown band '" + band + "'");
  c.band = *b;
  c.model = model_from_json(field(j, "model", where));
  const auto& p = field(j, "period_days", where);
  if (!p.is_null()) c.period_days = number(p, where + ".period_days");
  c.contribution = series(field(j, "contribution", where), where + ".contribution");
  return c;
}

Json to_json(const DecompositionResult& r) {
  Json comps = Json::array();
  for (const auto& c : r.components) comps.push_back(to_json(c));
  Json seeds = Json::object();
  for (const auto& [k, v] : r.diagnostics.seeds) seeds[k] = v;
  Json diag = {{"degenerate_residual", r.diagnostics.degenerate_residual},
               {"suggested_period", nullptr},
               {"suggested_band", nullptr},
               {"notes", r.diagnostics.notes}};
  if (r.diagnostics.suggested_period) diag["suggested_period"] = *r.diagnostics.suggested_period;
  if (r.diagnostics.suggested_band) diag["suggested_band"] = *r.diagnostics.suggested_band;
  return {{"tool_version", std::string(kToolVersion)},
          {"source", to_json(r.source)},
          {"components", comps},
          {"residual", numbers(r.residual)},
          {"residual_random", r.residual_random},
          {"residual_p_value", r.residual_p_value},
          {"seeds", seeds},
          {"diagnostics", diag}};
}

DecompositionResult result_from_json(const Json& j) {
  const std::string where = "result";
  Trace source = trace_from_json(field(j, "source", where));
  std::vector<Component> comps;
  const auto& cj = field(j, "components", where);
  if (!cj.is_array()) schema(where + ".components: expected an array");
  for (const auto& c : cj) comps.push_back(component_from_json(c));
  DecompositionResult r{std::move(source), std::move(comps),
                        series(field(j, "residual", where), where + ".residual"), false, 0.0, {}};
  const auto& rr = field(j, "residual_random", where);
  if (!rr.is_boolean()) schema(where + ".residual_random: expected a boolean");
  r.residual_random = rr.get<bool>();
  r.residual_p_value = number(field(j, "residual_p_value", where), where + ".residual_p_value");
  if (j.contains("seeds")) {
    for (const auto& [k, v] : j["seeds"].items()) r.diagnostics.seeds[k] = number(v, "seeds." + k);
  }
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    if (d.contains("degenerate_residual")) r.diagnostics.degenerate_residual = d["degenerate_residual"].get<bool>();
    if (d.contains("suggested_period") && !d["suggested_period"].is_null()) {
      r.diagnostics.suggested_period = d["suggested_period"].get<int>();
    }
    if (d.contains("suggested_band") && !d["suggested_band"].is_null()) {
      r.diagnostics.suggested_band = d["suggested_band"].get<std::string>();
    }
    if (d.contains("notes")) r.diagnostics.notes = d["notes"].get<std::vector<std::string>>();
  }
  // Length and shape checks.
  for (const auto& c : r.components) {
    if (c.contribution.size() != r.source.size()) {
      fail(ErrorKind::structural, "component '" + c.label + "' has " +
                                      std::to_string(c.contribution.size()) +
                                      " values; source has " + std::to_string(r.source.size()));
    }
  }
  if (r.residual.size() != r.source.size()) {
    fail(ErrorKind::structural, "residual length does not match the source");
  }
  return r;
}

std::string components_csv(const DecompositionResult& r) {
  std::string out = "date,source";
  for (const auto& c : r.components) out += "," + c.label;
  out += ",residual\n";
  for (std::size_t i = 0; i < r.source.size(); ++i) {
    out += format_date(r.source.date_at(i));
    out += ',' + format_double(r.source[i]);
    for (const auto& c : r.components) out += ',' + format_double(c.contribution[i]);
    out += ',' + format_double(r.residual[i]);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recipes

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) schema(where + ": unknown field '" + k + "'");
  }
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !(j.is_number() && j.get<double>() == std::floor(j.get<double>()))) {
    schema(where + ": expected an integer");
  }
  return static_cast<int>(j.get<double>());
}

}  // namespace

RecipeStep step_from_json(const Json& j, std::size_t index) {
  const std::string where = "steps[" + std::to_string(index - 1) + "]";
  if (!j.is_object()) schema(where + ": expected an object");
  check_keys(j, {"band", "family", "params"}, where);
  RecipeStep s;
  const auto band = text(field(j, "band", where), where + ".band");
  const auto b = parse_band(band);
  if (!b) schema(where + ": unknown band '" + band + "'");
  s.band = *b;
  const auto fam = text(field(j, "family", where), where + ".family");
  const auto f = parse_family(fam);
  if (!f) schema(where + ": unknown family '" + fam + "'");
  s.family = *f;

  if (j.contains("params")) {
    const auto& p = j["params"];
    if (p.is_string()) {
      if (p.get<std::string>() != "auto") schema(where + ".params: expected an object or \"auto\"");
    } else if (p.is_object()) {
      const std::string pw = where + ".params";
      check_keys(p,
                 {"period", "period_min", "period_max", "span", "window", "max_segments",
                  "min_segment_len", "breakpoints", "alpha", "beta", "gamma"},
                 pw);
      auto& sp = s.params;
      auto real = [&](const char* k) -> std::optional<double> {
        if (!p.contains(k)) return std::nullopt;
        const auto& v = p[k];
        if (!v.is_number()) schema(pw + "." + k + ": expected a number");
        return v.get<double>();
      };
      auto whole = [&](const char* k) -> std::optional<int> {
        if (!p.contains(k)) return std::nullopt;
        return integer(p[k], pw + "." + k);
      };
      sp.period = real("period");
      sp.period_min = real("period_min");
      sp.period_max = real("period_max");
      sp.span = real("span");
      sp.window = whole("window");
      sp.max_segments = whole("max_segments");
      sp.min_segment_len = whole("min_segment_len");
      sp.alpha = real("alpha");
      sp.beta = real("beta");
      sp.gamma = real("gamma");
      if (p.contains("breakpoints")) {
        const auto& bp = p["breakpoints"];
        if (!bp.is_array()) schema(pw + ".breakpoints: expected an array");
        for (const auto& v : bp) {
          const int b2 = integer(v, pw + ".breakpoints");
          if (b2 < 1) schema(pw + ".breakpoints: indices must be positive");
          sp.breakpoints.push_back(static_cast<std::size_t>(b2));
        }
      }
    } else {
      schema(where + ".params: expected an object or \"auto\"");
    }
  }
  return s;
}

Recipe recipe_from_json(const Json& j) {
  if (!j.is_object()) schema("recipe: expected an object");
  check_keys(j, {"name", "runs_alpha", "refine_passes", "steps"}, "recipe");
  Recipe r;
  if (j.contains("name")) r.name = text(j["name"], "recipe.name");
  if (j.contains("runs_alpha")) r.runs_alpha = number(j["runs_alpha"], "recipe.runs_alpha");
  if (j.contains("refine_passes")) r.refine_passes = integer(j["refine_passes"], "recipe.refine_passes");
  const auto& steps = field(j, "steps", "recipe");
  if (!steps.is_array()) schema("recipe.steps: expected an array");
  for (std::size_t i = 0; i < steps.size(); ++i) r.steps.push_back(step_from_json(steps[i], i + 1));
  validate_recipe(r);
  return r;
}

Json to_json(const RecipeStep& s) {
  const auto& p = s.params;
  Json j = {{"band", std::string(to_string(s.band))}, {"family", std::string(to_string(s.family))}};
  if (p.is_auto()) {
    j["params"] = "auto";
    return j;
  }
  Json o = Json::object();
  auto put = [&](const char* k, const auto& v) {
    if (v) o[k] = *v;
  };
  put("period", p.period);
  put("period_min", p.period_min);
  put("period_max", p.period_max);
  put("span", p.span);
  put("window", p.window);
  put("max_segments", p.max_segments);
  put("min_segment_len", p.min_segment_len);
  if (!p.breakpoints.empty()) o["breakpoints"] = p.breakpoints;
  put("alpha", p.alpha);
  put("beta", p.beta);
  put("gamma", p.gamma);
  j["params"] = o;
  return j;
}

Json to_json(const Recipe& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return {{"name", r.name},
          {"runs_alpha", r.runs_alpha},
          {"refine_passes", r.refine_passes},
          {"steps", steps}};
}

Recipe load_recipe(const std::string& source, std::istream& stdin_stream) {
  if (source == "-") {
    std::ostringstream ss;
    ss << stdin_stream.rdbuf();
    return recipe_from_json(parse_json(ss.str(), "recipe (stdin)"));
  }
  if (source == "sab-default" && !std::filesystem::exists(source)) return sab_default_recipe();
  return recipe_from_json(read_json(source));
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const stats::RunsVerdict& v) {
  return {{"n_runs", v.n_runs},     {"n_above", v.n_above}, {"n_below", v.n_below},
          {"z", v.z_statistic},     {"p_value", v.p_value}, {"random", v.random}};
}

Json to_json(const ResidualAssessment& a) {
  Json j = {{"random", a.random},
            {"p_value", a.p_value},
            {"degenerate", a.degenerate},
            {"runs", nullptr},
            {"suggested_period", nullptr},
            {"suggested_band", nullptr},
            {"note", a.note}};
  if (a.runs) j["runs"] = to_json(*a.runs);
  if (a.suggested_period) j["suggested_period"] = *a.suggested_period;
  if (a.suggested_band) j["suggested_band"] = std::string(to_string(*a.suggested_band));
  return j;
}

Json to_json(const stats::AcfResult& acf, std::size_t n) {
  return {{"lags", acf.lags},
          {"acf", numbers(acf.correlations)},
          {"confidence_band", 1.96 / std::sqrt(static_cast<double>(n))}};
}

Json to_json(const ForecastResult& f) {
  Json dates = Json::array();
  for (std::size_t h = 0; h < f.horizon; ++h) dates.push_back(format_date(add_days(f.start_date, static_cast<long>(h))));
  Json per = Json::array();
  for (const auto& [label, s] : f.per_component) per.push_back({{"label", label}, {"values", numbers(s)}});
  Json j = {{"horizon", f.horizon},
            {"start_date", format_date(f.start_date)},
            {"dates", dates},
            {"predicted", numbers(f.predicted)},
            {"per_component", per},
            {"notes", f.notes}};
  if (f.metrics) {
    j["metrics"] = {{"mape_percent", f.metrics->mape_percent},
                    {"erp_normalized", f.metrics->erp_normalized}};
  }
  return j;
}

std::string forecast_csv(const ForecastResult& f, std::optional<std::span<const double>> actual) {
  std::string out = "date,predicted";
  for (const auto& [label, s] : f.per_component) out += "," + label;
  if (actual) out += ",actual";
  out += '\n';
  for (std::size_t h = 0; h < f.horizon; ++h) {
    out += format_date(add_days(f.start_date, static_cast<long>(h)));
    out += ',' + format_double(f.predicted[h]);
    for (const auto& [label, s] : f.per_component) out += ',' + format_double(s[h]);
    if (actual) out += ',' + format_double((*actual)[h]);
    out += '\n';
  }
  return out;
}

Json to_json(const WeekdayPlan& plan, double fraction) {
  Json dev = Json::array();
  for (unsigned d = 0; d < 7; ++d) {
    dev.push_back({{"weekday", std::string(weekday_name(std::chrono::weekday{(d + 1) % 7}))},
                   {"deviation", plan.per_weekday_deviation[d]}});
  }
  Json slow = Json::array();
  for (auto d : plan.slow_days) slow.push_back(std::string(weekday_name(d)));
  return {{"fraction", fraction},
          {"threshold", plan.threshold_used},
          {"slow_days", slow},
          {"deviation", dev}};
}

namespace {

Json to_json(const MethodReport& m) {
  Json comps = Json::array();
  for (const auto& c : m.components) {
    Json cj = {{"label", c.label}, {"band", std::string(to_string(c.band))},
               {"period_days", nullptr}, {"energy", c.energy}};
    if (c.period_days) cj["period_days"] = *c.period_days;
    comps.push_back(cj);
  }
  Json j = {{"method", m.method},
            {"components", comps},
            {"forecast", numbers(m.forecast)},
            {"residual_random", m.residual_random},
            {"metrics", nullptr}};
  if (m.metrics) {
    j["metrics"] = {{"mape_percent", m.metrics->mape_percent},
                    {"erp_normalized", m.metrics->erp_normalized}};
  }
  return j;
}

}  // namespace

Json to_json(const ComparisonReport& r) {
  Json deltas = Json::array();
  for (const auto& d : r.deltas) {
    deltas.push_back({{"band", std::string(to_string(d.band))},
                      {"hybrid_period", d.hybrid_period},
                      {"auto_period", d.auto_period},
                      {"relative_delta", d.relative_delta}});
  }
  return {{"hybrid", to_json(r.hybrid)},
          {"automatic", to_json(r.automatic)},
          {"stl", to_json(r.stl)},
          {"band_deltas", deltas}};
}

}  // namespace decomp::io
