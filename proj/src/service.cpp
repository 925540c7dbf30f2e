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

#include "decomp/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "decomp/error.hpp"
#include "decomp/io.hpp"
#include "decomp/preprocess.hpp"

namespace decomp::service {

Session::Session(std::string id_, Trace uploaded_, bool hampel_, double runs_alpha_)
    : id(std::move(id_)),
      uploaded(uploaded_),
      trace(hampel_ ? hampel_filter(uploaded_).trace : uploaded_),
      hampel(hampel_),
      runs_alpha(runs_alpha_),
      residual(trace.series()) {}

const Component& Session::apply(const RecipeStep& step, Execution exec) {
  if (steps.empty() && step.band != Band::trend) {
    fail(ErrorKind::schema, "the first step must model the trend band");
  }
  Component c = fit_step(step, residual, steps.size() + 1, exec);
  Series next(residual.size());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = residual[i] - c.contribution[i];
  residual_history.push_back(std::move(residual));
  residual = std::move(next);
  steps.push_back(step);
  components.push_back(std::move(c));
  ++revision;
  return components.back();
}

std::string Session::undo() {
  if (steps.empty()) fail(ErrorKind::precondition, "session has no steps to undo");
  std::string label = components.back().label;
  residual = std::move(residual_history.back());
  residual_history.pop_back();
  steps.pop_back();
  components.pop_back();
  ++revision;
  return label;
}

Recipe Session::recipe() const {
  Recipe r;
  r.name = "session-" + id;
  r.runs_alpha = runs_alpha;
  r.steps = steps;
  return r;
}

DecompositionResult Session::result() const {
  DecompositionResult r{trace, components, residual, false, 0.0, {}};
  const auto a = assess_residual(residual, trace.values(), runs_alpha);
  r.residual_random = a.random;
  r.residual_p_value = a.p_value;
  r.diagnostics.degenerate_residual = a.degenerate;
  r.diagnostics.suggested_period = a.suggested_period;
  if (a.suggested_band) r.diagnostics.suggested_band = std::string(to_string(*a.suggested_band));
  if (!a.note.empty()) r.diagnostics.notes.push_back(a.note);
  return r;
}

Json session_document(const Session& s) {
  Json steps = Json::array();
  for (const auto& st : s.steps) steps.push_back(io::to_json(st));
  return {{"id", s.id},
          {"tool_version", std::string(io::kToolVersion)},
          {"uploaded", io::to_json(s.uploaded)},
          {"hampel", s.hampel},
          {"runs_alpha", s.runs_alpha},
          {"revision", s.revision},
          {"steps", steps}};
}

std::unique_ptr<Session> session_from_document(const Json& doc) {
  auto s = std::make_unique<Session>(doc.at("id").get<std::string>(),
                                     io::trace_from_json(doc.at("uploaded")),
                                     doc.at("hampel").get<bool>(),
                                     doc.at("runs_alpha").get<double>());
  const auto& steps = doc.at("steps");
  for (std::size_t i = 0; i < steps.size(); ++i) s->apply(io::step_from_json(steps[i], i + 1));
  s->revision = doc.at("revision").get<long>();
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path state_dir) : dir_(std::move(state_dir)) {
  if (!dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::io, "cannot create state directory " + dir_.string() + ": " + ec.message());
  }
}

std::shared_ptr<Session> SessionStore::create(Trace uploaded, bool hampel, double runs_alpha) {
  auto s = std::make_shared<Session>(new_id(), std::move(uploaded), hampel, runs_alpha);
  persist(*s);
  std::lock_guard lock(mutex_);
  sessions_[s->id] = s;
  return s;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionStore::persist(const Session& s) const {
  if (dir_.empty()) return;
  const auto final_path = dir_ / (s.id + ".json");
  const auto tmp = dir_ / (s.id + ".json.tmp");
  io::write_file(tmp, session_document(s).dump(1));
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) fail(ErrorKind::io, "cannot save session " + s.id + ": " + ec.message());
}

std::size_t SessionStore::reload() {
  if (dir_.empty()) return 0;
  std::size_t loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    std::shared_ptr<Session> s = session_from_document(io::read_json(entry.path()));
    std::lock_guard lock(mutex_);
    sessions_[s->id] = std::move(s);
    ++loaded;
  }
  return loaded;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::schema:
    case ErrorKind::precondition:
      return 400;
    case ErrorKind::validation:
    case ErrorKind::insufficient_data:
    case ErrorKind::zero_variance:
    case ErrorKind::no_period:
    case ErrorKind::too_few_extrema:
    case ErrorKind::not_extrapolable:
    case ErrorKind::structural:
      return 422;
    case ErrorKind::io:
      return 500;
  }
  return 500;
}

// ---------------------------------------------------------------------------
// Routes

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
  Json detail;
};

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  send(res, e.status, {{"code", e.code}, {"message", e.message}, {"detail", e.detail}});
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const HttpError& e) {
      send_error(res, e);
    } catch (const Error& e) {
      send_error(res, {http_status(e.kind()), std::string(to_string(e.kind())), e.what(), nullptr});
    } catch (const Json::exception& e) {
      send_error(res, {400, "schema", e.what(), nullptr});
    } catch (const std::exception& e) {
      send_error(res, {500, "internal", e.what(), nullptr});
    }
  };
}

Json summary(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::abs(v));
  return {{"n", x.size()},          {"mean", stats::mean(x)}, {"std", stats::stddev(x)},
          {"min", *lo},             {"max", *hi},             {"max_abs", max_abs}};
}

Json body_json(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return io::parse_json(req.body, "request body");
}

// A session upload is either raw CSV or {"csv": "...", "units", "hampel"}.
struct Upload {
  Trace trace;
  Json options;
};

Upload read_upload(const httplib::Request& req) {
  const auto type = req.get_header_value("Content-Type");
  if (type.find("json") != std::string::npos) {
    Json j = body_json(req);
    if (!j.is_object() || !j.contains("csv") || !j["csv"].is_string()) {
      throw HttpError{400, "schema", "expected {\"csv\": \"...\"}", nullptr};
    }
    std::string units = j.value("units", std::string{});
    return {io::parse_trace_csv(j["csv"].get<std::string>(), units), j};
  }
  return {io::parse_trace_csv(req.body), Json::object()};
}

std::shared_ptr<Session> lookup(SessionStore& store, const httplib::Request& req) {
  const std::string id = req.path_params.at("id");
  auto s = valid_id(id) ? store.find(id) : nullptr;
  if (!s) throw HttpError{404, "not_found", "no session '" + id + "'", nullptr};
  return s;
}

Json validation_json(const ValidationVerdict& v) {
  Json issues = Json::array();
  for (const auto& i : v.issues) {
    Json ij = {{"message", i.message}, {"index", nullptr}};
    if (i.index) ij["index"] = *i.index;
    issues.push_back(ij);
  }
  return {{"valid", v.valid}, {"issues", issues}};
}

Json acf_json(std::span<const double> x, int max_lag) {
  const int lag = std::min<int>(max_lag, static_cast<int>(x.size()) - 1);
  try {
    return io::to_json(stats::acf(x, lag), x.size());
  } catch (const Error& e) {
    return {{"error", e.what()}};
  }
}

Json component_summary(const Component& c) {
  Json j = {{"label", c.label},
            {"band", std::string(to_string(c.band))},
            {"model", io::to_json(c.model)},
            {"period_days", nullptr}};
  if (c.period_days) j["period_days"] = *c.period_days;
  return j;
}

Json step_state(const Session& s) {
  return {{"revision", s.revision},
          {"residual_summary", summary(s.residual)},
          {"runs_test", io::to_json(assess_residual(s.residual, s.trace.values(), s.runs_alpha))},
          {"acf", acf_json(s.residual, 30)}};
}

}  // namespace

void install_routes(httplib::Server& server, SessionStore& store) {
  // Unrouted paths and methods still answer with the JSON error shape.
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "not_found" : "http_error";
    send(res, res.status, {{"code", code}, {"message", req.method + " " + req.path}, {"detail", nullptr}});
  });

  server.Get("/v1/health", guarded([&store](const httplib::Request&, httplib::Response& res) {
               send(res, 200, {{"status", "ok"},
                               {"version", std::string(io::kToolVersion)},
                               {"sessions", store.size()}});
             }));

  server.Post("/v1/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                auto up = read_upload(req);
                const auto verdict = validate(up.trace);
                if (!verdict.valid) {
                  throw HttpError{422, "validation", verdict.summary(), validation_json(verdict)};
                }
                const bool hampel = up.options.value("hampel", true);
                const double alpha = up.options.value("runs_alpha", stats::kDefaultRunsAlpha);
                if (!(alpha > 0.0 && alpha <= 0.5)) {
                  throw HttpError{400, "schema", "runs_alpha must be in (0, 0.5]", nullptr};
                }
                const std::size_t replaced = hampel ? hampel_filter(up.trace).report.size() : 0;
                auto s = store.create(std::move(up.trace), hampel, alpha);
                std::shared_lock lock(s->mutex);
                Json preview = summary(s->trace.values());
                preview["start_date"] = format_date(s->trace.start_date());
                preview["end_date"] = format_date(s->trace.date_at(s->trace.size() - 1));
                send(res, 201, {{"id", s->id},
                                {"revision", s->revision},
                                {"validation", validation_json(verdict)},
                                {"outliers_replaced", replaced},
                                {"preview", preview}});
              }));

  server.Get("/v1/sessions/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto s = lookup(store, req);
               std::shared_lock lock(s->mutex);
               Json steps = Json::array();
               for (std::size_t k = 0; k < s->steps.size(); ++k) {
                 steps.push_back({{"step", io::to_json(s->steps[k])},
                                  {"component", component_summary(s->components[k])}});
               }
               Json body = step_state(*s);
               body["id"] = s->id;
               body["source"] = io::to_json(s->trace);
               body["steps"] = steps;
               send(res, 200, body);
             }));

  server.Post("/v1/sessions/:id/steps",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                auto s = lookup(store, req);
                const RecipeStep step = io::step_from_json(body_json(req), 1);
                std::unique_lock lock(s->mutex);
                const Component& c = s->apply(step);
                Json body = step_state(*s);
                body["component"] = io::to_json(c);
                store.persist(*s);
                send(res, 200, body);
              }));

  server.Delete("/v1/sessions/:id/steps/last",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                  auto s = lookup(store, req);
                  std::unique_lock lock(s->mutex);
                  if (s->steps.empty()) throw HttpError{409, "conflict", "no steps to undo", nullptr};
                  Json body = {{"removed", s->undo()}};
                  body.update(step_state(*s));
                  store.persist(*s);
                  send(res, 200, body);
                }));

  server.Get("/v1/sessions/:id/residual",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto s = lookup(store, req);
               std::shared_lock lock(s->mutex);
               Json values = Json::array();
               for (double v : s->residual) values.push_back(v);
               send(res, 200, {{"revision", s->revision},
                               {"start_date", format_date(s->trace.start_date())},
                               {"residual", values},
                               {"summary", summary(s->residual)}});
             }));

  server.Get("/v1/sessions/:id/acf", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto s = lookup(store, req);
               int max_lag = 30;
               if (req.has_param("max_lag")) {
                 try {
                   max_lag = std::stoi(req.get_param_value("max_lag"));
                 } catch (const std::exception&) {
                   throw HttpError{400, "schema", "max_lag must be an integer", nullptr};
                 }
               }
               if (max_lag < 1) throw HttpError{400, "schema", "max_lag must be >= 1", nullptr};
               std::shared_lock lock(s->mutex);
               Json body = io::to_json(stats::acf(s->residual, std::min<int>(max_lag, static_cast<int>(s->residual.size()) - 1)),
                                       s->residual.size());
               body["revision"] = s->revision;
               send(res, 200, body);
             }));

  server.Get("/v1/sessions/:id/runs-test",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto s = lookup(store, req);
               std::shared_lock lock(s->mutex);
               double alpha = s->runs_alpha;
               if (req.has_param("alpha")) {
                 try {
                   alpha = std::stod(req.get_param_value("alpha"));
                 } catch (const std::exception&) {
                   throw HttpError{400, "schema", "alpha must be a number", nullptr};
                 }
                 if (!(alpha > 0.0 && alpha <= 0.5)) {
                   throw HttpError{400, "schema", "alpha must be in (0, 0.5]", nullptr};
                 }
               }
               Json body = io::to_json(assess_residual(s->residual, s->trace.values(), alpha));
               body["revision"] = s->revision;
               send(res, 200, body);
             }));

  server.Post("/v1/sessions/:id/forecast",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                auto s = lookup(store, req);
                const Json j = body_json(req);
                const long horizon = j.value("horizon", 28L);
                if (horizon < 1) throw HttpError{400, "schema", "horizon must be >= 1", nullptr};
                std::optional<Series> actual;
                if (j.contains("actual") && !j["actual"].is_null()) actual = j["actual"].get<Series>();
                std::shared_lock lock(s->mutex);
                if (s->components.empty()) {
                  throw HttpError{409, "conflict", "fit at least one step before forecasting", nullptr};
                }
                const auto result = s->result();
                auto f = actual ? forecast(result, static_cast<std::size_t>(horizon),
                                           std::span<const double>(*actual))
                                : forecast(result, static_cast<std::size_t>(horizon));
                Json body = io::to_json(f);
                body["revision"] = s->revision;
                send(res, 200, body);
              }));

  server.Get("/v1/sessions/:id/export", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               auto s = lookup(store, req);
               std::shared_lock lock(s->mutex);
               send(res, 200, {{"revision", s->revision},
                               {"recipe", io::to_json(s->recipe())},
                               {"result", io::to_json(s->result())}});
             }));

  server.Post("/v1/auto", guarded([](const httplib::Request& req, httplib::Response& res) {
                auto up = read_upload(req);
                emd::EemdConfig cfg;
                cfg.ensemble_size = up.options.value("ensemble", cfg.ensemble_size);
                cfg.noise_amplitude = up.options.value("noise", cfg.noise_amplitude);
                cfg.master_seed = up.options.value("seed", cfg.master_seed);
                const bool hampel = up.options.value("hampel", true);
                send(res, 200, io::to_json(run_auto(up.trace, cfg, {hampel, Execution::parallel})));
              }));
}

}  // namespace decomp::service
