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

#include <httplib.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "decomp/error.hpp"
#include "decomp/io.hpp"
#include "decomp/pipeline.hpp"
#include "decomp/preprocess.hpp"
#include "decomp/service.hpp"

namespace fs = std::filesystem;
using namespace decomp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDecomposition = 3;
constexpr int kExitPortBusy = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::schema:
    case ErrorKind::precondition:
    case ErrorKind::io:
      return kExitUsage;
    default:
      return kExitDecomposition;
  }
}

void write_result(const fs::path& out, const DecompositionResult& r) {
  fs::create_directories(out);
  io::write_file(out / "components.json", io::to_json(r).dump(1) + "\n");
  io::write_file(out / "components.csv", io::components_csv(r));
  std::cout << "wrote " << (out / "components.json").string() << " and "
            << (out / "components.csv").string() << "\n";
}

void print_components(const DecompositionResult& r) {
  for (const auto& c : r.components) {
    std::cout << "  " << c.label;
    if (c.period_days) std::cout << "  period=" << c.period_days.value();
    std::cout << "\n";
  }
  std::cout << "  residual_random=" << (r.residual_random ? "true" : "false")
            << " p=" << r.residual_p_value << "\n";
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive decomposition of daily performance traces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kToolVersion));

  // auto
  auto* cmd_auto = app.add_subcommand("auto", "EEMD decomposition");
  std::string auto_input;
  std::string auto_out = "out";
  emd::EemdConfig eemd_cfg;
  bool auto_no_hampel = false;
  bool serial = false;
  cmd_auto->add_option("trace", auto_input, "trace CSV (date,value)")->required();
  cmd_auto->add_option("--out", auto_out, "output directory")->capture_default_str();
  cmd_auto->add_option("--ensemble", eemd_cfg.ensemble_size, "ensemble size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_auto->add_option("--noise", eemd_cfg.noise_amplitude, "noise amplitude (fraction of std)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_auto->add_option("--seed", eemd_cfg.master_seed, "master seed")->capture_default_str();
  cmd_auto->add_flag("--no-hampel", auto_no_hampel, "skip the Hampel filter");
  cmd_auto->add_flag("--serial", serial, "use the serial kernels");

  // hybrid
  auto* cmd_hybrid = app.add_subcommand("hybrid", "recipe-driven decomposition");
  std::string hybrid_input;
  std::string recipe_source = "sab-default";
  std::string hybrid_out = "out";
  bool hybrid_no_hampel = false;
  cmd_hybrid->add_option("trace", hybrid_input, "trace CSV (date,value)")->required();
  cmd_hybrid->add_option("--recipe", recipe_source, "recipe JSON path, '-' for stdin, or 'sab-default'")
      ->capture_default_str();
  cmd_hybrid->add_option("--out", hybrid_out, "output directory")->capture_default_str();
  cmd_hybrid->add_flag("--no-hampel", hybrid_no_hampel, "skip the Hampel filter");
  cmd_hybrid->add_flag("--serial", serial, "use the serial kernels");

  // forecast
  auto* cmd_forecast = app.add_subcommand("forecast", "extrapolate a decomposition");
  std::string forecast_input;
  long horizon = 28;
  std::string actual_path;
  std::string forecast_out;
  cmd_forecast->add_option("result", forecast_input, "components.json")->required();
  cmd_forecast->add_option("--horizon", horizon, "days to forecast")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_forecast->add_option("--actual", actual_path, "held-out trace CSV for metrics");
  cmd_forecast->add_option("--out", forecast_out, "output directory (default: next to the result)");

  // plan
  auto* cmd_plan = app.add_subcommand("plan", "slow-weekday plan from weekly components");
  std::string plan_input;
  double fraction = kDefaultSlowFraction;
  std::string plan_out;
  cmd_plan->add_option("result", plan_input, "components.json")->required();
  cmd_plan->add_option("--fraction", fraction, "share of the peak weekday deviation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_plan->add_option("--out", plan_out, "write the plan JSON here instead of stdout");

  // compare
  auto* cmd_compare = app.add_subcommand("compare", "hybrid vs automatic vs STL");
  std::string compare_input;
  std::string compare_out;
  long compare_horizon = 28;
  std::string compare_actual;
  cmd_compare->add_option("trace", compare_input, "trace CSV (date,value)")->required();
  cmd_compare->add_option("--recipe", recipe_source, "recipe for the hybrid method")->capture_default_str();
  cmd_compare->add_option("--horizon", compare_horizon, "forecast horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_compare->add_option("--actual", compare_actual, "held-out trace CSV");
  cmd_compare->add_option("--ensemble", eemd_cfg.ensemble_size, "ensemble size")->check(CLI::PositiveNumber);
  cmd_compare->add_option("--noise", eemd_cfg.noise_amplitude, "noise amplitude")->check(CLI::Range(0.0, 1.0));
  cmd_compare->add_option("--seed", eemd_cfg.master_seed, "master seed");
  cmd_compare->add_option("--out", compare_out, "write the report JSON here instead of stdout");

  // serve
  auto* cmd_serve = app.add_subcommand("serve", "local HTTP session service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string state_dir = "decomp-state";
  cmd_serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
  cmd_serve->add_option("--host", host, "bind address")->capture_default_str();
  cmd_serve->add_option("--state-dir", state_dir, "session directory (DECOMP_STATE_DIR overrides)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const Execution exec = serial ? Execution::serial : Execution::parallel;

  try {
    if (*cmd_auto) {
      const Trace trace = io::read_trace_csv(auto_input);
      const auto r = run_auto(trace, eemd_cfg, {!auto_no_hampel, exec});
      write_result(auto_out, r);
      print_components(r);
    } else if (*cmd_hybrid) {
      const Trace trace = io::read_trace_csv(hybrid_input);
      const Recipe recipe = io::load_recipe(recipe_source, std::cin);
      const auto r = run_hybrid(trace, recipe, {!hybrid_no_hampel, exec});
      write_result(hybrid_out, r);
      print_components(r);
      if (!r.residual_random) {
        std::cerr << "warning: residual is not random (p=" << r.residual_p_value << ")";
        if (r.diagnostics.suggested_period) {
          std::cerr << "; dominant ACF lag " << *r.diagnostics.suggested_period << " ("
                    << r.diagnostics.suggested_band.value_or("?") << ")";
        }
        std::cerr << "\n";
      }
    } else if (*cmd_forecast) {
      const auto result = io::result_from_json(io::read_json(forecast_input));
      const auto h = static_cast<std::size_t>(horizon);
      std::optional<Series> actual;
      if (!actual_path.empty()) {
        const Trace t = io::read_trace_csv(actual_path);
        if (t.size() < h) {
          fail(ErrorKind::validation, actual_path + ": " + std::to_string(t.size()) +
                                          " values, fewer than the horizon " + std::to_string(h));
        }
        const Date expected = result.source.date_at(result.source.size());
        if (t.start_date() != expected) {
          std::cerr << "warning: actual series starts " << format_date(t.start_date())
                    << ", forecast starts " << format_date(expected) << "\n";
        }
        actual = Series(t.values().begin(), t.values().begin() + static_cast<long>(h));
      }
      const auto f = actual ? forecast(result, h, std::span<const double>(*actual)) : forecast(result, h);
      const fs::path out = forecast_out.empty() ? fs::path(forecast_input).parent_path() : fs::path(forecast_out);
      if (!out.empty()) fs::create_directories(out);
      const std::optional<std::span<const double>> act =
          actual ? std::optional<std::span<const double>>(*actual) : std::nullopt;
      io::write_file(out / "forecast.csv", io::forecast_csv(f, act));
      io::write_file(out / "forecast.json", io::to_json(f).dump(1) + "\n");
      std::cout << "wrote " << (out / "forecast.csv").string() << " and "
                << (out / "forecast.json").string() << "\n";
      if (f.metrics) {
        std::cout << "metrics: mape=" << f.metrics->mape_percent
                  << "% erp=" << f.metrics->erp_normalized << "\n";
      }
    } else if (*cmd_plan) {
      const auto result = io::result_from_json(io::read_json(plan_input));
      const auto plan = plan_weekdays(result, fraction);
      const auto doc = io::to_json(plan, fraction).dump(1) + "\n";
      if (plan_out.empty()) {
        std::cout << doc;
      } else {
        io::write_file(plan_out, doc);
      }
    } else if (*cmd_compare) {
      const Trace trace = io::read_trace_csv(compare_input);
      const Recipe recipe = io::load_recipe(recipe_source, std::cin);
      const auto h = static_cast<std::size_t>(compare_horizon);
      std::optional<Series> actual;
      if (!compare_actual.empty()) {
        const Trace t = io::read_trace_csv(compare_actual);
        if (t.size() < h) fail(ErrorKind::validation, compare_actual + ": fewer values than the horizon");
        actual = Series(t.values().begin(), t.values().begin() + static_cast<long>(h));
      }
      const auto rep = actual ? compare_methods(trace, recipe, eemd_cfg, h, std::span<const double>(*actual), exec)
                              : compare_methods(trace, recipe, eemd_cfg, h, std::nullopt, exec);
      const auto doc = io::to_json(rep).dump(1) + "\n";
      if (compare_out.empty()) {
        std::cout << doc;
      } else {
        io::write_file(compare_out, doc);
      }
    } else if (*cmd_serve) {
      if (const char* env = std::getenv("DECOMP_STATE_DIR"); env && *env) state_dir = env;
      service::SessionStore store(state_dir);
      const auto loaded = store.reload();
      httplib::Server server;
      service::install_routes(server, store);
      if (!server.bind_to_port(host, port)) {
        std::cerr << "error: cannot bind " << host << ":" << port << " (port busy?)\n";
        return kExitPortBusy;
      }
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cout << "serving on http://" << host << ":" << port << " (state " << state_dir << ", "
                << loaded << " session(s) restored)" << std::endl;
      server.listen_after_bind();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const io::Json::exception& e) {
    std::cerr << "error: malformed JSON document: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDecomposition;
  }
  return 0;
}
