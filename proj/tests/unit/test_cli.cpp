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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "decomp/io.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace decomp;
using io::Json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

class Workspace {
 public:
  Workspace() : dir_(fs::temp_directory_path() / ("decomp_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  Run run(const std::string& args, const std::string& stdin_file = "") const {
    const auto out = path("stdout.txt"), err = path("stderr.txt");
    std::string cmd = std::string(DECOMP_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    if (!stdin_file.empty()) cmd += " <" + path(stdin_file).string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_file(out), io::read_file(err)};
  }

 private:
  fs::path dir_;
};

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string multi_tone_csv(std::size_t n, std::size_t t0 = 0) {
  const auto v = testing::multi_tone(n, 3.0, 42, 100.0, t0);
  return io::format_trace_csv(Trace(add_days(testing::default_start(), static_cast<long>(t0)), v, ""));
}

std::string weekly_result_json(const Series& weekly) {
  Component c;
  c.label = "s1:weekly:sinusoid";
  c.band = Band::weekly;
  c.model = {ModelFamily::sinusoid, {{"amplitude", 1.0}, {"period", 7.0}, {"phase", 0.0}, {"offset", 0.0}}, {}};
  c.contribution = weekly;
  c.period_days = 7.0;
  DecompositionResult r{Trace(testing::default_start(), weekly, ""), {c},
                        Series(weekly.size(), 0.0), true, 1.0, {}};
  return io::to_json(r).dump();
}

std::vector<std::string> slow_days(const std::string& plan_json) {
  std::vector<std::string> out;
  const Json doc = Json::parse(plan_json);
  for (const auto& d : doc["slow_days"]) out.push_back(d.get<std::string>());
  return out;
}

}  // namespace

TEST_CASE("auto writes both artifacts") {
  Workspace w;
  w.write("trace.csv", multi_tone_csv(301));
  const auto r = w.run("auto " + q(w.path("trace.csv")) + " --out " + q(w.path("out")) +
                       " --ensemble 20 --noise 0.2 --seed 7");
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(w.path("out/components.json")));
  CHECK(fs::exists(w.path("out/components.csv")));
  const auto res = io::result_from_json(io::read_json(w.path("out/components.json")));
  CHECK(res.diagnostics.seeds.at("master_seed") == 7.0);
  CHECK(res.diagnostics.seeds.at("ensemble_size") == 20.0);
}

TEST_CASE("input errors exit 2") {
  Workspace w;
  w.write("bad.csv", "date,value\n2021-01-01,1\n2021-01-02,oops\n");
  auto r = w.run("auto " + q(w.path("bad.csv")));
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  std::string flat = "date,value\n";
  for (int d = 1; d <= 40; ++d) flat += format_date(add_days(testing::default_start(), d)) + ",5\n";
  w.write("flat.csv", flat);
  r = w.run("auto " + q(w.path("flat.csv")));
  CHECK(r.code == 2);
  CHECK(r.err.find("zero variance") != std::string::npos);

  CHECK(w.run("auto " + q(w.path("missing.csv"))).code == 2);
  CHECK(w.run("frobnicate").code == 2);
  CHECK(w.run("auto").code == 2);
  CHECK(w.run("--version").code == 0);
}

TEST_CASE("hybrid") {
  Workspace w;
  w.write("trace.csv", multi_tone_csv(301));
  w.write("recipe.json", io::to_json(sab_default_recipe()).dump());

  const auto a = w.run("hybrid " + q(w.path("trace.csv")) + " --recipe " + q(w.path("recipe.json")) +
                       " --out " + q(w.path("a")));
  CHECK_MESSAGE(a.code == 0, a.err);
  const auto b = w.run("hybrid " + q(w.path("trace.csv")) + " --recipe - --out " + q(w.path("b")),
                       "recipe.json");
  CHECK_MESSAGE(b.code == 0, b.err);
  CHECK(io::read_file(w.path("a/components.json")) == io::read_file(w.path("b/components.json")));

  SUBCASE("non-random residual warns but succeeds") {
    w.write("line.json", R"({"steps": [{"band": "trend", "family": "linear"}]})");
    const auto r = w.run("hybrid " + q(w.path("trace.csv")) + " --recipe " + q(w.path("line.json")) +
                         " --out " + q(w.path("c")));
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(io::read_json(w.path("c/components.json"))["residual_random"] == false);
  }
  SUBCASE("schema errors exit 2") {
    w.write("bad.json", R"({"steps": [{"band": "trend", "family": "sinusoid"}]})");
    CHECK(w.run("hybrid " + q(w.path("trace.csv")) + " --recipe " + q(w.path("bad.json"))).code == 2);
    w.write("typo.json", R"({"steps": [{"band": "trend", "family": "linear", "parms": {}}]})");
    CHECK(w.run("hybrid " + q(w.path("trace.csv")) + " --recipe " + q(w.path("typo.json"))).code == 2);
    w.write("broken.json", "{");
    CHECK(w.run("hybrid " + q(w.path("trace.csv")) + " --recipe " + q(w.path("broken.json"))).code == 2);
  }
  SUBCASE("fitter preconditions exit 2") {
    std::string ramp = "date,value\n";
    for (int d = 0; d < 60; ++d) {
      ramp += format_date(add_days(testing::default_start(), d)) + "," + std::to_string(10 + d) + "\n";
    }
    w.write("ramp.csv", ramp);
    w.write("hw.json", R"({"steps": [{"band": "trend", "family": "linear"},
                                     {"band": "monthly", "family": "hwes", "params": {"period": 30}}]})");
    CHECK(w.run("hybrid " + q(w.path("ramp.csv")) + " --recipe " + q(w.path("hw.json"))).code == 2);
  }
}

TEST_CASE("forecast") {
  Workspace w;
  w.write("trace.csv", multi_tone_csv(301));
  w.write("holdout.csv", multi_tone_csv(28, 301));
  REQUIRE(w.run("hybrid " + q(w.path("trace.csv")) + " --out " + q(w.path("out"))).code == 0);

  auto r = w.run("forecast " + q(w.path("out/components.json")) + " --horizon 28 --actual " +
                 q(w.path("holdout.csv")));
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("mape=") != std::string::npos);
  const auto fj = io::read_json(w.path("out/forecast.json"));
  CHECK(fj["metrics"]["mape_percent"].get<double>() < 6.0);
  CHECK(fj.contains("metrics"));
  CHECK(fs::exists(w.path("out/forecast.csv")));

  r = w.run("forecast " + q(w.path("out/components.json")) + " --horizon 7 --out " + q(w.path("f2")));
  CHECK(r.code == 0);
  CHECK(!io::read_json(w.path("f2/forecast.json")).contains("metrics"));

  CHECK(w.run("forecast " + q(w.path("out/components.json")) + " --horizon 0").code == 2);

  // A result whose contributions no longer line up is a decomposition error.
  auto doc = io::read_json(w.path("out/components.json"));
  doc["components"][1]["contribution"].erase(0);
  w.write("short.json", doc.dump());
  CHECK(w.run("forecast " + q(w.path("short.json")) + " --horizon 7").code == 3);
  CHECK(w.run("forecast " + q(w.path("out/components.json")) + " --horizon 40 --actual " +
              q(w.path("holdout.csv")))
            .code == 2);
}

TEST_CASE("plan") {
  Workspace w;
  const std::size_t n = 70;  // starts on a Wednesday
  Series sharp(n, 0.0), smooth(n), flat(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (t % 7 == 0) sharp[t] = 10.0;
    smooth[t] = 5.0 * std::cos(testing::kTwoPi * t / 7.0);
  }
  w.write("sharp.json", weekly_result_json(sharp));
  w.write("smooth.json", weekly_result_json(smooth));
  w.write("flat.json", weekly_result_json(flat));

  auto r = w.run("plan " + q(w.path("sharp.json")));
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(slow_days(r.out) == std::vector<std::string>{"Wednesday"});
  r = w.run("plan " + q(w.path("smooth.json")));
  CHECK(slow_days(r.out) == std::vector<std::string>{"Tuesday", "Wednesday", "Thursday"});
  r = w.run("plan " + q(w.path("flat.json")) + " --out " + q(w.path("plan.json")));
  CHECK(r.code == 0);
  CHECK(slow_days(io::read_file(w.path("plan.json"))).empty());
  CHECK(w.run("plan " + q(w.path("smooth.json")) + " --fraction 2").code == 2);
}

TEST_CASE("compare") {
  Workspace w;
  w.write("trace.csv", multi_tone_csv(301));
  w.write("holdout.csv", multi_tone_csv(28, 301));
  const auto r = w.run("compare " + q(w.path("trace.csv")) + " --actual " + q(w.path("holdout.csv")) +
                       " --ensemble 20 --seed 1 --out " + q(w.path("cmp.json")));
  CHECK_MESSAGE(r.code == 0, r.err);
  const auto j = io::read_json(w.path("cmp.json"));
  for (const char* m : {"hybrid", "automatic", "stl"}) {
    CAPTURE(m);
    CHECK(j[m].contains("metrics"));
  }
}

TEST_CASE("serve exits 4 when the port is taken") {
  Workspace w;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(fd, 1) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  const auto r = w.run("serve --port " + std::to_string(port) + " --state-dir " + q(w.path("state")));
  CHECK(r.code == 4);
  ::close(fd);
}
