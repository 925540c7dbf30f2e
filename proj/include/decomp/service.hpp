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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "decomp/error.hpp"
#include "decomp/pipeline.hpp"
#include "decomp/trace.hpp"

namespace httplib {
class Server;
}

namespace decomp::service {

using Json = nlohmann::json;

// Interactive hybrid session. Keeps the residual from before each step; undo
// pops it.
struct Session {
  std::string id;
  Trace uploaded;
  Trace trace;  // after the Hampel filter when enabled
  bool hampel = true;
  double runs_alpha = stats::kDefaultRunsAlpha;
  std::vector<RecipeStep> steps;
  std::vector<Component> components;
  std::vector<Series> residual_history;  // residual before step k
  Series residual;
  long revision = 0;

  mutable std::shared_mutex mutex;

  Session(std::string id, Trace uploaded, bool hampel, double runs_alpha);

  const Component& apply(const RecipeStep& step, Execution exec = Execution::parallel);
  // Returns the removed component's label.
  std::string undo();
  Recipe recipe() const;
  DecompositionResult result() const;
};

class SessionStore {
 public:
  // An empty path keeps sessions in memory only.
  explicit SessionStore(std::filesystem::path state_dir = {});

  std::shared_ptr<Session> create(Trace uploaded, bool hampel = true,
                                  double runs_alpha = stats::kDefaultRunsAlpha);
  std::shared_ptr<Session> find(const std::string& id) const;
  void persist(const Session& session) const;
  // Rebuilds every saved session by replaying its step log.
  std::size_t reload();
  std::size_t size() const;
  const std::filesystem::path& state_dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

Json session_document(const Session& session);
std::unique_ptr<Session> session_from_document(const Json& doc);

// Registers the /v1 routes on `server`.
void install_routes(httplib::Server& server, SessionStore& store);

int http_status(ErrorKind kind);

}  // namespace decomp::service
