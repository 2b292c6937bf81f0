/*
 * Copyright 2026 The tgchat Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TGC_SERVICE_H_
#define TGC_SERVICE_H_

// Chat sessions behind a JSON request/response interface. The target stays
// hidden from every payload until the session finishes. Each session is
// persisted as an append-only JSONL file and replayed on restart.
//
// Routes (see docs/api.md):
//   GET  /health
//   POST /sessions
//   POST /sessions/{id}/message
//   POST /sessions/{id}/rating
//   GET  /sessions/{id}/transcript
//   GET  /ratings

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgc/agent.h"

namespace tgc {

inline constexpr const char* kDataDirEnv = "TGC_DATA_DIR";

struct ServiceConfig {
  std::string data_dir;  // empty: nothing is persisted
  std::vector<std::string> targets;  // drawn from when a request has none
  std::size_t max_turns = 8;
  std::uint64_t seed = 1;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class SessionService {
 public:
  SessionService(std::shared_ptr<const AgentResources> resources,
                 ServiceConfig config);
  ~SessionService();

  // Dispatches one request. Never throws; failures become 4xx/5xx bodies of
  // the form {"error": message}.
  ApiResponse Handle(const std::string& method, const std::string& path,
                     const std::string& body);

  ApiResponse Health() const;
  ApiResponse CreateSession(const nlohmann::json& request);
  ApiResponse PostMessage(const std::string& id, const nlohmann::json& request);
  ApiResponse PostRating(const std::string& id, const nlohmann::json& request);
  ApiResponse GetTranscript(const std::string& id);
  ApiResponse RatingsSummary();

  // Replays every session file under data_dir. Returns the number loaded;
  // unreadable files are skipped with a warning.
  std::size_t LoadFromDisk();

  std::size_t num_sessions() const;

 private:
  struct Entry;
  std::shared_ptr<Entry> Find(const std::string& id) const;
  std::string NewId();
  std::string SessionPath(const std::string& id) const;
  void Append(Entry& e, const nlohmann::json& record);
  nlohmann::json MessagePayload(const Entry& e, const StepResult& step) const;

  std::shared_ptr<const AgentResources> resources_;
  ServiceConfig config_;
  mutable std::mutex mu_;  // guards sessions_ and rng_
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  Rng rng_;
  std::atomic<std::uint64_t> created_{0};
};

// HTTP front end for a SessionService.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();

  // Returns the bound port; port 0 picks a free one. Throws Error on failure.
  int Bind(const std::string& host, int port);
  // Serves files under `dir` for GET requests that match no API route.
  // Throws Error when `dir` is not a directory.
  void ServeStatic(const std::string& dir);
  // Serves until Stop() is called from another thread.
  void Run();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tgc

#endif  // TGC_SERVICE_H_
