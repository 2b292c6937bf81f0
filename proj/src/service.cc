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
#include "tgc/service.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "tgc/error.h"

namespace tgc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxMessageChars = 2000;

// Error messages may echo raw request bytes; keep them valid UTF-8.
ApiResponse Fail(int status, const std::string& message) {
  const auto clean = json::parse(
      json(message).dump(-1, ' ', false, json::error_handler_t::replace));
  return {status, json{{"error", clean}}};
}

std::string NowUtc() {
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Lowercased single token, or empty when `raw` is not one.
std::string NormalizeTarget(const std::string& raw) {
  const auto tokens = Tokenize(raw);
  return tokens.size() == 1 ? tokens.front() : std::string();
}

std::vector<std::string> Split(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t slash = path.find('/', start);
    const std::size_t end = slash == std::string::npos ? path.size() : slash;
    if (end > start) parts.push_back(path.substr(start, end - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return parts;
}

}  // namespace

struct SessionService::Entry {
  std::mutex mu;
  Session session;
  std::string created_at;
  std::optional<std::string> opening;
  bool debug = false;
  bool revealed = false;
  std::optional<json> rating;
  std::string path;  // empty without persistence
};

SessionService::SessionService(std::shared_ptr<const AgentResources> resources,
                               ServiceConfig config)
    : resources_(std::move(resources)),
      config_(std::move(config)),
      rng_(config_.seed) {
  if (!resources_) throw ValidationError("service needs agent resources");
  if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir) {
    config_.data_dir = dir;
  }
  if (!config_.data_dir.empty()) {
    fs::create_directories(fs::path(config_.data_dir) / "sessions");
  }
}

SessionService::~SessionService() = default;

std::size_t SessionService::num_sessions() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::Find(
    const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string SessionService::NewId() {
  // Caller holds mu_.
  for (;;) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(rng_()));
    if (!sessions_.count(buf)) return buf;
  }
}

std::string SessionService::SessionPath(const std::string& id) const {
  if (config_.data_dir.empty()) return {};
  return (fs::path(config_.data_dir) / "sessions" / (id + ".jsonl")).string();
}

void SessionService::Append(Entry& e, const json& record) {
  if (e.path.empty()) return;
  std::ofstream out(e.path, std::ios::app);
  if (!out) throw Error("cannot append to " + e.path);
  out << record.dump() << '\n';
  out.flush();
}

ApiResponse SessionService::Health() const {
  return {200, json{{"status", "ok"}, {"sessions", num_sessions()}}};
}

json SessionService::MessagePayload(const Entry& e,
                                    const StepResult& step) const {
  const Session& s = e.session;
  json j = {{"session_id", s.id},
            {"response", step.response ? json(step.response->Text()) : json(nullptr)},
            {"achieved", step.trace.achieved},
            {"turn", s.turn_count},
            {"max_turns", s.config.max_turns},
            {"status", SessionStatusName(s.status)},
            {"finished", s.status != SessionStatus::kActive}};
  if (e.revealed) j["target"] = s.target;
  if (e.debug) {
    if (e.revealed) {
      j["trace"] = TurnTraceToJson(step.trace);
    } else {
      // Summary only: the candidate list and distribution would expose the
      // target before the reveal.
      std::string chosen = step.trace.chosen_keyword;
      if (NormalizeKeyword(chosen) == NormalizeKeyword(s.target)) chosen = "***";
      j["trace"] = {{"chosen_keyword", chosen},
                    {"chosen_closeness", step.trace.chosen_closeness},
                    {"candidate_count", step.trace.candidates.size()},
                    {"fallback", step.trace.fallback}};
    }
  }
  return j;
}

ApiResponse SessionService::CreateSession(const json& request) {
  if (!request.is_object()) return Fail(400, "request body must be an object");
  if (!request.contains("agent") || !request["agent"].is_string()) {
    return Fail(400, "missing string field 'agent'");
  }
  AgentConfig cfg;
  try {
    cfg.kind = ParseAgentKind(request["agent"].get<std::string>());
  } catch (const ValidationError& e) {
    return Fail(400, e.what());
  }
  cfg.max_turns = config_.max_turns;
  std::optional<std::string> opening;
  if (request.contains("opening") && !request["opening"].is_null()) {
    if (!request["opening"].is_string()) return Fail(400, "'opening' must be a string");
    const auto text = request["opening"].get<std::string>();
    if (Tokenize(text).empty()) return Fail(400, "'opening' is empty");
    if (text.size() > kMaxMessageChars) return Fail(400, "'opening' is too long");
    opening = text;
  }
  bool debug = false;
  if (request.contains("debug")) {
    if (!request["debug"].is_boolean()) return Fail(400, "'debug' must be a boolean");
    debug = request["debug"].get<bool>();
  }
  std::string target;
  if (request.contains("target") && !request["target"].is_null()) {
    if (!request["target"].is_string()) return Fail(400, "'target' must be a string");
    target = NormalizeTarget(request["target"].get<std::string>());
    if (target.empty()) return Fail(400, "'target' must be a single word");
  }
  try {
    resources_->Require(cfg.kind);
  } catch (const StateError& e) {
    return Fail(400, e.what());
  }

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (target.empty()) {
      if (config_.targets.empty()) return Fail(400, "no target given and no target pool");
      target = config_.targets[UniformIndex(rng_, config_.targets.size())];
    }
    cfg.seed = rng_();
    id = NewId();
    sessions_[id] = entry;  // reserves the id
  }
  std::lock_guard<std::mutex> lock(entry->mu);
  try {
    entry->session = StartSession(id, target, opening, cfg, *resources_);
  } catch (const Error& e) {
    std::lock_guard<std::mutex> reg(mu_);
    sessions_.erase(id);
    return Fail(400, e.what());
  }
  entry->created_at = NowUtc();
  entry->opening = opening;
  entry->debug = debug;
  entry->path = SessionPath(id);
  Append(*entry, {{"type", "create"},
                  {"session_id", id},
                  {"agent", AgentKindName(cfg.kind)},
                  {"target", target},
                  {"opening", opening ? json(*opening) : json(nullptr)},
                  {"debug", debug},
                  {"seed", cfg.seed},
                  {"max_turns", cfg.max_turns},
                  {"created_at", entry->created_at}});
  ++created_;

  json body = {{"session_id", id},
               {"agent", AgentKindName(cfg.kind)},
               {"created_at", entry->created_at},
               {"max_turns", cfg.max_turns}};
  std::optional<std::string> greeting;
  if (entry->session.status == SessionStatus::kActive) {
    const StepResult step = AgentStep(entry->session, std::nullopt, *resources_);
    if (entry->session.status != SessionStatus::kActive) entry->revealed = true;
    if (step.response) greeting = step.response->Text();
    Append(*entry, {{"type", "greeting"},
                    {"response", greeting ? json(*greeting) : json(nullptr)}});
    if (debug) body["trace"] = MessagePayload(*entry, step)["trace"];
  } else {
    entry->revealed = true;
  }
  body["greeting"] = greeting ? json(*greeting) : json(nullptr);
  body["status"] = SessionStatusName(entry->session.status);
  body["finished"] = entry->session.status != SessionStatus::kActive;
  if (entry->revealed) body["target"] = target;
  return {201, std::move(body)};
}

ApiResponse SessionService::PostMessage(const std::string& id,
                                        const json& request) {
  auto entry = Find(id);
  if (!entry) return Fail(404, "unknown session");
  std::unique_lock<std::mutex> lock(entry->mu, std::try_to_lock);
  if (!lock.owns_lock()) return Fail(409, "session is busy");
  if (entry->session.status != SessionStatus::kActive) {
    return Fail(409, "session is finished");
  }
  if (!request.is_object() || !request.contains("text") ||
      !request["text"].is_string()) {
    return Fail(400, "missing string field 'text'");
  }
  const auto text = request["text"].get<std::string>();
  if (Tokenize(text).empty()) return Fail(400, "'text' is empty");
  if (text.size() > kMaxMessageChars) return Fail(400, "'text' is too long");
  const StepResult step = AgentStep(entry->session, text, *resources_);
  if (entry->session.status != SessionStatus::kActive) entry->revealed = true;
  Append(*entry, {{"type", "message"},
                  {"text", text},
                  {"response", step.response ? json(step.response->Text())
                                             : json(nullptr)}});
  return {200, MessagePayload(*entry, step)};
}

ApiResponse SessionService::PostRating(const std::string& id,
                                       const json& request) {
  auto entry = Find(id);
  if (!entry) return Fail(404, "unknown session");
  std::unique_lock<std::mutex> lock(entry->mu, std::try_to_lock);
  if (!lock.owns_lock()) return Fail(409, "session is busy");
  if (!request.is_object()) return Fail(400, "request body must be an object");
  if (!request.contains("achieved_judgment") ||
      !request["achieved_judgment"].is_boolean()) {
    return Fail(400, "missing boolean field 'achieved_judgment'");
  }
  if (!request.contains("smoothness") || !request["smoothness"].is_number()) {
    return Fail(422, "'smoothness' must be an integer from 1 to 5");
  }
  const double sm = request["smoothness"].get<double>();
  if (!(sm >= 1.0 && sm <= 5.0) || sm != static_cast<double>(static_cast<int>(sm))) {
    return Fail(422, "'smoothness' must be an integer from 1 to 5");
  }
  std::string comment;
  if (request.contains("comment") && !request["comment"].is_null()) {
    if (!request["comment"].is_string()) return Fail(400, "'comment' must be a string");
    comment = request["comment"].get<std::string>();
    if (comment.size() > kMaxMessageChars) return Fail(400, "'comment' is too long");
  }
  if (!entry->revealed) return Fail(409, "session is not finished");
  if (entry->rating) return Fail(409, "session is already rated");
  json rating = {{"session_id", id},
                 {"agent", AgentKindName(entry->session.config.kind)},
                 {"achieved_judgment", request["achieved_judgment"].get<bool>()},
                 {"smoothness", static_cast<int>(sm)},
                 {"comment", comment}};
  json record = rating;
  record["type"] = "rating";
  Append(*entry, record);
  entry->rating = std::move(rating);
  return {200, json{{"ok", true}}};
}

ApiResponse SessionService::GetTranscript(const std::string& id) {
  auto entry = Find(id);
  if (!entry) return Fail(404, "unknown session");
  std::lock_guard<std::mutex> lock(entry->mu);
  const Session& s = entry->session;
  json messages = json::array();
  for (const auto& u : s.history) {
    messages.push_back({{"speaker", u.speaker == kHumanSpeaker ? "human" : "agent"},
                        {"text", u.Text()}});
  }
  json body = {{"session_id", s.id},
               {"agent", AgentKindName(s.config.kind)},
               {"created_at", entry->created_at},
               {"status", SessionStatusName(s.status)},
               {"turn", s.turn_count},
               {"max_turns", s.config.max_turns},
               {"revealed", entry->revealed},
               {"messages", std::move(messages)}};
  if (entry->revealed) {
    body["target"] = s.target;
    json trace = json::array();
    json closeness = json::array();
    for (const auto& t : s.trace) {
      trace.push_back(TurnTraceToJson(t));
      if (!t.chosen_keyword.empty() && !t.fallback) {
        closeness.push_back(t.chosen_closeness);
      }
    }
    body["trace"] = std::move(trace);
    body["closeness"] = std::move(closeness);
    if (entry->rating) body["rating"] = *entry->rating;
  }
  return {200, std::move(body)};
}

ApiResponse SessionService::RatingsSummary() {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  struct Acc {
    std::size_t n = 0, achieved = 0;
    double smooth = 0.0;
  };
  Acc all;
  std::map<std::string, Acc> by_agent;
  for (const auto& e : entries) {
    std::lock_guard<std::mutex> lock(e->mu);
    if (!e->rating) continue;
    const auto& r = *e->rating;
    for (Acc* a : {&all, &by_agent[r["agent"].get<std::string>()]}) {
      ++a->n;
      a->smooth += r["smoothness"].get<int>();
      a->achieved += r["achieved_judgment"].get<bool>() ? 1 : 0;
    }
  }
  auto to_json = [](const Acc& a) {
    return json{{"count", a.n},
                {"mean_smoothness", a.n ? a.smooth / a.n : 0.0},
                {"achieved_rate", a.n ? static_cast<double>(a.achieved) / a.n : 0.0}};
  };
  json body = to_json(all);
  json agents = json::object();
  for (const auto& [name, a] : by_agent) agents[name] = to_json(a);
  body["by_agent"] = std::move(agents);
  return {200, std::move(body)};
}

std::size_t SessionService::LoadFromDisk() {
  if (config_.data_dir.empty()) return 0;
  const fs::path dir = fs::path(config_.data_dir) / "sessions";
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() == ".jsonl") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t loaded = 0;
  for (const auto& file : files) {
    try {
      std::ifstream in(file);
      std::string line;
      std::vector<json> records;
      while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(json::parse(line));
      }
      if (records.empty() || records[0].at("type") != "create") {
        throw ParseError("first record is not a create record", 1);
      }
      const json& c = records[0];
      auto entry = std::make_shared<Entry>();
      AgentConfig cfg;
      cfg.kind = ParseAgentKind(c.at("agent").get<std::string>());
      cfg.seed = c.at("seed").get<std::uint64_t>();
      cfg.max_turns = c.at("max_turns").get<std::size_t>();
      if (!c.at("opening").is_null()) entry->opening = c["opening"].get<std::string>();
      const std::string id = c.at("session_id").get<std::string>();
      entry->session = StartSession(id, c.at("target").get<std::string>(),
                                    entry->opening, cfg, *resources_);
      entry->created_at = c.at("created_at").get<std::string>();
      entry->debug = c.at("debug").get<bool>();
      entry->path = file.string();
      if (entry->session.status != SessionStatus::kActive) entry->revealed = true;
      for (std::size_t i = 1; i < records.size(); ++i) {
        const json& r = records[i];
        const auto type = r.at("type").get<std::string>();
        std::optional<StepResult> step;
        if (type == "greeting") {
          step = AgentStep(entry->session, std::nullopt, *resources_);
        } else if (type == "message") {
          step = AgentStep(entry->session, r.at("text").get<std::string>(),
                           *resources_);
        } else if (type == "rating") {
          json rating = r;
          rating.erase("type");
          entry->rating = std::move(rating);
        }
        if (step) {
          const json replayed =
              step->response ? json(step->response->Text()) : json(nullptr);
          if (replayed != r.at("response")) {
            spdlog::warn("{}: replay diverged at record {}", file.string(), i + 1);
          }
          if (entry->session.status != SessionStatus::kActive) entry->revealed = true;
        }
      }
      std::lock_guard<std::mutex> lock(mu_);
      sessions_[id] = std::move(entry);
      ++loaded;
    } catch (const std::exception& e) {
      spdlog::warn("skipping session file {}: {}", file.string(), e.what());
    }
  }
  return loaded;
}

ApiResponse SessionService::Handle(const std::string& method,
                                   const std::string& path,
                                   const std::string& body) {
  try {
    const auto parts = Split(path.substr(0, path.find('?')));
    auto parse = [&body]() {
      if (body.empty()) return json::object();
      return json::parse(body);
    };
    auto wrong_method = [] { return Fail(405, "method not allowed"); };
    if (parts.size() == 1 && parts[0] == "health") {
      return method == "GET" ? Health() : wrong_method();
    }
    if (parts.size() == 1 && parts[0] == "ratings") {
      return method == "GET" ? RatingsSummary() : wrong_method();
    }
    if (parts.size() == 1 && parts[0] == "sessions") {
      return method == "POST" ? CreateSession(parse()) : wrong_method();
    }
    if (parts.size() == 3 && parts[0] == "sessions") {
      const std::string& id = parts[1];
      if (parts[2] == "message") {
        return method == "POST" ? PostMessage(id, parse()) : wrong_method();
      }
      if (parts[2] == "rating") {
        return method == "POST" ? PostRating(id, parse()) : wrong_method();
      }
      if (parts[2] == "transcript") {
        return method == "GET" ? GetTranscript(id) : wrong_method();
      }
    }
    return Fail(404, "no such route");
  } catch (const json::parse_error& e) {
    return Fail(400, std::string("malformed JSON: ") + e.what());
  } catch (const json::exception& e) {
    return Fail(400, e.what());
  } catch (const StateError& e) {
    return Fail(409, e.what());
  } catch (const ContractError& e) {
    return Fail(409, e.what());
  } catch (const ValidationError& e) {
    return Fail(400, e.what());
  } catch (const LookupError& e) {
    return Fail(400, e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", method, path, e.what());
    return Fail(500, "internal error");
  }
}

}  // namespace tgc
