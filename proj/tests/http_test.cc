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
#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "service_fixtures.h"
#include "test_world.h"
#include "tgc/error.h"
#include "tgc/service.h"

namespace tgc {
namespace {

using nlohmann::json;

// A live server on a free local port, stopped on destruction.
class LiveServer {
 public:
  explicit LiveServer(const std::string& static_dir = "")
      : service_(testing::SmallWorld().resources, MakeConfig()),
        server_(service_) {
    if (!static_dir.empty()) server_.ServeStatic(static_dir);
    port_ = server_.Bind("127.0.0.1", 0);
    worker_ = std::thread([this] { server_.Run(); });
    for (int i = 0; i < 200; ++i) {
      if (client().Get("/health")) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  ~LiveServer() {
    server_.Stop();
    worker_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_connection_timeout(5);
    c.set_read_timeout(30);
    return c;
  }

 private:
  static ServiceConfig MakeConfig() {
    ServiceConfig c;
    c.targets = testing::LeakSafeTargets(testing::SmallWorld());
    return c;
  }

  SessionService service_;
  HttpServer server_;
  int port_ = 0;
  std::thread worker_;
};

json Body(const httplib::Result& r) { return json::parse(r->body); }

httplib::Result PostJson(httplib::Client& c, const std::string& path,
                         const json& body) {
  return c.Post(path.c_str(), body.dump(), "application/json");
}

TEST(Http, HealthIsJson) {
  LiveServer s;
  auto c = s.client();
  const auto r = c.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(Body(r)["status"], "ok");
}

TEST(Http, FullSessionFlow) {
  LiveServer s;
  auto c = s.client();
  const std::string target =
      testing::LeakSafeTargets(testing::SmallWorld()).front();
  auto r = PostJson(c, "/sessions", {{"agent", "kernel"}, {"target", target}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(r->body.find(target), std::string::npos);
  const auto id = Body(r)["session_id"].get<std::string>();

  r = PostJson(c, "/sessions/" + id + "/message",
               {{"text", "do you like " + target}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(Body(r)["target"], target);

  r = PostJson(c, "/sessions/" + id + "/rating",
               {{"achieved_judgment", true}, {"smoothness", 4}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);

  r = c.Get(("/sessions/" + id + "/transcript").c_str());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(Body(r)["rating"]["smoothness"], 4);

  r = c.Get("/ratings");
  ASSERT_TRUE(r);
  EXPECT_EQ(Body(r)["count"], 1);
}

TEST(Http, ErrorsCarryJsonBodies) {
  LiveServer s;
  auto c = s.client();
  struct Case {
    std::string method, path, body;
    int status;
  };
  const std::vector<Case> cases = {
      {"GET", "/missing", "", 404},
      {"DELETE", "/health", "", 405},
      {"GET", "/sessions", "", 405},
      {"POST", "/sessions", "{oops", 400},
      {"POST", "/sessions", R"({"agent":"foo"})", 400},
      {"POST", "/sessions/0123456789abcdef/message", R"({"text":"hi"})", 404},
      {"GET", "/sessions/0123456789abcdef/transcript", "", 404},
  };
  for (const auto& k : cases) {
    httplib::Result r =
        k.method == "GET"      ? c.Get(k.path.c_str())
        : k.method == "DELETE" ? c.Delete(k.path.c_str())
                               : c.Post(k.path.c_str(), k.body, "application/json");
    ASSERT_TRUE(r) << k.method << " " << k.path;
    EXPECT_EQ(r->status, k.status) << k.method << " " << k.path;
    EXPECT_TRUE(Body(r).contains("error")) << r->body;
  }
}

TEST(Http, OversizedBodyIs413) {
  LiveServer s;
  auto c = s.client();
  const json big = {{"agent", "pmi"}, {"opening", std::string(70 * 1024, 'a')}};
  const auto r = PostJson(c, "/sessions", big);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 413);
  EXPECT_TRUE(Body(r).contains("error"));
  // The server keeps serving afterwards.
  const auto h = s.client().Get("/health");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
}

TEST(Http, InvalidUtf8StaysValidJson) {
  LiveServer s;
  auto c = s.client();
  const auto r =
      c.Post("/sessions", std::string("{\"agent\":\"\xff\xfe\"}"), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_NO_THROW(Body(r));
}

TEST(Http, ServesStaticAssets) {
  testing::ScratchDir dir("static");
  {
    std::ofstream out(dir.file("index.html"));
    out << "<html>chat</html>";
  }
  LiveServer s(dir.path().string());
  auto c = s.client();
  auto r = c.Get("/index.html");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, "<html>chat</html>");
  r = c.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(Body(r)["status"], "ok");
}

TEST(Http, RunNeedsBindAndStaticNeedsDirectory) {
  SessionService service(testing::SmallWorld().resources, ServiceConfig{});
  HttpServer server(service);
  EXPECT_THROW(server.Run(), StateError);
  EXPECT_THROW(server.ServeStatic("/nonexistent/assets"), Error);
}

}  // namespace
}  // namespace tgc
