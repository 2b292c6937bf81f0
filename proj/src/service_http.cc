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
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "tgc/error.h"
#include "tgc/service.h"

namespace tgc {

namespace {

constexpr std::size_t kMaxBodyBytes = 64 * 1024;

void Reply(httplib::Response& res, const ApiResponse& api) {
  res.status = api.status;
  res.set_content(
      api.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
      "application/json");
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(SessionService& s) : service(s) {}
  SessionService& service;
  httplib::Server server;
  bool bound = false;
};

HttpServer::HttpServer(SessionService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  srv.set_payload_max_length(kMaxBodyBytes);
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    Reply(res, impl_->service.Handle(req.method, req.path, req.body));
  };
  const char* pattern = R"(/.*)";
  srv.Get(pattern, dispatch);
  srv.Post(pattern, dispatch);
  srv.Put(pattern, dispatch);
  srv.Delete(pattern, dispatch);
  srv.Patch(pattern, dispatch);
  srv.set_exception_handler(
      [](const httplib::Request& req, httplib::Response& res,
         std::exception_ptr) {
        spdlog::error("unhandled exception for {} {}", req.method, req.path);
        Reply(res, {500, {{"error", "internal error"}}});
      });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    // Only reached for responses without a body, e.g. an oversized payload.
    if (res.body.empty()) {
      Reply(res, {res.status, {{"error", httplib::status_message(res.status)}}});
    }
  });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    port = srv.bind_to_any_port(host);
    if (port < 0) throw Error("cannot bind " + host);
  } else if (!srv.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void HttpServer::ServeStatic(const std::string& dir) {
  if (!impl_->server.set_mount_point("/", dir)) {
    throw Error("not a directory: " + dir);
  }
}

void HttpServer::Run() {
  if (!impl_->bound) throw StateError("Bind() must be called before Run()");
  impl_->server.listen_after_bind();
}

void HttpServer::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tgc
