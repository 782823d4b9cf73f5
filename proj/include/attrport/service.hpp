// Copyright 2026 The attrport Authors. All Rights Reserved.
//
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
// limitations under the License.

// HTTP inference service.
//
//   GET  /schema    served attribute schema
//   POST /generate  {"photo": base64 PNG, "attributes": {type: value}}
//                   -> {"portrait": base64 PNG, "applied_attributes", "model_id"}
//   GET  /health    {"status", "model_id", "uptime"}
//
// Errors carry {"error": {"code", "message", "field"?}}.

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include "attrport/training.hpp"

namespace httplib {
class Server;
}

namespace attrport {

inline constexpr std::size_t kMaxRequestBytes = 8u << 20;

/// Immutable model snapshot shared by request handlers.
struct ServedModel {
  std::unique_ptr<const Trainer> model;
  std::string model_id;
  std::filesystem::path path;
};

std::shared_ptr<const ServedModel> load_served_model(const std::filesystem::path& checkpoint);

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class PortraitService {
 public:
  PortraitService();
  ~PortraitService();
  PortraitService(const PortraitService&) = delete;
  PortraitService& operator=(const PortraitService&) = delete;

  /// Swaps the snapshot; requests already running keep the old one.
  void load(const std::filesystem::path& checkpoint);
  void set_model(std::shared_ptr<const ServedModel> model);
  std::shared_ptr<const ServedModel> model() const;

  /// Transport-independent dispatch used by the HTTP server.
  HttpReply handle(const std::string& method, const std::string& path,
                   const std::string& body) const;

  /// Binds and serves until stop(). Returns false if binding fails.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  HttpReply schema() const;
  HttpReply generate(const std::string& body) const;
  HttpReply health() const;
  void install_routes();

  mutable std::mutex mu_;
  std::shared_ptr<const ServedModel> model_;
  std::chrono::steady_clock::time_point started_;
  std::unique_ptr<httplib::Server> server_;
};

/// {"error": {"code", "message", "field"?}} reply.
HttpReply error_reply(int status, const std::string& code, const std::string& message,
                      const std::string& field = "");

}  // namespace attrport
