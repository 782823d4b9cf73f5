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

#include "attrport/service.hpp"

#include <httplib.h>

#include "attrport/hashing.hpp"
#include "attrport/image_io.hpp"

namespace attrport {

HttpReply error_reply(int status, const std::string& code, const std::string& message,
                      const std::string& field) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return {status, nlohmann::json{{"error", err}}.dump()};
}

std::shared_ptr<const ServedModel> load_served_model(const std::filesystem::path& checkpoint) {
  auto m = std::make_shared<ServedModel>();
  m->model = load_checkpoint(checkpoint);
  m->model_id = checkpoint_model_id(checkpoint);
  m->path = checkpoint;
  return m;
}

PortraitService::PortraitService()
    : started_(std::chrono::steady_clock::now()),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

PortraitService::~PortraitService() { stop(); }

void PortraitService::load(const std::filesystem::path& checkpoint) {
  set_model(load_served_model(checkpoint));
}

void PortraitService::set_model(std::shared_ptr<const ServedModel> model) {
  std::lock_guard<std::mutex> lock(mu_);
  model_ = std::move(model);
}

std::shared_ptr<const ServedModel> PortraitService::model() const {
  std::lock_guard<std::mutex> lock(mu_);
  return model_;
}

HttpReply PortraitService::handle(const std::string& method, const std::string& path,
                                  const std::string& body) const {
  if (path == "/schema" || path == "/health") {
    if (method != "GET")
      return error_reply(405, "method_not_allowed", path + " only accepts GET");
    return path == "/schema" ? schema() : health();
  }
  if (path == "/generate") {
    if (method != "POST")
      return error_reply(405, "method_not_allowed", "/generate only accepts POST");
    return generate(body);
  }
  return error_reply(404, "not_found", "no route for " + path);
}

HttpReply PortraitService::schema() const {
  const auto m = model();
  if (!m) return error_reply(503, "model_not_loaded", "no checkpoint is loaded");
  return {200, m->model->schema().document()};
}

HttpReply PortraitService::health() const {
  const auto m = model();
  const double uptime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  if (!m) {
    nlohmann::json j = {{"status", "unavailable"},
                        {"model_id", nullptr},
                        {"uptime", uptime},
                        {"error", {{"code", "model_not_loaded"},
                                   {"message", "no checkpoint is loaded"}}}};
    return {503, j.dump()};
  }
  return {200, nlohmann::json{{"status", "ok"}, {"model_id", m->model_id}, {"uptime", uptime}}
                   .dump()};
}

HttpReply PortraitService::generate(const std::string& body) const {
  if (body.size() > kMaxRequestBytes)
    return error_reply(413, "payload_too_large",
                       "request body exceeds " + std::to_string(kMaxRequestBytes) + " bytes");
  const auto m = model();
  if (!m) return error_reply(503, "model_not_loaded", "no checkpoint is loaded");
  const Trainer& model = *m->model;
  const AttributeSchema& schema = model.schema();

  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error_reply(400, "invalid_json", "request body is not valid JSON", "body");
  }
  if (!req.is_object())
    return error_reply(400, "invalid_json", "request body must be a JSON object", "body");
  if (!req.contains("photo") || !req["photo"].is_string())
    return error_reply(400, "invalid_photo", "photo must be a base64-encoded PNG string",
                       "photo");

  AttributeSet attrs;
  if (req.contains("attributes")) {
    const auto& a = req["attributes"];
    if (!a.is_object())
      return error_reply(400, "invalid_attributes", "attributes must be an object",
                         "attributes");
    for (const auto& [type, value] : a.items()) {
      if (!value.is_string())
        return error_reply(400, "invalid_attribute", "value for '" + type + "' must be a string",
                           type);
      try {
        auto [t, v] = schema.resolve(type, value.get<std::string>());
        if (attrs.count(t))
          return error_reply(400, "invalid_attribute", "type '" + t + "' given twice", t);
        attrs[t] = v;
      } catch (const AttributeError& e) {
        return error_reply(400, "invalid_attribute", e.what(), e.field());
      }
    }
  }

  Image photo;
  try {
    const auto bytes = base64_decode(req["photo"].get<std::string>());
    photo = preprocess(bytes, model.config().image_size());
  } catch (const std::exception& e) {
    return error_reply(400, "invalid_photo", std::string("photo could not be decoded: ") + e.what(),
                       "photo");
  }

  std::string png;
  try {
    const Tensor<float> out = model.generator().generate(
        unit_to_signed(photo), SlotBatch{slot_indices(attrs, schema)});
    png = encode_png(signed_to_unit(out));
  } catch (const std::exception& e) {
    return error_reply(500, "generation_failed", e.what());
  }
  nlohmann::json resp = {
      {"portrait", base64_encode({reinterpret_cast<const std::uint8_t*>(png.data()), png.size()})},
      {"applied_attributes", attributes_to_json(attrs)},
      {"model_id", m->model_id}};
  return {200, resp.dump()};
}

void PortraitService::install_routes() {
  server_->set_payload_max_length(4 * kMaxRequestBytes);
  auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  for (const char* route : {"/schema", "/health", "/generate"}) {
    server_->Get(route, bridge);
    server_->Post(route, bridge);
  }
  server_->set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    HttpReply r = res.status == 413
                      ? error_reply(413, "payload_too_large", "request body too large")
                      : error_reply(res.status, res.status == 404 ? "not_found" : "http_error",
                                    "request to " + req.path + " failed");
    res.set_content(r.body, r.content_type);
  });
}

bool PortraitService::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int PortraitService::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool PortraitService::listen_after_bind() { return server_->listen_after_bind(); }

void PortraitService::stop() {
  if (server_) server_->stop();
}

bool PortraitService::running() const { return server_ && server_->is_running(); }

}  // namespace attrport
