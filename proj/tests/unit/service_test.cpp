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


#include <gtest/gtest.h>
#include <httplib.h>

#include <future>
#include <thread>

#include "attrport/archive.hpp"
#include "attrport/hashing.hpp"
#include "attrport/service.hpp"
#include "support/temp_dir.hpp"
#include "support/tiny_training.hpp"

namespace attrport {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Service : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::temp_dir("service"));
    Trainer toy(testing::tiny_config(0), toy_schema());
    save_checkpoint(toy, *dir_ / "toy");
    TrainConfig cfg = testing::tiny_config(0);
    cfg.seed = 5;
    Trainer full(cfg, default_schema());
    save_checkpoint(full, *dir_ / "default");
    Image photo(Shape{1, 3, 24, 20});
    for (std::size_t i = 0; i < photo.size(); ++i) photo[i] = static_cast<float>(i % 13) / 12;
    const std::string png = encode_png(photo);
    photo_b64_ = new std::string(
        base64_encode({reinterpret_cast<const std::uint8_t*>(png.data()), png.size()}));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete photo_b64_;
  }

  static std::string request(const json& attrs) {
    return json{{"photo", *photo_b64_}, {"attributes", attrs}}.dump();
  }
  static json body(const HttpReply& r) { return json::parse(r.body); }
  static void expect_error(const HttpReply& r, int status, const std::string& field = "") {
    EXPECT_EQ(r.status, status) << r.body;
    const json j = body(r);
    ASSERT_TRUE(j.contains("error")) << r.body;
    EXPECT_TRUE(j["error"]["code"].is_string());
    EXPECT_FALSE(j["error"]["message"].get<std::string>().empty());
    if (!field.empty()) EXPECT_EQ(j["error"].value("field", ""), field) << r.body;
  }

  static fs::path* dir_;
  static std::string* photo_b64_;
};

fs::path* Service::dir_ = nullptr;
std::string* Service::photo_b64_ = nullptr;

TEST_F(Service, UnloadedServiceAnswers503) {
  PortraitService s;
  const HttpReply h = s.handle("GET", "/health", "");
  EXPECT_EQ(h.status, 503);
  EXPECT_EQ(body(h)["status"], "unavailable");
  expect_error(s.handle("GET", "/schema", ""), 503);
  expect_error(s.handle("POST", "/generate", request(json::object())), 503);
}

TEST_F(Service, HealthReportsModelId) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const HttpReply h = s.handle("GET", "/health", "");
  ASSERT_EQ(h.status, 200);
  const json j = body(h);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["model_id"], checkpoint_model_id(*dir_ / "toy"));
  EXPECT_EQ(j["model_id"], sha256_hex(read_file(*dir_ / "toy" / "manifest.json")));
  EXPECT_GE(j["uptime"].get<double>(), 0.0);
}

TEST_F(Service, SchemaMatchesFileAndIsStable) {
  PortraitService s;
  s.load(*dir_ / "default");
  const HttpReply a = s.handle("GET", "/schema", ""), b = s.handle("GET", "/schema", "");
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  const json j = body(a);
  EXPECT_EQ(j["types"].size(), 11u);
  const json file = json::parse(read_file(fs::path(ATTRPORT_DATA_DIR) / "default_schema.json"));
  EXPECT_EQ(j["types"], file["types"]);
}

TEST_F(Service, GenerateReturnsPortraitOfServedSize) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const HttpReply r =
      s.handle("POST", "/generate", request({{"HairColor", "Black"}, {"Mouth", "Smile"}}));
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = body(r);
  const auto png = base64_decode(j["portrait"].get<std::string>());
  const Image img = decode_png(png);
  EXPECT_EQ(img.shape(), (Shape{1, 3, 16, 16}));
  EXPECT_EQ(j["applied_attributes"], (json{{"HairColor", "Black"}, {"Mouth", "Smile"}}));
  EXPECT_EQ(j["model_id"], checkpoint_model_id(*dir_ / "toy"));
}

TEST_F(Service, GenerateIsDeterministicAndThreadSafe) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const std::string req = request({{"Background", "Dark"}});
  const std::string first = s.handle("POST", "/generate", req).body;
  EXPECT_EQ(s.handle("POST", "/generate", req).body, first);
  std::vector<std::future<std::string>> jobs;
  for (int i = 0; i < 8; ++i)
    jobs.push_back(std::async(std::launch::async,
                              [&] { return s.handle("POST", "/generate", req).body; }));
  for (auto& j : jobs) EXPECT_EQ(j.get(), first);
}

TEST_F(Service, AttributesChangeTheOutput) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const auto a = body(s.handle("POST", "/generate", request({{"HairColor", "Black"}})));
  const auto b = body(s.handle("POST", "/generate", request({{"HairColor", "Blond"}})));
  EXPECT_NE(a["portrait"], b["portrait"]);
  const auto none = s.handle("POST", "/generate", json{{"photo", *photo_b64_}}.dump());
  EXPECT_EQ(none.status, 200);
  EXPECT_EQ(body(none)["applied_attributes"], json::object());
}

TEST_F(Service, UnderscoreSpellingsResolve) {
  PortraitService s;
  s.load(*dir_ / "default");
  const auto r = s.handle("POST", "/generate", request({{"Facial_Expression", "Smile"}}));
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_TRUE(body(r)["applied_attributes"].contains("Facial Expression"));
}

TEST_F(Service, InvalidAttributeNamesField) {
  PortraitService s;
  s.load(*dir_ / "default");
  expect_error(s.handle("POST", "/generate", request({{"Gender", "Robot"}})), 400, "Gender");
  expect_error(s.handle("POST", "/generate", request({{"Planet", "Mars"}})), 400, "Planet");
  expect_error(s.handle("POST", "/generate", request({{"Gender", 3}})), 400, "Gender");
  expect_error(s.handle("POST", "/generate", request(json::array())), 400, "attributes");
}

TEST_F(Service, MalformedRequestsAre400) {
  PortraitService s;
  s.load(*dir_ / "toy");
  expect_error(s.handle("POST", "/generate", "{"), 400, "body");
  expect_error(s.handle("POST", "/generate", "[1]"), 400, "body");
  expect_error(s.handle("POST", "/generate", "{}"), 400, "photo");
  expect_error(s.handle("POST", "/generate", json{{"photo", 5}}.dump()), 400, "photo");
  expect_error(s.handle("POST", "/generate", json{{"photo", "!!!"}}.dump()), 400, "photo");
  expect_error(s.handle("POST", "/generate", json{{"photo", "aGVsbG8="}}.dump()), 400, "photo");
}

TEST_F(Service, OversizedPayloadIs413) {
  PortraitService s;
  s.load(*dir_ / "toy");
  expect_error(s.handle("POST", "/generate", std::string(kMaxRequestBytes + 1, ' ')), 413);
}

TEST_F(Service, UnknownRoutesAndMethods) {
  PortraitService s;
  expect_error(s.handle("GET", "/nope", ""), 404);
  expect_error(s.handle("POST", "/health", ""), 405);
  expect_error(s.handle("POST", "/schema", ""), 405);
  expect_error(s.handle("GET", "/generate", ""), 405);
}

TEST_F(Service, ModelSwapUpdatesId) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const auto held = s.model();
  s.load(*dir_ / "default");
  EXPECT_EQ(body(s.handle("GET", "/health", ""))["model_id"],
            checkpoint_model_id(*dir_ / "default"));
  EXPECT_EQ(held->model_id, checkpoint_model_id(*dir_ / "toy"));
  EXPECT_EQ(held->model->schema(), toy_schema());
  EXPECT_THROW(s.load(*dir_ / "missing"), CheckpointError);
  EXPECT_EQ(s.model()->model_id, checkpoint_model_id(*dir_ / "default"));
}

TEST_F(Service, ServesOverHttp) {
  PortraitService s;
  s.load(*dir_ / "toy");
  const int port = s.bind_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread server([&] { s.listen_after_bind(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);
  for (int i = 0; i < 100 && !s.running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  auto schema = client.Get("/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->body, toy_schema().document());

  const std::string req = request({{"Mouth", "Frown"}});
  auto gen = client.Post("/generate", req, "application/json");
  ASSERT_TRUE(gen);
  EXPECT_EQ(gen->status, 200);
  EXPECT_EQ(gen->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(gen->body, s.handle("POST", "/generate", req).body);

  auto bad = client.Post("/generate", request({{"Mouth", "Grin"}}), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["error"]["field"], "Mouth");

  auto big = client.Post("/generate", std::string(kMaxRequestBytes + 10, 'x'), "application/json");
  ASSERT_TRUE(big);
  EXPECT_EQ(big->status, 413);
  EXPECT_TRUE(json::parse(big->body).contains("error"));

  auto missing = client.Get("/missing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(json::parse(missing->body).contains("error"));

  s.stop();
  server.join();
}

}  // namespace
}  // namespace attrport
