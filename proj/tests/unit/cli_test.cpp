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
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "attrport/archive.hpp"
#include "attrport/image_io.hpp"
#include "support/temp_dir.hpp"
#include "support/tiny_training.hpp"

namespace attrport {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(ATTRPORT_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    out.insert(fs::relative(e.path(), dir).generic_string());
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::temp_dir("cli"));
    const fs::path d = *dir_;
    ToyDatasetSpec spec;
    spec.count = 24;
    spec.image_size = 16;
    spec.test_fraction = 0.25;
    write_file_atomic(d / "spec.json", spec.to_json().dump());
    json cfg = testing::tiny_config(1).to_json();
    write_file_atomic(d / "train.json", cfg.dump());
    ok_ = cli("dataset-synth --spec " + q(d / "spec.json") + " --out " + q(d / "data")).code == 0 &&
          cli("embed-train --manifest " + q(d / "data" / "manifest.jsonl") +
              " --dim 3 --epochs 5 --seed 4 --out " + q(d / "emb.bin")).code == 0 &&
          cli("train --config " + q(d / "train.json") + " --manifest " +
              q(d / "data" / "manifest.jsonl") + " --embeddings " + q(d / "emb.bin") +
              " --seed 9 --out " + q(d / "run")).code == 0;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  void SetUp() override { ASSERT_TRUE(ok_) << "pipeline setup failed"; }

  static fs::path d() { return *dir_; }
  static fs::path manifest() { return d() / "data" / "manifest.jsonl"; }
  static fs::path checkpoint() { return d() / "run" / "final"; }

  static fs::path* dir_;
  static bool ok_;
};

fs::path* Cli::dir_ = nullptr;
bool Cli::ok_ = false;

TEST_F(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(cli("--help").code, 0);
  for (const char* sub : {"dataset-synth", "embed-train", "train", "eval", "generate", "serve"}) {
    const Result r = cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("eval --bogus").code, 2);
  EXPECT_EQ(cli("dataset-synth --spec " + q(d() / "absent.json") + " --out x").code, 2);
  EXPECT_EQ(cli("train --manifest " + q(manifest()) + " --out " + q(d() / "t")).code, 2);
  EXPECT_EQ(cli("generate --checkpoint " + q(checkpoint()) + " --photo " +
                q(d() / "data" / "photos" / "00000.png") + " --attr Mouth:Smile --out " +
                q(d() / "x.png")).code,
            2);
  EXPECT_EQ(cli("serve --checkpoint " + q(checkpoint()) + " --port 0").code, 2);
}

TEST_F(Cli, DatasetSynthIsSeededAndDeterministic) {
  const fs::path a = d() / "synth_a", b = d() / "synth_b";
  ASSERT_EQ(cli("dataset-synth --spec " + q(d() / "spec.json") + " --seed 3 --out " + q(a)).code, 0);
  ASSERT_EQ(cli("dataset-synth --spec " + q(d() / "spec.json") + " --seed 3 --out " + q(b)).code, 0);
  EXPECT_EQ(listing(a), listing(b));
  for (const auto& f : listing(a))
    if (fs::is_regular_file(a / f)) EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  EXPECT_TRUE(fs::exists(a / "schema.json"));
  EXPECT_NE(read_file(a / "manifest.jsonl"), read_file(manifest()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_F(Cli, InvalidSpecExitsThree) {
  write_file_atomic(d() / "bad_spec.json", R"({"p_smile": 1.5})");
  EXPECT_EQ(cli("dataset-synth --spec " + q(d() / "bad_spec.json") + " --out " +
                q(d() / "bad_out")).code,
            3);
  write_file_atomic(d() / "junk.json", "{");
  EXPECT_EQ(cli("dataset-synth --spec " + q(d() / "junk.json") + " --out " +
                q(d() / "bad_out")).code,
            3);
}

TEST_F(Cli, EmbedTrainIsDeterministic) {
  ASSERT_EQ(cli("embed-train --manifest " + q(manifest()) +
                " --dim 3 --epochs 5 --seed 4 --out " + q(d() / "emb2.bin")).code,
            0);
  EXPECT_EQ(read_file(d() / "emb.bin"), read_file(d() / "emb2.bin"));
  ASSERT_EQ(cli("embed-train --manifest " + q(manifest()) +
                " --dim 3 --epochs 5 --seed 5 --out " + q(d() / "emb3.bin")).code,
            0);
  EXPECT_NE(read_file(d() / "emb.bin"), read_file(d() / "emb3.bin"));
}

TEST_F(Cli, TrainIsDeterministicUnderSeed) {
  const Result r = cli("train --config " + q(d() / "train.json") + " --manifest " + q(manifest()) +
                       " --embeddings " + q(d() / "emb.bin") + " --seed 9 --out " + q(d() / "run2"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["model_id"], checkpoint_model_id(checkpoint()));
  EXPECT_EQ(read_file(d() / "run" / "train_log.jsonl"), read_file(d() / "run2" / "train_log.jsonl"));
  EXPECT_EQ(read_file(checkpoint() / "params.bin"), read_file(d() / "run2" / "final" / "params.bin"));
  const json m = json::parse(read_file(checkpoint() / "manifest.json"));
  EXPECT_EQ(m["seed"], 9);
  EXPECT_EQ(m["generator"]["embed_dim"], 3);
}

TEST_F(Cli, TrainResumesFromCheckpoint) {
  EXPECT_EQ(cli("train --resume " + q(checkpoint()) + " --manifest " + q(manifest()) +
                " --out " + q(d() / "resumed")).code,
            0);
  EXPECT_TRUE(fs::exists(d() / "resumed" / "final" / "manifest.json"));
}

TEST_F(Cli, TrainWithBrokenManifestExitsThree) {
  const fs::path bad = d() / "data" / "broken.jsonl";
  write_file_atomic(bad, R"({"photo":"photos/missing.png","portrait":"portraits/00000.png",)"
                         R"("attrs":{"Mouth":"Smile"}})" "\n");
  EXPECT_EQ(cli("train --config " + q(d() / "train.json") + " --manifest " + q(bad) +
                " --out " + q(d() / "broken_run")).code,
            3);
}

TEST_F(Cli, EvalWritesReportOnly) {
  const fs::path out = d() / "eval_out";
  fs::create_directories(out);
  const Result r = cli("eval --checkpoint " + q(checkpoint()) + " --manifest " + q(manifest()) +
                       " --report " + q(out / "report.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(listing(out), std::set<std::string>{"report.json"});
  const json j = json::parse(read_file(out / "report.json"));
  for (const char* t : {"HairColor", "Background", "Mouth"})
    EXPECT_TRUE(j["fscore"]["per_type"].contains(t)) << t;
  EXPECT_TRUE(j["fscore"].contains("average"));
  EXPECT_TRUE(j["random_fscore"].contains("average"));
  EXPECT_EQ(j["samples"], 6);
  EXPECT_EQ(j["model_id"], checkpoint_model_id(checkpoint()));
  EXPECT_NE(r.out.find("Average"), std::string::npos);
  const Result again = cli("eval --checkpoint " + q(checkpoint()) + " --manifest " +
                           q(manifest()) + " --report " + q(out / "again.json"));
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(read_file(out / "report.json"), read_file(out / "again.json"));
}

TEST_F(Cli, GenerateWritesPortrait) {
  const fs::path out = d() / "gen_out";
  fs::create_directories(out);
  const Result ok = cli("generate --checkpoint " + q(checkpoint()) + " --photo " +
                        q(d() / "data" / "photos" / "00001.png") +
                        " --attr HairColor=Black --attr Mouth=Frown --out " + q(out / "p.png"));
  ASSERT_EQ(ok.code, 0);
  EXPECT_EQ(listing(out), std::set<std::string>{"p.png"});
  EXPECT_EQ(read_png(out / "p.png").shape(), (Shape{1, 3, 16, 16}));
  const json j = json::parse(ok.out);
  EXPECT_EQ(j["applied_attributes"], (json{{"HairColor", "Black"}, {"Mouth", "Frown"}}));
  const std::string first = read_file(out / "p.png");
  ASSERT_EQ(cli("generate --checkpoint " + q(checkpoint()) + " --photo " +
                q(d() / "data" / "photos" / "00001.png") +
                " --attr HairColor=Black --attr Mouth=Frown --out " + q(out / "p.png")).code,
            0);
  EXPECT_EQ(read_file(out / "p.png"), first);
}

TEST_F(Cli, GenerateRejectsBadAttributes) {
  const std::string base = "generate --checkpoint " + q(checkpoint()) + " --photo " +
                           q(d() / "data" / "photos" / "00001.png") + " --out " +
                           q(d() / "bad.png");
  EXPECT_EQ(cli(base + " --attr Mouth=Grin").code, 3);
  EXPECT_EQ(cli(base + " --attr Hat=Top").code, 3);
  EXPECT_EQ(cli(base + " --attr Mouth=").code, 2);
  EXPECT_EQ(cli(base + " --attr Mouth=Smile --attr Mouth=Frown").code, 2);
  EXPECT_FALSE(fs::exists(d() / "bad.png"));
}

TEST_F(Cli, CorruptInputsExitThree) {
  const fs::path broken = d() / "broken_ck";
  fs::create_directories(broken);
  fs::copy(checkpoint(), broken, fs::copy_options::overwrite_existing);
  write_file_atomic(broken / "params.bin", "garbage");
  EXPECT_EQ(cli("eval --checkpoint " + q(broken) + " --manifest " + q(manifest()) +
                " --report " + q(d() / "r.json")).code,
            3);
  write_file_atomic(d() / "not.png", "nope");
  EXPECT_EQ(cli("generate --checkpoint " + q(checkpoint()) + " --photo " + q(d() / "not.png") +
                " --out " + q(d() / "n.png")).code,
            3);
}

TEST_F(Cli, ServeOnBusyPortExitsFour) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(fd, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  EXPECT_EQ(cli("serve --checkpoint " + q(checkpoint()) + " --host 127.0.0.1 --port " +
                std::to_string(port)).code,
            4);
  ::close(fd);
}

}  // namespace
}  // namespace attrport
