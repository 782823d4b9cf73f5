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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "attrport/archive.hpp"
#include "attrport/embeddings.hpp"
#include "support/planted_corpus.hpp"

namespace attrport {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("attrport_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(SkipGram, PlantedDependencyIsRecovered) {
  const auto schema = default_schema();
  EXPECT_GT(testing::planted_margin(schema, 1), 0.0);
}

TEST(SkipGram, PlantedDependencyHoldsAcrossSeeds) {
  const auto schema = default_schema();
  const auto start = std::chrono::steady_clock::now();
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    wins += testing::planted_margin(schema, seed) > 0.0;
  EXPECT_GE(wins, 19);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
            60.0);
}

TEST(SkipGram, LossTrendsDownOnPlantedCorpus) {
  const auto schema = default_schema();
  SkipGramOptions o;
  o.epochs = 40;
  const auto r = train_embeddings(testing::planted_corpus(schema, 3), schema, o);
  ASSERT_EQ(r.epoch_loss.size(), 40u);
  auto window = [&](int from) {
    double s = 0;
    for (int i = from; i < from + 5; ++i) s += r.epoch_loss[i];
    return s / 5;
  };
  for (int w = 0; w + 10 <= 40; w += 5) EXPECT_LE(window(w + 5), window(w) + 1e-9);
}

TEST(SkipGram, DeterministicForASeed) {
  const auto schema = default_schema();
  const auto corpus = testing::planted_corpus(schema, 5, 50, 50);
  SkipGramOptions o;
  o.epochs = 5;
  o.seed = 9;
  const auto a = train_embeddings(corpus, schema, o);
  const auto b = train_embeddings(corpus, schema, o);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  o.seed = 10;
  EXPECT_NE(train_embeddings(corpus, schema, o).table, a.table);
}

TEST(SkipGram, SingleAssignmentBagReturnsInitialTable) {
  const auto schema = default_schema();
  SkipGramOptions o;
  o.dim = 8;
  o.seed = 4;
  const auto r = train_embeddings({{{"Gender", "Male"}}}, schema, o);
  EXPECT_EQ(r.pairs_per_epoch, 0u);
  EXPECT_EQ(r.table, initial_embeddings(schema, 8, 4));
}

TEST(SkipGram, RejectsBadInput) {
  const auto schema = default_schema();
  SkipGramOptions o;
  EXPECT_THROW(train_embeddings({}, schema, o), std::invalid_argument);
  o.dim = 0;
  EXPECT_THROW(train_embeddings({{{"Gender", "Male"}}}, schema, o), std::invalid_argument);
  o.dim = 4;
  EXPECT_THROW(train_embeddings({{{"Gender", "Robot"}}}, schema, o), std::invalid_argument);
}

TEST(InitialEmbeddings, CoverSchemaWithinRange) {
  const auto schema = default_schema();
  const auto t = initial_embeddings(schema, 16, 2);
  EXPECT_EQ(t.vectors.size(), 82u);
  EXPECT_NO_THROW(t.check_covers(schema));
  for (const auto& [key, v] : t.vectors)
    for (float x : v) EXPECT_LE(std::abs(x), 0.5f / 16);
}

TEST(EmbedSet, FixedWidthCanonicalLayout) {
  const auto schema = default_schema();
  const auto t = initial_embeddings(schema, 16, 2);
  AttributeSet full;
  for (const auto& type : schema.types()) full[type.name] = type.values.back();
  EXPECT_EQ(embed_set(full, t, schema).size(), 176u);

  const auto empty = embed_set({}, t, schema);
  EXPECT_EQ(empty.size(), 176u);
  for (float x : empty) EXPECT_EQ(x, 0.0f);

  const auto v = embed_set({{"Gender", "Female"}}, t, schema);
  const int g = *schema.find_type("Gender");
  const auto& want = t.at("Gender", "Female");
  for (int i = 0; i < 16; ++i) EXPECT_EQ(v[g * 16 + i], want[i]);

  AttributeSet a, b;
  a["Time"] = "After 1970";
  a["Age"] = "Child";
  b["Age"] = "Child";
  b["Time"] = "After 1970";
  EXPECT_EQ(embed_set(a, t, schema), embed_set(b, t, schema));
}

TEST(EmbedSet, MissingPairThrows) {
  const auto schema = default_schema();
  auto t = initial_embeddings(schema, 4, 2);
  t.vectors.erase({"Gender", "Other"});
  EXPECT_THROW(t.check_covers(schema), std::invalid_argument);
  EXPECT_ANY_THROW(embed_set({{"Gender", "Other"}}, t, schema));
}

TEST(Cosine, HandValues) {
  const std::vector<float> a{1, 0}, b{0, 2}, c{3, 0};
  EXPECT_NEAR(cosine_similarity(a, b), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(a, c), 1.0, 1e-12);
}

TEST(EmbeddingFile, RoundTripAndCorruption) {
  const auto schema = toy_schema();
  const auto t = initial_embeddings(schema, 8, 3);
  const auto dir = temp_dir("emb");
  const auto path = dir / "emb.bin";
  save_embeddings(t, path);
  EXPECT_TRUE(fs::exists(path.string() + ".json"));
  EXPECT_EQ(load_embeddings(path), t);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "XXXX" << bytes.substr(4);
  }
  EXPECT_THROW(load_embeddings(dir / "bad.bin"), ArchiveError);
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 3);
  }
  EXPECT_THROW(load_embeddings(dir / "short.bin"), ArchiveError);
  EXPECT_ANY_THROW(load_embeddings(dir / "missing.bin"));
}

}  // namespace
}  // namespace attrport
