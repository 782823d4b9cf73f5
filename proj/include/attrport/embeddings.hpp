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

// Attribute embeddings learned with skip-gram + negative sampling, treating
// the attribute values of one portrait as a single context window.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrport/schema.hpp"

namespace attrport {

using AttributeKey = std::pair<std::string, std::string>;  // (type, value)

struct EmbeddingTable {
  int dim = 0;
  std::map<AttributeKey, std::vector<float>> vectors;

  const std::vector<float>& at(const std::string& type,
                               const std::string& value) const;
  /// Throws if any schema pair is missing, a vector has the wrong length, or
  /// a value is non-finite.
  void check_covers(const AttributeSchema& schema) const;
  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

/// One bag of co-occurring attributes per portrait.
using AttributeBagCorpus = std::vector<AttributeSet>;

struct SkipGramOptions {
  int dim = 16;
  int epochs = 40;
  int negatives = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

struct SkipGramResult {
  EmbeddingTable table;
  /// Mean negative-sampling loss per (center, context) pair, one per epoch.
  /// Empty when the corpus yields no pairs.
  std::vector<double> epoch_loss;
  std::size_t pairs_per_epoch = 0;
};

/// Every ordered pair of distinct attributes inside a bag is one
/// (center, context) example; negatives are drawn from the unigram^0.75
/// distribution over corpus attribute counts. Deterministic for a seed.
SkipGramResult train_embeddings(const AttributeBagCorpus& corpus,
                                const AttributeSchema& schema,
                                const SkipGramOptions& options);

/// Table with the seeded initial vectors, uniform in [-0.5/dim, 0.5/dim].
EmbeddingTable initial_embeddings(const AttributeSchema& schema, int dim,
                                  std::uint64_t seed);

/// Concatenated attribute vector over ALL schema types in canonical order;
/// unassigned types contribute zero blocks. Length num_types * dim.
std::vector<float> embed_set(const AttributeSet& attrs,
                             const EmbeddingTable& table,
                             const AttributeSchema& schema);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Binary file {magic, version, dim, count} + records {type, value, floats},
/// plus a JSON sidecar manifest at `<path>.json`.
void save_embeddings(const EmbeddingTable& table,
                     const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace attrport
