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

#include "attrport/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "attrport/archive.hpp"
#include "attrport/hashing.hpp"
#include "attrport/random.hpp"

namespace attrport {
namespace {

constexpr std::string_view kEmbeddingMagic = "APEMBED1";
constexpr std::uint32_t kEmbeddingVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

const std::vector<float>& EmbeddingTable::at(const std::string& type,
                                             const std::string& value) const {
  auto it = vectors.find({type, value});
  if (it == vectors.end())
    throw std::invalid_argument("embedding table has no vector for (" + type +
                            ", " + value + ")");
  return it->second;
}

void EmbeddingTable::check_covers(const AttributeSchema& schema) const {
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
  for (const auto& t : schema.types())
    for (const auto& v : t.values) {
      const auto& vec = at(t.name, v);
      if (static_cast<int>(vec.size()) != dim)
        throw std::invalid_argument("embedding for (" + t.name + ", " + v +
                                    ") has wrong length");
      for (float f : vec)
        if (!std::isfinite(f))
          throw std::invalid_argument("non-finite embedding for (" + t.name +
                                      ", " + v + ")");
    }
}

EmbeddingTable initial_embeddings(const AttributeSchema& schema, int dim,
                                  std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
  Rng rng(derive_seed(seed, {0x656d62}));
  EmbeddingTable table;
  table.dim = dim;
  const double half = 0.5 / dim;
  for (const auto& t : schema.types())
    for (const auto& v : t.values) {
      std::vector<float> vec(dim);
      for (auto& f : vec) f = static_cast<float>(uniform(rng, -half, half));
      table.vectors[{t.name, v}] = std::move(vec);
    }
  return table;
}

SkipGramResult train_embeddings(const AttributeBagCorpus& corpus,
                                const AttributeSchema& schema,
                                const SkipGramOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("empty attribute corpus");
  if (options.dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
  if (options.negatives < 0 || options.epochs < 0)
    throw std::invalid_argument("negatives and epochs must be >= 0");

  const int k = schema.num_slots();
  const int d = options.dim;

  // Tokens are global slots.
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> counts(k, 0.0);
  for (std::size_t b = 0; b < corpus.size(); ++b) {
    if (corpus[b].empty())
      throw std::invalid_argument("bag " + std::to_string(b) +
                                  " has no attributes");
    std::vector<int> tokens;
    for (int s : slot_indices(corpus[b], schema))
      if (s >= 0) tokens.push_back(s);
    for (int t : tokens) counts[t] += 1.0;
    for (int c : tokens)
      for (int o : tokens)
        if (c != o) pairs.emplace_back(c, o);
  }

  // Center vectors start from the same draw initial_embeddings() makes.
  const EmbeddingTable init = initial_embeddings(schema, d, options.seed);
  std::vector<double> center(static_cast<std::size_t>(k) * d);
  std::vector<double> context(center.size(), 0.0);
  for (int t = 0; t < schema.num_types(); ++t)
    for (int v = 0; v < schema.num_values(t); ++v) {
      const auto& vec = init.at(schema.types()[t].name, schema.types()[t].values[v]);
      std::copy(vec.begin(), vec.end(), center.begin() + schema.slot(t, v) * d);
    }

  std::vector<double> cumulative(k);
  double acc = 0.0;
  for (int t = 0; t < k; ++t) {
    acc += std::pow(counts[t], 0.75);
    cumulative[t] = acc;
  }

  SkipGramResult result;
  result.pairs_per_epoch = pairs.size();
  Rng rng(derive_seed(options.seed, {0x736770}));
  std::vector<double> grad_center(d);

  if (!pairs.empty()) {
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      shuffle(pairs.begin(), pairs.end(), rng);
      double loss = 0.0;
      for (const auto& [c, o] : pairs) {
        double* vc = &center[static_cast<std::size_t>(c) * d];
        std::fill(grad_center.begin(), grad_center.end(), 0.0);
        for (int s = 0; s <= options.negatives; ++s) {
          int target = o;
          double label = 1.0;
          if (s > 0) {
            const double u = uniform01(rng) * acc;
            target = static_cast<int>(
                std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                cumulative.begin());
            target = std::min(target, k - 1);
            if (target == o) continue;
            label = 0.0;
          }
          double* ut = &context[static_cast<std::size_t>(target) * d];
          double dot = 0.0;
          for (int i = 0; i < d; ++i) dot += vc[i] * ut[i];
          loss -= label > 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
          const double g = (label - sigmoid(dot)) * options.learning_rate;
          for (int i = 0; i < d; ++i) {
            grad_center[i] += g * ut[i];
            ut[i] += g * vc[i];
          }
        }
        for (int i = 0; i < d; ++i) vc[i] += grad_center[i];
      }
      result.epoch_loss.push_back(loss / static_cast<double>(pairs.size()));
    }
  }

  result.table.dim = d;
  for (int t = 0; t < schema.num_types(); ++t)
    for (int v = 0; v < schema.num_values(t); ++v) {
      const std::size_t at = static_cast<std::size_t>(schema.slot(t, v)) * d;
      std::vector<float> vec(d);
      for (int i = 0; i < d; ++i)
        vec[i] = static_cast<float>(center[at + i] + context[at + i]);
      result.table.vectors[{schema.types()[t].name, schema.types()[t].values[v]}] =
          std::move(vec);
    }
  return result;
}

std::vector<float> embed_set(const AttributeSet& attrs,
                             const EmbeddingTable& table,
                             const AttributeSchema& schema) {
  validate(attrs, schema);
  const int d = table.dim;
  std::vector<float> out(static_cast<std::size_t>(schema.num_types()) * d, 0.0f);
  for (int t = 0; t < schema.num_types(); ++t) {
    const auto& name = schema.types()[t].name;
    auto it = attrs.find(name);
    if (it == attrs.end()) continue;
    const auto& vec = table.at(name, it->second);
    if (static_cast<int>(vec.size()) != d)
      throw std::invalid_argument("embedding length mismatch for " + name);
    std::copy(vec.begin(), vec.end(), out.begin() + static_cast<std::size_t>(t) * d);
  }
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void save_embeddings(const EmbeddingTable& table,
                     const std::filesystem::path& path) {
  BinaryWriter w;
  w.raw(kEmbeddingMagic);
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(table.dim));
  w.u32(static_cast<std::uint32_t>(table.vectors.size()));
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [key, vec] : table.vectors) {
    if (static_cast<int>(vec.size()) != table.dim)
      throw ArchiveError("embedding length mismatch for " + key.first);
    w.str(key.first);
    w.str(key.second);
    w.f32s(vec);
    pairs.push_back({key.first, key.second});
  }
  w.save(path);
  nlohmann::json manifest = {{"format", "attrport-embeddings"},
                             {"version", kEmbeddingVersion},
                             {"dim", table.dim},
                             {"count", table.vectors.size()},
                             {"sha256", sha256_hex(w.bytes())},
                             {"pairs", pairs}};
  write_file_atomic(path.string() + ".json", manifest.dump(2) + "\n");
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::open(path);
  if (r.raw(kEmbeddingMagic.size()) != kEmbeddingMagic)
    throw ArchiveError(path.string() + ": not an embedding file");
  const std::uint32_t version = r.u32();
  if (version != kEmbeddingVersion)
    throw ArchiveError(path.string() + ": unsupported embedding version " +
                       std::to_string(version));
  EmbeddingTable table;
  table.dim = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string type = r.str();
    std::string value = r.str();
    table.vectors[{std::move(type), std::move(value)}] = r.f32s(table.dim);
  }
  if (!r.at_end()) throw ArchiveError(path.string() + ": trailing bytes");
  return table;
}

}  // namespace attrport
