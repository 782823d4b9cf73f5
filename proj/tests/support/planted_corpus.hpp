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

// Attribute corpus with one planted dependency: Rainy co-occurs with Coat
// and never with Dress. Every other type is filled at random.

#pragma once

#include <cstdint>

#include "attrport/embeddings.hpp"
#include "attrport/random.hpp"
#include "attrport/schema.hpp"

namespace attrport::testing {

inline AttributeBagCorpus planted_corpus(const AttributeSchema& schema,
                                         std::uint64_t seed, int rainy_bags = 200,
                                         int other_bags = 400) {
  Rng rng(seed);
  auto random_value = [&](const AttributeTypeSpec& t) {
    return t.values[static_cast<std::size_t>(uniform01(rng) * t.values.size())];
  };
  auto filler = [&](AttributeSet& bag) {
    for (const auto& t : schema.types()) {
      if (t.name == "Weather" || t.name == "Clothing") continue;
      if (uniform01(rng) < 0.3) bag[t.name] = random_value(t);
    }
  };
  const auto& weather = schema.types()[*schema.find_type("Weather")];
  const auto& clothing = schema.types()[*schema.find_type("Clothing")];
  AttributeBagCorpus corpus;
  for (int i = 0; i < rainy_bags; ++i) {
    AttributeSet bag{{"Weather", "Rainy"}, {"Clothing", "Coat and Jacket"}};
    filler(bag);
    corpus.push_back(bag);
  }
  for (int i = 0; i < other_bags; ++i) {
    AttributeSet bag;
    std::string w;
    do w = random_value(weather);
    while (w == "Rainy");
    bag["Weather"] = w;
    bag["Clothing"] = uniform01(rng) < 0.5 ? "Dress" : random_value(clothing);
    filler(bag);
    corpus.push_back(bag);
  }
  shuffle(corpus.begin(), corpus.end(), rng);
  return corpus;
}

/// cos(Rainy, Coat) - cos(Rainy, Dress) after training on one planted corpus.
inline double planted_margin(const AttributeSchema& schema, std::uint64_t seed) {
  SkipGramOptions o;
  o.seed = seed;
  const auto r = train_embeddings(planted_corpus(schema, seed), schema, o);
  const auto& rainy = r.table.at("Weather", "Rainy");
  return cosine_similarity(rainy, r.table.at("Clothing", "Coat and Jacket")) -
         cosine_similarity(rainy, r.table.at("Clothing", "Dress"));
}

}  // namespace attrport::testing
