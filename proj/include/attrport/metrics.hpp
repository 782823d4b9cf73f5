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

// Evaluation: Inception Score, Frechet distance, attribute-reconstruction
// F-score, and the affordance / inter-dependency probes built on them. The
// trained discriminator stands in for the external classifier: its attribute
// head gives posteriors and its hidden layer gives FID features.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/discriminator.hpp"
#include "attrport/generator.hpp"
#include "attrport/schema.hpp"

namespace attrport {

/// Rows are images, columns classes; each row sums to 1.
using PosteriorMatrix = std::vector<std::vector<double>>;
/// Rows are images, columns feature dimensions.
using FeatureSet = std::vector<std::vector<double>>;

std::vector<double> marginal(const PosteriorMatrix& p);

struct InceptionScore {
  double is_mean = 1.0;
  double is_std = 0.0;
  double kl_mean = 0.0;  // mean over splits of the un-exponentiated KL
  std::vector<double> split_kl;
};

/// Rows are split into `splits` contiguous chunks.
InceptionScore inception_score(const PosteriorMatrix& p, int splits = 10);

double frechet_distance(const FeatureSet& real, const FeatureSet& gen);

struct FScoreReport {
  std::vector<std::string> types;
  std::vector<std::optional<double>> per_type;  // empty when no support
  std::vector<int> support;
  double average = 0.0;  // mean over supported types

  nlohmann::json to_json() const;
};

/// Micro-F1 per type over (sample, type) pairs where truth sets the type.
FScoreReport attribute_fscore(const std::vector<AttributeSet>& predicted,
                              const std::vector<AttributeSet>& truth,
                              const AttributeSchema& schema);

/// Predictions drawn uniformly per type.
std::vector<AttributeSet> random_predictions(std::size_t n,
                                             const AttributeSchema& schema,
                                             std::uint64_t seed);

/// Expected F-score of uniform guessing: attribute_fscore of
/// random_predictions averaged over `repeats` seeded draws.
FScoreReport random_baseline_fscore(const std::vector<AttributeSet>& truth,
                                    const AttributeSchema& schema, std::uint64_t seed,
                                    int repeats = 100);

// Model-level helpers.

/// photos (N,3,S,S) in [0,1] -> generated images in [-1,1].
Tensor<float> generate_images(const Generator<float>& g, const Tensor<float>& photos,
                              const SlotBatch& slots, int batch_size = 32);

struct ClassifierOutputs {
  std::vector<std::vector<double>> attr_probs;  // per image, K sigmoid outputs
  FeatureSet features;                          // penultimate activations
};

/// images in [-1,1].
ClassifierOutputs run_classifier(const Discriminator<float>& d,
                                 const Tensor<float>& images, int batch_size = 32);

/// Sigmoid outputs renormalized per image over all K slots.
PosteriorMatrix slot_posteriors(const ClassifierOutputs& c);
std::vector<AttributeSet> readout(const ClassifierOutputs& c,
                                  const AttributeSchema& schema);

struct ComboReport {
  AttributeSet combo;
  FScoreReport reconstruction;
  InceptionScore is;
  double fid = 0.0;

  nlohmann::json to_json() const;
};

/// Generates every photo with `combo`, then scores reconstruction of the
/// combo's own types, IS of the slot posteriors and FID against the real
/// portraits. Photos and portraits are in [0,1].
ComboReport combo_report(const AttributeSet& combo, const Generator<float>& g,
                         const Discriminator<float>& d, const AttributeSchema& schema,
                         const Tensor<float>& photos, const Tensor<float>& portraits,
                         int is_splits = 10);

std::pair<ComboReport, ComboReport> affordance_eval(
    const AttributeSet& combo_a, const AttributeSet& combo_b,
    const Generator<float>& g, const Discriminator<float>& d,
    const AttributeSchema& schema, const Tensor<float>& photos,
    const Tensor<float>& portraits, int is_splits = 10);

/// Generates with only `condition` set and returns the mean sigmoid mass of
/// probe_type's slots, renormalized over that type's values.
std::vector<double> interdependency_probe(
    const std::pair<std::string, std::string>& condition,
    const std::string& probe_type, const Generator<float>& g,
    const Discriminator<float>& d, const AttributeSchema& schema,
    const Tensor<float>& photos);

struct MetricReport {
  InceptionScore is;
  double fid = 0.0;
  FScoreReport fscore;
  FScoreReport random_fscore;

  nlohmann::json to_json() const;
  /// One "name<TAB>value" row per metric.
  std::string flat_table() const;
};

/// Generated test portraits scored against their conditioning attributes.
MetricReport evaluate_model(const Generator<float>& g, const Discriminator<float>& d,
                            const AttributeSchema& schema, const Tensor<float>& photos,
                            const Tensor<float>& portraits,
                            const std::vector<AttributeSet>& attrs, int is_splits = 10,
                            std::uint64_t seed = 1);

}  // namespace attrport
