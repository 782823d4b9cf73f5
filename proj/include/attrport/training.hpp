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

// Adversarial training: one discriminator update then one generator update
// per batch, Adam for both, seeded augmentation and checkpointed resume.
//
// All randomness is derived from (seed, epoch, step, sample) so a run that
// resumes at an epoch boundary replays exactly the draws of an
// uninterrupted run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/dataset.hpp"
#include "attrport/discriminator.hpp"
#include "attrport/embeddings.hpp"
#include "attrport/generator.hpp"
#include "attrport/losses.hpp"
#include "attrport/optimizer.hpp"
#include "attrport/schema.hpp"

namespace attrport {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate_g = 2e-4;
  double learning_rate_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  LossWeights weights;
  std::uint64_t seed = 1;
  bool augment_flip = true;
  bool augment_rotate = true;
  double max_rotation_deg = 10.0;
  /// Per-type probability of hiding an attribute from the generator.
  double attribute_dropout = 0.1;
  /// Train the discriminator's attribute head on generated images (the
  /// literal objective) instead of on real portraits.
  bool classify_fakes_in_d = false;
  /// Save a numbered checkpoint every this many epochs; 0 keeps only the
  /// final one.
  int checkpoint_every = 0;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  int image_size() const { return generator.image_size; }
  /// Full-scale settings: 600 epochs, batch 32.
  static TrainConfig full_scale();
  void validate() const;
  nlohmann::json to_json() const;
  /// A `"preset": "full"` key starts from full_scale() instead of the defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct AugmentParams {
  bool flip = false;
  double angle_deg = 0.0;
};

AugmentParams sample_augment(Rng& rng, bool flip, bool rotate, double max_deg);
/// Flip, then rotate about the center with edge padding, then map [0,1] to
/// [-1,1]. img is (1,C,H,W).
Image apply_augment(const Image& img, const AugmentParams& p);
/// sample_augment + apply_augment with the default switches.
Image augment(const Image& img, Rng& rng);
Image flip_horizontal(const Image& img);
Image rotate_image(const Image& img, double angle_deg);

/// Images in [0,1] plus per-sample slot indices and one-hot targets.
struct TrainingData {
  Tensor<float> photos;
  Tensor<float> portraits;
  SlotBatch slots;
  std::vector<OneHotVector> targets;

  int size() const { return photos.shape().n; }
};

TrainingData make_training_data(const LoadedImages& images,
                                const AttributeSchema& schema);

struct Batch {
  Tensor<float> x;  // photos in [-1,1]
  Tensor<float> y;  // portraits in [-1,1]
  SlotBatch slots;  // generator conditioning (after dropout)
  std::vector<double> target;   // N*K ground-truth one-hots
  std::vector<double> gen_mask; // N*K, 0 on slots of hidden types
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const AttributeSchema& schema,
          const EmbeddingTable* embeddings = nullptr);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return config_; }
  const AttributeSchema& schema() const { return schema_; }
  int epoch() const { return epoch_; }
  std::int64_t step() const { return step_; }

  Generator<float>& generator() { return g_; }
  const Generator<float>& generator() const { return g_; }
  Discriminator<float>& discriminator() { return d_; }
  const Discriminator<float>& discriminator() const { return d_; }
  Adam<float>& optimizer_g() { return opt_g_; }
  Adam<float>& optimizer_d() { return opt_d_; }
  const Adam<float>& optimizer_g() const { return opt_g_; }
  const Adam<float>& optimizer_d() const { return opt_d_; }
  void set_counters(int epoch, std::int64_t step) { epoch_ = epoch; step_ = step; }

  /// Augmented, dropout-masked batch for step `step_in_epoch` of `epoch`.
  Batch make_batch(const TrainingData& data, const std::vector<int>& indices,
                   int epoch, int step_in_epoch) const;
  /// Sample order of an epoch.
  std::vector<int> epoch_order(int n, int epoch) const;

  /// One D update then one G update. Throws TrainingError on a non-finite
  /// loss.
  LossReport train_step(const Batch& batch);

  bool parameters_finite();
  SlotBatch slots_for(const std::vector<AttributeSet>& attrs) const;

 private:
  TrainConfig config_;
  AttributeSchema schema_;
  Generator<float> g_;
  Discriminator<float> d_;
  Adam<float> opt_g_, opt_d_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
};

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  LossReport losses;
  nlohmann::json to_json() const;
};

struct TrainHooks {
  /// Receives every step record.
  std::function<void(const StepRecord&)> on_step;
  std::function<void(int epoch)> on_epoch;
};

/// Runs epochs trainer.epoch() .. config.epochs - 1. Appends one JSON line
/// per step to out_dir/train_log.jsonl, writes numbered checkpoints at the
/// configured cadence and the final state to out_dir/final.
void train(Trainer& trainer, const TrainingData& data,
           const std::filesystem::path& out_dir, const TrainHooks& hooks = {});

// Checkpoints: a directory holding manifest.json and params.bin.

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Trainer& trainer, const std::filesystem::path& dir);
/// When `expected` is given its hash must match the checkpoint's schema.
std::unique_ptr<Trainer> load_checkpoint(const std::filesystem::path& dir,
                                         const AttributeSchema* expected = nullptr);
/// sha256 of the checkpoint's manifest.json.
std::string checkpoint_model_id(const std::filesystem::path& dir);

}  // namespace attrport
