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

#include "attrport/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace attrport {
namespace {

constexpr std::uint64_t kGeneratorStream = 0x47;
constexpr std::uint64_t kDiscriminatorStream = 0x44;
constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kSampleStream = 0x534d;

std::string epoch_dir_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch-%04d", epoch);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.epochs = 600;
  c.batch_size = 32;
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate_g >= 0) || !(learning_rate_d >= 0)) fail("learning rates must be >= 0");
  if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1))
    fail("Adam betas must be in (0, 1)");
  if (!(max_rotation_deg >= 0 && max_rotation_deg <= 180)) fail("max_rotation_deg out of range");
  if (!(attribute_dropout >= 0 && attribute_dropout <= 1)) fail("attribute_dropout must be in [0, 1]");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  weights.validate();
  generator.validate();
  discriminator.validate();
  if (generator.image_size != discriminator.image_size)
    fail("generator and discriminator image sizes differ");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate_g", learning_rate_g},
          {"learning_rate_d", learning_rate_d},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"loss_weights", weights.to_json()},
          {"seed", seed},
          {"augment_flip", augment_flip},
          {"augment_rotate", augment_rotate},
          {"max_rotation_deg", max_rotation_deg},
          {"attribute_dropout", attribute_dropout},
          {"classify_fakes_in_d", classify_fakes_in_d},
          {"checkpoint_every", checkpoint_every},
          {"generator", generator.to_json()},
          {"discriminator", discriminator.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c = j.value("preset", std::string()) == "full" ? full_scale() : TrainConfig();
  if (j.contains("preset") && j["preset"] != "full" && j["preset"] != "desk")
    throw std::invalid_argument("train config: unknown preset");
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("learning_rate"))
    c.learning_rate_g = c.learning_rate_d = j["learning_rate"].get<double>();
  c.learning_rate_g = j.value("learning_rate_g", c.learning_rate_g);
  c.learning_rate_d = j.value("learning_rate_d", c.learning_rate_d);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  if (j.contains("loss_weights")) c.weights = LossWeights::from_json(j["loss_weights"]);
  c.seed = j.value("seed", c.seed);
  c.augment_flip = j.value("augment_flip", c.augment_flip);
  c.augment_rotate = j.value("augment_rotate", c.augment_rotate);
  c.max_rotation_deg = j.value("max_rotation_deg", c.max_rotation_deg);
  c.attribute_dropout = j.value("attribute_dropout", c.attribute_dropout);
  c.classify_fakes_in_d = j.value("classify_fakes_in_d", c.classify_fakes_in_d);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("generator")) c.generator = GeneratorConfig::from_json(j["generator"]);
  if (j.contains("discriminator"))
    c.discriminator = DiscriminatorConfig::from_json(j["discriminator"]);
  if (j.contains("image_size")) {
    c.generator.image_size = c.discriminator.image_size = j["image_size"].get<int>();
  }
  c.validate();
  return c;
}

AugmentParams sample_augment(Rng& rng, bool flip, bool rotate, double max_deg) {
  AugmentParams p;
  const double u_flip = uniform01(rng);
  const double u_angle = uniform01(rng);
  p.flip = flip && u_flip < 0.5;
  p.angle_deg = rotate ? (2.0 * u_angle - 1.0) * max_deg : 0.0;
  return p;
}

Image flip_horizontal(const Image& img) {
  const Shape s = img.shape();
  Image out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at(n, c, y, x) = img.at(n, c, y, s.w - 1 - x);
  return out;
}

Image rotate_image(const Image& img, double angle_deg) {
  if (angle_deg == 0.0) return img;
  const Shape s = img.shape();
  Image out(s);
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cy = (s.h - 1) / 2.0, cx = (s.w - 1) / 2.0;
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = std::clamp(ca * dx + sa * dy + cx, 0.0, s.w - 1.0);
      const double sy = std::clamp(-sa * dx + ca * dy + cy, 0.0, s.h - 1.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, s.w - 1), y1 = std::min(y0 + 1, s.h - 1);
      const double wx = sx - x0, wy = sy - y0;
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          const double top = (1 - wx) * img.at(n, c, y0, x0) + wx * img.at(n, c, y0, x1);
          const double bot = (1 - wx) * img.at(n, c, y1, x0) + wx * img.at(n, c, y1, x1);
          out.at(n, c, y, x) = static_cast<float>((1 - wy) * top + wy * bot);
        }
    }
  return out;
}

Image apply_augment(const Image& img, const AugmentParams& p) {
  Image out = p.flip ? flip_horizontal(img) : img;
  out = rotate_image(out, p.angle_deg);
  return unit_to_signed(out);
}

Image augment(const Image& img, Rng& rng) {
  return apply_augment(img, sample_augment(rng, true, true, 10.0));
}

TrainingData make_training_data(const LoadedImages& images,
                                const AttributeSchema& schema) {
  TrainingData d;
  d.photos = images.photos;
  d.portraits = images.portraits;
  for (const auto& a : images.attrs) {
    d.slots.push_back(slot_indices(a, schema));
    d.targets.push_back(encode_onehot(a, schema));
  }
  return d;
}

namespace {

GeneratorConfig bind_schema(GeneratorConfig g, const AttributeSchema& s) {
  g.num_types = s.num_types();
  g.num_slots = s.num_slots();
  return g;
}

DiscriminatorConfig bind_schema(DiscriminatorConfig d, const AttributeSchema& s) {
  d.num_slots = s.num_slots();
  return d;
}

TrainConfig bind_schema(TrainConfig c, const AttributeSchema& s) {
  c.generator = bind_schema(c.generator, s);
  c.discriminator = bind_schema(c.discriminator, s);
  c.validate();
  return c;
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const AttributeSchema& schema,
                 const EmbeddingTable* embeddings)
    : config_(bind_schema(config, schema)),
      schema_(schema),
      g_(config_.generator, derive_seed(config_.seed, {kGeneratorStream})),
      d_(config_.discriminator, derive_seed(config_.seed, {kDiscriminatorStream})),
      opt_g_(g_.parameters(), {config_.learning_rate_g, config_.adam_beta1,
                               config_.adam_beta2, 1e-8}),
      opt_d_(d_.parameters(), {config_.learning_rate_d, config_.adam_beta1,
                               config_.adam_beta2, 1e-8}) {
  if (embeddings) g_.set_embeddings(*embeddings, schema_);
}

std::vector<int> Trainer::epoch_order(int n, int epoch) const {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(config_.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)}));
  shuffle(order.begin(), order.end(), rng);
  return order;
}

SlotBatch Trainer::slots_for(const std::vector<AttributeSet>& attrs) const {
  SlotBatch out;
  for (const auto& a : attrs) out.push_back(slot_indices(a, schema_));
  return out;
}

Batch Trainer::make_batch(const TrainingData& data, const std::vector<int>& indices,
                          int epoch, int step_in_epoch) const {
  const int n = static_cast<int>(indices.size());
  if (n == 0) throw TrainingError("empty batch");
  const int size = config_.image_size();
  const int k = schema_.num_slots();
  require_shape(data.photos.shape(), Shape{data.size(), 3, size, size}, "training photos");
  Batch b;
  b.x = Tensor<float>(Shape{n, 3, size, size});
  b.y = Tensor<float>(Shape{n, 3, size, size});
  b.slots.resize(n);
  b.target.assign(static_cast<std::size_t>(n) * k, 0.0);
  b.gen_mask.assign(static_cast<std::size_t>(n) * k, 1.0);
  const std::size_t per = b.x.shape().per_sample();
  #pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int idx = indices[i];
    Rng rng(derive_seed(config_.seed, {kSampleStream, static_cast<std::uint64_t>(epoch),
                                       static_cast<std::uint64_t>(step_in_epoch),
                                       static_cast<std::uint64_t>(idx)}));
    const AugmentParams p = sample_augment(rng, config_.augment_flip,
                                           config_.augment_rotate, config_.max_rotation_deg);
    Image x(Shape{1, 3, size, size}), y(Shape{1, 3, size, size});
    std::copy(data.photos.sample(idx), data.photos.sample(idx) + per, x.data());
    std::copy(data.portraits.sample(idx), data.portraits.sample(idx) + per, y.data());
    x = apply_augment(x, p);
    y = apply_augment(y, p);
    std::copy(x.data(), x.data() + per, b.x.sample(i));
    std::copy(y.data(), y.data() + per, b.y.sample(i));
    std::vector<int> slots = data.slots[idx];
    for (int t = 0; t < schema_.num_types(); ++t) {
      const bool drop = uniform01(rng) < config_.attribute_dropout;
      if (drop && slots[t] >= 0) {
        slots[t] = -1;
        for (int v = 0; v < schema_.num_values(t); ++v)
          b.gen_mask[static_cast<std::size_t>(i) * k + schema_.slot(t, v)] = 0.0;
      }
    }
    b.slots[i] = std::move(slots);
    std::copy(data.targets[idx].begin(), data.targets[idx].end(),
              b.target.begin() + static_cast<std::ptrdiff_t>(i) * k);
  }
  return b;
}

LossReport Trainer::train_step(const Batch& batch) {
  const int k = schema_.num_slots();
  const LossWeights& w = config_.weights;
  LossReport r;

  const auto g_trace = g_.forward(batch.x, batch.slots);
  const Tensor<float>& fake = g_trace.out;

  // Discriminator update on detached fakes and real portraits.
  {
    const auto tf = d_.forward(fake);
    const auto tr = d_.forward(batch.y);
    const auto fake_logits = to_doubles(tf.real_logit);
    const auto real_logits = to_doubles(tr.real_logit);
    std::vector<double> d_fake_p, d_real_p;
    for (double z : fake_logits) d_fake_p.push_back(sigmoid(z));
    for (double z : real_logits) d_real_p.push_back(sigmoid(z));
    r.adv_d = adv_loss_d(d_fake_p, d_real_p);

    const auto& cls_trace = config_.classify_fakes_in_d ? tf : tr;
    const auto attr_logits = to_doubles(cls_trace.attr_logit);
    std::vector<double> attr_p;
    for (double z : attr_logits) attr_p.push_back(sigmoid(z));
    const std::span<const double> mask =
        config_.classify_fakes_in_d ? std::span<const double>(batch.gen_mask)
                                    : std::span<const double>();
    r.cls_d = cls_loss(attr_p, batch.target, k, mask);
    r.total_d = total_d(r.adv_d, r.cls_d, w);

    auto cls_grad = cls_logit_grad(attr_logits, batch.target, k, mask);
    for (double& g : cls_grad) g *= w.lambda3;
    const Tensor<float> zero_attr(tf.attr_logit.shape());
    const Tensor<float> cls_t = from_doubles<float>(cls_grad, tf.attr_logit.shape());
    const Tensor<float> gf = from_doubles<float>(adv_d_fake_logit_grad(fake_logits),
                                                 tf.real_logit.shape());
    const Tensor<float> gr = from_doubles<float>(adv_d_real_logit_grad(real_logits),
                                                 tr.real_logit.shape());
    if (!r.finite())
      throw TrainingError("non-finite discriminator loss at step " +
                          std::to_string(step_ + 1) + ": " + r.to_json().dump());
    d_.zero_grad();
    d_.backward(tf, gf, config_.classify_fakes_in_d ? cls_t : zero_attr, false, true);
    d_.backward(tr, gr, config_.classify_fakes_in_d ? zero_attr : cls_t, false, true);
    opt_d_.step();
  }

  // Generator update through the freshly updated discriminator.
  {
    const auto tg = d_.forward(fake);
    const auto logits = to_doubles(tg.real_logit);
    std::vector<double> p;
    for (double z : logits) p.push_back(sigmoid(z));
    r.adv_g = adv_loss_g(p);
    const auto attr_logits = to_doubles(tg.attr_logit);
    std::vector<double> attr_p;
    for (double z : attr_logits) attr_p.push_back(sigmoid(z));
    r.cls_g = cls_loss(attr_p, batch.target, k, batch.gen_mask);
    const auto y = to_doubles(batch.y);
    const auto y_hat = to_doubles(fake);
    r.l1 = l1_loss(y, y_hat);
    r.total_g = total_g(r.adv_g, r.cls_g, r.l1, w);
    if (!r.finite())
      throw TrainingError("non-finite generator loss at step " +
                          std::to_string(step_ + 1) + ": " + r.to_json().dump());

    auto cls_grad = cls_logit_grad(attr_logits, batch.target, k, batch.gen_mask);
    for (double& g : cls_grad) g *= w.lambda1;
    const Tensor<float> d_real = from_doubles<float>(adv_g_logit_grad(logits), tg.real_logit.shape());
    const Tensor<float> d_attr = from_doubles<float>(cls_grad, tg.attr_logit.shape());
    Tensor<float> d_img = d_.backward(tg, d_real, d_attr, true, false);
    const auto l1g = l1_grad(y, y_hat);
    for (std::size_t i = 0; i < l1g.size(); ++i)
      d_img[i] += static_cast<float>(w.lambda2 * l1g[i]);
    g_.zero_grad();
    g_.backward(g_trace, d_img);
    opt_g_.step();
  }
  ++step_;
  return r;
}

bool Trainer::parameters_finite() {
  for (Param<float>* p : g_.parameters())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      if (!std::isfinite(p->value[i])) return false;
  for (Param<float>* p : d_.parameters())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      if (!std::isfinite(p->value[i])) return false;
  return true;
}

nlohmann::json StepRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"step", step}};
  j.update(losses.to_json());
  return j;
}

void train(Trainer& trainer, const TrainingData& data,
           const std::filesystem::path& out_dir, const TrainHooks& hooks) {
  const TrainConfig& cfg = trainer.config();
  const int n = data.size();
  if (n == 0) throw TrainingError("training set is empty");
  std::filesystem::create_directories(out_dir);
  const auto log_path = out_dir / "train_log.jsonl";
  std::ofstream log(log_path, trainer.step() > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw TrainingError("cannot write " + log_path.string());

  const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  for (int epoch = trainer.epoch(); epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = trainer.epoch_order(n, epoch);
    for (int s = 0; s < steps_per_epoch; ++s) {
      const int begin = s * cfg.batch_size;
      const int end = std::min(n, begin + cfg.batch_size);
      std::vector<int> idx(order.begin() + begin, order.begin() + end);
      const Batch batch = trainer.make_batch(data, idx, epoch, s);
      StepRecord rec;
      rec.epoch = epoch;
      rec.losses = trainer.train_step(batch);
      rec.step = trainer.step();
      log << rec.to_json().dump() << '\n';
      if (hooks.on_step) hooks.on_step(rec);
    }
    log.flush();
    trainer.set_counters(epoch + 1, trainer.step());
    const bool cadence = cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0;
    if (cadence || epoch + 1 == cfg.epochs) {
      if (!trainer.parameters_finite())
        throw TrainingError("non-finite parameter after epoch " + std::to_string(epoch + 1));
      if (cadence) save_checkpoint(trainer, out_dir / "checkpoints" / epoch_dir_name(epoch + 1));
    }
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1);
  }
  save_checkpoint(trainer, out_dir / "final");
}

}  // namespace attrport
