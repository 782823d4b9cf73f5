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

#include "attrport/discriminator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace attrport {

int DiscriminatorConfig::effective_blocks() const {
  const int log2_size = std::countr_zero(static_cast<unsigned>(image_size));
  return std::min(blocks, log2_size);
}

int DiscriminatorConfig::block_channels(int i) const {
  return std::min(base_filters << i, max_filters);
}

bool DiscriminatorConfig::block_norm(int i) const {
  return instance_norm && i > 0 && i < effective_blocks() - 1 &&
         (image_size >> (i + 1)) > 1;
}

void DiscriminatorConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("discriminator config: " + m);
  };
  if (image_size < 2 || (image_size & (image_size - 1)) != 0)
    fail("image_size must be a power of 2");
  if (blocks < 1) fail("blocks must be >= 1");
  if (channels < 1 || base_filters < 1 || max_filters < 1 || hidden < 1)
    fail("widths must be positive");
  if (num_slots < 1) fail("num_slots must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
    fail("leaky_slope must be in [0, 1)");
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"image_size", image_size},   {"channels", channels},
          {"blocks", blocks},           {"base_filters", base_filters},
          {"max_filters", max_filters}, {"hidden", hidden},
          {"num_slots", num_slots},     {"leaky_slope", leaky_slope},
          {"instance_norm", instance_norm}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.blocks = j.value("blocks", c.blocks);
  c.base_filters = j.value("base_filters", c.base_filters);
  c.max_filters = j.value("max_filters", c.max_filters);
  c.hidden = j.value("hidden", c.hidden);
  c.num_slots = j.value("num_slots", c.num_slots);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.instance_norm = j.value("instance_norm", c.instance_norm);
  c.validate();
  return c;
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config,
                                std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int nb = config_.effective_blocks();
  norm_.resize(nb);
  for (int i = 0; i < nb; ++i) {
    const int in = i == 0 ? config_.channels : config_.block_channels(i - 1);
    const std::string name = "discriminator/conv" + std::to_string(i);
    conv_.emplace_back(name, in, config_.block_channels(i), rng);
    if (config_.block_norm(i))
      norm_[i] = InstanceNorm<T>(name + "_norm", config_.block_channels(i));
  }
  const int side = config_.image_size >> nb;
  const int flat = config_.block_channels(nb - 1) * side * side;
  hidden_ = Dense<T>("discriminator/hidden", flat, config_.hidden, rng);
  real_head_ = Dense<T>("discriminator/realness", config_.hidden, 1, rng);
  attr_head_ = Dense<T>("discriminator/attributes", config_.hidden,
                        config_.num_slots, rng);
}

template <typename T>
typename Discriminator<T>::Trace Discriminator<T>::forward(const Tensor<T>& x) const {
  require_shape(x.shape(),
                Shape{x.shape().n, config_.channels, config_.image_size,
                      config_.image_size},
                "discriminator input");
  const int nb = config_.effective_blocks();
  const T slope = static_cast<T>(config_.leaky_slope);
  Trace t;
  t.x = x;
  t.conv.resize(nb);
  t.norm.resize(nb);
  t.act.resize(nb);
  const Tensor<T>* a = &t.x;
  for (int i = 0; i < nb; ++i) {
    t.conv[i] = conv_[i].forward(*a);
    const Tensor<T>* pre = &t.conv[i];
    if (config_.block_norm(i)) {
      t.norm[i] = norm_[i].forward(t.conv[i]);
      pre = &t.norm[i];
    }
    kernels::leaky_relu_forward(*pre, slope, t.act[i]);
    a = &t.act[i];
  }
  t.hidden_pre = hidden_.forward(*a);
  kernels::leaky_relu_forward(t.hidden_pre, slope, t.hidden);
  t.real_logit = real_head_.forward(t.hidden);
  t.attr_logit = attr_head_.forward(t.hidden);
  return t;
}

template <typename T>
Tensor<T> Discriminator<T>::backward(const Trace& t, const Tensor<T>& d_real,
                                     const Tensor<T>& d_attr, bool want_dx,
                                     bool accumulate_params) {
  require_shape(d_real.shape(), t.real_logit.shape(), "d_real_logit");
  require_shape(d_attr.shape(), t.attr_logit.shape(), "d_attr_logit");
  const int nb = config_.effective_blocks();
  const T slope = static_cast<T>(config_.leaky_slope);
  const bool p = accumulate_params;

  Tensor<T> d_hidden = real_head_.backward(t.hidden, d_real, true, p);
  kernels::add_inplace(d_hidden, attr_head_.backward(t.hidden, d_attr, true, p));
  Tensor<T> d_pre;
  kernels::leaky_relu_backward(t.hidden_pre, d_hidden, slope, d_pre);
  Tensor<T> d_act = hidden_.backward(t.act[nb - 1], d_pre, true, p);
  d_act.reshape_inplace(t.act[nb - 1].shape());
  for (int i = nb - 1; i >= 0; --i) {
    const bool norm = config_.block_norm(i);
    kernels::leaky_relu_backward(norm ? t.norm[i] : t.conv[i], d_act, slope, d_pre);
    if (norm) d_pre = norm_[i].backward(t.conv[i], d_pre, p);
    const Tensor<T>& input = i == 0 ? t.x : t.act[i - 1];
    const bool need_dx = i > 0 || want_dx;
    d_act = conv_[i].backward(input, d_pre, need_dx, p);
  }
  return want_dx ? d_act : Tensor<T>();
}

template <typename T>
ParamList<T> Discriminator<T>::parameters() {
  ParamList<T> out;
  for (int i = 0; i < config_.effective_blocks(); ++i) {
    conv_[i].collect(out);
    if (config_.block_norm(i)) norm_[i].collect(out);
  }
  hidden_.collect(out);
  real_head_.collect(out);
  attr_head_.collect(out);
  return out;
}

template <typename T>
void Discriminator<T>::zero_grad() {
  for (Param<T>* p : parameters()) p->zero_grad();
}

template <typename T>
double Discriminator<T>::min_abs_preactivation(const Trace& t) const {
  double m = min_abs(t.hidden_pre);
  for (int i = 0; i < config_.effective_blocks(); ++i)
    m = std::min(m, min_abs(config_.block_norm(i) ? t.norm[i] : t.conv[i]));
  return m;
}

template <typename T>
std::vector<double> sigmoid_values(const Tensor<T>& logits) {
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i])));
  return out;
}

template <typename T>
AttributeSet classify_attributes(const Tensor<T>& attr_logits, int sample,
                                 const AttributeSchema& schema) {
  const int k = static_cast<int>(attr_logits.shape().per_sample());
  if (k != schema.num_slots())
    throw std::invalid_argument("classifier has " + std::to_string(k) +
                                " slots, schema has " +
                                std::to_string(schema.num_slots()));
  std::vector<double> probs(k);
  const T* row = attr_logits.sample(sample);
  for (int i = 0; i < k; ++i)
    probs[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(row[i])));
  return decode_onehot(probs, schema);
}

template std::vector<double> sigmoid_values(const Tensor<float>&);
template std::vector<double> sigmoid_values(const Tensor<double>&);
template AttributeSet classify_attributes(const Tensor<float>&, int,
                                          const AttributeSchema&);
template AttributeSet classify_attributes(const Tensor<double>&, int,
                                          const AttributeSchema&);
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace attrport
