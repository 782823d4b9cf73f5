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

// Two-headed discriminator: shared conv trunk, then a realness logit and
// one sigmoid logit per attribute slot.

#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/layers.hpp"
#include "attrport/schema.hpp"
#include "attrport/tensor.hpp"

namespace attrport {

struct DiscriminatorConfig {
  int image_size = 64;
  int channels = 3;
  int blocks = 4;  // stride-2 conv blocks, clipped to log2(image_size)
  int base_filters = 32;
  int max_filters = 256;
  int hidden = 128;
  int num_slots = 82;
  double leaky_slope = 0.2;
  bool instance_norm = true;

  int effective_blocks() const;
  int block_channels(int i) const;
  bool block_norm(int i) const;
  int feature_dim() const { return hidden; }
  void validate() const;

  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

template <typename T>
class Discriminator {
 public:
  struct Trace {
    Tensor<T> x;
    std::vector<Tensor<T>> conv, norm, act;
    Tensor<T> hidden_pre, hidden;  // hidden = penultimate features
    Tensor<T> real_logit;          // (N,1,1,1)
    Tensor<T> attr_logit;          // (N,K,1,1)
  };

  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }

  Trace forward(const Tensor<T>& x) const;

  /// Gradients w.r.t. both logit heads. Returns dL/dx when want_dx; parameter
  /// grads are accumulated only when accumulate_params.
  Tensor<T> backward(const Trace& trace, const Tensor<T>& d_real_logit,
                     const Tensor<T>& d_attr_logit, bool want_dx,
                     bool accumulate_params);

  ParamList<T> parameters();
  void zero_grad();
  double min_abs_preactivation(const Trace& trace) const;

 private:
  DiscriminatorConfig config_;
  std::vector<Conv2d<T>> conv_;
  std::vector<InstanceNorm<T>> norm_;
  Dense<T> hidden_, real_head_, attr_head_;
};

/// sigmoid of every entry, in double.
template <typename T>
std::vector<double> sigmoid_values(const Tensor<T>& logits);

/// Argmax readout of sigmoid attribute logits for one sample.
template <typename T>
AttributeSet classify_attributes(const Tensor<T>& attr_logits, int sample,
                                 const AttributeSchema& schema);

extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace attrport
