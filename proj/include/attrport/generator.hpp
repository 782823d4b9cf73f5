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

// Attribute-aware UNet generator.
//
//   photo --enc0--> ... --enc{L-1}--> deepest map --dense--> h
//   h^a = ReLU(W_h h + W_v v + b),  v = concatenated attribute embeddings
//   h^a --dense--> map --dec{L-1}--> ... --dec0--> tanh --> portrait
//
// Encoder level i feeds decoder level i by channel concatenation. In
// attention mode the dense bottleneck is replaced by region/attribute
// attention over the deepest feature map, whose output [h; p] enters the
// deepest decoder block directly.

#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/embeddings.hpp"
#include "attrport/layers.hpp"
#include "attrport/schema.hpp"
#include "attrport/tensor.hpp"

namespace attrport {

enum class FusionMode { kBottleneck, kAttention };

std::string to_string(FusionMode m);
FusionMode fusion_mode_from_string(const std::string& s);

struct GeneratorConfig {
  int image_size = 64;
  int channels = 3;
  int depth = 5;
  int base_filters = 32;
  int max_filters = 256;
  int d_h = 256;
  int num_types = 11;  // attribute types, each owning one embedding block
  int embed_dim = 16;  // d_w
  int num_slots = 82;  // one embedding row per (type, value)
  FusionMode fusion = FusionMode::kBottleneck;
  double leaky_slope = 0.2;
  bool instance_norm = true;

  int attr_dim() const { return num_types * embed_dim; }
  /// Output channels of encoder level i.
  int level_channels(int i) const;
  /// Spatial side of the deepest feature map.
  int bottleneck_side() const { return image_size >> depth; }
  bool encoder_norm(int level) const;
  bool decoder_norm(int level) const;
  /// Throws std::invalid_argument.
  void validate() const;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Per sample, per attribute type: the global slot index, or -1 if unset.
using SlotBatch = std::vector<std::vector<int>>;

/// h^a = ReLU(W_h h + W_v v + b). h (N,d_h), v (N,A), W_h (d_h,d_h),
/// W_v (d_h,A), b (1,d_h).
template <typename T>
Tensor<T> fuse(const Tensor<T>& h, const Tensor<T>& v, const Tensor<T>& w_h,
               const Tensor<T>& w_v, const Tensor<T>& b);

template <typename T>
struct AttentionOutput {
  Tensor<T> stacked;         // (1, 2C, H, W): [features; context]
  Tensor<T> context;         // (1, C, H, W): p_j per region
  std::vector<double> beta;  // regions x attributes, row-major
  int regions = 0;
  int attributes = 0;
};

/// Region/attribute attention over one feature map. features (1,C,H,W),
/// attributes (N_w, d_w) one row per attribute, w_q (C, d_w).
/// beta[j][n] = softmax_n(h_j . W_q c_n); p_j = sum_n beta[j][n] W_q c_n.
template <typename T>
AttentionOutput<T> attention_fuse(const Tensor<T>& features,
                                  const Tensor<T>& attributes,
                                  const Tensor<T>& w_q);

template <typename T>
class Generator {
 public:
  struct Encoded {
    Tensor<T> h;                 // (N, d_h, 1, 1); empty in attention mode
    std::vector<Tensor<T>> skips;  // one per level, finest first
  };

  /// Every intermediate needed by backward().
  struct Trace {
    Tensor<T> x;
    SlotBatch slots;
    std::vector<Tensor<T>> enc_conv, enc_norm, enc_act;
    Tensor<T> v;
    Tensor<T> flat, h, fuse_pre, ha, up_pre, up;
    Tensor<T> q;                // (N, num_types, C): W_q c_n per sample
    std::vector<double> beta;   // (N, regions, num_types), 0 for unset types
    Tensor<T> context;          // (N, C, s, s)
    std::vector<Tensor<T>> dec_in, dec_conv, dec_norm, dec_act;
    Tensor<T> out;
  };

  Generator() = default;
  Generator(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }

  Tensor<T> embed(const SlotBatch& slots) const;
  Encoded encode(const Tensor<T>& x) const;
  Tensor<T> fuse(const Tensor<T>& h, const Tensor<T>& v) const;
  /// Bottleneck mode only.
  Tensor<T> decode(const Tensor<T>& ha, const std::vector<Tensor<T>>& skips) const;

  Trace forward(const Tensor<T>& x, const SlotBatch& slots) const;
  Tensor<T> generate(const Tensor<T>& x, const SlotBatch& slots) const {
    return forward(x, slots).out;
  }

  /// Accumulates parameter gradients (embeddings included) for d_out =
  /// dL/d(output).
  void backward(const Trace& trace, const Tensor<T>& d_out);

  ParamList<T> parameters();
  void zero_grad();

  void set_embeddings(const EmbeddingTable& table, const AttributeSchema& schema);
  EmbeddingTable embedding_table(const AttributeSchema& schema) const;

  /// Smallest |preactivation| feeding any ReLU/leaky ReLU in the trace.
  double min_abs_preactivation(const Trace& trace) const;

  const Conv2d<T>& encoder_conv(int i) const { return enc_[i]; }
  const ConvTranspose2d<T>& decoder_conv(int j) const { return dec_[j]; }

 private:
  void check_input(const Tensor<T>& x, const SlotBatch& slots) const;
  Tensor<T> run_decoder(Trace& t) const;
  void attention_forward(Trace& t) const;
  Tensor<T> attention_backward(const Trace& t, const Tensor<T>& d_context,
                               Tensor<T>& d_features);

  GeneratorConfig config_;
  std::vector<Conv2d<T>> enc_;
  std::vector<InstanceNorm<T>> enc_norm_;
  Dense<T> to_hidden_, from_hidden_;
  Param<T> w_h_, w_v_, b_;
  Param<T> w_q_;
  std::vector<ConvTranspose2d<T>> dec_;
  std::vector<InstanceNorm<T>> dec_norm_;
  Param<T> embeddings_;  // (num_slots, embed_dim)
  Tensor<T> zero_bias_;
};

extern template class Generator<float>;
extern template class Generator<double>;

}  // namespace attrport
