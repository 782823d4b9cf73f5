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

#include "attrport/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace attrport {

std::string to_string(FusionMode m) {
  return m == FusionMode::kAttention ? "attention" : "bottleneck";
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "bottleneck") return FusionMode::kBottleneck;
  if (s == "attention") return FusionMode::kAttention;
  throw std::invalid_argument("unknown fusion mode '" + s + "'");
}

int GeneratorConfig::level_channels(int i) const {
  return std::min(base_filters << i, max_filters);
}

bool GeneratorConfig::encoder_norm(int level) const {
  return instance_norm && level > 0 && level < depth - 1 &&
         (image_size >> (level + 1)) > 1;
}

bool GeneratorConfig::decoder_norm(int level) const {
  return instance_norm && level > 0 && (image_size >> level) > 1;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("generator config: " + m);
  };
  if (depth < 1) fail("depth must be >= 1");
  if (image_size < 2 || (image_size & (image_size - 1)) != 0)
    fail("image_size must be a power of 2");
  if (image_size < (1 << depth)) fail("image_size must be >= 2^depth");
  if (channels < 1 || base_filters < 1 || max_filters < 1)
    fail("channel counts must be positive");
  if (d_h < 1) fail("d_h must be positive");
  if (num_types < 1 || embed_dim < 1) fail("attribute layout must be positive");
  if (num_slots < 2 * num_types) fail("every type needs at least 2 slots");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
    fail("leaky_slope must be in [0, 1)");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"image_size", image_size},     {"channels", channels},
          {"depth", depth},               {"base_filters", base_filters},
          {"max_filters", max_filters},   {"d_h", d_h},
          {"num_types", num_types},       {"embed_dim", embed_dim},
          {"num_slots", num_slots},       {"fusion", to_string(fusion)},
          {"leaky_slope", leaky_slope},   {"instance_norm", instance_norm}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.depth = j.value("depth", c.depth);
  c.base_filters = j.value("base_filters", c.base_filters);
  c.max_filters = j.value("max_filters", c.max_filters);
  c.d_h = j.value("d_h", c.d_h);
  c.num_types = j.value("num_types", c.num_types);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.num_slots = j.value("num_slots", c.num_slots);
  c.fusion = fusion_mode_from_string(j.value("fusion", std::string("bottleneck")));
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.instance_norm = j.value("instance_norm", c.instance_norm);
  c.validate();
  return c;
}

template <typename T>
Tensor<T> fuse(const Tensor<T>& h, const Tensor<T>& v, const Tensor<T>& w_h,
               const Tensor<T>& w_v, const Tensor<T>& b) {
  const int n = h.shape().n;
  const int dh = w_h.shape().n;
  if (v.shape().n != n) throw ShapeError("fuse: batch mismatch between h and v");
  if (static_cast<int>(h.shape().per_sample()) != dh ||
      static_cast<int>(w_h.shape().per_sample()) != dh ||
      w_v.shape().n != dh ||
      w_v.shape().per_sample() != v.shape().per_sample() ||
      static_cast<int>(b.size()) != dh)
    throw ShapeError("fuse: h " + to_string(h.shape()) + ", v " +
                     to_string(v.shape()) + ", W_h " + to_string(w_h.shape()) +
                     ", W_v " + to_string(w_v.shape()));
  Tensor<T> pre, pv;
  kernels::dense_forward(h, w_h, b, pre);
  const Tensor<T> zero(Shape{1, dh, 1, 1});
  kernels::dense_forward(v, w_v, zero, pv);
  kernels::add_inplace(pre, pv);
  Tensor<T> out;
  kernels::leaky_relu_forward(pre, T(0), out);
  return out;
}

namespace {

// beta (R x Q) and context (C x R) for one sample. feat is (C x R),
// queries are Q vectors of length C.
template <typename T>
void attend(const T* feat, int channels, int regions,
            const std::vector<const T*>& queries, double* beta, T* context) {
  const int nq = static_cast<int>(queries.size());
  std::fill(context, context + static_cast<std::size_t>(channels) * regions, T(0));
  if (nq == 0) return;
  std::vector<double> scores(nq);
  for (int j = 0; j < regions; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < nq; ++q) {
      double s = 0;
      for (int c = 0; c < channels; ++c)
        s += static_cast<double>(feat[c * regions + j]) * queries[q][c];
      scores[q] = s;
      mx = std::max(mx, s);
    }
    double z = 0;
    for (int q = 0; q < nq; ++q) z += (scores[q] = std::exp(scores[q] - mx));
    for (int q = 0; q < nq; ++q) {
      const double b = scores[q] / z;
      beta[j * nq + q] = b;
      for (int c = 0; c < channels; ++c)
        context[c * regions + j] += static_cast<T>(b * queries[q][c]);
    }
  }
}

}  // namespace

template <typename T>
AttentionOutput<T> attention_fuse(const Tensor<T>& features,
                                  const Tensor<T>& attributes,
                                  const Tensor<T>& w_q) {
  const Shape fs = features.shape();
  const int nq = attributes.shape().n;
  const int dw = static_cast<int>(attributes.shape().per_sample());
  if (nq < 1) throw std::invalid_argument("attention_fuse: empty attribute list");
  if (fs.n != 1) throw ShapeError("attention_fuse: expects a single feature map");
  if (w_q.shape().n != fs.c || static_cast<int>(w_q.shape().per_sample()) != dw)
    throw ShapeError("attention_fuse: W_q " + to_string(w_q.shape()) +
                     " incompatible with features " + to_string(fs) +
                     " and attributes " + to_string(attributes.shape()));
  const int regions = fs.h * fs.w;
  Tensor<T> q(Shape{nq, fs.c, 1, 1});
  kernels::dense_forward(attributes, w_q, Tensor<T>(Shape{1, fs.c, 1, 1}), q);
  std::vector<const T*> rows;
  for (int i = 0; i < nq; ++i) rows.push_back(q.sample(i));

  AttentionOutput<T> out;
  out.regions = regions;
  out.attributes = nq;
  out.beta.assign(static_cast<std::size_t>(regions) * nq, 0.0);
  out.context = Tensor<T>(Shape{1, fs.c, fs.h, fs.w});
  attend(features.data(), fs.c, regions, rows, out.beta.data(),
         out.context.data());
  out.stacked = kernels::concat_channels(features, out.context);
  return out;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int depth = config_.depth;
  enc_norm_.resize(depth);
  for (int i = 0; i < depth; ++i) {
    const int in = i == 0 ? config_.channels : config_.level_channels(i - 1);
    const std::string name = "generator/enc" + std::to_string(i);
    enc_.emplace_back(name, in, config_.level_channels(i), rng);
    if (config_.encoder_norm(i))
      enc_norm_[i] = InstanceNorm<T>(name + "_norm", config_.level_channels(i));
  }
  const int deep_c = config_.level_channels(depth - 1);
  const int side = config_.bottleneck_side();
  const int flat = deep_c * side * side;
  const int dh = config_.d_h;
  const int adim = config_.attr_dim();
  if (config_.fusion == FusionMode::kBottleneck) {
    to_hidden_ = Dense<T>("generator/to_hidden", flat, dh, rng);
    w_h_ = Param<T>("generator/W_h", Shape{dh, dh, 1, 1});
    init_normal(w_h_.value, rng, 1.0 / std::sqrt(static_cast<double>(dh)));
    w_v_ = Param<T>("generator/W_v", Shape{dh, adim, 1, 1});
    init_normal(w_v_.value, rng, 1.0 / std::sqrt(static_cast<double>(config_.embed_dim)));
    b_ = Param<T>("generator/b", Shape{1, dh, 1, 1});
    from_hidden_ = Dense<T>("generator/from_hidden", dh, flat, rng);
  } else {
    w_q_ = Param<T>("generator/W_q", Shape{deep_c, config_.embed_dim, 1, 1});
    init_normal(w_q_.value, rng, 1.0 / std::sqrt(static_cast<double>(config_.embed_dim)));
  }
  dec_norm_.resize(depth);
  for (int j = 0; j < depth; ++j) {
    const int in = 2 * config_.level_channels(j);
    const int out = j == 0 ? config_.channels : config_.level_channels(j - 1);
    const std::string name = "generator/dec" + std::to_string(j);
    dec_.emplace_back(name, in, out, rng);
    if (config_.decoder_norm(j)) dec_norm_[j] = InstanceNorm<T>(name + "_norm", out);
  }
  embeddings_ = Param<T>("generator/embeddings",
                         Shape{config_.num_slots, config_.embed_dim, 1, 1});
  const double half = 0.5 / config_.embed_dim;
  for (std::size_t i = 0; i < embeddings_.value.size(); ++i)
    embeddings_.value[i] = static_cast<T>(uniform(rng, -half, half));
  zero_bias_ = Tensor<T>(Shape{1, dh, 1, 1});
}

template <typename T>
void Generator<T>::check_input(const Tensor<T>& x, const SlotBatch& slots) const {
  const Shape want{x.shape().n, config_.channels, config_.image_size,
                   config_.image_size};
  require_shape(x.shape(), want, "generator input");
  if (static_cast<int>(slots.size()) != x.shape().n)
    throw ShapeError("generator: " + std::to_string(slots.size()) +
                     " attribute rows for a batch of " +
                     std::to_string(x.shape().n));
  for (const auto& row : slots) {
    if (static_cast<int>(row.size()) != config_.num_types)
      throw ShapeError("generator: attribute row has wrong type count");
    for (int s : row)
      if (s < -1 || s >= config_.num_slots)
        throw std::invalid_argument("generator: slot index out of range");
  }
}

template <typename T>
Tensor<T> Generator<T>::embed(const SlotBatch& slots) const {
  const int n = static_cast<int>(slots.size());
  const int dw = config_.embed_dim;
  Tensor<T> v(Shape{n, config_.attr_dim(), 1, 1});
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < config_.num_types; ++t) {
      const int s = slots[i][t];
      if (s < 0) continue;
      const T* row = embeddings_.value.data() + static_cast<std::size_t>(s) * dw;
      std::copy(row, row + dw, v.sample(i) + t * dw);
    }
  return v;
}

template <typename T>
typename Generator<T>::Encoded Generator<T>::encode(const Tensor<T>& x) const {
  require_shape(x.shape(),
                Shape{x.shape().n, config_.channels, config_.image_size,
                      config_.image_size},
                "generator input");
  Encoded e;
  const T slope = static_cast<T>(config_.leaky_slope);
  Tensor<T> a = x;
  for (int i = 0; i < config_.depth; ++i) {
    Tensor<T> y = enc_[i].forward(a);
    if (config_.encoder_norm(i)) y = enc_norm_[i].forward(y);
    kernels::leaky_relu_forward(y, slope, a);
    e.skips.push_back(a);
  }
  if (config_.fusion == FusionMode::kBottleneck) {
    const Tensor<T>& deep = e.skips.back();
    e.h = to_hidden_.forward(
        deep.reshaped(Shape{deep.shape().n, static_cast<int>(deep.shape().per_sample()), 1, 1}));
  }
  return e;
}

template <typename T>
Tensor<T> Generator<T>::fuse(const Tensor<T>& h, const Tensor<T>& v) const {
  if (config_.fusion != FusionMode::kBottleneck)
    throw std::logic_error("fuse() requires bottleneck fusion mode");
  return attrport::fuse(h, v, w_h_.value, w_v_.value, b_.value);
}

template <typename T>
Tensor<T> Generator<T>::run_decoder(Trace& t) const {
  const int depth = config_.depth;
  t.dec_conv.assign(depth, {});
  t.dec_norm.assign(depth, {});
  t.dec_act.assign(depth, {});
  for (int j = depth - 1; j >= 0; --j) {
    t.dec_conv[j] = dec_[j].forward(t.dec_in[j]);
    if (j == 0) break;
    const Tensor<T>* pre = &t.dec_conv[j];
    if (config_.decoder_norm(j)) {
      t.dec_norm[j] = dec_norm_[j].forward(t.dec_conv[j]);
      pre = &t.dec_norm[j];
    }
    kernels::leaky_relu_forward(*pre, T(0), t.dec_act[j]);
    t.dec_in[j - 1] = kernels::concat_channels(t.dec_act[j], t.enc_act[j - 1]);
  }
  kernels::tanh_forward(t.dec_conv[0], t.out);
  return t.out;
}

template <typename T>
Tensor<T> Generator<T>::decode(const Tensor<T>& ha,
                               const std::vector<Tensor<T>>& skips) const {
  if (config_.fusion != FusionMode::kBottleneck)
    throw std::logic_error("decode() requires bottleneck fusion mode");
  if (static_cast<int>(skips.size()) != config_.depth)
    throw ShapeError("decode: expected " + std::to_string(config_.depth) +
                     " skip maps");
  const Tensor<T>& deep = skips.back();
  require_shape(ha.shape(), Shape{deep.shape().n, config_.d_h, 1, 1},
                "decode h^a");
  Trace t;
  t.enc_act = skips;
  t.dec_in.assign(config_.depth, {});
  t.up_pre = from_hidden_.forward(ha);
  kernels::leaky_relu_forward(t.up_pre, T(0), t.up);
  t.up.reshape_inplace(deep.shape());
  t.dec_in[config_.depth - 1] = kernels::concat_channels(t.up, deep);
  return run_decoder(t);
}

template <typename T>
void Generator<T>::attention_forward(Trace& t) const {
  const Tensor<T>& deep = t.enc_act.back();
  const Shape ds = deep.shape();
  const int channels = ds.c, regions = ds.h * ds.w, nt = config_.num_types;
  const int dw = config_.embed_dim;
  t.q = Tensor<T>(Shape{ds.n, nt, channels, 1});
  t.beta.assign(static_cast<std::size_t>(ds.n) * regions * nt, 0.0);
  t.context = Tensor<T>(ds);
  for (int n = 0; n < ds.n; ++n) {
    std::vector<const T*> queries;
    std::vector<int> types;
    for (int ty = 0; ty < nt; ++ty) {
      const int s = t.slots[n][ty];
      if (s < 0) continue;
      T* q = t.q.sample(n) + ty * channels;
      const T* c = embeddings_.value.data() + static_cast<std::size_t>(s) * dw;
      for (int ch = 0; ch < channels; ++ch) {
        T acc = 0;
        for (int k = 0; k < dw; ++k) acc += w_q_.value[ch * dw + k] * c[k];
        q[ch] = acc;
      }
      queries.push_back(q);
      types.push_back(ty);
    }
    std::vector<double> beta(static_cast<std::size_t>(regions) * queries.size());
    attend(deep.sample(n), channels, regions, queries, beta.data(),
           t.context.sample(n));
    for (int j = 0; j < regions; ++j)
      for (std::size_t k = 0; k < types.size(); ++k)
        t.beta[(static_cast<std::size_t>(n) * regions + j) * nt + types[k]] =
            beta[j * types.size() + k];
  }
}

template <typename T>
typename Generator<T>::Trace Generator<T>::forward(const Tensor<T>& x,
                                                   const SlotBatch& slots) const {
  check_input(x, slots);
  Trace t;
  t.x = x;
  t.slots = slots;
  const int depth = config_.depth;
  const T slope = static_cast<T>(config_.leaky_slope);
  t.enc_conv.resize(depth);
  t.enc_norm.resize(depth);
  t.enc_act.resize(depth);
  const Tensor<T>* a = &t.x;
  for (int i = 0; i < depth; ++i) {
    t.enc_conv[i] = enc_[i].forward(*a);
    const Tensor<T>* pre = &t.enc_conv[i];
    if (config_.encoder_norm(i)) {
      t.enc_norm[i] = enc_norm_[i].forward(t.enc_conv[i]);
      pre = &t.enc_norm[i];
    }
    kernels::leaky_relu_forward(*pre, slope, t.enc_act[i]);
    a = &t.enc_act[i];
  }
  const Tensor<T>& deep = t.enc_act.back();
  t.dec_in.assign(depth, {});
  if (config_.fusion == FusionMode::kBottleneck) {
    t.v = embed(slots);
    t.flat = deep.reshaped(
        Shape{deep.shape().n, static_cast<int>(deep.shape().per_sample()), 1, 1});
    t.h = to_hidden_.forward(t.flat);
    Tensor<T> pv;
    kernels::dense_forward(t.h, w_h_.value, b_.value, t.fuse_pre);
    kernels::dense_forward(t.v, w_v_.value, zero_bias_, pv);
    kernels::add_inplace(t.fuse_pre, pv);
    kernels::leaky_relu_forward(t.fuse_pre, T(0), t.ha);
    t.up_pre = from_hidden_.forward(t.ha);
    kernels::leaky_relu_forward(t.up_pre, T(0), t.up);
    t.up.reshape_inplace(deep.shape());
    t.dec_in[depth - 1] = kernels::concat_channels(t.up, deep);
  } else {
    attention_forward(t);
    t.dec_in[depth - 1] = kernels::concat_channels(deep, t.context);
  }
  run_decoder(t);
  return t;
}

template <typename T>
Tensor<T> Generator<T>::attention_backward(const Trace& t,
                                           const Tensor<T>& d_context,
                                           Tensor<T>& d_features) {
  const Tensor<T>& deep = t.enc_act.back();
  const Shape ds = deep.shape();
  const int channels = ds.c, regions = ds.h * ds.w, nt = config_.num_types;
  const int dw = config_.embed_dim;
  for (int n = 0; n < ds.n; ++n) {
    const T* feat = deep.sample(n);
    const T* dp = d_context.sample(n);
    T* df = d_features.sample(n);
    std::vector<int> types;
    for (int ty = 0; ty < nt; ++ty)
      if (t.slots[n][ty] >= 0) types.push_back(ty);
    const int nq = static_cast<int>(types.size());
    if (nq == 0) continue;
    auto beta = [&](int j, int k) {
      return t.beta[(static_cast<std::size_t>(n) * regions + j) * nt + types[k]];
    };
    auto q = [&](int k) { return t.q.sample(n) + types[k] * channels; };
    std::vector<double> dq(static_cast<std::size_t>(nq) * channels, 0.0);
    std::vector<double> dbeta(nq), ds_row(nq);
    for (int j = 0; j < regions; ++j) {
      double dot = 0;
      for (int k = 0; k < nq; ++k) {
        double acc = 0;
        for (int c = 0; c < channels; ++c) {
          acc += static_cast<double>(dp[c * regions + j]) * q(k)[c];
          dq[k * channels + c] += beta(j, k) * dp[c * regions + j];
        }
        dbeta[k] = acc;
        dot += beta(j, k) * acc;
      }
      for (int k = 0; k < nq; ++k) {
        ds_row[k] = beta(j, k) * (dbeta[k] - dot);
        for (int c = 0; c < channels; ++c) {
          df[c * regions + j] += static_cast<T>(ds_row[k] * q(k)[c]);
          dq[k * channels + c] += ds_row[k] * feat[c * regions + j];
        }
      }
    }
    for (int k = 0; k < nq; ++k) {
      const int slot = t.slots[n][types[k]];
      const T* cvec = embeddings_.value.data() + static_cast<std::size_t>(slot) * dw;
      T* dc = embeddings_.grad.data() + static_cast<std::size_t>(slot) * dw;
      for (int c = 0; c < channels; ++c) {
        const double g = dq[k * channels + c];
        for (int e = 0; e < dw; ++e) {
          w_q_.grad[c * dw + e] += static_cast<T>(g * cvec[e]);
          dc[e] += static_cast<T>(g * w_q_.value[c * dw + e]);
        }
      }
    }
  }
  return d_features;
}

template <typename T>
void Generator<T>::backward(const Trace& t, const Tensor<T>& d_out) {
  require_shape(d_out.shape(), t.out.shape(), "generator d_out");
  const int depth = config_.depth;
  const T slope = static_cast<T>(config_.leaky_slope);

  std::vector<Tensor<T>> d_enc(depth);
  for (int i = 0; i < depth; ++i) d_enc[i] = Tensor<T>(t.enc_act[i].shape());

  Tensor<T> d_conv;
  kernels::tanh_backward(t.out, d_out, d_conv);
  Tensor<T> d_deep_in;  // gradient w.r.t. dec_in[depth-1]
  for (int j = 0; j < depth; ++j) {
    Tensor<T> d_in = dec_[j].backward(t.dec_in[j], d_conv, true);
    if (j == depth - 1) {
      d_deep_in = std::move(d_in);
      break;
    }
    Tensor<T> d_act, d_skip;
    kernels::split_channels(d_in, t.dec_act[j + 1].shape().c, d_act, d_skip);
    kernels::add_inplace(d_enc[j], d_skip);
    const int up = j + 1;
    const Tensor<T>& pre = config_.decoder_norm(up) ? t.dec_norm[up] : t.dec_conv[up];
    Tensor<T> d_pre;
    kernels::leaky_relu_backward(pre, d_act, T(0), d_pre);
    d_conv = config_.decoder_norm(up)
                 ? dec_norm_[up].backward(t.dec_conv[up], d_pre)
                 : std::move(d_pre);
  }

  const Tensor<T>& deep = t.enc_act.back();
  if (config_.fusion == FusionMode::kBottleneck) {
    Tensor<T> d_up, d_skip;
    kernels::split_channels(d_deep_in, deep.shape().c, d_up, d_skip);
    kernels::add_inplace(d_enc[depth - 1], d_skip);
    d_up.reshape_inplace(t.up_pre.shape());
    Tensor<T> d_up_pre;
    kernels::leaky_relu_backward(t.up_pre, d_up, T(0), d_up_pre);
    Tensor<T> d_ha = from_hidden_.backward(t.ha, d_up_pre, true);
    Tensor<T> d_pre;
    kernels::leaky_relu_backward(t.fuse_pre, d_ha, T(0), d_pre);
    Tensor<T> d_h, d_v;
    kernels::dense_backward(t.h, w_h_.value, d_pre, &d_h, &w_h_.grad, &b_.grad);
    kernels::dense_backward(t.v, w_v_.value, d_pre, &d_v, &w_v_.grad,
                            static_cast<Tensor<T>*>(nullptr));
    const int dw = config_.embed_dim;
    for (int n = 0; n < d_v.shape().n; ++n)
      for (int ty = 0; ty < config_.num_types; ++ty) {
        const int s = t.slots[n][ty];
        if (s < 0) continue;
        const T* src = d_v.sample(n) + ty * dw;
        T* dst = embeddings_.grad.data() + static_cast<std::size_t>(s) * dw;
        for (int e = 0; e < dw; ++e) dst[e] += src[e];
      }
    Tensor<T> d_flat = to_hidden_.backward(t.flat, d_h, true);
    d_flat.reshape_inplace(deep.shape());
    kernels::add_inplace(d_enc[depth - 1], d_flat);
  } else {
    Tensor<T> d_feat, d_context;
    kernels::split_channels(d_deep_in, deep.shape().c, d_feat, d_context);
    attention_backward(t, d_context, d_feat);
    kernels::add_inplace(d_enc[depth - 1], d_feat);
  }

  for (int i = depth - 1; i >= 0; --i) {
    const Tensor<T>& pre = config_.encoder_norm(i) ? t.enc_norm[i] : t.enc_conv[i];
    Tensor<T> d_pre;
    kernels::leaky_relu_backward(pre, d_enc[i], slope, d_pre);
    if (config_.encoder_norm(i)) d_pre = enc_norm_[i].backward(t.enc_conv[i], d_pre);
    const Tensor<T>& input = i == 0 ? t.x : t.enc_act[i - 1];
    Tensor<T> dx = enc_[i].backward(input, d_pre, i > 0);
    if (i > 0) kernels::add_inplace(d_enc[i - 1], dx);
  }
}

template <typename T>
ParamList<T> Generator<T>::parameters() {
  ParamList<T> out;
  for (int i = 0; i < config_.depth; ++i) {
    enc_[i].collect(out);
    if (config_.encoder_norm(i)) enc_norm_[i].collect(out);
  }
  if (config_.fusion == FusionMode::kBottleneck) {
    to_hidden_.collect(out);
    out.push_back(&w_h_);
    out.push_back(&w_v_);
    out.push_back(&b_);
    from_hidden_.collect(out);
  } else {
    out.push_back(&w_q_);
  }
  for (int j = 0; j < config_.depth; ++j) {
    dec_[j].collect(out);
    if (config_.decoder_norm(j)) dec_norm_[j].collect(out);
  }
  out.push_back(&embeddings_);
  return out;
}

template <typename T>
void Generator<T>::zero_grad() {
  for (Param<T>* p : parameters()) p->zero_grad();
}

template <typename T>
void Generator<T>::set_embeddings(const EmbeddingTable& table,
                                  const AttributeSchema& schema) {
  if (schema.num_types() != config_.num_types ||
      schema.num_slots() != config_.num_slots || table.dim != config_.embed_dim)
    throw std::invalid_argument(
        "embedding table / schema do not match the generator layout");
  table.check_covers(schema);
  const int dw = config_.embed_dim;
  for (int ty = 0; ty < schema.num_types(); ++ty)
    for (int v = 0; v < schema.num_values(ty); ++v) {
      const auto& vec = table.at(schema.types()[ty].name, schema.types()[ty].values[v]);
      T* dst = embeddings_.value.data() + static_cast<std::size_t>(schema.slot(ty, v)) * dw;
      for (int e = 0; e < dw; ++e) dst[e] = static_cast<T>(vec[e]);
    }
}

template <typename T>
EmbeddingTable Generator<T>::embedding_table(const AttributeSchema& schema) const {
  EmbeddingTable table;
  table.dim = config_.embed_dim;
  const int dw = config_.embed_dim;
  for (int ty = 0; ty < schema.num_types(); ++ty)
    for (int v = 0; v < schema.num_values(ty); ++v) {
      const T* src = embeddings_.value.data() + static_cast<std::size_t>(schema.slot(ty, v)) * dw;
      std::vector<float> vec(src, src + dw);
      table.vectors[{schema.types()[ty].name, schema.types()[ty].values[v]}] = vec;
    }
  return table;
}

template <typename T>
double Generator<T>::min_abs_preactivation(const Trace& t) const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config_.depth; ++i)
    m = std::min(m, min_abs(config_.encoder_norm(i) ? t.enc_norm[i] : t.enc_conv[i]));
  if (config_.fusion == FusionMode::kBottleneck)
    m = std::min({m, min_abs(t.fuse_pre), min_abs(t.up_pre)});
  for (int j = 1; j < config_.depth; ++j)
    m = std::min(m, min_abs(config_.decoder_norm(j) ? t.dec_norm[j] : t.dec_conv[j]));
  return m;
}

template Tensor<float> fuse(const Tensor<float>&, const Tensor<float>&,
                            const Tensor<float>&, const Tensor<float>&,
                            const Tensor<float>&);
template Tensor<double> fuse(const Tensor<double>&, const Tensor<double>&,
                             const Tensor<double>&, const Tensor<double>&,
                             const Tensor<double>&);
template AttentionOutput<float> attention_fuse(const Tensor<float>&,
                                               const Tensor<float>&,
                                               const Tensor<float>&);
template AttentionOutput<double> attention_fuse(const Tensor<double>&,
                                                const Tensor<double>&,
                                                const Tensor<double>&);
template class Generator<float>;
template class Generator<double>;

}  // namespace attrport
