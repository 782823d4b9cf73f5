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

// Parameterised layers. Layers are stateless apart from their parameters:
// forward() is const and the caller keeps whatever activations backward()
// needs, so one network can serve concurrent inference and several
// forward/backward passes per training step.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "attrport/kernels.hpp"
#include "attrport/random.hpp"
#include "attrport/tensor.hpp"

namespace attrport {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Shape s) : name(std::move(n)), value(s), grad(s) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

/// Normal(0, stddev) fill; draws are made in double so float and double
/// models built from one seed hold the same values up to rounding.
template <typename T>
void init_normal(Tensor<T>& t, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<T>(stddev * normal01(rng));
}

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in, int out, Rng& rng)
      : weight_(name + ".weight", Shape{out, in, 4, 4}),
        bias_(name + ".bias", Shape{1, out, 1, 1}) {
    init_normal(weight_.value, rng, 0.02);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y;
    kernels::conv2d_forward(x, weight_.value, bias_.value, geom_, y);
    return y;
  }
  /// Accumulates parameter grads when `params` is set; returns dx if wanted.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool want_dx,
                     bool params = true) {
    Tensor<T> dx;
    kernels::conv2d_backward(x, weight_.value, dy, geom_,
                             want_dx ? &dx : nullptr,
                             params ? &weight_.grad : nullptr,
                             params ? &bias_.grad : nullptr);
    return dx;
  }
  void collect(ParamList<T>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  int out_channels() const { return weight_.value.shape().n; }
  int in_channels() const { return weight_.value.shape().c; }
  const Param<T>& weight() const { return weight_; }

 private:
  Param<T> weight_, bias_;
  kernels::ConvGeometry geom_{};
};

template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, int in, int out, Rng& rng)
      : weight_(name + ".weight", Shape{in, out, 4, 4}),
        bias_(name + ".bias", Shape{1, out, 1, 1}) {
    init_normal(weight_.value, rng, 0.02);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y;
    kernels::conv_transpose2d_forward(x, weight_.value, bias_.value, geom_, y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool want_dx,
                     bool params = true) {
    Tensor<T> dx;
    kernels::conv_transpose2d_backward(x, weight_.value, dy, geom_,
                                       want_dx ? &dx : nullptr,
                                       params ? &weight_.grad : nullptr,
                                       params ? &bias_.grad : nullptr);
    return dx;
  }
  void collect(ParamList<T>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  int out_channels() const { return weight_.value.shape().c; }
  int in_channels() const { return weight_.value.shape().n; }
  const Param<T>& weight() const { return weight_; }

 private:
  Param<T> weight_, bias_;
  kernels::ConvGeometry geom_{};
};

template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, int in, int out, Rng& rng)
      : weight_(name + ".weight", Shape{out, in, 1, 1}),
        bias_(name + ".bias", Shape{1, out, 1, 1}) {
    init_normal(weight_.value, rng, 1.0 / std::sqrt(static_cast<double>(in)));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y;
    kernels::dense_forward(x, weight_.value, bias_.value, y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool want_dx,
                     bool params = true) {
    Tensor<T> dx;
    kernels::dense_backward(x, weight_.value, dy, want_dx ? &dx : nullptr,
                            params ? &weight_.grad : nullptr,
                            params ? &bias_.grad : nullptr);
    return dx;
  }
  void collect(ParamList<T>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  int out_features() const { return weight_.value.shape().n; }

 private:
  Param<T> weight_, bias_;
};

template <typename T>
class InstanceNorm {
 public:
  static constexpr double kEps = 1e-5;

  InstanceNorm() = default;
  InstanceNorm(const std::string& name, int channels)
      : gamma_(name + ".gamma", Shape{1, channels, 1, 1}),
        beta_(name + ".beta", Shape{1, channels, 1, 1}) {
    gamma_.value.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y;
    kernels::instance_norm_forward(x, gamma_.value, beta_.value, T(kEps), y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy,
                     bool params = true) {
    Tensor<T> dx;
    kernels::instance_norm_backward(x, gamma_.value, dy, T(kEps), &dx,
                                    params ? &gamma_.grad : nullptr,
                                    params ? &beta_.grad : nullptr);
    return dx;
  }
  void collect(ParamList<T>& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  Param<T> gamma_, beta_;
};

/// Smallest |x| over a tensor; used to keep finite-difference probes away
/// from piecewise-linear kinks.
template <typename T>
double min_abs(const Tensor<T>& t) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i)
    m = std::min(m, std::abs(static_cast<double>(t[i])));
  return m;
}

}  // namespace attrport
