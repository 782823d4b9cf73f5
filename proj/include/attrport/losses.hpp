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

// Training objectives. Probabilities are clamped to [eps, 1-eps] inside
// every log; the *_grad helpers differentiate that clamped expression with
// respect to the pre-sigmoid logits (zero where the clamp is active).

#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrport/tensor.hpp"

namespace attrport {

inline constexpr double kProbEps = 1e-7;

struct LossWeights {
  double lambda1 = 1.0;   // classification term of the generator objective
  double lambda2 = 10.0;  // L1 term of the generator objective
  double lambda3 = 1.0;   // classification term of the discriminator objective

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossReport {
  double adv_g = 0, adv_d = 0, l1 = 0, cls_g = 0, cls_d = 0, total_g = 0,
         total_d = 0;

  bool finite() const;
  nlohmann::json to_json() const;
};

double clamp_prob(double p);
double sigmoid(double z);

/// -mean log d. Throws on an empty batch.
double adv_loss_g(std::span<const double> d_fake);
/// mean log d_fake - mean log d_real.
double adv_loss_d(std::span<const double> d_fake, std::span<const double> d_real);
/// Mean absolute difference.
double l1_loss(std::span<const double> y, std::span<const double> y_hat);
/// Sum over slots of the binary cross-entropy. A mask, when given, keeps
/// only the slots where mask != 0.
double rho(std::span<const double> v_hat, std::span<const double> v_tilde,
           std::span<const double> mask = {});
/// Batch mean of rho; rows are laid out back to back, `k` slots each.
double cls_loss(std::span<const double> v_hat, std::span<const double> v_tilde,
                int k, std::span<const double> mask = {});
double total_g(double adv, double cls, double l1, const LossWeights& w);
double total_d(double adv, double cls, const LossWeights& w);

/// d adv_loss_g / d logit.
std::vector<double> adv_g_logit_grad(std::span<const double> fake_logits);
/// d adv_loss_d / d logit, for the fake and real halves.
std::vector<double> adv_d_fake_logit_grad(std::span<const double> fake_logits);
std::vector<double> adv_d_real_logit_grad(std::span<const double> real_logits);
/// d cls_loss / d logit.
std::vector<double> cls_logit_grad(std::span<const double> logits,
                                   std::span<const double> v_tilde, int k,
                                   std::span<const double> mask = {});
/// d l1_loss / d y_hat (sign / numel; 0 at ties).
std::vector<double> l1_grad(std::span<const double> y,
                            std::span<const double> y_hat);

template <typename T>
std::vector<double> to_doubles(const Tensor<T>& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

template <typename T>
Tensor<T> from_doubles(const std::vector<double>& v, Shape shape) {
  if (v.size() != shape.numel()) throw ShapeError("from_doubles: size mismatch");
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<T>(v[i]);
  return t;
}

}  // namespace attrport
