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

#include "attrport/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace attrport {
namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw std::invalid_argument(std::string(what) + ": empty batch");
}

bool inside_clamp(double p) { return p >= kProbEps && p <= 1.0 - kProbEps; }

double mean_log(std::span<const double> d) {
  double s = 0;
  for (double p : d) s += std::log(clamp_prob(p));
  return s / static_cast<double>(d.size());
}

void check_mask(std::span<const double> mask, std::size_t n) {
  if (!mask.empty() && mask.size() != n)
    throw std::invalid_argument("loss mask length mismatch");
}

}  // namespace

void LossWeights::validate() const {
  for (double l : {lambda1, lambda2, lambda3})
    if (!std::isfinite(l) || l < 0)
      throw std::invalid_argument("loss weights must be finite and >= 0");
}

nlohmann::json LossWeights::to_json() const {
  return {{"lambda1", lambda1}, {"lambda2", lambda2}, {"lambda3", lambda3}};
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  w.lambda1 = j.value("lambda1", w.lambda1);
  w.lambda2 = j.value("lambda2", w.lambda2);
  w.lambda3 = j.value("lambda3", w.lambda3);
  w.validate();
  return w;
}

bool LossReport::finite() const {
  for (double v : {adv_g, adv_d, l1, cls_g, cls_d, total_g, total_d})
    if (!std::isfinite(v)) return false;
  return true;
}

nlohmann::json LossReport::to_json() const {
  return {{"adv_g", adv_g}, {"adv_d", adv_d},     {"l1", l1},
          {"cls_g", cls_g}, {"cls_d", cls_d},     {"total_g", total_g},
          {"total_d", total_d}};
}

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double adv_loss_g(std::span<const double> d_fake) {
  require_nonempty(d_fake.size(), "adv_loss_g");
  return -mean_log(d_fake);
}

double adv_loss_d(std::span<const double> d_fake, std::span<const double> d_real) {
  require_nonempty(d_fake.size(), "adv_loss_d");
  require_nonempty(d_real.size(), "adv_loss_d");
  return mean_log(d_fake) - mean_log(d_real);
}

double l1_loss(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size())
    throw std::invalid_argument("l1_loss: shape mismatch");
  require_nonempty(y.size(), "l1_loss");
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rho(std::span<const double> v_hat, std::span<const double> v_tilde,
           std::span<const double> mask) {
  if (v_hat.size() != v_tilde.size())
    throw std::invalid_argument("rho: length mismatch");
  check_mask(mask, v_hat.size());
  double s = 0;
  for (std::size_t i = 0; i < v_hat.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const double p = clamp_prob(v_hat[i]);
    s -= v_tilde[i] * std::log(p) + (1.0 - v_tilde[i]) * std::log(1.0 - p);
  }
  return s;
}

double cls_loss(std::span<const double> v_hat, std::span<const double> v_tilde,
                int k, std::span<const double> mask) {
  if (k < 1 || v_hat.size() % k != 0)
    throw std::invalid_argument("cls_loss: rows must have k slots");
  if (v_hat.size() != v_tilde.size())
    throw std::invalid_argument("cls_loss: batch mismatch");
  check_mask(mask, v_hat.size());
  require_nonempty(v_hat.size(), "cls_loss");
  const std::size_t n = v_hat.size() / k;
  double s = 0;
  for (std::size_t r = 0; r < n; ++r)
    s += rho(v_hat.subspan(r * k, k), v_tilde.subspan(r * k, k),
             mask.empty() ? mask : mask.subspan(r * k, k));
  return s / static_cast<double>(n);
}

double total_g(double adv, double cls, double l1, const LossWeights& w) {
  return adv + w.lambda1 * cls + w.lambda2 * l1;
}

double total_d(double adv, double cls, const LossWeights& w) {
  return adv + w.lambda3 * cls;
}

std::vector<double> adv_g_logit_grad(std::span<const double> fake_logits) {
  require_nonempty(fake_logits.size(), "adv_g_logit_grad");
  const double inv = 1.0 / static_cast<double>(fake_logits.size());
  std::vector<double> g(fake_logits.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = sigmoid(fake_logits[i]);
    g[i] = inside_clamp(p) ? -(1.0 - p) * inv : 0.0;
  }
  return g;
}

std::vector<double> adv_d_fake_logit_grad(std::span<const double> fake_logits) {
  std::vector<double> g = adv_g_logit_grad(fake_logits);
  for (double& v : g) v = -v;
  return g;
}

std::vector<double> adv_d_real_logit_grad(std::span<const double> real_logits) {
  return adv_g_logit_grad(real_logits);
}

std::vector<double> cls_logit_grad(std::span<const double> logits,
                                   std::span<const double> v_tilde, int k,
                                   std::span<const double> mask) {
  if (k < 1 || logits.size() % k != 0 || logits.size() != v_tilde.size())
    throw std::invalid_argument("cls_logit_grad: shape mismatch");
  check_mask(mask, logits.size());
  require_nonempty(logits.size(), "cls_logit_grad");
  const double inv = static_cast<double>(k) / static_cast<double>(logits.size());
  std::vector<double> g(logits.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const double p = sigmoid(logits[i]);
    if (inside_clamp(p)) g[i] = (p - v_tilde[i]) * inv;
  }
  return g;
}

std::vector<double> l1_grad(std::span<const double> y,
                            std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("l1_grad: shape mismatch");
  require_nonempty(y.size(), "l1_grad");
  const double inv = 1.0 / static_cast<double>(y.size());
  std::vector<double> g(y.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = y_hat[i] - y[i];
    g[i] = d > 0 ? inv : (d < 0 ? -inv : 0.0);
  }
  return g;
}

}  // namespace attrport
