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


// Micro-model used to check analytic gradients against central finite
// differences: 2x2 images, d_h 4, K 4, double precision.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "attrport/discriminator.hpp"
#include "attrport/generator.hpp"
#include "attrport/losses.hpp"
#include "attrport/random.hpp"

namespace attrport::testing {

using T = double;

struct Check {
  std::string name;
  double worst = 0;
  /// Unfloored relative error over entries with |gradient| >= 1e-4.
  double worst_large = 0;
  int checked = 0;
};

// Relative error; differences below 1e-8 count as exact.
inline double rel_error(double a, double b) {
  const double diff = std::abs(a - b);
  if (diff < 1e-8) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

// Compares p.grad with central differences of f for every entry of every
// param. Entries whose perturbation crosses a ReLU kink are skipped via
// `smooth`.
inline std::vector<Check> finite_difference(ParamList<T> params,
                                            const std::function<double()>& f,
                                            const std::function<bool()>& smooth,
                                            double h = 1e-6) {
  std::vector<Check> out;
  for (Param<T>* p : params) {
    Check c{p->name};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const T keep = p->value[i];
      p->value[i] = keep + h;
      const double up = f();
      const bool ok_up = smooth();
      p->value[i] = keep - h;
      const double down = f();
      const bool ok_down = smooth();
      p->value[i] = keep;
      if (!ok_up || !ok_down) continue;
      const double numeric = (up - down) / (2 * h);
      c.worst = std::max(c.worst, rel_error(numeric, p->grad[i]));
      const double scale = std::max(std::abs(numeric), std::abs(double(p->grad[i])));
      if (scale >= 1e-4)
        c.worst_large = std::max(c.worst_large, std::abs(numeric - p->grad[i]) / scale);
      ++c.checked;
    }
    out.push_back(c);
  }
  return out;
}

inline GeneratorConfig micro_generator(FusionMode mode) {
  GeneratorConfig g;
  g.image_size = 2;
  g.depth = 1;
  g.base_filters = 2;
  g.max_filters = 2;
  g.d_h = 4;
  g.num_types = 2;
  g.embed_dim = 3;
  g.num_slots = 4;
  g.fusion = mode;
  return g;
}

inline DiscriminatorConfig micro_discriminator() {
  DiscriminatorConfig d;
  d.image_size = 2;
  d.blocks = 1;
  d.base_filters = 2;
  d.max_filters = 2;
  d.hidden = 3;
  d.num_slots = 4;
  return d;
}

inline Tensor<T> random_image(Shape s, Rng& rng) {
  Tensor<T> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(rng, -1, 1);
  return t;
}

inline std::vector<double> probs(const Tensor<T>& logits) { return sigmoid_values(logits); }

// One generator objective evaluation and its analytic gradient, mirroring
// the training step.
struct MicroProblem {
  Generator<T> g;
  Discriminator<T> d;
  Tensor<T> x, y;
  SlotBatch slots;
  std::vector<double> target;
  LossWeights w{1.0, 10.0, 1.0};
  int k = 4;

  MicroProblem(FusionMode mode, std::uint64_t seed)
      : g(micro_generator(mode), seed), d(micro_discriminator(), seed + 1) {
    Rng rng(seed + 2);
    // Larger weights than the production init keep activations away from
    // the ReLU kinks and make the finite differences informative.
    for (Param<T>* p : g.parameters())
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = uniform(rng, -1, 1);
    for (Param<T>* p : d.parameters())
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = uniform(rng, -1, 1);
    x = random_image(Shape{2, 3, 2, 2}, rng);
    y = random_image(Shape{2, 3, 2, 2}, rng);
    slots = {{0, 3}, {1, -1}};
    target = {1, 0, 0, 1, 0, 1, 1, 0};
  }

  double loss_g() const {
    const auto gt = g.forward(x, slots);
    const auto dt = d.forward(gt.out);
    const double adv = adv_loss_g(probs(dt.real_logit));
    const double cls = cls_loss(probs(dt.attr_logit), target, k);
    const double l1 = l1_loss(to_doubles(y), to_doubles(gt.out));
    return total_g(adv, cls, l1, w);
  }

  double loss_d() const {
    const auto fake = g.forward(x, slots).out;
    const auto tf = d.forward(fake);
    const auto tr = d.forward(y);
    const double adv = adv_loss_d(probs(tf.real_logit), probs(tr.real_logit));
    const double cls = cls_loss(probs(tr.attr_logit), target, k);
    return total_d(adv, cls, w);
  }

  bool smooth() const {
    const auto gt = g.forward(x, slots);
    const auto tf = d.forward(gt.out);
    const auto tr = d.forward(y);
    return g.min_abs_preactivation(gt) > 1e-3 && d.min_abs_preactivation(tf) > 1e-3 &&
           d.min_abs_preactivation(tr) > 1e-3;
  }

  void grad_g() {
    g.zero_grad();
    d.zero_grad();
    const auto gt = g.forward(x, slots);
    const auto dt = d.forward(gt.out);
    auto cls = cls_logit_grad(to_doubles(dt.attr_logit), target, k);
    for (double& v : cls) v *= w.lambda1;
    Tensor<T> d_img = d.backward(
        dt, from_doubles<T>(adv_g_logit_grad(to_doubles(dt.real_logit)), dt.real_logit.shape()),
        from_doubles<T>(cls, dt.attr_logit.shape()), true, false);
    const auto l1 = l1_grad(to_doubles(y), to_doubles(gt.out));
    for (std::size_t i = 0; i < l1.size(); ++i) d_img[i] += w.lambda2 * l1[i];
    g.backward(gt, d_img);
  }

  void grad_d() {
    d.zero_grad();
    const auto fake = g.forward(x, slots).out;
    const auto tf = d.forward(fake);
    const auto tr = d.forward(y);
    auto cls = cls_logit_grad(to_doubles(tr.attr_logit), target, k);
    for (double& v : cls) v *= w.lambda3;
    const Tensor<T> zero(tf.attr_logit.shape());
    d.backward(tf, from_doubles<T>(adv_d_fake_logit_grad(to_doubles(tf.real_logit)),
                                   tf.real_logit.shape()),
               zero, false, true);
    d.backward(tr, from_doubles<T>(adv_d_real_logit_grad(to_doubles(tr.real_logit)),
                                   tr.real_logit.shape()),
               from_doubles<T>(cls, tr.attr_logit.shape()), false, true);
  }
};

inline bool within(const std::vector<Check>& checks, double tol = 1e-4) {
  for (const Check& c : checks)
    if (c.checked == 0 || !(c.worst < tol)) return false;
  return true;
}

}  // namespace attrport::testing
