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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "attrport/losses.hpp"
#include "attrport/random.hpp"

namespace attrport {
namespace {

using V = std::vector<double>;
const double kE1 = std::exp(-1.0);
const double kE2 = std::exp(-2.0);

TEST(AdversarialLoss, HandValues) {
  EXPECT_NEAR(adv_loss_g(V{kE1}), 1.0, 1e-9);
  EXPECT_NEAR(adv_loss_g(V{0.5, 0.5}), std::log(2.0), 1e-9);
  EXPECT_NEAR(adv_loss_g(V{1 - kProbEps, 1 - kProbEps}), 0.0, 1e-6);
  EXPECT_NEAR(adv_loss_d(V{kE2}, V{kE1}), -1.0, 1e-9);
  EXPECT_NEAR(adv_loss_d(V{0.5}, V{0.5}), 0.0, 1e-12);
  EXPECT_NEAR(adv_loss_d(V{kProbEps}, V{1 - kProbEps}), std::log(kProbEps), 1e-6);
}

TEST(AdversarialLoss, ClampKeepsValuesFinite) {
  EXPECT_TRUE(std::isfinite(adv_loss_g(V{0.0})));
  EXPECT_NEAR(adv_loss_g(V{0.0}), -std::log(kProbEps), 1e-9);
  EXPECT_TRUE(std::isfinite(adv_loss_d(V{0.0}, V{1.0})));
  EXPECT_GE(adv_loss_g(V{1.0}), 0.0);
}

TEST(AdversarialLoss, EmptyBatchThrows) {
  EXPECT_THROW(adv_loss_g(V{}), std::invalid_argument);
  EXPECT_THROW(adv_loss_d(V{}, V{0.5}), std::invalid_argument);
  EXPECT_THROW(adv_loss_d(V{0.5}, V{}), std::invalid_argument);
}

TEST(AdversarialLoss, DiscriminatorFormIsAntisymmetric) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    V a(5), b(5);
    for (double& x : a) x = uniform01(rng);
    for (double& x : b) x = uniform01(rng);
    EXPECT_NEAR(adv_loss_d(a, b), -adv_loss_d(b, a), 1e-12);
  }
}

TEST(L1Loss, HandValues) {
  EXPECT_EQ(l1_loss(V{0.3, -0.2}, V{0.3, -0.2}), 0.0);
  EXPECT_NEAR(l1_loss(V{0.1, 0.2, -0.3}, V{0.6, 0.7, 0.2}), 0.5, 1e-12);
  EXPECT_NEAR(l1_loss(V{1, -1}, V{0, 0}), 1.0, 1e-12);
  EXPECT_THROW(l1_loss(V{1}, V{1, 2}), std::invalid_argument);
}

TEST(Rho, HandValues) {
  for (int k : {1, 6, 82}) EXPECT_NEAR(rho(V(k, 0.5), V(k, 1.0)), k * std::log(2.0), 1e-9);
  EXPECT_NEAR(rho(V{kE1}, V{1.0}), 1.0, 1e-9);
  EXPECT_LE(rho(V{1.0, 0.0, 0.0}, V{1.0, 0.0, 0.0}), 3 * -std::log(1 - kProbEps) + 1e-15);
  EXPECT_THROW(rho(V{0.5}, V{1, 0}), std::invalid_argument);
}

TEST(Rho, NonNegativeAndMasked) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    V p(6), t(6, 0.0);
    for (double& x : p) x = uniform01(rng);
    t[rng() % 6] = 1.0;
    EXPECT_GE(rho(p, t), 0.0);
  }
  const V p{0.2, 0.7, 0.4}, t{1, 0, 0}, mask{1, 0, 1};
  EXPECT_NEAR(rho(p, t, mask), -std::log(0.2) - std::log(0.6), 1e-12);
}

TEST(ClassificationLoss, IsBatchMeanOfRho) {
  const V p{0.5, 0.5, kE1, 0.5};
  const V t{1, 0, 1, 0};
  EXPECT_NEAR(cls_loss(p, t, 2), (2 * std::log(2.0) + 1.0 + std::log(2.0)) / 2, 1e-9);
  EXPECT_THROW(cls_loss(V{}, V{}, 2), std::invalid_argument);
  EXPECT_THROW(cls_loss(V{0.5, 0.5, 0.5}, V{1, 0, 0}, 2), std::invalid_argument);
}

TEST(TotalObjectives, Linear) {
  const LossWeights w{1, 10, 1};
  EXPECT_DOUBLE_EQ(total_g(1, 2, 3, w), 33.0);
  EXPECT_DOUBLE_EQ(total_g(1.5, 2, 3, LossWeights{0, 0, 0}), 1.5);
  EXPECT_DOUBLE_EQ(total_g(1, 4, 3, w) - total_g(1, 2, 3, w), w.lambda1 * 2);
  EXPECT_DOUBLE_EQ(total_d(1, 2, w), 3.0);
  EXPECT_DOUBLE_EQ(total_d(-1, 2, LossWeights{1, 10, 0}), -1.0);
  EXPECT_DOUBLE_EQ(total_d(1, 4, w) - total_d(1, 2, w), w.lambda3 * 2);
}

TEST(LossWeights, ValidationAndJson) {
  EXPECT_THROW((LossWeights{-1, 1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((LossWeights{1, NAN, 1}.validate()), std::invalid_argument);
  const LossWeights w{0.5, 100, 2};
  EXPECT_EQ(LossWeights::from_json(w.to_json()), w);
}

double numeric(const std::function<double(const V&)>& f, V z, std::size_t i) {
  const double h = 1e-6;
  z[i] += h;
  const double up = f(z);
  z[i] -= 2 * h;
  return (up - f(z)) / (2 * h);
}

V sig(const V& z) {
  V p;
  for (double v : z) p.push_back(sigmoid(v));
  return p;
}

TEST(LogitGradients, MatchFiniteDifferences) {
  const V z{-2.0, 0.3, 1.7, -0.4};
  const V other{0.1, -1.2, 0.8, 2.2};
  const V t{1, 0, 0, 1};
  const auto gg = adv_g_logit_grad(z);
  const auto gf = adv_d_fake_logit_grad(z);
  const auto gr = adv_d_real_logit_grad(z);
  const auto gc = cls_logit_grad(z, t, 2);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(gg[i], numeric([](const V& v) { return adv_loss_g(sig(v)); }, z, i), 1e-7);
    EXPECT_NEAR(gf[i],
                numeric([&](const V& v) { return adv_loss_d(sig(v), sig(other)); }, z, i),
                1e-7);
    EXPECT_NEAR(gr[i],
                numeric([&](const V& v) { return adv_loss_d(sig(other), sig(v)); }, z, i),
                1e-7);
    EXPECT_NEAR(gc[i], numeric([&](const V& v) { return cls_loss(sig(v), t, 2); }, z, i),
                1e-7);
  }
}

TEST(LogitGradients, ZeroWhereTheClampIsActive) {
  const V z{-40.0, 40.0};
  for (double g : adv_g_logit_grad(z)) EXPECT_EQ(g, 0.0);
  for (double g : cls_logit_grad(z, V{1, 0}, 2)) EXPECT_EQ(g, 0.0);
}

TEST(LogitGradients, MaskedSlotsGetNoGradient) {
  const auto g = cls_logit_grad(V{0.1, 0.2, 0.3, 0.4}, V{1, 0, 0, 1}, 2, V{1, 0, 0, 1});
  EXPECT_NE(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_NE(g[3], 0.0);
}

TEST(LogitGradients, L1Subgradient) {
  const auto g = l1_grad(V{0, 0, 0, 0}, V{1, -1, 0, 2});
  EXPECT_EQ(g, (V{0.25, -0.25, 0.0, 0.25}));
}

TEST(LossReport, FiniteFlag) {
  LossReport r;
  EXPECT_TRUE(r.finite());
  r.cls_d = INFINITY;
  EXPECT_FALSE(r.finite());
  EXPECT_EQ(r.to_json().size(), 7u);
}

}  // namespace
}  // namespace attrport
