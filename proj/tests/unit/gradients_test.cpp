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

#include <string>

#include "support/micro_problem.hpp"

namespace attrport {
namespace {

using T = double;
using testing::Check;
using testing::finite_difference;
using testing::MicroProblem;
using testing::random_image;

void expect_close(const std::vector<Check>& checks) {
  for (const Check& c : checks) {
    EXPECT_GT(c.checked, 0) << c.name;
    EXPECT_LT(c.worst, 1e-4) << c.name;
  }
}

class GradientTest : public ::testing::TestWithParam<FusionMode> {};

TEST_P(GradientTest, GeneratorObjectiveMatchesFiniteDifferences) {
  MicroProblem m(GetParam(), 11);
  m.grad_g();
  const auto checks = finite_difference(
      m.g.parameters(), [&] { return m.loss_g(); }, [&] { return m.smooth(); });
  expect_close(checks);
  bool saw_fuse = false, saw_embed = false;
  for (const Check& c : checks) {
    saw_fuse |= c.name.find("W_") != std::string::npos;
    saw_embed |= c.name.find("embeddings") != std::string::npos;
  }
  EXPECT_TRUE(saw_fuse);
  EXPECT_TRUE(saw_embed);
}

TEST_P(GradientTest, DiscriminatorObjectiveMatchesFiniteDifferences) {
  MicroProblem m(GetParam(), 23);
  m.grad_d();
  expect_close(finite_difference(
      m.d.parameters(), [&] { return m.loss_d(); }, [&] { return m.smooth(); }));
}

INSTANTIATE_TEST_SUITE_P(Fusion, GradientTest,
                         ::testing::Values(FusionMode::kBottleneck, FusionMode::kAttention),
                         [](const auto& info) { return to_string(info.param); });

// A deeper network with instance norm on inner levels, in both modes.
TEST(GradientDeep, GeneratorWithNormalization) {
  for (FusionMode mode : {FusionMode::kBottleneck, FusionMode::kAttention}) {
    GeneratorConfig c;
    c.image_size = 8;
    c.depth = 3;
    c.base_filters = 2;
    c.max_filters = 4;
    c.d_h = 4;
    c.num_types = 2;
    c.embed_dim = 2;
    c.num_slots = 4;
    c.fusion = mode;
    Generator<T> g(c, 5);
    Rng rng(9);
    for (Param<T>* p : g.parameters())
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = uniform(rng, -0.5, 0.5);
    const Tensor<T> x = random_image(Shape{2, 3, 8, 8}, rng);
    const Tensor<T> r = random_image(Shape{2, 3, 8, 8}, rng);
    const SlotBatch slots{{0, 2}, {-1, 3}};
    auto f = [&] {
      const auto out = g.forward(x, slots).out;
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
      return s;
    };
    g.zero_grad();
    g.backward(g.forward(x, slots), r);
    expect_close(finite_difference(g.parameters(), f, [&] {
      return g.min_abs_preactivation(g.forward(x, slots)) > 1e-3;
    }));
  }
}

}  // namespace
}  // namespace attrport
