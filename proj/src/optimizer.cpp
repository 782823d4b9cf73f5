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

#include "attrport/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace attrport {

template <typename T>
Adam<T>::Adam(ParamList<T> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(options_.learning_rate >= 0) || !(options_.beta1 > 0 && options_.beta1 < 1) ||
      !(options_.beta2 > 0 && options_.beta2 < 1) || !(options_.eps > 0))
    throw std::invalid_argument("invalid Adam options");
  for (const Param<T>* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.learning_rate;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param<T>& p = *params_[k];
    T* m = m_[k].data();
    T* v = v_[k].data();
    const std::size_t n = p.value.size();
    #pragma omp parallel for schedule(static) if (n > 65536)
    for (std::size_t i = 0; i < n; ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      if (lr > 0)
        p.value[i] -= static_cast<T>(lr * (mi / c1) / (std::sqrt(vi / c2) + options_.eps));
    }
  }
}

template <typename T>
void Adam<T>::restore(std::vector<Tensor<T>> m, std::vector<Tensor<T>> v,
                      std::int64_t t) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw std::invalid_argument("Adam restore: moment count mismatch");
  for (std::size_t k = 0; k < params_.size(); ++k) {
    require_shape(m[k].shape(), params_[k]->value.shape(), "Adam first moment");
    require_shape(v[k].shape(), params_[k]->value.shape(), "Adam second moment");
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace attrport
