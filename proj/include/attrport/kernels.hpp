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

// OpenMP-parallel compute kernels. Convolutions lower to im2col/col2im plus a
// single GEMM per call; the parallel loops only ever write disjoint output
// ranges, so results do not depend on the thread count. Serial direct-loop
// counterparts live in reference_kernels.hpp.
//
// Backward kernels ACCUMULATE into weight/bias gradients and OVERWRITE the
// input gradient. Pass nullptr for any gradient that is not needed.

#pragma once

#include "attrport/tensor.hpp"

namespace attrport::kernels {

struct ConvGeometry {
  int kernel = 4;
  int stride = 2;
  int pad = 1;

  int conv_out(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  int transpose_out(int in) const {
    return (in - 1) * stride - 2 * pad + kernel;
  }
};

/// x (N,IC,H,W), weight (OC,IC,k,k), bias (1,OC,1,1) -> y (N,OC,OH,OW).
template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& bias, ConvGeometry g, Tensor<T>& y);

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                     const Tensor<T>& dy, ConvGeometry g, Tensor<T>* dx,
                     Tensor<T>* dweight, Tensor<T>* dbias);

/// x (N,IC,H,W), weight (IC,OC,k,k), bias (1,OC,1,1) -> y (N,OC,OH,OW).
template <typename T>
void conv_transpose2d_forward(const Tensor<T>& x, const Tensor<T>& weight,
                              const Tensor<T>& bias, ConvGeometry g,
                              Tensor<T>& y);

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                               const Tensor<T>& dy, ConvGeometry g,
                               Tensor<T>* dx, Tensor<T>* dweight,
                               Tensor<T>* dbias);

/// x (N,IN,1,1) (any per-sample layout is flattened), weight (OUT,IN,1,1),
/// bias (1,OUT,1,1) -> y (N,OUT,1,1).
template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, Tensor<T>& y);

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dweight,
                    Tensor<T>* dbias);

/// Per-sample, per-channel normalization over H*W with affine gamma/beta.
template <typename T>
void instance_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma,
                           const Tensor<T>& beta, T eps, Tensor<T>& y);

template <typename T>
void instance_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                            const Tensor<T>& dy, T eps, Tensor<T>* dx,
                            Tensor<T>* dgamma, Tensor<T>* dbeta);

/// slope = 0 gives ReLU.
template <typename T>
void leaky_relu_forward(const Tensor<T>& x, T slope, Tensor<T>& y);
template <typename T>
void leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope,
                         Tensor<T>& dx);

template <typename T>
void tanh_forward(const Tensor<T>& x, Tensor<T>& y);
/// Uses the forward output y.
template <typename T>
void tanh_backward(const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>& dx);

/// Channel-wise concatenation of two tensors with equal N, H, W.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Inverse of concat_channels for gradients: split at channel `first`.
template <typename T>
void split_channels(const Tensor<T>& ab, int first, Tensor<T>& a,
                    Tensor<T>& b);

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src);

}  // namespace attrport::kernels
