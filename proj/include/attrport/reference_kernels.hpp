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

// Serial direct-loop kernels. Slow and obvious; they exist so the parallel
// kernels have something independent to be checked against, and as the
// baseline in the benchmark.

#pragma once

#include <cmath>

#include "attrport/kernels.hpp"
#include "attrport/tensor.hpp"

namespace attrport::reference {

using kernels::ConvGeometry;

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w,
                         const Tensor<T>& b, ConvGeometry g) {
  const Shape xs = x.shape(), ws = w.shape();
  const int oh = g.conv_out(xs.h), ow = g.conv_out(xs.w);
  Tensor<T> y(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < ws.n; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T acc = b[oc];
          for (int ic = 0; ic < xs.c; ++ic)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += w.at(oc, ic, ky, kx) * x.at(n, ic, iy, ix);
              }
          y.at(n, oc, oy, ox) = acc;
        }
  return y;
}

/// Returns (dx, dw, db); dw and db are fresh, not accumulated.
template <typename T>
struct ConvGrads {
  Tensor<T> dx, dw, db;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& dy, ConvGeometry g) {
  const Shape xs = x.shape(), ws = w.shape(), ys = dy.shape();
  ConvGrads<T> r{Tensor<T>(xs), Tensor<T>(ws), Tensor<T>(Shape{1, ws.n, 1, 1})};
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < ws.n; ++oc)
      for (int oy = 0; oy < ys.h; ++oy)
        for (int ox = 0; ox < ys.w; ++ox) {
          const T gy = dy.at(n, oc, oy, ox);
          r.db[oc] += gy;
          for (int ic = 0; ic < xs.c; ++ic)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                r.dw.at(oc, ic, ky, kx) += gy * x.at(n, ic, iy, ix);
                r.dx.at(n, ic, iy, ix) += gy * w.at(oc, ic, ky, kx);
              }
        }
  return r;
}

/// Scatter form: every input pixel stamps its weighted kernel onto the output.
template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, const Tensor<T>& w,
                                   const Tensor<T>& b, ConvGeometry g) {
  const Shape xs = x.shape(), ws = w.shape();
  const int oh = g.transpose_out(xs.h), ow = g.transpose_out(xs.w);
  Tensor<T> y(Shape{xs.n, ws.c, oh, ow});
  for (int n = 0; n < xs.n; ++n) {
    for (int oc = 0; oc < ws.c; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) y.at(n, oc, oy, ox) = b[oc];
    for (int ic = 0; ic < xs.c; ++ic)
      for (int iy = 0; iy < xs.h; ++iy)
        for (int ix = 0; ix < xs.w; ++ix)
          for (int oc = 0; oc < ws.c; ++oc)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int oy = iy * g.stride - g.pad + ky;
                const int ox = ix * g.stride - g.pad + kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                y.at(n, oc, oy, ox) += x.at(n, ic, iy, ix) * w.at(ic, oc, ky, kx);
              }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                                       const Tensor<T>& dy, ConvGeometry g) {
  const Shape xs = x.shape(), ws = w.shape(), ys = dy.shape();
  ConvGrads<T> r{Tensor<T>(xs), Tensor<T>(ws), Tensor<T>(Shape{1, ws.c, 1, 1})};
  for (int n = 0; n < ys.n; ++n)
    for (int oc = 0; oc < ys.c; ++oc)
      for (int oy = 0; oy < ys.h; ++oy)
        for (int ox = 0; ox < ys.w; ++ox) r.db[oc] += dy.at(n, oc, oy, ox);
  for (int n = 0; n < xs.n; ++n)
    for (int ic = 0; ic < xs.c; ++ic)
      for (int iy = 0; iy < xs.h; ++iy)
        for (int ix = 0; ix < xs.w; ++ix)
          for (int oc = 0; oc < ws.c; ++oc)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int oy = iy * g.stride - g.pad + ky;
                const int ox = ix * g.stride - g.pad + kx;
                if (oy < 0 || oy >= ys.h || ox < 0 || ox >= ys.w) continue;
                const T gy = dy.at(n, oc, oy, ox);
                r.dx.at(n, ic, iy, ix) += gy * w.at(ic, oc, ky, kx);
                r.dw.at(ic, oc, ky, kx) += gy * x.at(n, ic, iy, ix);
              }
  return r;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w,
                        const Tensor<T>& b) {
  const int in = static_cast<int>(x.shape().per_sample());
  const int out = w.shape().n;
  Tensor<T> y(Shape{x.shape().n, out, 1, 1});
  for (int n = 0; n < x.shape().n; ++n)
    for (int o = 0; o < out; ++o) {
      T acc = b[o];
      for (int i = 0; i < in; ++i) acc += w[o * in + i] * x.sample(n)[i];
      y[n * out + o] = acc;
    }
  return y;
}

template <typename T>
Tensor<T> instance_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma,
                                const Tensor<T>& beta, T eps) {
  const Shape s = x.shape();
  Tensor<T> y(s);
  const int m = s.h * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      T mean = 0;
      for (int yy = 0; yy < s.h; ++yy)
        for (int xx = 0; xx < s.w; ++xx) mean += x.at(n, c, yy, xx);
      mean /= m;
      T var = 0;
      for (int yy = 0; yy < s.h; ++yy)
        for (int xx = 0; xx < s.w; ++xx) {
          const T d = x.at(n, c, yy, xx) - mean;
          var += d * d;
        }
      var /= m;
      for (int yy = 0; yy < s.h; ++yy)
        for (int xx = 0; xx < s.w; ++xx)
          y.at(n, c, yy, xx) =
              gamma[c] * (x.at(n, c, yy, xx) - mean) / std::sqrt(var + eps) +
              beta[c];
    }
  return y;
}

}  // namespace attrport::reference
