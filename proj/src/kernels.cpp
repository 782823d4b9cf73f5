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

#include "attrport/kernels.hpp"

#include <Eigen/Core>
#include <cmath>

namespace attrport::kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

// Column matrix of `src` seen as the input of a conv with geometry g:
// rows (c, ky, kx), columns (n, oy, ox).
template <typename T>
RowMat<T> im2col(const Tensor<T>& src, ConvGeometry g, int out_h, int out_w) {
  const Shape s = src.shape();
  const int k = g.kernel;
  const long rows = static_cast<long>(s.c) * k * k;
  const long plane = static_cast<long>(out_h) * out_w;
  RowMat<T> col(rows, s.n * plane);

#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const int c = static_cast<int>(r / (k * k));
    const int ky = static_cast<int>((r / k) % k);
    const int kx = static_cast<int>(r % k);
    T* dst = col.data() + r * col.cols();
    for (int n = 0; n < s.n; ++n) {
      const T* in = src.data() + (static_cast<std::size_t>(n) * s.c + c) * s.h * s.w;
      for (int oy = 0; oy < out_h; ++oy) {
        const int iy = oy * g.stride - g.pad + ky;
        for (int ox = 0; ox < out_w; ++ox) {
          const int ix = ox * g.stride - g.pad + kx;
          *dst++ = (iy >= 0 && iy < s.h && ix >= 0 && ix < s.w)
                       ? in[iy * s.w + ix]
                       : T(0);
        }
      }
    }
  }
  return col;
}

// Scatter-add of a column matrix back onto `dst` (inverse layout of im2col).
// Parallel over (n, c) planes; each plane is owned by one iteration.
template <typename T>
void col2im(const RowMat<T>& col, ConvGeometry g, int out_h, int out_w,
            Tensor<T>& dst) {
  const Shape s = dst.shape();
  const int k = g.kernel;
  const long plane = static_cast<long>(out_h) * out_w;

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      T* out = dst.data() + (static_cast<std::size_t>(n) * s.c + c) * s.h * s.w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const long r = (static_cast<long>(c) * k + ky) * k + kx;
          const T* src = col.data() + r * col.cols() + n * plane;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= s.w) continue;
              out[iy * s.w + ix] += src[oy * out_w + ox];
            }
          }
        }
      }
    }
  }
}

// (N,C,H,W) <-> (C, N*H*W) row-major.
template <typename T>
RowMat<T> to_channel_major(const Tensor<T>& t) {
  const Shape s = t.shape();
  const long plane = static_cast<long>(s.h) * s.w;
  RowMat<T> m(s.c, s.n * plane);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = t.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      std::copy(src, src + plane, m.data() + c * m.cols() + n * plane);
    }
  return m;
}

template <typename T>
void from_channel_major(const RowMat<T>& m, const Tensor<T>* bias,
                        Tensor<T>& t) {
  const Shape s = t.shape();
  const long plane = static_cast<long>(s.h) * s.w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = m.data() + c * m.cols() + n * plane;
      T* dst = t.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      const T b = bias ? (*bias)[c] : T(0);
      for (long i = 0; i < plane; ++i) dst[i] = src[i] + b;
    }
}

template <typename T>
void accumulate_bias_grad(const RowMat<T>& dy_cm, Tensor<T>& dbias) {
  for (long c = 0; c < dy_cm.rows(); ++c) dbias[c] += dy_cm.row(c).sum();
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& bias, ConvGeometry g, Tensor<T>& y) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.c != xs.c || ws.h != g.kernel || ws.w != g.kernel)
    throw ShapeError("conv2d weight " + to_string(ws) + " vs input " +
                     to_string(xs));
  const int oh = g.conv_out(xs.h), ow = g.conv_out(xs.w);
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d input too small");
  y = Tensor<T>(Shape{xs.n, ws.n, oh, ow});

  const RowMat<T> col = im2col(x, g, oh, ow);
  ConstRowMap<T> w(weight.data(), ws.n, static_cast<long>(ws.c) * ws.h * ws.w);
  RowMat<T> out(ws.n, col.cols());
  out.noalias() = w * col;
  from_channel_major(out, &bias, y);
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                     const Tensor<T>& dy, ConvGeometry g, Tensor<T>* dx,
                     Tensor<T>* dweight, Tensor<T>* dbias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const int oh = g.conv_out(xs.h), ow = g.conv_out(xs.w);
  require_shape(dy.shape(), Shape{xs.n, ws.n, oh, ow}, "conv2d dy");

  const RowMat<T> dy_cm = to_channel_major(dy);
  const long kdim = static_cast<long>(ws.c) * ws.h * ws.w;
  ConstRowMap<T> w(weight.data(), ws.n, kdim);

  if (dweight) {
    const RowMat<T> col = im2col(x, g, oh, ow);
    RowMap<T> dw(dweight->data(), ws.n, kdim);
    dw.noalias() += dy_cm * col.transpose();
  }
  if (dbias) accumulate_bias_grad(dy_cm, *dbias);
  if (dx) {
    RowMat<T> dcol(kdim, dy_cm.cols());
    dcol.noalias() = w.transpose() * dy_cm;
    *dx = Tensor<T>(xs);
    col2im(dcol, g, oh, ow, *dx);
  }
}

template <typename T>
void conv_transpose2d_forward(const Tensor<T>& x, const Tensor<T>& weight,
                              const Tensor<T>& bias, ConvGeometry g,
                              Tensor<T>& y) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.n != xs.c || ws.h != g.kernel || ws.w != g.kernel)
    throw ShapeError("conv_transpose2d weight " + to_string(ws) +
                     " vs input " + to_string(xs));
  const int oh = g.transpose_out(xs.h), ow = g.transpose_out(xs.w);
  y = Tensor<T>(Shape{xs.n, ws.c, oh, ow});

  const RowMat<T> x_cm = to_channel_major(x);
  ConstRowMap<T> w(weight.data(), ws.n, static_cast<long>(ws.c) * ws.h * ws.w);
  RowMat<T> col(w.cols(), x_cm.cols());
  col.noalias() = w.transpose() * x_cm;
  col2im(col, g, xs.h, xs.w, y);

  const long plane = static_cast<long>(oh) * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < ws.c; ++c) {
      T* p = y.data() + (static_cast<std::size_t>(n) * ws.c + c) * plane;
      const T b = bias[c];
      for (long i = 0; i < plane; ++i) p[i] += b;
    }
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                               const Tensor<T>& dy, ConvGeometry g,
                               Tensor<T>* dx, Tensor<T>* dweight,
                               Tensor<T>* dbias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const int oh = g.transpose_out(xs.h), ow = g.transpose_out(xs.w);
  require_shape(dy.shape(), Shape{xs.n, ws.c, oh, ow}, "conv_transpose2d dy");

  // dy plays the role of a conv input whose output grid is x's grid.
  const RowMat<T> col = im2col(dy, g, xs.h, xs.w);
  const long kdim = static_cast<long>(ws.c) * ws.h * ws.w;
  ConstRowMap<T> w(weight.data(), ws.n, kdim);

  if (dweight) {
    const RowMat<T> x_cm = to_channel_major(x);
    RowMap<T> dw(dweight->data(), ws.n, kdim);
    dw.noalias() += x_cm * col.transpose();
  }
  if (dbias) {
    const Shape ds = dy.shape();
    const long plane = static_cast<long>(ds.h) * ds.w;
    for (int c = 0; c < ds.c; ++c) {
      T acc = 0;
      for (int n = 0; n < ds.n; ++n) {
        const T* p = dy.data() + (static_cast<std::size_t>(n) * ds.c + c) * plane;
        for (long i = 0; i < plane; ++i) acc += p[i];
      }
      (*dbias)[c] += acc;
    }
  }
  if (dx) {
    RowMat<T> dx_cm(ws.n, col.cols());
    dx_cm.noalias() = w * col;
    *dx = Tensor<T>(xs);
    from_channel_major<T>(dx_cm, nullptr, *dx);
  }
}

template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, Tensor<T>& y) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const long in = static_cast<long>(xs.per_sample());
  if (static_cast<long>(ws.per_sample()) != in)
    throw ShapeError("dense weight " + to_string(ws) + " vs input " +
                     to_string(xs));
  y = Tensor<T>(Shape{xs.n, ws.n, 1, 1});
  ConstRowMap<T> xm(x.data(), xs.n, in);
  ConstRowMap<T> w(weight.data(), ws.n, in);
  RowMap<T> ym(y.data(), xs.n, ws.n);
  ym.noalias() = xm * w.transpose();
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), ws.n);
  ym.rowwise() += b;
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dweight,
                    Tensor<T>* dbias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const long in = static_cast<long>(xs.per_sample());
  require_shape(dy.shape(), Shape{xs.n, ws.n, 1, 1}, "dense dy");
  ConstRowMap<T> xm(x.data(), xs.n, in);
  ConstRowMap<T> w(weight.data(), ws.n, in);
  ConstRowMap<T> dym(dy.data(), xs.n, ws.n);
  if (dweight) {
    RowMap<T> dw(dweight->data(), ws.n, in);
    dw.noalias() += dym.transpose() * xm;
  }
  if (dbias) {
    for (int o = 0; o < ws.n; ++o) (*dbias)[o] += dym.col(o).sum();
  }
  if (dx) {
    *dx = Tensor<T>(xs);
    RowMap<T> dxm(dx->data(), xs.n, in);
    dxm.noalias() = dym * w;
  }
}

template <typename T>
void instance_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma,
                           const Tensor<T>& beta, T eps, Tensor<T>& y) {
  const Shape s = x.shape();
  y = Tensor<T>(s);
  const long plane = static_cast<long>(s.h) * s.w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* in = x.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      T* out = y.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      T mean = 0;
      for (long i = 0; i < plane; ++i) mean += in[i];
      mean /= static_cast<T>(plane);
      T var = 0;
      for (long i = 0; i < plane; ++i) var += (in[i] - mean) * (in[i] - mean);
      var /= static_cast<T>(plane);
      const T inv = T(1) / std::sqrt(var + eps);
      for (long i = 0; i < plane; ++i)
        out[i] = gamma[c] * (in[i] - mean) * inv + beta[c];
    }
}

template <typename T>
void instance_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                            const Tensor<T>& dy, T eps, Tensor<T>* dx,
                            Tensor<T>* dgamma, Tensor<T>* dbeta) {
  const Shape s = x.shape();
  require_shape(dy.shape(), s, "instance_norm dy");
  const long plane = static_cast<long>(s.h) * s.w;
  if (dx) *dx = Tensor<T>(s);
  // Per-(n,c) partial sums for the affine grads; reduced serially below so the
  // summation order is fixed.
  std::vector<T> pg(static_cast<std::size_t>(s.n) * s.c);
  std::vector<T> pb(pg.size());

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * plane;
      const T* in = x.data() + off;
      const T* g = dy.data() + off;
      T mean = 0;
      for (long i = 0; i < plane; ++i) mean += in[i];
      mean /= static_cast<T>(plane);
      T var = 0;
      for (long i = 0; i < plane; ++i) var += (in[i] - mean) * (in[i] - mean);
      var /= static_cast<T>(plane);
      const T inv = T(1) / std::sqrt(var + eps);
      T sum_g = 0, sum_gx = 0;
      for (long i = 0; i < plane; ++i) {
        const T xhat = (in[i] - mean) * inv;
        sum_g += g[i];
        sum_gx += g[i] * xhat;
      }
      pg[n * s.c + c] = sum_gx;
      pb[n * s.c + c] = sum_g;
      if (dx) {
        T* out = dx->data() + off;
        const T m = static_cast<T>(plane);
        for (long i = 0; i < plane; ++i) {
          const T xhat = (in[i] - mean) * inv;
          out[i] = gamma[c] * inv * (g[i] - sum_g / m - xhat * sum_gx / m);
        }
      }
    }
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      if (dgamma) (*dgamma)[c] += pg[n * s.c + c];
      if (dbeta) (*dbeta)[c] += pb[n * s.c + c];
    }
}

template <typename T>
void leaky_relu_forward(const Tensor<T>& x, T slope, Tensor<T>& y) {
  y = Tensor<T>(x.shape());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope,
                         Tensor<T>& dx) {
  require_shape(dy.shape(), x.shape(), "leaky_relu dy");
  dx = Tensor<T>(x.shape());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : slope * dy[i];
}

template <typename T>
void tanh_forward(const Tensor<T>& x, Tensor<T>& y) {
  y = Tensor<T>(x.shape());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

template <typename T>
void tanh_backward(const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>& dx) {
  require_shape(dy.shape(), y.shape(), "tanh dy");
  dx = Tensor<T>(y.shape());
  const long n = static_cast<long>(y.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat " + to_string(sa) + " with " + to_string(sb));
  Tensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    std::copy(a.sample(n), a.sample(n) + sa.per_sample(), out.sample(n));
    std::copy(b.sample(n), b.sample(n) + sb.per_sample(),
              out.sample(n) + sa.per_sample());
  }
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& ab, int first, Tensor<T>& a,
                    Tensor<T>& b) {
  const Shape s = ab.shape();
  a = Tensor<T>(Shape{s.n, first, s.h, s.w});
  b = Tensor<T>(Shape{s.n, s.c - first, s.h, s.w});
  const std::size_t na = a.shape().per_sample();
  for (int n = 0; n < s.n; ++n) {
    std::copy(ab.sample(n), ab.sample(n) + na, a.sample(n));
    std::copy(ab.sample(n) + na, ab.sample(n) + s.per_sample(), b.sample(n));
  }
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  require_shape(src.shape(), dst.shape(), "add_inplace");
  const long n = static_cast<long>(dst.size());
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) dst[i] += src[i];
}

#define ATTRPORT_INSTANTIATE(T)                                                \
  template void conv2d_forward(const Tensor<T>&, const Tensor<T>&,             \
                               const Tensor<T>&, ConvGeometry, Tensor<T>&);    \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&,            \
                                const Tensor<T>&, ConvGeometry, Tensor<T>*,    \
                                Tensor<T>*, Tensor<T>*);                       \
  template void conv_transpose2d_forward(const Tensor<T>&, const Tensor<T>&,   \
                                         const Tensor<T>&, ConvGeometry,       \
                                         Tensor<T>&);                          \
  template void conv_transpose2d_backward(                                     \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry,      \
      Tensor<T>*, Tensor<T>*, Tensor<T>*);                                     \
  template void dense_forward(const Tensor<T>&, const Tensor<T>&,              \
                              const Tensor<T>&, Tensor<T>&);                   \
  template void dense_backward(const Tensor<T>&, const Tensor<T>&,             \
                               const Tensor<T>&, Tensor<T>*, Tensor<T>*,       \
                               Tensor<T>*);                                    \
  template void instance_norm_forward(const Tensor<T>&, const Tensor<T>&,      \
                                      const Tensor<T>&, T, Tensor<T>&);        \
  template void instance_norm_backward(const Tensor<T>&, const Tensor<T>&,     \
                                       const Tensor<T>&, T, Tensor<T>*,        \
                                       Tensor<T>*, Tensor<T>*);                \
  template void leaky_relu_forward(const Tensor<T>&, T, Tensor<T>&);           \
  template void leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T,     \
                                    Tensor<T>&);                               \
  template void tanh_forward(const Tensor<T>&, Tensor<T>&);                    \
  template void tanh_backward(const Tensor<T>&, const Tensor<T>&, Tensor<T>&); \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);      \
  template void split_channels(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&); \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);

ATTRPORT_INSTANTIATE(float)
ATTRPORT_INSTANTIATE(double)

#undef ATTRPORT_INSTANTIATE

}  // namespace attrport::kernels
