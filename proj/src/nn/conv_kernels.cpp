/**
 * Copyright 2026 The mammopatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "conv_kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

namespace mammo::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

}  // namespace

void conv_forward_direct(const ConvGeometry& g, const float* x, const float* kernel, float* y) {
  for (int i = 0; i < g.out_h; ++i) {
    for (int j = 0; j < g.out_w; ++j) {
      for (int k = 0; k < g.out_c; ++k) {
        double s = 0.0;
        for (int u = 0; u < g.kh; ++u) {
          const int r = i * g.sh + u - g.pad_top;
          if (r < 0 || r >= g.in_h) continue;
          for (int v = 0; v < g.kw; ++v) {
            const int col = j * g.sw + v - g.pad_left;
            if (col < 0 || col >= g.in_w) continue;
            for (int c = 0; c < g.in_c; ++c) {
              s += static_cast<double>(x[(static_cast<std::size_t>(r) * g.in_w + col) * g.in_c + c]) *
                   kernel[((static_cast<std::size_t>(u) * g.kw + v) * g.in_c + c) * g.out_c + k];
            }
          }
        }
        y[(static_cast<std::size_t>(i) * g.out_w + j) * g.out_c + k] = static_cast<float>(s);
      }
    }
  }
}

void conv_backward_direct(const ConvGeometry& g, const float* x, const float* kernel,
                          const float* dy, float* dkernel, float* dx) {
  if (dx) std::fill(dx, dx + static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w, 0.0f);
  for (int i = 0; i < g.out_h; ++i) {
    for (int j = 0; j < g.out_w; ++j) {
      for (int k = 0; k < g.out_c; ++k) {
        const float d = dy[(static_cast<std::size_t>(i) * g.out_w + j) * g.out_c + k];
        for (int u = 0; u < g.kh; ++u) {
          const int r = i * g.sh + u - g.pad_top;
          if (r < 0 || r >= g.in_h) continue;
          for (int v = 0; v < g.kw; ++v) {
            const int col = j * g.sw + v - g.pad_left;
            if (col < 0 || col >= g.in_w) continue;
            for (int c = 0; c < g.in_c; ++c) {
              const std::size_t xi = (static_cast<std::size_t>(r) * g.in_w + col) * g.in_c + c;
              const std::size_t wi =
                  ((static_cast<std::size_t>(u) * g.kw + v) * g.in_c + c) * g.out_c + k;
              dkernel[wi] += d * x[xi];
              if (dx) dx[xi] += d * kernel[wi];
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// im2col

Im2colConv::Im2colConv(const ConvGeometry& g) : g_(g) {
  if (!pointwise()) {
    col_.resize(static_cast<std::size_t>(g.out_h) * g.out_w * g.kh * g.kw * g.in_c);
  }
}

bool Im2colConv::pointwise() const {
  return g_.kh == 1 && g_.kw == 1 && g_.sh == 1 && g_.sw == 1 && g_.pad_top == 0 &&
         g_.pad_left == 0 && g_.in_h == g_.out_h && g_.in_w == g_.out_w;
}

void Im2colConv::im2col(const float* x) {
  const int C = g_.in_c;
  float* dst = col_.data();
  for (int i = 0; i < g_.out_h; ++i) {
    for (int j = 0; j < g_.out_w; ++j) {
      for (int u = 0; u < g_.kh; ++u) {
        const int r = i * g_.sh + u - g_.pad_top;
        for (int v = 0; v < g_.kw; ++v, dst += C) {
          const int col = j * g_.sw + v - g_.pad_left;
          if (r < 0 || r >= g_.in_h || col < 0 || col >= g_.in_w) {
            std::fill(dst, dst + C, 0.0f);
          } else {
            std::memcpy(dst, x + (static_cast<std::size_t>(r) * g_.in_w + col) * C,
                        sizeof(float) * C);
          }
        }
      }
    }
  }
}

void Im2colConv::col2im(float* dx) const {
  const int C = g_.in_c;
  std::fill(dx, dx + static_cast<std::size_t>(C) * g_.in_h * g_.in_w, 0.0f);
  const float* src = col_.data();
  for (int i = 0; i < g_.out_h; ++i) {
    for (int j = 0; j < g_.out_w; ++j) {
      for (int u = 0; u < g_.kh; ++u) {
        const int r = i * g_.sh + u - g_.pad_top;
        for (int v = 0; v < g_.kw; ++v, src += C) {
          const int col = j * g_.sw + v - g_.pad_left;
          if (r < 0 || r >= g_.in_h || col < 0 || col >= g_.in_w) continue;
          float* d = dx + (static_cast<std::size_t>(r) * g_.in_w + col) * C;
          for (int c = 0; c < C; ++c) d[c] += src[c];
        }
      }
    }
  }
}

void Im2colConv::forward(const float* x, const float* kernel, float* y) {
  const int rows = g_.kh * g_.kw * g_.in_c;
  const int pixels = g_.out_h * g_.out_w;
  const float* cols = x;
  if (!pointwise()) {
    im2col(x);
    cols = col_.data();
  }
  MapMat(y, pixels, g_.out_c).noalias() =
      ConstMapMat(cols, pixels, rows) * ConstMapMat(kernel, rows, g_.out_c);
}

void Im2colConv::backward(const float* x, const float* kernel, const float* dy, float* dkernel,
                          float* dx) {
  const int rows = g_.kh * g_.kw * g_.in_c;
  const int pixels = g_.out_h * g_.out_w;
  const float* cols = x;
  if (!pointwise()) {
    im2col(x);
    cols = col_.data();
  }
  ConstMapMat dy_mat(dy, pixels, g_.out_c);
  MapMat(dkernel, rows, g_.out_c).noalias() +=
      ConstMapMat(cols, pixels, rows).transpose() * dy_mat;
  if (!dx) return;
  float* dcols = pointwise() ? dx : col_.data();
  MapMat(dcols, pixels, rows).noalias() =
      dy_mat * ConstMapMat(kernel, rows, g_.out_c).transpose();
  if (!pointwise()) col2im(dx);
}

// ---------------------------------------------------------------------------
// Winograd F(4x4, 3x3)

namespace {

constexpr int kLanes = 8;
typedef float Vec __attribute__((vector_size(kLanes * sizeof(float))));
typedef std::int32_t IVec __attribute__((vector_size(kLanes * sizeof(float))));
typedef std::uint8_t BVec __attribute__((vector_size(kLanes)));

// Partial loads and stores touch only the first n lanes.
Vec load_n(const float* p, int n) {
  Vec v = {};
  std::memcpy(&v, p, sizeof(float) * n);
  return v;
}

IVec load_index(const std::uint8_t* p, int n) {
  BVec b = {};
  std::memcpy(&b, p, n);
  return __builtin_convertvector(b, IVec);
}

void store_index(std::uint8_t* p, IVec v, int n) {
  const BVec b = __builtin_convertvector(v, BVec);
  std::memcpy(p, &b, n);
}

Vec load(const float* p) {
  Vec v;
  std::memcpy(&v, p, sizeof(Vec));
  return v;
}

void store(float* p, Vec v) { std::memcpy(p, &v, sizeof(Vec)); }

// 1-D transforms on vectors read at d[0], d[s], ... and written at o[0],
// o[t], ...

// B^T d (6 -> 6)
void input_1d(const Vec* d, int s, Vec* o, int t) {
  const Vec a = d[4 * s] - 4.0f * d[2 * s];
  const Vec b = d[3 * s] - 4.0f * d[s];
  const Vec c = d[4 * s] - d[2 * s];
  const Vec e = 2.0f * (d[3 * s] - d[s]);
  o[0] = 4.0f * d[0] - 5.0f * d[2 * s] + d[4 * s];
  o[t] = a + b;
  o[2 * t] = a - b;
  o[3 * t] = c + e;
  o[4 * t] = c - e;
  o[5 * t] = 4.0f * d[s] - 5.0f * d[3 * s] + d[5 * s];
}

// B v (6 -> 6), adjoint of input_1d
void input_adjoint_1d(const Vec* v, int s, Vec* o, int t) {
  const Vec d12 = v[s] - v[2 * s];
  const Vec d34 = v[3 * s] - v[4 * s];
  const Vec s12 = v[s] + v[2 * s];
  const Vec s34 = v[3 * s] + v[4 * s];
  o[0] = 4.0f * v[0];
  o[t] = -4.0f * d12 - 2.0f * d34 + 4.0f * v[5 * s];
  o[2 * t] = -5.0f * v[0] - 4.0f * s12 - s34;
  o[3 * t] = d12 + 2.0f * d34 - 5.0f * v[5 * s];
  o[4 * t] = v[0] + s12 + s34;
  o[5 * t] = v[5 * s];
}

// A^T m (6 -> 4)
void output_1d(const Vec* m, int s, Vec* o, int t) {
  const Vec s12 = m[s] + m[2 * s];
  const Vec d12 = m[s] - m[2 * s];
  const Vec s34 = m[3 * s] + m[4 * s];
  const Vec d34 = m[3 * s] - m[4 * s];
  o[0] = m[0] + s12 + s34;
  o[t] = d12 + 2.0f * d34;
  o[2 * t] = s12 + 4.0f * s34;
  o[3 * t] = d12 + 8.0f * d34 + m[5 * s];
}

// A y (4 -> 6), adjoint of output_1d
void output_adjoint_1d(const Vec* y, int s, Vec* o, int t) {
  const Vec e = y[0] + y[2 * s];
  const Vec d = y[s] + y[3 * s];
  const Vec e4 = y[0] + 4.0f * y[2 * s];
  const Vec d8 = 2.0f * y[s] + 8.0f * y[3 * s];
  o[0] = y[0];
  o[t] = e + d;
  o[2 * t] = e - d;
  o[3 * t] = e4 + d8;
  o[4 * t] = e4 - d8;
  o[5 * t] = y[3 * s];
}

// out = T in T' for a 1-D transform T (N -> M); `in` is N x N and `out`
// M x M, both row-major.
template <int N, int M, class F>
void transform_2d(const Vec* in, Vec* out, F f) {
  Vec tmp[M * N];
  for (int j = 0; j < N; ++j) f(in + j, N, tmp + j, N);
  for (int i = 0; i < M; ++i) f(tmp + i * N, 1, out + i * M, 1);
}

constexpr double kG[6][3] = {
    {1.0 / 4, 0.0, 0.0},
    {-1.0 / 6, -1.0 / 6, -1.0 / 6},
    {-1.0 / 6, 1.0 / 6, -1.0 / 6},
    {1.0 / 24, 1.0 / 12, 1.0 / 6},
    {1.0 / 24, -1.0 / 12, 1.0 / 6},
    {0.0, 0.0, 1.0},
};

int round_up(int n) { return (n + kLanes - 1) / kLanes * kLanes; }

}  // namespace

bool SmallConv::supports(const ConvGeometry& g) { return g.out_c % kLanes == 0 && g.in_c <= 4; }

void SmallConv::forward(const float* x, const float* kernel, const float* bias, bool relu,
                        float* y) const {
  const int K = g_.out_c;
  const int lanes = K / kLanes;
  std::vector<Vec> acc(lanes);
  const Vec zero = {};
  for (int r = 0; r < g_.out_h; ++r) {
    for (int q = 0; q < g_.out_w; ++q) {
      for (int l = 0; l < lanes; ++l) acc[l] = bias ? load(bias + l * kLanes) : zero;
      for (int u = 0; u < g_.kh; ++u) {
        const int sr = r * g_.sh + u - g_.pad_top;
        if (sr < 0 || sr >= g_.in_h) continue;
        for (int v = 0; v < g_.kw; ++v) {
          const int sc = q * g_.sw + v - g_.pad_left;
          if (sc < 0 || sc >= g_.in_w) continue;
          const float* xp = x + (static_cast<std::size_t>(sr) * g_.in_w + sc) * g_.in_c;
          const float* w = kernel + static_cast<std::size_t>(u * g_.kw + v) * g_.in_c * K;
          for (int c = 0; c < g_.in_c; ++c) {
            const float xv = xp[c];
            for (int l = 0; l < lanes; ++l) acc[l] += xv * load(w + c * K + l * kLanes);
          }
        }
      }
      float* o = y + (static_cast<std::size_t>(r) * g_.out_w + q) * K;
      for (int l = 0; l < lanes; ++l) {
        Vec a = acc[l];
        if (relu) a = a > zero ? a : zero;
        store(o + l * kLanes, a);
      }
    }
  }
}

void SmallConv::backward(const float* x, const float* kernel, const float* y, float* dy,
                         bool relu, float* dkernel, float* dbias, float* dx) const {
  const int K = g_.out_c;
  const int lanes = K / kLanes;
  const Vec zero = {};
  std::vector<double> db(K, 0.0);
  std::vector<Vec> acc(lanes);
  // One output row at a time, so the row of dy stays cached across taps.
  for (int r = 0; r < g_.out_h; ++r) {
    float* drow = dy + static_cast<std::size_t>(r) * g_.out_w * K;
    for (int l = 0; l < lanes; ++l) acc[l] = zero;
    for (int q = 0; q < g_.out_w; ++q) {
      float* d = drow + static_cast<std::size_t>(q) * K;
      for (int l = 0; l < lanes; ++l) {
        Vec dv = load(d + l * kLanes);
        if (relu) {
          const Vec o = load(y + (static_cast<std::size_t>(r) * g_.out_w + q) * K + l * kLanes);
          dv = o > zero ? dv : zero;
          store(d + l * kLanes, dv);
        }
        acc[l] += dv;
      }
    }
    for (int l = 0; l < lanes; ++l) {
      for (int t = 0; t < kLanes; ++t) db[l * kLanes + t] += acc[l][t];
    }
    for (int u = 0; u < g_.kh; ++u) {
      const int sr = r * g_.sh + u - g_.pad_top;
      if (sr < 0 || sr >= g_.in_h) continue;
      for (int v = 0; v < g_.kw; ++v) {
        for (int c = 0; c < g_.in_c; ++c) {
          for (int l = 0; l < lanes; ++l) acc[l] = zero;
          for (int q = 0; q < g_.out_w; ++q) {
            const int sc = q * g_.sw + v - g_.pad_left;
            if (sc < 0 || sc >= g_.in_w) continue;
            const float xv = x[(static_cast<std::size_t>(sr) * g_.in_w + sc) * g_.in_c + c];
            const float* d = drow + static_cast<std::size_t>(q) * K;
            for (int l = 0; l < lanes; ++l) acc[l] += xv * load(d + l * kLanes);
          }
          float* dw = dkernel + (static_cast<std::size_t>(u * g_.kw + v) * g_.in_c + c) * K;
          for (int l = 0; l < lanes; ++l) store(dw + l * kLanes, load(dw + l * kLanes) + acc[l]);
        }
      }
    }
  }
  if (dbias) {
    for (int k = 0; k < K; ++k) dbias[k] += static_cast<float>(db[k]);
  }
  if (!dx) return;
  std::fill(dx, dx + static_cast<std::size_t>(g_.in_h) * g_.in_w * g_.in_c, 0.0f);
  for (int r = 0; r < g_.out_h; ++r) {
    for (int q = 0; q < g_.out_w; ++q) {
      const float* d = dy + (static_cast<std::size_t>(r) * g_.out_w + q) * K;
      for (int u = 0; u < g_.kh; ++u) {
        const int sr = r * g_.sh + u - g_.pad_top;
        if (sr < 0 || sr >= g_.in_h) continue;
        for (int v = 0; v < g_.kw; ++v) {
          const int sc = q * g_.sw + v - g_.pad_left;
          if (sc < 0 || sc >= g_.in_w) continue;
          float* dxp = dx + (static_cast<std::size_t>(sr) * g_.in_w + sc) * g_.in_c;
          const float* w = kernel + static_cast<std::size_t>(u * g_.kw + v) * g_.in_c * K;
          for (int c = 0; c < g_.in_c; ++c) {
            Vec s = zero;
            for (int l = 0; l < lanes; ++l) s += load(d + l * kLanes) * load(w + c * K + l * kLanes);
            float t = 0.0f;
            for (int e = 0; e < kLanes; ++e) t += s[e];
            dxp[c] += t;
          }
        }
      }
    }
  }
}

Winograd3x3::Winograd3x3(const ConvGeometry& g) : g_(g) {
  cp_ = round_up(g.in_c);
  kp_ = round_up(g.out_c);
  tiles_h_ = (g.out_h + 3) / 4;
  tiles_w_ = (g.out_w + 3) / 4;
  plane_h_ = tiles_h_ * 4 + 2;
  plane_w_ = tiles_w_ * 4 + 2;
  const std::size_t ck = static_cast<std::size_t>(cp_) * kp_;
  u_.assign(36 * ck, 0.0f);
  du_.assign(36 * ck, 0.0f);
  plane_.assign(static_cast<std::size_t>(plane_h_) * plane_w_ * cp_, 0.0f);
  v_.assign(36 * v_block_stride(), 0.0f);
  m_.assign(36 * m_block_stride(), 0.0f);
}

bool Winograd3x3::supports(const ConvGeometry& g) {
  return g.kh == 3 && g.kw == 3 && g.sh == 1 && g.sw == 1 && g.pad_top >= 0 &&
         g.pad_left >= 0 && g.pad_top <= 2 && g.pad_left <= 2 &&
         g.in_h + g.pad_top <= ((g.out_h + 3) / 4) * 4 + 2 &&
         g.in_w + g.pad_left <= ((g.out_w + 3) / 4) * 4 + 2;
}

void Winograd3x3::set_kernel(const float* kernel) {
  const int C = g_.in_c;
  const int K = g_.out_c;
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k < K; ++k) {
      double w[3][3];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) w[a][b] = kernel[((a * 3 + b) * C + c) * K + k];
      }
      double tmp[6][3];
      for (int i = 0; i < 6; ++i) {
        for (int b = 0; b < 3; ++b) {
          tmp[i][b] = kG[i][0] * w[0][b] + kG[i][1] * w[1][b] + kG[i][2] * w[2][b];
        }
      }
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          const double v = tmp[i][0] * kG[j][0] + tmp[i][1] * kG[j][1] + tmp[i][2] * kG[j][2];
          u_[(static_cast<std::size_t>(i * 6 + j) * cp_ + c) * kp_ + k] = static_cast<float>(v);
        }
      }
    }
  }
}

void Winograd3x3::flush_kernel_gradient(float* dkernel) {
  const int C = g_.in_c;
  const int K = g_.out_c;
  for (int c = 0; c < C; ++c) {
    for (int k = 0; k < K; ++k) {
      double tmp[3][6];
      for (int a = 0; a < 3; ++a) {
        for (int j = 0; j < 6; ++j) {
          double s = 0.0;
          for (int i = 0; i < 6; ++i) {
            s += kG[i][a] * du_[(static_cast<std::size_t>(i * 6 + j) * cp_ + c) * kp_ + k];
          }
          tmp[a][j] = s;
        }
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          double s = 0.0;
          for (int j = 0; j < 6; ++j) s += tmp[a][j] * kG[j][b];
          dkernel[((a * 3 + b) * C + c) * K + k] += static_cast<float>(s);
        }
      }
    }
  }
  std::fill(du_.begin(), du_.end(), 0.0f);
}

void Winograd3x3::load_plane(const float* x) {
  const int C = g_.in_c;
  for (int r = 0; r < g_.in_h; ++r) {
    float* dst =
        &plane_[(static_cast<std::size_t>(r + g_.pad_top) * plane_w_ + g_.pad_left) * cp_];
    const float* src = x + static_cast<std::size_t>(r) * g_.in_w * C;
    if (cp_ == C) {
      std::memcpy(dst, src, sizeof(float) * g_.in_w * C);
    } else {
      for (int q = 0; q < g_.in_w; ++q) std::memcpy(dst + q * cp_, src + q * C, sizeof(float) * C);
    }
  }
}

void Winograd3x3::transform_block(int t0, int n) {
  const std::size_t stride = v_block_stride();
  Vec d[36];
  Vec v[36];
  for (int b = 0; b < n; ++b) {
    const int ty = (t0 + b) / tiles_w_;
    const int tx = (t0 + b) % tiles_w_;
    const float* base = &plane_[(static_cast<std::size_t>(4 * ty) * plane_w_ + 4 * tx) * cp_];
    float* out = &v_[static_cast<std::size_t>(b) * cp_];
    for (int c0 = 0; c0 < cp_; c0 += kLanes) {
      for (int i = 0; i < 6; ++i) {
        const float* row = base + static_cast<std::size_t>(i) * plane_w_ * cp_ + c0;
        for (int j = 0; j < 6; ++j) d[i * 6 + j] = load(row + j * cp_);
      }
      transform_2d<6, 6>(d, v, input_1d);
      for (int p = 0; p < 36; ++p) store(out + p * stride + c0, v[p]);
    }
  }
}

void Winograd3x3::forward(const float* x, const float* bias, bool relu, float* y,
                          std::uint8_t* argmax) {
  load_plane(x);
  const int K = g_.out_c;
  const int pool_h = g_.out_h / 2;
  const int pool_w = g_.out_w / 2;
  std::vector<float> b(kp_, 0.0f);
  if (bias) std::copy(bias, bias + K, b.begin());
  const std::size_t v_stride = v_block_stride();
  const std::size_t m_stride = m_block_stride();
  const Vec zero = {};
  Vec m[36];
  Vec out[16];
  for (int t0 = 0; t0 < tiles(); t0 += kBlock) {
    const int n = std::min(kBlock, tiles() - t0);
    transform_block(t0, n);
    for (int p = 0; p < 36; ++p) {
      MapMat(m_.data() + p * m_stride, n, kp_).noalias() =
          ConstMapMat(v_.data() + p * v_stride, n, cp_) *
          ConstMapMat(u_.data() + static_cast<std::size_t>(p) * cp_ * kp_, cp_, kp_);
    }
    for (int bt = 0; bt < n; ++bt) {
      const int ty = (t0 + bt) / tiles_w_;
      const int tx = (t0 + bt) % tiles_w_;
      const int rows = std::min(4, g_.out_h - 4 * ty);
      const int cols = std::min(4, g_.out_w - 4 * tx);
      const float* src = &m_[static_cast<std::size_t>(bt) * kp_];
      for (int k0 = 0; k0 < kp_; k0 += kLanes) {
        for (int p = 0; p < 36; ++p) m[p] = load(src + p * m_stride + k0);
        transform_2d<6, 4>(m, out, output_1d);
        const Vec bv = load(&b[k0]);
        const int nl = std::min(kLanes, K - k0);
        for (int q = 0; q < 16; ++q) {
          out[q] += bv;
          if (relu) out[q] = out[q] > zero ? out[q] : zero;
        }
        if (argmax) {
          for (int pi = 0; pi < 2 && 2 * ty + pi < pool_h; ++pi) {
            for (int pj = 0; pj < 2 && 2 * tx + pj < pool_w; ++pj) {
              const Vec a0 = out[8 * pi + 2 * pj];
              const Vec a1 = out[8 * pi + 2 * pj + 1];
              const Vec a2 = out[8 * pi + 2 * pj + 4];
              const Vec a3 = out[8 * pi + 2 * pj + 5];
              const IVec top = a1 > a0;
              const Vec t = top ? a1 : a0;
              const IVec bottom = a3 > a2;
              const Vec bb = bottom ? a3 : a2;
              const IVec lower = bb > t;
              const Vec best = lower ? bb : t;
              const IVec at = lower ? 2 - bottom : -top;
              const std::size_t o =
                  (static_cast<std::size_t>(2 * ty + pi) * pool_w + 2 * tx + pj) * K + k0;
              if (nl == kLanes) {
                store(y + o, best);
                store_index(argmax + o, at, kLanes);
              } else {
                std::memcpy(y + o, &best, sizeof(float) * nl);
                store_index(argmax + o, at, nl);
              }
            }
          }
          continue;
        }
        for (int i = 0; i < rows; ++i) {
          float* dst = y + (static_cast<std::size_t>(4 * ty + i) * g_.out_w + 4 * tx) * K + k0;
          for (int j = 0; j < cols; ++j, dst += K) {
            if (nl == kLanes) {
              store(dst, out[i * 4 + j]);
            } else {
              std::memcpy(dst, &out[i * 4 + j], sizeof(float) * nl);
            }
          }
        }
      }
    }
  }
}

void Winograd3x3::backward(const float* x, const float* y, const float* dy, bool relu,
                           float* dbias, float* dx, const std::uint8_t* argmax) {
  load_plane(x);
  const int K = g_.out_c;
  const int pool_h = g_.out_h / 2;
  const int pool_w = g_.out_w / 2;
  const std::size_t v_stride = v_block_stride();
  const std::size_t m_stride = m_block_stride();
  if (dx) {
    dv_.resize(v_.size());
    dplane_.assign(plane_.size(), 0.0f);
  }
  std::vector<double> bias_acc(kp_, 0.0);
  const Vec zero = {};
  Vec dyt[16];
  Vec dm[36];
  Vec dvt[36];
  Vec dd[36];
  for (int t0 = 0; t0 < tiles(); t0 += kBlock) {
    const int n = std::min(kBlock, tiles() - t0);
    transform_block(t0, n);

    // dM = A dY A^T per tile.
    for (int bt = 0; bt < n; ++bt) {
      const int ty = (t0 + bt) / tiles_w_;
      const int tx = (t0 + bt) % tiles_w_;
      const int rows = std::min(4, g_.out_h - 4 * ty);
      const int cols = std::min(4, g_.out_w - 4 * tx);
      float* dst = &m_[static_cast<std::size_t>(bt) * kp_];
      for (int k0 = 0; k0 < kp_; k0 += kLanes) {
        const int nl = std::min(kLanes, K - k0);
        Vec tile_sum = zero;
        for (int q = 0; q < 16; ++q) dyt[q] = zero;
        if (argmax) {
          for (int pi = 0; pi < 2 && 2 * ty + pi < pool_h; ++pi) {
            for (int pj = 0; pj < 2 && 2 * tx + pj < pool_w; ++pj) {
              const std::size_t o =
                  (static_cast<std::size_t>(2 * ty + pi) * pool_w + 2 * tx + pj) * K + k0;
              const bool full = nl == kLanes;
              Vec g = full ? load(dy + o) : load_n(dy + o, nl);
              const IVec at = full ? load_index(argmax + o, kLanes) : load_index(argmax + o, nl);
              if (relu) {
                const Vec out = full ? load(y + o) : load_n(y + o, nl);
                g = out > zero ? g : zero;
              }
              dyt[8 * pi + 2 * pj] = at == 0 ? g : zero;
              dyt[8 * pi + 2 * pj + 1] = at == 1 ? g : zero;
              dyt[8 * pi + 2 * pj + 4] = at == 2 ? g : zero;
              dyt[8 * pi + 2 * pj + 5] = at == 3 ? g : zero;
            }
          }
          for (int q = 0; q < 16; ++q) tile_sum += dyt[q];
        }
        for (int i = 0; i < (argmax ? 0 : rows); ++i) {
          const std::size_t off = (static_cast<std::size_t>(4 * ty + i) * g_.out_w + 4 * tx) * K + k0;
          for (int j = 0; j < cols; ++j) {
            const std::size_t o = off + static_cast<std::size_t>(j) * K;
            Vec g = zero;
            Vec out = zero;
            if (nl == kLanes) {
              g = load(dy + o);
              if (relu) out = load(y + o);
            } else {
              std::memcpy(&g, dy + o, sizeof(float) * nl);
              if (relu) std::memcpy(&out, y + o, sizeof(float) * nl);
            }
            if (relu) g = out > zero ? g : zero;
            dyt[i * 4 + j] = g;
            tile_sum += g;
          }
        }
        for (int l = 0; l < kLanes; ++l) bias_acc[k0 + l] += tile_sum[l];
        transform_2d<4, 6>(dyt, dm, output_adjoint_1d);
        for (int p = 0; p < 36; ++p) store(dst + p * m_stride + k0, dm[p]);
      }
    }

    for (int p = 0; p < 36; ++p) {
      ConstMapMat dm_p(m_.data() + p * m_stride, n, kp_);
      const std::size_t u_off = static_cast<std::size_t>(p) * cp_ * kp_;
      MapMat(du_.data() + u_off, cp_, kp_).noalias() +=
          ConstMapMat(v_.data() + p * v_stride, n, cp_).transpose() * dm_p;
      if (dx) {
        MapMat(dv_.data() + p * v_stride, n, cp_).noalias() =
            dm_p * ConstMapMat(u_.data() + u_off, cp_, kp_).transpose();
      }
    }
    if (!dx) continue;

    // dD = B dV B^T per tile, scattered back onto the padded plane.
    for (int bt = 0; bt < n; ++bt) {
      const int ty = (t0 + bt) / tiles_w_;
      const int tx = (t0 + bt) % tiles_w_;
      const float* src = &dv_[static_cast<std::size_t>(bt) * cp_];
      float* base = &dplane_[(static_cast<std::size_t>(4 * ty) * plane_w_ + 4 * tx) * cp_];
      for (int c0 = 0; c0 < cp_; c0 += kLanes) {
        for (int p = 0; p < 36; ++p) dvt[p] = load(src + p * v_stride + c0);
        transform_2d<6, 6>(dvt, dd, input_adjoint_1d);
        for (int i = 0; i < 6; ++i) {
          float* row = base + static_cast<std::size_t>(i) * plane_w_ * cp_ + c0;
          for (int j = 0; j < 6; ++j) store(row + j * cp_, load(row + j * cp_) + dd[i * 6 + j]);
        }
      }
    }
  }
  if (dbias) {
    for (int k = 0; k < K; ++k) dbias[k] += static_cast<float>(bias_acc[k]);
  }
  if (!dx) return;
  const int C = g_.in_c;
  for (int r = 0; r < g_.in_h; ++r) {
    const float* src =
        &dplane_[(static_cast<std::size_t>(r + g_.pad_top) * plane_w_ + g_.pad_left) * cp_];
    float* dst = dx + static_cast<std::size_t>(r) * g_.in_w * C;
    if (cp_ == C) {
      std::memcpy(dst, src, sizeof(float) * g_.in_w * C);
    } else {
      for (int q = 0; q < g_.in_w; ++q) std::memcpy(dst + q * C, src + q * cp_, sizeof(float) * C);
    }
  }
}

}  // namespace mammo::nn
