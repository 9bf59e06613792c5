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

#include "layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "conv_kernels.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Parameter make_param(const std::string& name, std::vector<int> shape) {
  Parameter p;
  p.name = name;
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  p.shape = std::move(shape);
  p.value.assign(n, 0.0f);
  p.grad.assign(n, 0.0f);
  return p;
}

int same_pad(int in, int out, int k, int s) { return std::max((out - 1) * s + k - in, 0) / 2; }

void relu_backward(const Tensor& y, Tensor& dy) {
  const float* yv = y.data.data();
  float* d = dy.data.data();
  for (std::size_t i = 0; i < dy.size(); ++i) d[i] = yv[i] > 0.0f ? d[i] : 0.0f;
}

ConvGeometry geometry(const LayerSpec& l, const TensorShape& in, const TensorShape& out,
                      int out_c) {
  ConvGeometry g;
  g.in_c = in.channels;
  g.in_h = in.height;
  g.in_w = in.width;
  g.out_c = out_c;
  g.out_h = out.height;
  g.out_w = out.width;
  g.kh = l.kernel[0];
  g.kw = l.kernel[1];
  g.sh = l.stride[0];
  g.sw = l.stride[1];
  if (l.padding == Padding::Same) {
    g.pad_top = same_pad(in.height, out.height, g.kh, g.sh);
    g.pad_left = same_pad(in.width, out.width, g.kw, g.sw);
  }
  return g;
}

class Conv final : public Layer {
 public:
  Conv(const LayerSpec& l, const TensorShape& in, const TensorShape& out, const std::string& pre)
      : Layer(l.name, in, out), g_(geometry(l, in, out, l.units)),
        relu_(l.activation == Activation::Relu) {
    kernel_ = make_param(pre + l.name + "/kernel", {g_.kh, g_.kw, g_.in_c, g_.out_c});
    bias_ = make_param(pre + l.name + "/bias", {g_.out_c});
    if (Winograd3x3::supports(g_) && g_.in_c >= 8) {
      wino_ = std::make_unique<Winograd3x3>(g_);
    } else if (SmallConv::supports(g_)) {
      small_ = std::make_unique<SmallConv>(g_);
    } else {
      gemm_ = std::make_unique<Im2colConv>(g_);
    }
  }

  // Takes over a following 2x2/stride-2 unpadded max pool.
  bool absorb_pool(const LayerSpec& pool, const TensorShape& pool_out) {
    const ConvGeometry pg = geometry(pool, out_shape(), pool_out, g_.out_c);
    if (!wino_ || pg.kh != 2 || pg.kw != 2 || pg.sh != 2 || pg.sw != 2 || pg.pad_top != 0 ||
        pg.pad_left != 0) {
      return false;
    }
    pooled_ = true;
    set_out_shape(pool_out);
    return true;
  }

  void prepare() override {
    if (wino_) wino_->set_kernel(kernel_.value.data());
  }

  void forward(const Tensor& x, Tensor& y) override {
    const int pixels = g_.out_h * g_.out_w;
    const int K = g_.out_c;
    if (pooled_) argmax_.resize(y.size());
    for (int i = 0; i < x.n; ++i) {
      float* ys = y.sample(i);
      if (wino_) {
        wino_->forward(x.sample(i), bias_.value.data(), relu_, ys,
                       pooled_ ? argmax_.data() + i * y.sample_size() : nullptr);
        continue;
      }
      if (small_) {
        small_->forward(x.sample(i), kernel_.value.data(), bias_.value.data(), relu_, ys);
        continue;
      }
      gemm_->forward(x.sample(i), kernel_.value.data(), ys);
      const float* b = bias_.value.data();
      for (int q = 0; q < pixels; ++q) {
        float* p = ys + static_cast<std::size_t>(q) * K;
        for (int k = 0; k < K; ++k) p[k] = relu_ ? std::max(p[k] + b[k], 0.0f) : p[k] + b[k];
      }
    }
  }

  void backward(const Tensor& x, const Tensor& y, Tensor& dy, Tensor* dx) override {
    const int pixels = g_.out_h * g_.out_w;
    const int K = g_.out_c;
    std::vector<double> db(K, 0.0);
    for (int i = 0; i < x.n; ++i) {
      float* d = dy.sample(i);
      float* dxs = dx ? dx->sample(i) : nullptr;
      if (wino_) {
        wino_->backward(x.sample(i), y.sample(i), d, relu_, bias_.grad.data(), dxs,
                        pooled_ ? argmax_.data() + i * y.sample_size() : nullptr);
        continue;
      }
      if (small_) {
        small_->backward(x.sample(i), kernel_.value.data(), y.sample(i), d, relu_,
                         kernel_.grad.data(), bias_.grad.data(), dxs);
        continue;
      }
      const float* ys = y.sample(i);
      for (int q = 0; q < pixels; ++q) {
        float* p = d + static_cast<std::size_t>(q) * K;
        const float* o = ys + static_cast<std::size_t>(q) * K;
        for (int k = 0; k < K; ++k) {
          if (relu_ && !(o[k] > 0.0f)) p[k] = 0.0f;
          db[k] += p[k];
        }
      }
      gemm_->backward(x.sample(i), kernel_.value.data(), d, kernel_.grad.data(), dxs);
    }
    if (wino_) {
      wino_->flush_kernel_gradient(kernel_.grad.data());
    } else if (!small_) {
      for (int k = 0; k < K; ++k) bias_.grad[k] += static_cast<float>(db[k]);
    }
  }

  void collect(std::vector<Parameter*>& out) override {
    out.push_back(&kernel_);
    out.push_back(&bias_);
  }

 private:
  ConvGeometry g_;
  bool relu_;
  Parameter kernel_;
  Parameter bias_;
  std::unique_ptr<Winograd3x3> wino_;
  std::unique_ptr<SmallConv> small_;
  std::unique_ptr<Im2colConv> gemm_;
  bool pooled_ = false;
  std::vector<std::uint8_t> argmax_;
};

class Depthwise final : public Layer {
 public:
  Depthwise(const LayerSpec& l, const TensorShape& in, const TensorShape& out,
            const std::string& pre)
      : Layer(l.name, in, out), g_(geometry(l, in, out, in.channels)),
        relu_(l.activation == Activation::Relu) {
    kernel_ = make_param(pre + l.name + "/kernel", {g_.kh, g_.kw, g_.in_c});
    bias_ = make_param(pre + l.name + "/bias", {g_.in_c});
  }

  void forward(const Tensor& x, Tensor& y) override {
    const int C = g_.in_c;
    for (int i = 0; i < x.n; ++i) {
      const float* xs = x.sample(i);
      float* ys = y.sample(i);
      for (int r = 0; r < g_.out_h; ++r) {
        for (int q = 0; q < g_.out_w; ++q) {
          float* o = ys + (static_cast<std::size_t>(r) * g_.out_w + q) * C;
          std::copy(bias_.value.begin(), bias_.value.end(), o);
          for (int u = 0; u < g_.kh; ++u) {
            const int sr = r * g_.sh + u - g_.pad_top;
            if (sr < 0 || sr >= g_.in_h) continue;
            for (int v = 0; v < g_.kw; ++v) {
              const int sc = q * g_.sw + v - g_.pad_left;
              if (sc < 0 || sc >= g_.in_w) continue;
              const float* xp = xs + (static_cast<std::size_t>(sr) * g_.in_w + sc) * C;
              const float* w = kernel_.value.data() + (u * g_.kw + v) * C;
              for (int c = 0; c < C; ++c) o[c] += xp[c] * w[c];
            }
          }
          if (relu_) {
            for (int c = 0; c < C; ++c) o[c] = std::max(o[c], 0.0f);
          }
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor& y, Tensor& dy, Tensor* dx) override {
    if (relu_) relu_backward(y, dy);
    if (dx) std::fill(dx->data.begin(), dx->data.end(), 0.0f);
    const int C = g_.in_c;
    std::vector<double> db(C, 0.0);
    for (int i = 0; i < x.n; ++i) {
      const float* xs = x.sample(i);
      float* dxs = dx ? dx->sample(i) : nullptr;
      const float* ds = dy.sample(i);
      for (int r = 0; r < g_.out_h; ++r) {
        for (int q = 0; q < g_.out_w; ++q) {
          const float* d = ds + (static_cast<std::size_t>(r) * g_.out_w + q) * C;
          for (int c = 0; c < C; ++c) db[c] += d[c];
          for (int u = 0; u < g_.kh; ++u) {
            const int sr = r * g_.sh + u - g_.pad_top;
            if (sr < 0 || sr >= g_.in_h) continue;
            for (int v = 0; v < g_.kw; ++v) {
              const int sc = q * g_.sw + v - g_.pad_left;
              if (sc < 0 || sc >= g_.in_w) continue;
              const std::size_t off = (static_cast<std::size_t>(sr) * g_.in_w + sc) * C;
              const float* xp = xs + off;
              const float* w = kernel_.value.data() + (u * g_.kw + v) * C;
              float* dw = kernel_.grad.data() + (u * g_.kw + v) * C;
              for (int c = 0; c < C; ++c) dw[c] += d[c] * xp[c];
              if (dxs) {
                for (int c = 0; c < C; ++c) dxs[off + c] += d[c] * w[c];
              }
            }
          }
        }
      }
    }
    for (int c = 0; c < C; ++c) bias_.grad[c] += static_cast<float>(db[c]);
  }

  void collect(std::vector<Parameter*>& out) override {
    out.push_back(&kernel_);
    out.push_back(&bias_);
  }

 private:
  ConvGeometry g_;
  bool relu_;
  Parameter kernel_;
  Parameter bias_;
};

class MaxPool final : public Layer {
 public:
  MaxPool(const LayerSpec& l, const TensorShape& in, const TensorShape& out)
      : Layer(l.name, in, out), g_(geometry(l, in, out, in.channels)) {
    if (g_.kh * g_.kw > 255) throw SpecError("pool window of '" + l.name + "' is too large");
    pair_ = g_.kh == 2 && g_.kw == 2 && g_.sh == 2 && g_.sw == 2 && g_.pad_top == 0 &&
            g_.pad_left == 0;
  }

  // argmax_ holds, per output element, the winning window offset u*kw+v.
  void forward(const Tensor& x, Tensor& y) override {
    argmax_.resize(y.size());
    if (pair_) {
      forward_pairs(x, y);
      return;
    }
    const int C = g_.in_c;
    std::vector<float> best(C);
    std::vector<std::uint8_t> at(C);
    for (int i = 0; i < x.n; ++i) {
      const float* xs = x.sample(i);
      float* ys = y.sample(i);
      std::uint8_t* as = argmax_.data() + static_cast<std::size_t>(i) * y.sample_size();
      for (int r = 0; r < g_.out_h; ++r) {
        for (int q = 0; q < g_.out_w; ++q) {
          bool first = true;
          for (int u = 0; u < g_.kh; ++u) {
            const int sr = r * g_.sh + u - g_.pad_top;
            if (sr < 0 || sr >= g_.in_h) continue;
            for (int v = 0; v < g_.kw; ++v) {
              const int sc = q * g_.sw + v - g_.pad_left;
              if (sc < 0 || sc >= g_.in_w) continue;
              const float* xp = xs + (static_cast<std::size_t>(sr) * g_.in_w + sc) * C;
              const auto idx = static_cast<std::uint8_t>(u * g_.kw + v);
              if (first) {
                std::copy(xp, xp + C, best.begin());
                std::fill(at.begin(), at.end(), idx);
                first = false;
                continue;
              }
              for (int c = 0; c < C; ++c) {
                const bool better = xp[c] > best[c];
                best[c] = better ? xp[c] : best[c];
                at[c] = better ? idx : at[c];
              }
            }
          }
          const std::size_t o = (static_cast<std::size_t>(r) * g_.out_w + q) * C;
          std::copy(best.begin(), best.end(), ys + o);
          std::copy(at.begin(), at.end(), as + o);
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor&, Tensor& dy, Tensor* dx) override {
    if (!dx) return;
    std::fill(dx->data.begin(), dx->data.end(), 0.0f);
    const int C = g_.in_c;
    const std::size_t out_size = static_cast<std::size_t>(g_.out_h) * g_.out_w * C;
    for (int i = 0; i < x.n; ++i) {
      float* dxs = dx->sample(i);
      const float* ds = dy.sample(i);
      const std::uint8_t* as = argmax_.data() + i * out_size;
      for (int r = 0; r < g_.out_h; ++r) {
        for (int q = 0; q < g_.out_w; ++q) {
          const std::size_t o = (static_cast<std::size_t>(r) * g_.out_w + q) * C;
          for (int c = 0; c < C; ++c) {
            const int u = as[o + c] / g_.kw;
            const int v = as[o + c] % g_.kw;
            const int sr = r * g_.sh + u - g_.pad_top;
            const int sc = q * g_.sw + v - g_.pad_left;
            dxs[(static_cast<std::size_t>(sr) * g_.in_w + sc) * C + c] += ds[o + c];
          }
        }
      }
    }
  }

 private:
  // 2x2 windows with stride 2 and no padding; ties keep the first element
  // in row-major window order, as the general path does.
  void forward_pairs(const Tensor& x, Tensor& y) {
    const int C = g_.in_c;
    const std::size_t row = static_cast<std::size_t>(g_.in_w) * C;
    for (int i = 0; i < x.n; ++i) {
      const float* xs = x.sample(i);
      float* ys = y.sample(i);
      std::uint8_t* as = argmax_.data() + static_cast<std::size_t>(i) * y.sample_size();
      for (int r = 0; r < g_.out_h; ++r) {
        for (int q = 0; q < g_.out_w; ++q) {
          const float* p0 = xs + 2 * r * row + static_cast<std::size_t>(2 * q) * C;
          const float* p1 = p0 + row;
          const std::size_t o = (static_cast<std::size_t>(r) * g_.out_w + q) * C;
          float* yo = ys + o;
          std::uint8_t* ao = as + o;
          for (int c = 0; c < C; ++c) {
            const float a0 = p0[c];
            const float a1 = p0[C + c];
            const float a2 = p1[c];
            const float a3 = p1[C + c];
            const bool top = a1 > a0;
            const float t = top ? a1 : a0;
            const bool bottom = a3 > a2;
            const float b = bottom ? a3 : a2;
            const bool lower = b > t;
            yo[c] = lower ? b : t;
            ao[c] = static_cast<std::uint8_t>(lower ? 2 + bottom : top);
          }
        }
      }
    }
  }

  ConvGeometry g_;
  bool pair_ = false;
  std::vector<std::uint8_t> argmax_;
};

class GlobalAvgPool final : public Layer {
 public:
  GlobalAvgPool(const LayerSpec& l, const TensorShape& in, const TensorShape& out)
      : Layer(l.name, in, out) {}

  void forward(const Tensor& x, Tensor& y) override {
    const std::size_t pixels = static_cast<std::size_t>(x.h) * x.w;
    std::vector<double> acc(x.c);
    for (int i = 0; i < x.n; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const float* xs = x.sample(i);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < x.c; ++c) acc[c] += xs[p * x.c + c];
      }
      for (int c = 0; c < x.c; ++c) {
        y.sample(i)[c] = static_cast<float>(acc[c] / static_cast<double>(pixels));
      }
    }
  }

  void backward(const Tensor& x, const Tensor&, Tensor& dy, Tensor* dx) override {
    if (!dx) return;
    const std::size_t pixels = static_cast<std::size_t>(x.h) * x.w;
    const float scale = 1.0f / static_cast<float>(pixels);
    for (int i = 0; i < x.n; ++i) {
      const float* d = dy.sample(i);
      float* dxs = dx->sample(i);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < x.c; ++c) dxs[p * x.c + c] = d[c] * scale;
      }
    }
  }
};

// Samples are contiguous, so flatten is a copy; features come out in HWC
// order.
class Flatten final : public Layer {
 public:
  Flatten(const LayerSpec& l, const TensorShape& in, const TensorShape& out)
      : Layer(l.name, in, out) {}

  void forward(const Tensor& x, Tensor& y) override {
    std::copy(x.data.begin(), x.data.end(), y.data.begin());
  }

  void backward(const Tensor&, const Tensor&, Tensor& dy, Tensor* dx) override {
    if (dx) std::copy(dy.data.begin(), dy.data.end(), dx->data.begin());
  }
};

class Dense final : public Layer {
 public:
  Dense(const LayerSpec& l, const TensorShape& in, const TensorShape& out, const std::string& pre)
      : Layer(l.name, in, out), in_(in.channels), units_(l.units),
        relu_(l.activation == Activation::Relu) {
    kernel_ = make_param(pre + l.name + "/kernel", {in_, units_});
    bias_ = make_param(pre + l.name + "/bias", {units_});
  }

  void forward(const Tensor& x, Tensor& y) override {
    MapMat out(y.data.data(), x.n, units_);
    out.noalias() = ConstMapMat(x.data.data(), x.n, in_) *
                    ConstMapMat(kernel_.value.data(), in_, units_);
    for (int i = 0; i < x.n; ++i) {
      for (int u = 0; u < units_; ++u) {
        float& v = out(i, u);
        v += bias_.value[u];
        if (relu_) v = std::max(v, 0.0f);
      }
    }
  }

  void backward(const Tensor& x, const Tensor& y, Tensor& dy, Tensor* dx) override {
    if (relu_) relu_backward(y, dy);
    ConstMapMat d(dy.data.data(), x.n, units_);
    ConstMapMat xin(x.data.data(), x.n, in_);
    MapMat(kernel_.grad.data(), in_, units_).noalias() += xin.transpose() * d;
    for (int u = 0; u < units_; ++u) {
      double s = 0.0;
      for (int i = 0; i < x.n; ++i) s += d(i, u);
      bias_.grad[u] += static_cast<float>(s);
    }
    if (dx) {
      MapMat(dx->data.data(), x.n, in_).noalias() =
          d * ConstMapMat(kernel_.value.data(), in_, units_).transpose();
    }
  }

  void collect(std::vector<Parameter*>& out) override {
    out.push_back(&kernel_);
    out.push_back(&bias_);
  }

 private:
  int in_;
  int units_;
  bool relu_;
  Parameter kernel_;
  Parameter bias_;
};

class Replicate final : public Layer {
 public:
  Replicate(const LayerSpec& l, const TensorShape& in, const TensorShape& out)
      : Layer(l.name, in, out) {}

  void forward(const Tensor& x, Tensor& y) override {
    const std::size_t pixels = x.sample_size();
    for (int i = 0; i < x.n; ++i) {
      const float* xs = x.sample(i);
      float* ys = y.sample(i);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < y.c; ++c) ys[p * y.c + c] = xs[p];
      }
    }
  }

  void backward(const Tensor& x, const Tensor&, Tensor& dy, Tensor* dx) override {
    if (!dx) return;
    const std::size_t pixels = x.sample_size();
    for (int i = 0; i < x.n; ++i) {
      const float* ds = dy.sample(i);
      float* dxs = dx->sample(i);
      for (std::size_t p = 0; p < pixels; ++p) {
        float s = 0.0f;
        for (int c = 0; c < dy.c; ++c) s += ds[p * dy.c + c];
        dxs[p] = s;
      }
    }
  }
};

class Residual final : public Layer {
 public:
  Residual(const LayerSpec& l, const TensorShape& in, const TensorShape& out,
           const std::string& pre)
      : Layer(l.name, in, out) {
    const std::string inner = pre + l.name + "/";
    body_ = build_stack(l.body, in, inner);
    if (l.projection) projection_ = make_layer(*l.projection, in, inner);
    acts_.resize(body_.size());
  }

  void prepare() override {
    for (auto& b : body_) b->prepare();
    if (projection_) projection_->prepare();
  }

  void forward(const Tensor& x, Tensor& y) override {
    const Tensor* cur = &x;
    for (std::size_t j = 0; j < body_.size(); ++j) {
      ensure(acts_[j], x.n, body_[j]->out_shape());
      body_[j]->forward(*cur, acts_[j]);
      cur = &acts_[j];
    }
    const Tensor* shortcut = &x;
    if (projection_) {
      ensure(proj_, x.n, out_shape());
      projection_->forward(x, proj_);
      shortcut = &proj_;
    }
    for (std::size_t j = 0; j < y.size(); ++j) {
      y.data[j] = std::max(cur->data[j] + shortcut->data[j], 0.0f);
    }
  }

  void backward(const Tensor& x, const Tensor& y, Tensor& dy, Tensor* dx) override {
    relu_backward(y, dy);
    if (projection_) {
      ensure(short_grad_, x.n, in_shape());
      grad_b_ = dy;
      projection_->backward(x, proj_, grad_b_, dx ? &short_grad_ : nullptr);
    } else if (dx) {
      short_grad_ = dy;
    }
    Tensor* cur = &dy;
    for (std::size_t j = body_.size(); j-- > 0;) {
      const Tensor& in = j == 0 ? x : acts_[j - 1];
      Tensor* next = dx;
      if (j > 0) {
        Tensor& buf = cur == &grad_a_ ? grad_b_ : grad_a_;
        ensure(buf, x.n, body_[j]->in_shape());
        next = &buf;
      }
      body_[j]->backward(in, acts_[j], *cur, next);
      cur = next;
    }
    if (dx) {
      for (std::size_t j = 0; j < dx->size(); ++j) dx->data[j] += short_grad_.data[j];
    }
  }

  void collect(std::vector<Parameter*>& out) override {
    for (auto& b : body_) b->collect(out);
    if (projection_) projection_->collect(out);
  }

 private:
  std::vector<std::unique_ptr<Layer>> body_;
  std::unique_ptr<Layer> projection_;
  std::vector<Tensor> acts_;
  Tensor proj_;
  Tensor short_grad_;
  Tensor grad_a_;
  Tensor grad_b_;
};

}  // namespace

void ensure(Tensor& t, int n, const TensorShape& shape) {
  const int c = shape.channels;
  const int h = shape.flat ? 1 : shape.height;
  const int w = shape.flat ? 1 : shape.width;
  if (t.n == n && t.c == c && t.h == h && t.w == w) return;
  t.resize(n, c, h, w);
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const TensorShape& in,
                                  const std::string& prefix) {
  const TensorShape out = infer_output(spec, in);
  switch (spec.kind) {
    case LayerKind::Conv2d: return std::make_unique<Conv>(spec, in, out, prefix);
    case LayerKind::DepthwiseConv2d: return std::make_unique<Depthwise>(spec, in, out, prefix);
    case LayerKind::MaxPool2d: return std::make_unique<MaxPool>(spec, in, out);
    case LayerKind::GlobalAvgPool: return std::make_unique<GlobalAvgPool>(spec, in, out);
    case LayerKind::Flatten: return std::make_unique<Flatten>(spec, in, out);
    case LayerKind::Dense: return std::make_unique<Dense>(spec, in, out, prefix);
    case LayerKind::ChannelReplicate: return std::make_unique<Replicate>(spec, in, out);
    case LayerKind::Residual: return std::make_unique<Residual>(spec, in, out, prefix);
  }
  throw SpecError("layer '" + spec.name + "' has an unknown kind");
}

std::vector<std::unique_ptr<Layer>> build_stack(const std::vector<LayerSpec>& specs,
                                                const TensorShape& in, const std::string& prefix,
                                                bool fuse) {
  std::vector<std::unique_ptr<Layer>> out;
  TensorShape shape = in;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& l = specs[i];
    if (fuse && l.kind == LayerKind::Conv2d && i + 1 < specs.size() &&
        specs[i + 1].kind == LayerKind::MaxPool2d) {
      const TensorShape conv_out = infer_output(l, shape);
      auto conv = std::make_unique<Conv>(l, shape, conv_out, prefix);
      if (conv->absorb_pool(specs[i + 1], infer_output(specs[i + 1], conv_out))) {
        shape = conv->out_shape();
        out.push_back(std::move(conv));
        ++i;
        continue;
      }
    }
    out.push_back(make_layer(l, shape, prefix));
    shape = out.back()->out_shape();
  }
  return out;
}

void init_parameter(Parameter& p, int fan_in, std::uint64_t seed) {
  const bool bias = p.name.ends_with("/bias");
  if (bias) {
    std::fill(p.value.begin(), p.value.end(), 0.0f);
    return;
  }
  Rng rng(mix_seed(seed, fnv1a(p.name.data(), p.name.size())));
  const double limit = std::sqrt(6.0 / std::max(fan_in, 1));
  for (auto& v : p.value) v = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace mammo::nn
