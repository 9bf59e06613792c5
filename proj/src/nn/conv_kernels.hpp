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

#pragma once

// Convolution kernels for a single image in HWC layout. Kernels are stored
// HWIO, [kh][kw][in_c][out_c]. All routines compute cross-correlation, the
// convention used by CNN frameworks.

#include <cstdint>
#include <vector>

namespace mammo::nn {

struct ConvGeometry {
  int in_c = 0;
  int in_h = 0;
  int in_w = 0;
  int out_c = 0;
  int out_h = 0;
  int out_w = 0;
  int kh = 1;
  int kw = 1;
  int sh = 1;
  int sw = 1;
  int pad_top = 0;
  int pad_left = 0;
};

// Reference loops. Slow; used as the oracle in tests. `dkernel` is
// accumulated into; `dx` (nullable) is overwritten.
void conv_forward_direct(const ConvGeometry& g, const float* x, const float* kernel, float* y);
void conv_backward_direct(const ConvGeometry& g, const float* x, const float* kernel,
                          const float* dy, float* dkernel, float* dx);

// im2col + GEMM. Same accumulation rules as the reference.
class Im2colConv {
 public:
  explicit Im2colConv(const ConvGeometry& g);
  void forward(const float* x, const float* kernel, float* y);
  void backward(const float* x, const float* kernel, const float* dy, float* dkernel, float* dx);

 private:
  void im2col(const float* x);
  void col2im(float* dx) const;
  bool pointwise() const;

  ConvGeometry g_;
  std::vector<float> col_;
};

// Direct loops vectorized over output channels, for layers with few input
// channels (the first layer on a grayscale image). Requires out_c % 8 == 0.
// Bias and ReLU are fused as in Winograd3x3.
class SmallConv {
 public:
  explicit SmallConv(const ConvGeometry& g) : g_(g) {}

  static bool supports(const ConvGeometry& g);

  void forward(const float* x, const float* kernel, const float* bias, bool relu, float* y) const;
  // Masks `dy` in place when `relu`. Accumulates `dkernel` and `dbias`;
  // overwrites `dx` when non-null.
  void backward(const float* x, const float* kernel, const float* y, float* dy, bool relu,
                float* dkernel, float* dbias, float* dx) const;

 private:
  ConvGeometry g_;
};

// Winograd F(4x4, 3x3) for stride-1 3x3 convolutions: 36 element-wise
// products replace the 144 multiplies of a direct 4x4 output tile. The
// backward pass is the exact adjoint of the transformed forward pass. Bias
// and ReLU are applied in the output transform.
class Winograd3x3 {
 public:
  explicit Winograd3x3(const ConvGeometry& g);

  static bool supports(const ConvGeometry& g);

  // Transforms the kernel; call whenever the kernel values change.
  void set_kernel(const float* kernel);
  // y = conv(x) + bias, rectified when `relu`. `bias` is nullable. With a
  // non-null `argmax`, y is instead the 2x2/stride-2 max pool of that output
  // and argmax[i] the winning window position (row-major, first on ties).
  void forward(const float* x, const float* bias, bool relu, float* y,
               std::uint8_t* argmax = nullptr);
  // `y` is the forward output, read only when `relu` to mask `dy`.
  // Accumulates the transformed kernel gradient and `dbias` (nullable);
  // overwrites `dx` when non-null. With `argmax`, `y` and `dy` are pooled.
  void backward(const float* x, const float* y, const float* dy, bool relu, float* dbias,
                float* dx, const std::uint8_t* argmax = nullptr);
  // Adds the accumulated kernel gradient to `dkernel` and clears it.
  void flush_kernel_gradient(float* dkernel);

 private:
  static constexpr int kBlock = 128;  // tiles per cache-resident block
  static constexpr int kSkew = 16;    // floats between per-position matrices

  std::size_t v_block_stride() const { return static_cast<std::size_t>(kBlock) * cp_ + kSkew; }
  std::size_t m_block_stride() const { return static_cast<std::size_t>(kBlock) * kp_ + kSkew; }

  void load_plane(const float* x);
  void transform_block(int t0, int n);
  int tiles() const { return tiles_h_ * tiles_w_; }

  ConvGeometry g_;
  int cp_ = 0;  // channel counts rounded up to the lane width
  int kp_ = 0;
  int tiles_h_ = 0;
  int tiles_w_ = 0;
  int plane_h_ = 0;
  int plane_w_ = 0;
  std::vector<float> u_;       // [36][cp][kp]
  std::vector<float> du_;      // [36][cp][kp]
  std::vector<float> plane_;   // padded input, [plane_h][plane_w][cp]
  std::vector<float> dplane_;  // same layout, input gradient
  std::vector<float> v_;       // [36][block][cp]
  std::vector<float> m_;       // [36][block][kp]
  std::vector<float> dv_;      // [36][block][cp]
};

}  // namespace mammo::nn
