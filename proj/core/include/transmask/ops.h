// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "transmask/tensor.h"

// Differentiable operators. Shapes must match exactly; the only implicit
// broadcasts are a one-element operand in the binary elementwise ops and the
// last-axis row ops (add_row / mul_row). Everything else is explicit.
namespace transmask {

inline constexpr double kNormEps = 1e-5;

Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor div(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &x, double factor);
Tensor add_scalar(const Tensor &x, double value);

// x[..., D] + b[D], x[..., D] * g[D]
Tensor add_row(const Tensor &x, const Tensor &b);
Tensor mul_row(const Tensor &x, const Tensor &g);

Tensor sigmoid(const Tensor &x);
Tensor tanh(const Tensor &x);
Tensor relu(const Tensor &x);
// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Tensor gelu(const Tensor &x);
Tensor log(const Tensor &x);

Tensor sum(const Tensor &x);   // -> [1]
Tensor mean(const Tensor &x);  // -> [1]

Tensor matmul(const Tensor &a, const Tensor &b);  // [m,k] x [k,n]
Tensor bmm(const Tensor &a, const Tensor &b);     // [B,m,k] x [B,k,n]
Tensor transpose(const Tensor &x);                // 2-D only
Tensor permute(const Tensor &x, const std::vector<int> &perm);
Tensor reshape(const Tensor &x, Shape shape);

Tensor narrow(const Tensor &x, int axis, int64_t start, int64_t length);
Tensor pad(const Tensor &x, int axis, int64_t before, int64_t after);
Tensor concat(const std::vector<Tensor> &parts, int axis);
Tensor stack(const std::vector<Tensor> &parts);  // new leading axis
Tensor select(const Tensor &x, int64_t index);    // along the leading axis

Tensor softmax(const Tensor &x, int axis = -1);

// Normalises over the last axis, then applies gain/bias of that extent.
Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias,
                  double eps = kNormEps);
// Normalises over every element of x[C, ...]; gain/bias are per channel.
Tensor global_layer_norm(const Tensor &x, const Tensor &gain,
                         const Tensor &bias, double eps = kNormEps);

// x[in] or x[M,in] times w[in,out] plus b[out].
Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b);

// Valid cross-correlation: x[Cin,L], w[Cout,Cin,K] -> [Cout,(L-K)/stride+1].
// `bias` may be undefined.
Tensor conv1d(const Tensor &x, const Tensor &w, int64_t stride,
              const Tensor &bias = Tensor());
// Adjoint of conv1d: x[Cin,T], w[Cin,Cout,K] -> [Cout,(T-1)*stride+K].
Tensor conv_transpose1d(const Tensor &x, const Tensor &w, int64_t stride);
// x[Cin,H,W], w[Cout,Cin,K,K], symmetric zero padding.
Tensor conv2d(const Tensor &x, const Tensor &w, int64_t padding,
              const Tensor &bias = Tensor());

// Gate layout along the 4H axis is input, forget, cell, output.
struct LstmWeights {
  Tensor w_ih;  // [D, 4H]
  Tensor w_hh;  // [H, 4H]
  Tensor bias;  // [4H]

  int64_t input_size() const { return w_ih.dim(0); }
  int64_t hidden_size() const { return w_hh.dim(0); }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// x[D] or x[B,D]; h, c of matching leading extent.
LstmState lstm_step(const Tensor &x, const Tensor &h, const Tensor &c,
                    const LstmWeights &w);
// Same cell when the input projection x * w_ih was computed up front.
LstmState lstm_step_projected(const Tensor &x_proj, const Tensor &h,
                              const Tensor &c, const LstmWeights &w);

}  // namespace transmask
