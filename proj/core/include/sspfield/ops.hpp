#pragma once

#include "sspfield/tape.hpp"

namespace sspfield::diff {

// Matrix primitives. Shapes are strict: [m, k] etc., no broadcasting beyond
// what each op states. Every op records its backward rule on the tape.

Tensor matmul(Tensor a, Tensor b);     // [m,k] x [k,n] -> [m,n]
Tensor matmul_nt(Tensor a, Tensor b);  // [m,k] x [n,k]^T -> [m,n]

Tensor add(Tensor a, Tensor b);  // same shape
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);  // Hadamard

Tensor scale(Tensor a, double c);
Tensor mul_scalar(Tensor a, Tensor s);  // s is [1], broadcast multiply
Tensor add_scalar(Tensor a, Tensor s);  // s is [1], broadcast add
Tensor add_rowvec(Tensor a, Tensor b);  // [m,n] + [n] per row

Tensor reshape(Tensor a, std::vector<int> shape);  // same element count

Tensor concat_rows(Tensor a, Tensor b);         // [m1,n]+[m2,n] -> [m1+m2,n]
Tensor concat_cols(Tensor a, Tensor b);         // [m,n1]+[m,n2] -> [m,n1+n2]
Tensor slice_rows(Tensor a, int r0, int r1);    // rows [r0, r1)

// Elementwise nonlinearities.
Tensor relu(Tensor a);
Tensor sigmoid(Tensor a);
Tensor gelu(Tensor a);      // tanh approximation
Tensor softplus(Tensor a);  // overflow-safe
Tensor sqrt_eps(Tensor a, double eps = 1e-12);  // sqrt(x + eps), keeps grad finite

// Reductions.
Tensor sum(Tensor a);       // -> [1]
Tensor mean(Tensor a);      // -> [1]
Tensor row_mean(Tensor a);  // [m,n] -> [m]

/// y = x W + b with x [m,in], W [in,out], b [out].
Tensor linear(Tensor x, Tensor w, Tensor b);

/// Per-row standardization then affine gamma/beta (both [n]).
Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps = 1e-5);

/// Split the last dim in half: out = A * sigmoid(B). Odd width -> ShapeError.
Tensor glu(Tensor x);

/// Elementwise self-product x * x.
Tensor simple_gate(Tensor x);

/// Depthwise conv along rows (per-channel kernel, zero same-padding, odd k)
/// then 1x1 pointwise channel mixing. x [C,L], k_dw [C,k], k_pw [C_out,C],
/// b [C_out] -> [C_out,L].
Tensor dsconv1d(Tensor x, Tensor k_dw, Tensor k_pw, Tensor b);

/// Full 1-D convolution, zero same-padding, odd k. x [C_in,L],
/// w [C_out, C_in*k] (kernel taps fastest), b [C_out] -> [C_out,L].
Tensor conv1d(Tensor x, Tensor w, Tensor b, int k);

/// Width-2 stride-2 max pool per channel: [C,L] -> [C,L/2]. L must be >= 2;
/// an odd tail element is dropped.
Tensor maxpool2(Tensor x);

/// Row-wise softmax, stabilized by subtracting each row's max logit.
Tensor stab_softmax(Tensor x);

/// O = stab_softmax(Q K^T / sqrt(d)) V with Q [m,d], K [n,d], V [n,dv].
Tensor attention_layer(Tensor q, Tensor k, Tensor v);

/// W2 * GELU(W1 * LN(x) + b1) + b2, then residual add of x. dropout_p > 0
/// masks the hidden activation in train mode.
Tensor ffn_block(Tensor x, Tensor ln_gamma, Tensor ln_beta, Tensor w1, Tensor b1,
                 Tensor w2, Tensor b2, double dropout_p = 0.0);

/// Inverted dropout with a counter-keyed mask (identity when the tape is not
/// in train mode or p == 0).
Tensor dropout(Tensor x, double p);

}  // namespace sspfield::diff
