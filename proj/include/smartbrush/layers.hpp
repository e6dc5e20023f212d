#pragma once

#include "smartbrush/autograd.hpp"

namespace smartbrush {

enum class Activation { Identity, Elu, LeakyRelu };

ad::Var activate(const ad::Var& x, Activation act);

/// act(conv_f(x)) * sigmoid(conv_g(x)). Biases may be empty Vars.
ad::Var gated_conv(const ad::Var& x, const ad::Var& wf, const ad::Var& bf, const ad::Var& wg, const ad::Var& bg, int stride,
                   int pad, Activation act = Activation::Elu);
Tensor gated_conv(const Tensor& x, const Tensor& wf, const Tensor& bf, const Tensor& wg, const Tensor& bg, int stride,
                  int pad, Activation act = Activation::Elu);

/// softmax(Q K^T / sqrt(d_k)) V with Q (nq, dk), K (nk, dk), V (nk, dv).
ad::Var cross_attention(const ad::Var& q, const ad::Var& k, const ad::Var& v);
Tensor cross_attention(const Tensor& q, const Tensor& k, const Tensor& v);

/// (C, H, W) -> (H*W, C) and back.
ad::Var to_tokens(const ad::Var& x);
ad::Var from_tokens(const ad::Var& tokens, int height, int width);

}  // namespace smartbrush
