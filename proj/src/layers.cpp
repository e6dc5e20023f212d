#include "smartbrush/layers.hpp"

#include "smartbrush/error.hpp"

#include <cmath>

namespace smartbrush {

ad::Var activate(const ad::Var& x, Activation act) {
    switch (act) {
        case Activation::Elu: return ad::elu(x);
        case Activation::LeakyRelu: return ad::leaky_relu(x);
        case Activation::Identity: break;
    }
    return x;
}

ad::Var gated_conv(const ad::Var& x, const ad::Var& wf, const ad::Var& bf, const ad::Var& wg, const ad::Var& bg, int stride,
                   int pad, Activation act) {
    if (wf.shape() != wg.shape())
        fail(ErrorKind::ShapeMismatch, "gated_conv: feature weights " + wf.value().shape_string() + " vs gate weights " +
                                           wg.value().shape_string());
    const ad::Var feature = activate(ad::conv2d(x, wf, bf, stride, pad), act);
    const ad::Var gate = ad::sigmoid(ad::conv2d(x, wg, bg, stride, pad));
    return ad::mul(feature, gate);
}

Tensor gated_conv(const Tensor& x, const Tensor& wf, const Tensor& bf, const Tensor& wg, const Tensor& bg, int stride,
                  int pad, Activation act) {
    const auto opt = [](const Tensor& t) { return t.empty() ? ad::Var() : ad::constant(t); };
    return gated_conv(ad::constant(x), ad::constant(wf), opt(bf), ad::constant(wg), opt(bg), stride, pad, act).value();
}

ad::Var cross_attention(const ad::Var& q, const ad::Var& k, const ad::Var& v) {
    const auto& qs = q.shape();
    const auto& ks = k.shape();
    const auto& vs = v.shape();
    if (qs.size() != 2 || ks.size() != 2 || vs.size() != 2) fail(ErrorKind::ShapeMismatch, "cross_attention: inputs must be matrices");
    if (qs[1] != ks[1]) fail(ErrorKind::ShapeMismatch, "cross_attention: Q and K feature dims differ");
    if (ks[0] != vs[0]) fail(ErrorKind::ShapeMismatch, "cross_attention: K and V token counts differ");
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(qs[1]));
    const ad::Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dk);
    return ad::matmul(ad::softmax_rows(logits), v);
}

Tensor cross_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
    return cross_attention(ad::constant(q), ad::constant(k), ad::constant(v)).value();
}

ad::Var to_tokens(const ad::Var& x) {
    const auto& s = x.shape();
    return ad::transpose(ad::reshape(x, {s[0], s[1] * s[2]}));
}

ad::Var from_tokens(const ad::Var& tokens, int height, int width) {
    const int c = tokens.shape()[1];
    return ad::reshape(ad::transpose(tokens), {c, height, width});
}

}  // namespace smartbrush
