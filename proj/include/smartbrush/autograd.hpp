#pragma once

#include "smartbrush/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

/// Minimal reverse-mode differentiation over Tensor values. A Var is a handle
/// to a node in a dynamically built graph; backward() walks the graph from a
/// scalar root.
namespace smartbrush::ad {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    /// Gradient buffer, zero-initialized on first use.
    Tensor& grad_buffer();
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const std::vector<int>& shape() const { return node_->value.shape(); }
    const std::shared_ptr<Node>& node() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var leaf(Tensor value);  // requires grad

/// Builds an op node. `backward` runs only when some parent requires grad; it
/// reads `self.grad` and accumulates into the parents' grad buffers.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node& self)> backward);

/// Seeds d(root)/d(root) = 1 (root must hold a single element) and
/// propagates gradients to every reachable node that requires them.
void backward(const Var& root);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var square(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope = 0.2);
Var elu(const Var& a);
/// mask != 0 selects `a`, else `b`. `mask` is treated as a constant.
Var where(const Tensor& mask, const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// Reductions.
Var sum(const Var& a);
Var mean(const Var& a);
/// mean((a-b)^2)
Var mse(const Var& a, const Var& b);

// Shape.
Var reshape(const Var& a, std::vector<int> shape);
Var transpose(const Var& a);  // rank-2
Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& a, int begin, int count);
Var upsample2x(const Var& a);  // nearest, rank-3
/// Adds a per-channel bias (C) to a (C,H,W) tensor.
Var add_channel_bias(const Var& a, const Var& bias);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var softmax_rows(const Var& a);

/// 2-D cross-correlation with zero padding.
/// x: (Ci,H,W), w: (Co,Ci,k,k), b: (Co) or empty Var.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

/// Plain forward convolution on tensors (no graph).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

}  // namespace smartbrush::ad
