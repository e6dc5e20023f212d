#include "smartbrush/autograd.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace smartbrush::ad {

Tensor& Node::grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor(value.shape(), 0.0);
    return grad;
}

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

Var leaf(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
    if (n->requires_grad) {
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(n));
}

void backward(const Var& root) {
    if (root.value().size() != 1) fail(ErrorKind::InvalidArgument, "backward: root must be a scalar");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS for a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
    }
}

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value())) {
        fail(ErrorKind::ShapeMismatch, std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                                           b.value().shape_string());
    }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
    Tensor out(a.shape());
    const auto& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
    return make_op(std::move(out), {a}, [deriv](Node& self) {
        Node& p = parent(self, 0);
        if (!p.requires_grad) return;
        Tensor& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(p.value[i], self.value[i]);
    });
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same(a, b, "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            Node& p = parent(self, k);
            if (!p.requires_grad) continue;
            Tensor& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same(a, b, "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            Node& p = parent(self, k);
            if (!p.requires_grad) continue;
            const double sign = k == 0 ? 1.0 : -1.0;
            Tensor& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) {
            Tensor& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            Tensor& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
        }
    });
}

Var scale(const Var& a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var square(const Var& a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2 * x; });
}

Var sigmoid(const Var& a) {
    return unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1 - y); });
}

Var tanh(const Var& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1 - y * y; });
}

Var relu(const Var& a) {
    return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
    return unary(
        a, [slope](double x) { return x > 0 ? x : slope * x; },
        [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var elu(const Var& a) {
    return unary(
        a, [](double x) { return x > 0 ? x : std::expm1(x); }, [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Var where(const Tensor& mask, const Var& a, const Var& b) {
    require_same(a, b, "where");
    if (mask.size() != a.value().size()) fail(ErrorKind::ShapeMismatch, "where: mask size mismatch");
    Tensor out = b.value();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (mask[i] != 0.0) out[i] = a.value()[i];
    return make_op(std::move(out), {a, b}, [mask](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            Node& p = parent(self, k);
            if (!p.requires_grad) continue;
            Tensor& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const bool selected = mask[i] != 0.0;
                if (selected == (k == 0)) g[i] += self.grad[i];
            }
        }
    });
}

Var sum(const Var& a) {
    return make_op(Tensor({1}, a.value().sum()), {a}, [](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
    });
}

Var mean(const Var& a) {
    const double n = static_cast<double>(a.value().size());
    return make_op(Tensor({1}, a.value().sum() / n), {a}, [n](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] / n;
    });
}

Var mse(const Var& a, const Var& b) { return mean(square(sub(a, b))); }

Var reshape(const Var& a, std::vector<int> shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    return make_op(std::move(out), {a}, [](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Var transpose(const Var& a) {
    const Tensor& x = a.value();
    if (x.rank() != 2) fail(ErrorKind::ShapeMismatch, "transpose: expected rank 2");
    const int r = x.dim(0), c = x.dim(1);
    Tensor out = Tensor::matrix(c, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at(j, i) = x.at(i, j);
    return make_op(std::move(out), {a}, [r, c](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) g.at(i, j) += self.grad.at(j, i);
    });
}

Var concat_channels(const std::vector<Var>& parts) {
    std::vector<Tensor> values;
    values.reserve(parts.size());
    for (const auto& p : parts) values.push_back(p.value());
    Tensor out = smartbrush::concat_channels(values);
    return make_op(std::move(out), parts, [](Node& self) {
        std::size_t offset = 0;
        for (auto& pp : self.parents) {
            Node& p = *pp;
            const std::size_t n = p.value.size();
            if (p.requires_grad) {
                Tensor& g = p.grad_buffer();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
            }
            offset += n;
        }
    });
}

Var slice_channels(const Var& a, int begin, int count) {
    const Tensor& x = a.value();
    if (begin < 0 || count < 1 || begin + count > x.channels()) fail(ErrorKind::ShapeMismatch, "slice_channels: range");
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    Tensor out = Tensor::image(count, x.height(), x.width());
    std::copy(x.data().begin() + begin * plane, x.data().begin() + (begin + count) * plane, out.data().begin());
    return make_op(std::move(out), {a}, [begin, plane](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * plane + i] += self.grad[i];
    });
}

Var upsample2x(const Var& a) {
    const Tensor& x = a.value();
    const int c = x.channels(), h = x.height(), w = x.width();
    Tensor out = Tensor::image(c, 2 * h, 2 * w);
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx) out.at(k, y, xx) = x.at(k, y / 2, xx / 2);
    return make_op(std::move(out), {a}, [c, h, w](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx) g.at(k, y / 2, xx / 2) += self.grad.at(k, y, xx);
    });
}

Var add_channel_bias(const Var& a, const Var& bias) {
    const Tensor& x = a.value();
    if (bias.value().size() != static_cast<std::size_t>(x.channels())) {
        fail(ErrorKind::ShapeMismatch, "add_channel_bias: bias size mismatch");
    }
    Tensor out = x;
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c)
        for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += bias.value()[c];
    return make_op(std::move(out), {a, bias}, [plane](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) {
            Tensor& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            Tensor& g = pb.grad_buffer();
            for (std::size_t c = 0; c < g.size(); ++c)
                for (std::size_t i = 0; i < plane; ++i) g[c] += self.grad[c * plane + i];
        }
    });
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) {
        fail(ErrorKind::ShapeMismatch, "matmul: incompatible shapes " + x.shape_string() + " x " + y.shape_string());
    }
    const int m = x.dim(0), k = x.dim(1), n = y.dim(1);
    Tensor out = Tensor::matrix(m, n);
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double xv = x.at(i, p);
            const double* yrow = y.ptr() + static_cast<std::size_t>(p) * n;
            double* orow = out.ptr() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) orow[j] += xv * yrow[j];
        }
    return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        const Tensor& g = self.grad;
        if (pa.requires_grad) {  // dA = G B^T
            Tensor& ga = pa.grad_buffer();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0;
                    for (int j = 0; j < n; ++j) acc += g.at(i, j) * pb.value.at(p, j);
                    ga.at(i, p) += acc;
                }
        }
        if (pb.requires_grad) {  // dB = A^T G
            Tensor& gb = pb.grad_buffer();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    const double av = pa.value.at(i, p);
                    for (int j = 0; j < n; ++j) gb.at(p, j) += av * g.at(i, j);
                }
        }
    });
}

Var softmax_rows(const Var& a) {
    const Tensor& x = a.value();
    if (x.rank() != 2) fail(ErrorKind::ShapeMismatch, "softmax_rows: expected rank 2");
    const int r = x.dim(0), c = x.dim(1);
    Tensor out = Tensor::matrix(r, c);
    for (int i = 0; i < r; ++i) {
        double m = x.at(i, 0);
        for (int j = 1; j < c; ++j) m = std::max(m, x.at(i, j));
        double z = 0;
        for (int j = 0; j < c; ++j) z += (out.at(i, j) = std::exp(x.at(i, j) - m));
        for (int j = 0; j < c; ++j) out.at(i, j) /= z;
    }
    return make_op(std::move(out), {a}, [r, c](Node& self) {
        Tensor& g = parent(self, 0).grad_buffer();
        for (int i = 0; i < r; ++i) {
            double dot = 0;
            for (int j = 0; j < c; ++j) dot += self.grad.at(i, j) * self.value.at(i, j);
            for (int j = 0; j < c; ++j) g.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
        }
    });
}

namespace {

struct ConvGeometry {
    int ci, h, w, co, k, stride, pad, ho, wo;
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.channels() || w.dim(2) != w.dim(3)) {
        fail(ErrorKind::ShapeMismatch, "conv2d: weights " + w.shape_string() + " incompatible with input " +
                                           x.shape_string());
    }
    if (!b.empty() && b.size() != static_cast<std::size_t>(w.dim(0))) fail(ErrorKind::ShapeMismatch, "conv2d: bias size");
    if (stride < 1 || pad < 0) fail(ErrorKind::InvalidArgument, "conv2d: bad stride/pad");
    ConvGeometry g{x.channels(), x.height(), x.width(), w.dim(0), w.dim(2), stride, pad, 0, 0};
    g.ho = (g.h + 2 * pad - g.k) / stride + 1;
    g.wo = (g.w + 2 * pad - g.k) / stride + 1;
    if (g.ho < 1 || g.wo < 1) fail(ErrorKind::ShapeMismatch, "conv2d: kernel larger than padded input");
    return g;
}

// Valid output-column range [lo, hi) for kernel column kx.
std::pair<int, int> valid_range(int kx, const ConvGeometry& g, int extent, int out_extent) {
    int lo = 0;
    while (lo < out_extent && lo * g.stride + kx - g.pad < 0) ++lo;
    int hi = out_extent;
    while (hi > lo && (hi - 1) * g.stride + kx - g.pad >= extent) --hi;
    return {lo, hi};
}

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvGeometry& g) {
    Tensor out = Tensor::image(g.co, g.ho, g.wo);
    for (int co = 0; co < g.co; ++co) {
        double* o = out.ptr() + static_cast<std::size_t>(co) * g.ho * g.wo;
        if (!b.empty()) std::fill(o, o + static_cast<std::size_t>(g.ho) * g.wo, b[co]);
        for (int ci = 0; ci < g.ci; ++ci) {
            const double* in = x.ptr() + static_cast<std::size_t>(ci) * g.h * g.w;
            for (int ky = 0; ky < g.k; ++ky) {
                const auto [ylo, yhi] = valid_range(ky, g, g.h, g.ho);
                for (int kx = 0; kx < g.k; ++kx) {
                    const double wv = w[((static_cast<std::size_t>(co) * g.ci + ci) * g.k + ky) * g.k + kx];
                    if (wv == 0.0) continue;
                    const auto [xlo, xhi] = valid_range(kx, g, g.w, g.wo);
                    for (int oy = ylo; oy < yhi; ++oy) {
                        const double* row = in + static_cast<std::size_t>(oy * g.stride + ky - g.pad) * g.w + (kx - g.pad);
                        double* orow = o + static_cast<std::size_t>(oy) * g.wo;
                        if (g.stride == 1) {
                            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * row[ox];
                        } else {
                            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * row[ox * g.stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    return conv_forward(x, w, b, conv_geometry(x, w, b, stride, pad));
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    static const Tensor no_bias;
    const Tensor& bias = b ? b.value() : no_bias;
    const ConvGeometry g = conv_geometry(x.value(), w.value(), bias, stride, pad);
    Tensor out = conv_forward(x.value(), w.value(), bias, g);
    std::vector<Var> parents{x, w};
    if (b) parents.push_back(b);
    return make_op(std::move(out), std::move(parents), [g](Node& self) {
        Node& px = parent(self, 0);
        Node& pw = parent(self, 1);
        const Tensor& go = self.grad;
        if (self.parents.size() > 2 && parent(self, 2).requires_grad) {
            Tensor& gb = parent(self, 2).grad_buffer();
            for (int co = 0; co < g.co; ++co) {
                const double* o = go.ptr() + static_cast<std::size_t>(co) * g.ho * g.wo;
                double acc = 0;
                for (int i = 0; i < g.ho * g.wo; ++i) acc += o[i];
                gb[co] += acc;
            }
        }
        Tensor* gx = px.requires_grad ? &px.grad_buffer() : nullptr;
        Tensor* gw = pw.requires_grad ? &pw.grad_buffer() : nullptr;
        for (int co = 0; co < g.co; ++co) {
            const double* o = go.ptr() + static_cast<std::size_t>(co) * g.ho * g.wo;
            for (int ci = 0; ci < g.ci; ++ci) {
                const double* in = px.value.ptr() + static_cast<std::size_t>(ci) * g.h * g.w;
                double* gin = gx ? gx->ptr() + static_cast<std::size_t>(ci) * g.h * g.w : nullptr;
                for (int ky = 0; ky < g.k; ++ky) {
                    const auto [ylo, yhi] = valid_range(ky, g, g.h, g.ho);
                    for (int kx = 0; kx < g.k; ++kx) {
                        const std::size_t widx = ((static_cast<std::size_t>(co) * g.ci + ci) * g.k + ky) * g.k + kx;
                        const double wv = pw.value[widx];
                        const auto [xlo, xhi] = valid_range(kx, g, g.w, g.wo);
                        double acc = 0;
                        for (int oy = ylo; oy < yhi; ++oy) {
                            const std::size_t base = static_cast<std::size_t>(oy * g.stride + ky - g.pad) * g.w + (kx - g.pad);
                            const double* orow = o + static_cast<std::size_t>(oy) * g.wo;
                            for (int ox = xlo; ox < xhi; ++ox) {
                                const std::size_t idx = base + static_cast<std::size_t>(ox) * g.stride;
                                acc += orow[ox] * in[idx];
                                if (gin) gin[idx] += orow[ox] * wv;
                            }
                        }
                        if (gw) (*gw)[widx] += acc;
                    }
                }
            }
        }
    });
}

}  // namespace smartbrush::ad
