#include "coagents/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "coagents/kernels.hpp"

namespace coagents::nn {

namespace {

std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape, const char* op,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
    auto n = std::make_shared<TensorNode>();
    n->value.assign(numel(shape), 0.0);
    n->shape = std::move(shape);
    n->op = op;
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    n->parents = std::move(parents);
    return n;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument("tensor: " + msg);
}

void require_2d(const Tensor& t, const char* who) {
    require(t.defined() && t.node->shape.size() == 2, std::string(who) + " expects a 2-D tensor");
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    return Tensor(make_node(std::move(shape), "leaf", {}));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
    require(numel(shape) == data.size(), "from: shape does not match data length");
    auto n = make_node(std::move(shape), "leaf", {});
    n->value = std::move(data);
    return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::param(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t = from(std::move(shape), std::move(data));
    t.node->requires_grad = true;
    t.node->op = "param";
    return t;
}

double Tensor::item() const {
    require(defined() && size() == 1, "item: not a scalar");
    return node->value[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    require(b.rows() == k, "matmul: inner dimensions disagree");
    auto out = make_node({m, n}, "matmul", {a.node, b.node});
    kern::active().matmul_nn_acc(m, k, n, a.node->value.data(), b.node->value.data(),
                                 out->value.data());
    out->backward_fn = [m, k, n](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            kern::active().matmul_nt_acc(m, n, k, self.grad.data(), B.value.data(), A.grad.data());
        }
        if (B.requires_grad) {
            B.ensure_grad();
            kern::active().matmul_tn_acc(m, k, n, A.value.data(), self.grad.data(), B.grad.data());
        }
    };
    return Tensor(out);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt");
    require_2d(b, "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    require(b.cols() == k, "matmul_nt: inner dimensions disagree");
    auto out = make_node({m, n}, "matmul_nt", {a.node, b.node});
    kern::active().matmul_nt_acc(m, k, n, a.node->value.data(), b.node->value.data(),
                                 out->value.data());
    out->backward_fn = [m, k, n](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            kern::active().matmul_nn_acc(m, n, k, self.grad.data(), B.value.data(), A.grad.data());
        }
        if (B.requires_grad) {
            B.ensure_grad();
            kern::active().matmul_tn_acc(m, n, k, self.grad.data(), A.value.data(), B.grad.data());
        }
    };
    return Tensor(out);
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    require_2d(x, "affine");
    require_2d(W, "affine");
    const std::size_t r = x.rows(), in = x.cols(), out_dim = W.rows();
    require(W.cols() == in, "affine: weight width does not match input");
    const bool with_bias = b.defined();
    if (with_bias) require(b.size() == out_dim, "affine: bias length mismatch");

    std::vector<std::shared_ptr<TensorNode>> parents{x.node, W.node};
    if (with_bias) parents.push_back(b.node);
    auto out = make_node({r, out_dim}, "affine", std::move(parents));
    kern::active().matmul_nt_acc(r, in, out_dim, x.node->value.data(), W.node->value.data(),
                                 out->value.data());
    if (with_bias)
        for (std::size_t i = 0; i < r; ++i)
            kern::active().axpy(out_dim, 1.0, b.node->value.data(), out->value.data() + i * out_dim);

    out->backward_fn = [r, in, out_dim, with_bias](TensorNode& self) {
        TensorNode& X = *self.parents[0];
        TensorNode& Wn = *self.parents[1];
        if (X.requires_grad) {
            X.ensure_grad();
            kern::active().matmul_nn_acc(r, out_dim, in, self.grad.data(), Wn.value.data(),
                                         X.grad.data());
        }
        if (Wn.requires_grad) {
            Wn.ensure_grad();
            kern::active().matmul_tn_acc(r, out_dim, in, self.grad.data(), X.value.data(),
                                         Wn.grad.data());
        }
        if (with_bias) {
            TensorNode& B = *self.parents[2];
            if (B.requires_grad) {
                B.ensure_grad();
                for (std::size_t i = 0; i < r; ++i)
                    kern::active().axpy(out_dim, 1.0, self.grad.data() + i * out_dim, B.grad.data());
            }
        }
    };
    return Tensor(out);
}

namespace {

Tensor elementwise_pair(const Tensor& a, const Tensor& b, const char* op) {
    require(a.defined() && b.defined() && a.node->shape == b.node->shape,
            std::string(op) + ": shape mismatch");
    return Tensor(make_node(a.node->shape, op, {a.node, b.node}));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor t = elementwise_pair(a, b, "add");
    kern::active().vadd(t.size(), a.node->value.data(), b.node->value.data(), t.node->value.data());
    t.node->backward_fn = [](TensorNode& self) {
        for (int p = 0; p < 2; ++p) {
            TensorNode& P = *self.parents[p];
            if (!P.requires_grad) continue;
            P.ensure_grad();
            kern::active().axpy(self.size(), 1.0, self.grad.data(), P.grad.data());
        }
    };
    return t;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tensor t = elementwise_pair(a, b, "sub");
    for (std::size_t i = 0; i < t.size(); ++i)
        t.node->value[i] = a.node->value[i] - b.node->value[i];
    t.node->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            kern::active().axpy(self.size(), 1.0, self.grad.data(), A.grad.data());
        }
        if (B.requires_grad) {
            B.ensure_grad();
            kern::active().axpy(self.size(), -1.0, self.grad.data(), B.grad.data());
        }
    };
    return t;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tensor t = elementwise_pair(a, b, "mul");
    kern::active().vmul(t.size(), a.node->value.data(), b.node->value.data(), t.node->value.data());
    t.node->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i)
                A.grad[i] += self.grad[i] * B.value[i];
        }
        if (B.requires_grad) {
            B.ensure_grad();
            for (std::size_t i = 0; i < self.size(); ++i)
                B.grad[i] += self.grad[i] * A.value[i];
        }
    };
    return t;
}

Tensor scale(const Tensor& a, double c) {
    auto out = make_node(a.node->shape, "scale", {a.node});
    out->value = a.node->value;
    kern::active().scale(out->size(), c, out->value.data());
    out->backward_fn = [c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        kern::active().axpy(self.size(), c, self.grad.data(), A.grad.data());
    };
    return Tensor(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    require_2d(x, "add_rowvec");
    require(v.defined() && v.size() == x.cols(), "add_rowvec: vector length mismatch");
    auto out = make_node(x.node->shape, "add_rowvec", {x.node, v.node});
    const std::size_t r = x.rows(), c = x.cols();
    out->value = x.node->value;
    for (std::size_t i = 0; i < r; ++i)
        kern::active().axpy(c, 1.0, v.node->value.data(), out->value.data() + i * c);
    out->backward_fn = [r, c](TensorNode& self) {
        TensorNode& X = *self.parents[0];
        TensorNode& V = *self.parents[1];
        if (X.requires_grad) {
            X.ensure_grad();
            kern::active().axpy(self.size(), 1.0, self.grad.data(), X.grad.data());
        }
        if (V.requires_grad) {
            V.ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                kern::active().axpy(c, 1.0, self.grad.data() + i * c, V.grad.data());
        }
    };
    return Tensor(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_2d(a, "concat_cols");
    require_2d(b, "concat_cols");
    require(a.rows() == b.rows(), "concat_cols: row count mismatch");
    const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
    auto out = make_node({r, ca + cb}, "concat_cols", {a.node, b.node});
    for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(a.node->value.data() + i * ca, ca, out->value.data() + i * (ca + cb));
        std::copy_n(b.node->value.data() + i * cb, cb, out->value.data() + i * (ca + cb) + ca);
    }
    out->backward_fn = [r, ca, cb](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                kern::active().axpy(ca, 1.0, self.grad.data() + i * (ca + cb), A.grad.data() + i * ca);
        }
        if (B.requires_grad) {
            B.ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                kern::active().axpy(cb, 1.0, self.grad.data() + i * (ca + cb) + ca,
                                    B.grad.data() + i * cb);
        }
    };
    return Tensor(out);
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    require(numel(shape) == a.size(), "reshape: element count mismatch");
    auto out = make_node(std::move(shape), "reshape", {a.node});
    out->value = a.node->value;
    out->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        kern::active().axpy(self.size(), 1.0, self.grad.data(), A.grad.data());
    };
    return Tensor(out);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_rows: no parts");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    for (const auto& p : parts) {
        require_2d(p, "concat_rows");
        require(p.cols() == c, "concat_rows: width mismatch");
        r += p.rows();
        parents.push_back(p.node);
    }
    auto out = make_node({r, c}, "concat_rows", std::move(parents));
    std::size_t at = 0;
    for (const auto& p : parts) {
        std::copy_n(p.node->value.data(), p.size(), out->value.data() + at);
        at += p.size();
    }
    out->backward_fn = [](TensorNode& self) {
        std::size_t at = 0;
        for (auto& pp : self.parents) {
            TensorNode& P = *pp;
            if (P.requires_grad) {
                P.ensure_grad();
                kern::active().axpy(P.size(), 1.0, self.grad.data() + at, P.grad.data());
            }
            at += P.size();
        }
    };
    return Tensor(out);
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const std::size_t r = a.rows(), c = a.cols();
    auto out = make_node({c, r}, "transpose", {a.node});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out->value[j * r + i] = a.node->value[i * c + j];
    out->backward_fn = [r, c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) A.grad[i * c + j] += self.grad[j * r + i];
    };
    return Tensor(out);
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
    require_2d(a, "slice_rows");
    require(start + count <= a.rows(), "slice_rows: out of range");
    const std::size_t c = a.cols();
    auto out = make_node({count, c}, "slice_rows", {a.node});
    std::copy_n(a.node->value.data() + start * c, count * c, out->value.data());
    out->backward_fn = [start, count, c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        kern::active().axpy(count * c, 1.0, self.grad.data(), A.grad.data() + start * c);
    };
    return Tensor(out);
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
    require_2d(a, "gather_rows");
    const std::size_t c = a.cols();
    for (int i : idx)
        require(i >= 0 && static_cast<std::size_t>(i) < a.rows(), "gather_rows: index out of range");
    auto out = make_node({idx.size(), c}, "gather_rows", {a.node});
    for (std::size_t e = 0; e < idx.size(); ++e)
        std::copy_n(a.node->value.data() + static_cast<std::size_t>(idx[e]) * c, c,
                    out->value.data() + e * c);
    out->backward_fn = [idx, c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t e = 0; e < idx.size(); ++e)
            kern::active().axpy(c, 1.0, self.grad.data() + e * c,
                                A.grad.data() + static_cast<std::size_t>(idx[e]) * c);
    };
    return Tensor(out);
}

Tensor scatter_mean_rows(const Tensor& a, const std::vector<int>& dst, std::size_t out_rows) {
    require_2d(a, "scatter_mean_rows");
    require(dst.size() == a.rows(), "scatter_mean_rows: one destination per row");
    const std::size_t c = a.cols();
    std::vector<double> count(out_rows, 0.0);
    for (int i : dst) {
        require(i >= 0 && static_cast<std::size_t>(i) < out_rows,
                "scatter_mean_rows: index out of range");
        count[static_cast<std::size_t>(i)] += 1.0;
    }
    auto out = make_node({out_rows, c}, "scatter_mean_rows", {a.node});
    for (std::size_t e = 0; e < dst.size(); ++e)
        kern::active().axpy(c, 1.0, a.node->value.data() + e * c,
                            out->value.data() + static_cast<std::size_t>(dst[e]) * c);
    for (std::size_t i = 0; i < out_rows; ++i)
        if (count[i] > 0.0) kern::active().scale(c, 1.0 / count[i], out->value.data() + i * c);
    out->backward_fn = [dst, count, c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t e = 0; e < dst.size(); ++e) {
            const std::size_t i = static_cast<std::size_t>(dst[e]);
            kern::active().axpy(c, 1.0 / count[i], self.grad.data() + i * c, A.grad.data() + e * c);
        }
    };
    return Tensor(out);
}

Tensor tile_cols(const Tensor& a, std::size_t times) {
    require_2d(a, "tile_cols");
    const std::size_t r = a.rows(), c = a.cols();
    auto out = make_node({r, c * times}, "tile_cols", {a.node});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t t = 0; t < times; ++t)
            std::copy_n(a.node->value.data() + i * c, c, out->value.data() + i * c * times + t * c);
    out->backward_fn = [r, c, times](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t t = 0; t < times; ++t)
                kern::active().axpy(c, 1.0, self.grad.data() + i * c * times + t * c,
                                    A.grad.data() + i * c);
    };
    return Tensor(out);
}

Tensor block_mean_cols(const Tensor& a, std::size_t blocks) {
    require_2d(a, "block_mean_cols");
    require(blocks > 0 && a.cols() % blocks == 0, "block_mean_cols: width not divisible");
    const std::size_t r = a.rows(), c = a.cols() / blocks;
    auto out = make_node({r, c}, "block_mean_cols", {a.node});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t b = 0; b < blocks; ++b)
            kern::active().axpy(c, 1.0 / static_cast<double>(blocks),
                                a.node->value.data() + i * c * blocks + b * c,
                                out->value.data() + i * c);
    out->backward_fn = [r, c, blocks](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t b = 0; b < blocks; ++b)
                kern::active().axpy(c, 1.0 / static_cast<double>(blocks), self.grad.data() + i * c,
                                    A.grad.data() + i * c * blocks + b * c);
    };
    return Tensor(out);
}

Tensor group_mean_rows(const Tensor& a, std::size_t group) {
    require_2d(a, "group_mean_rows");
    require(group > 0 && a.rows() % group == 0, "group_mean_rows: rows not divisible");
    const std::size_t g = a.rows() / group, c = a.cols();
    auto out = make_node({g, c}, "group_mean_rows", {a.node});
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t t = 0; t < group; ++t)
            kern::active().axpy(c, 1.0 / static_cast<double>(group),
                                a.node->value.data() + (i * group + t) * c, out->value.data() + i * c);
    out->backward_fn = [g, c, group](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < g; ++i)
            for (std::size_t t = 0; t < group; ++t)
                kern::active().axpy(c, 1.0 / static_cast<double>(group), self.grad.data() + i * c,
                                    A.grad.data() + (i * group + t) * c);
    };
    return Tensor(out);
}

Tensor repeat_rows(const Tensor& a, std::size_t times) {
    require_2d(a, "repeat_rows");
    const std::size_t r = a.rows(), c = a.cols();
    auto out = make_node({r * times, c}, "repeat_rows", {a.node});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t t = 0; t < times; ++t)
            std::copy_n(a.node->value.data() + i * c, c, out->value.data() + (i * times + t) * c);
    out->backward_fn = [r, c, times](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t t = 0; t < times; ++t)
                kern::active().axpy(c, 1.0, self.grad.data() + (i * times + t) * c,
                                    A.grad.data() + i * c);
    };
    return Tensor(out);
}

Tensor gelu(const Tensor& a) {
    auto out = make_node(a.node->shape, "gelu", {a.node});
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (std::size_t i = 0; i < out->size(); ++i) {
        const double x = a.node->value[i];
        out->value[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
    }
    out->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        constexpr double inv_sqrt2 = 0.7071067811865475244;
        constexpr double inv_sqrt2pi = 0.3989422804014326779;
        for (std::size_t i = 0; i < self.size(); ++i) {
            const double x = A.value[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            A.grad[i] += self.grad[i] * (cdf + x * pdf);
        }
    };
    return Tensor(out);
}

Tensor tanh_t(const Tensor& a) {
    auto out = make_node(a.node->shape, "tanh", {a.node});
    for (std::size_t i = 0; i < out->size(); ++i) out->value[i] = std::tanh(a.node->value[i]);
    out->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < self.size(); ++i)
            A.grad[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
    };
    return Tensor(out);
}

Tensor sigmoid(const Tensor& a) {
    auto out = make_node(a.node->shape, "sigmoid", {a.node});
    for (std::size_t i = 0; i < out->size(); ++i)
        out->value[i] = 1.0 / (1.0 + std::exp(-a.node->value[i]));
    out->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < self.size(); ++i) {
            const double s = self.value[i];
            A.grad[i] += self.grad[i] * s * (1.0 - s);
        }
    };
    return Tensor(out);
}

Tensor softmax_rows(const Tensor& a, const std::vector<unsigned char>* mask) {
    require_2d(a, "softmax_rows");
    if (mask) require(mask->size() == a.size(), "softmax_rows: mask size mismatch");
    const std::size_t r = a.rows(), c = a.cols();
    auto out = make_node({r, c}, "softmax_rows", {a.node});
    std::vector<unsigned char> m = mask ? *mask : std::vector<unsigned char>();
    auto blocked = [&m, c](std::size_t i, std::size_t j) {
        return !m.empty() && m[i * c + j] != 0;
    };
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -1e300;
        bool any = false;
        for (std::size_t j = 0; j < c; ++j)
            if (!blocked(i, j)) {
                mx = std::max(mx, a.node->value[i * c + j]);
                any = true;
            }
        if (!any) continue;  // fully masked row stays zero
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (blocked(i, j)) continue;
            const double e = std::exp(a.node->value[i * c + j] - mx);
            out->value[i * c + j] = e;
            z += e;
        }
        for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] /= z;
    }
    out->backward_fn = [r, c](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        // masked entries have probability 0, so they drop out naturally
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j)
                s += self.grad[i * c + j] * self.value[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                A.grad[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - s);
        }
    };
    return Tensor(out);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_2d(x, "layer_norm_rows");
    const std::size_t r = x.rows(), c = x.cols();
    require(gamma.size() == c && beta.size() == c, "layer_norm_rows: scale length mismatch");
    auto out = make_node({r, c}, "layer_norm_rows", {x.node, gamma.node, beta.node});
    for (std::size_t i = 0; i < r; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += x.node->value[i * c + j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = x.node->value[i * c + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j)
            out->value[i * c + j] =
                gamma.node->value[j] * (x.node->value[i * c + j] - mu) * inv + beta.node->value[j];
    }
    out->backward_fn = [r, c, eps](TensorNode& self) {
        TensorNode& X = *self.parents[0];
        TensorNode& G = *self.parents[1];
        TensorNode& B = *self.parents[2];
        if (X.requires_grad) X.ensure_grad();
        if (G.requires_grad) G.ensure_grad();
        if (B.requires_grad) B.ensure_grad();
        const double nd = static_cast<double>(c);
        for (std::size_t i = 0; i < r; ++i) {
            double mu = 0.0;
            for (std::size_t j = 0; j < c; ++j) mu += X.value[i * c + j];
            mu /= nd;
            double var = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double d = X.value[i * c + j] - mu;
                var += d * d;
            }
            var /= nd;
            const double inv = 1.0 / std::sqrt(var + eps);
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double xhat = (X.value[i * c + j] - mu) * inv;
                const double dy = self.grad[i * c + j];
                if (G.requires_grad) G.grad[j] += dy * xhat;
                if (B.requires_grad) B.grad[j] += dy;
                const double dxhat = dy * G.value[j];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
            }
            if (X.requires_grad)
                for (std::size_t j = 0; j < c; ++j) {
                    const double xhat = (X.value[i * c + j] - mu) * inv;
                    const double dxhat = self.grad[i * c + j] * G.value[j];
                    X.grad[i * c + j] +=
                        inv * (dxhat - sum_dxhat / nd - xhat * sum_dxhat_xhat / nd);
                }
        }
    };
    return Tensor(out);
}

Tensor sum_all(const Tensor& a) {
    auto out = make_node({1}, "sum_all", {a.node});
    out->value[0] = kern::active().vsum(a.size(), a.node->value.data());
    out->backward_fn = [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.ensure_grad();
        for (std::size_t i = 0; i < A.size(); ++i) A.grad[i] += self.grad[0];
    };
    return Tensor(out);
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

Tensor bce_sum(const Tensor& p, const std::vector<double>& y,
               const std::vector<unsigned char>* include) {
    require(p.defined() && p.size() == y.size(), "bce_sum: label size mismatch");
    if (include) require(include->size() == p.size(), "bce_sum: mask size mismatch");
    auto out = make_node({1}, "bce_sum", {p.node});
    std::vector<unsigned char> inc = include ? *include : std::vector<unsigned char>();
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!inc.empty() && inc[i] == 0) continue;
        // value first in both min/max so a NaN probability stays NaN instead
        // of silently saturating at the clamp bound
        const double pc = std::min(std::max(p.node->value[i], kProbClampLo), kProbClampHi);
        loss += -(y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc));
    }
    out->value[0] = loss;
    out->backward_fn = [y, inc](TensorNode& self) {
        TensorNode& P = *self.parents[0];
        if (!P.requires_grad) return;
        P.ensure_grad();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (!inc.empty() && inc[i] == 0) continue;
            const double raw = P.value[i];
            if (raw < kProbClampLo || raw > kProbClampHi) continue;  // clamp is flat
            P.grad[i] += g * (raw - y[i]) / (raw * (1.0 - raw));
        }
    };
    return Tensor(out);
}

void backward(const Tensor& loss) {
    require(loss.defined() && loss.size() == 1, "backward: loss must be a scalar");
    if (loss.node->tape_done)
        throw std::runtime_error("backward: tape already consumed (op '" +
                                 std::string(loss.node->op) + "'); re-run the forward pass");

    // iterative post-order DFS
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack{{loss.node.get(), 0}};
    visited.insert(loss.node.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            TensorNode* p = n->parents[idx++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (TensorNode* n : order)
        if (n->backward_fn && n->tape_done)
            throw std::runtime_error("backward: intermediate from op '" + std::string(n->op) +
                                     "' belongs to an already-consumed tape; re-run the forward pass");

    loss.node->ensure_grad();
    loss.node->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) {
            if (n->requires_grad) {
                n->ensure_grad();
                n->backward_fn(*n);
            }
            n->tape_done = true;
        }
    }
}

}  // namespace coagents::nn
