#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

// Reverse-mode autodiff over double matrices. Forwards build a DAG of
// shared_ptr nodes; backward(loss) topologically sorts the reachable graph
// and runs the stored adjoint of every op once. A tape can be consumed only
// once; reusing its intermediates in a later forward is diagnosed by name.
namespace coagents::nn {

// probability clamp applied inside the fused BCE loss
inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

struct TensorNode {
    std::vector<std::size_t> shape;  // 1-D or 2-D, row-major
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;
    bool requires_grad = false;  // this node or an ancestor holds parameters
    bool tape_done = false;
    const char* op = "leaf";

    std::size_t size() const { return value.size(); }
    std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node(std::move(n)) {}

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);
    static Tensor scalar(double v);
    // leaf that accumulates gradients (model parameter)
    static Tensor param(std::vector<std::size_t> shape, std::vector<double> data);

    bool defined() const { return node != nullptr; }
    const std::vector<std::size_t>& shape() const { return node->shape; }
    std::size_t size() const { return node->size(); }
    std::size_t rows() const { return node->rows(); }
    std::size_t cols() const { return node->cols(); }
    const std::vector<double>& value() const { return node->value; }
    std::vector<double>& raw() { return node->value; }  // leaves only (in-place updates)
    const std::vector<double>& grad() const { return node->grad; }
    double item() const;
    void zero_grad() { node->grad.assign(node->value.size(), 0.0); }

    std::shared_ptr<TensorNode> node;
};

// ---- ops ----------------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)·(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)·(n,k)^T
// x (r, in) · W(out, in)^T + b(out); pass an undefined Tensor to skip the bias
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_rowvec(const Tensor& x, const Tensor& v);  // v broadcast over rows
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
// stack 2-D parts with equal widths on top of each other
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor transpose(const Tensor& a);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);
Tensor gather_rows(const Tensor& a, const std::vector<int>& idx);
// out[i] = mean of in-rows e with dst[e] == i (0 when none), out has out_rows rows
Tensor scatter_mean_rows(const Tensor& a, const std::vector<int>& dst, std::size_t out_rows);
Tensor tile_cols(const Tensor& a, std::size_t times);
// (r, blocks*d) -> (r, d): mean over the `blocks` column blocks
Tensor block_mean_cols(const Tensor& a, std::size_t blocks);
// (g*group, d) -> (g, d): mean over each run of `group` consecutive rows
Tensor group_mean_rows(const Tensor& a, std::size_t group);
// rows repeated `times` each: (r, d) -> (r*times, d)
Tensor repeat_rows(const Tensor& a, std::size_t times);
Tensor gelu(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// row softmax; mask (size of a, 1 = excluded) entries get probability 0
Tensor softmax_rows(const Tensor& a, const std::vector<unsigned char>* mask = nullptr);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// fused binary cross entropy: sum over unmasked entries of
// -[y log p + (1-y) log(1-p)] with p clamped to [kProbClampLo, kProbClampHi];
// y/mask are plain data (mask optional, 1 = include)
Tensor bce_sum(const Tensor& p, const std::vector<double>& y,
               const std::vector<unsigned char>* include = nullptr);

void backward(const Tensor& loss);

}  // namespace coagents::nn
