#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tensor.hpp"

namespace negtune::ad {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    Tensor& grad_ref() {
        if (!grad_alloc) {
            grad = Tensor(value.n, value.c, value.h, value.w);
            grad_alloc = true;
        }
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

// Tape recording on/off. Off means ops produce detached constants (used for
// validation passes and finite-difference probes).
bool& grad_mode();

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGradGuard() { grad_mode() = prev; }
};

class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    static Var leaf(Tensor t, bool requires_grad = true);
    static Var constant(Tensor t);
    static Var scalar(double v) { return constant(Tensor::scalar(v)); }

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    Tensor& grad() { return node_->grad_ref(); }
    bool has_grad() const { return node_->grad_alloc; }
    void zero_grad() {
        if (node_->grad_alloc) std::fill(node_->grad.data.begin(), node_->grad.data.end(), 0.0);
    }
    bool requires_grad() const { return node_->requires_grad; }
    double item() const { return node_->value.item(); }
    const NodePtr& node() const { return node_; }

private:
    NodePtr node_;
};

// Builds a node from precomputed value; backward receives the node and must
// accumulate into parents' grad_ref(). Skips recording when tape is off.
Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward);

void backward(const Var& root);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var neg(const Var& a);
Var exp_v(const Var& a);
Var log_v(const Var& a);
Var sqrt_v(const Var& a);
Var abs_v(const Var& a);
Var square(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var clamp(const Var& a, double lo, double hi);
Var clamp_min(const Var& a, double lo);
Var clamp_max(const Var& a, double hi);
Var pow_const(const Var& a, double p);
Var erf_v(const Var& a);
// Blend by a constant 0/1 mask: mask*a + (1-mask)*b.
Var where_mask(const Tensor& mask, const Var& a, const Var& b);

// ---- broadcasting with per-channel vectors (shape (1,C,1,1)) ----
Var add_cvec(const Var& x, const Var& v);
Var mul_cvec(const Var& x, const Var& v);

// ---- reductions / shape ----
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var slice_channels(const Var& a, int c0, int len);
Var crop_v(const Var& a, int top, int left, int out_h, int out_w);

// ---- structured ----
Var conv2d_v(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv_transpose2d_v(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_pad);
Var avg_pool2_v(const Var& x);
Var decimate2_v(const Var& x);
Var decimate2_rows_v(const Var& x); // every 2nd row
Var decimate2_cols_v(const Var& x); // every 2nd column
Var pad_reflect_v(const Var& x, int top, int bottom, int left, int right);
// Metadata-only reshape; element count must match.
Var reshape_v(const Var& x, int n, int c, int h, int w);

// operator sugar
inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator+(const Var& a, double s) { return add_scalar(a, s); }
inline Var operator+(double s, const Var& a) { return add_scalar(a, s); }
inline Var operator-(const Var& a, double s) { return add_scalar(a, -s); }
inline Var operator-(double s, const Var& a) { return add_scalar(neg(a), s); }
inline Var operator*(const Var& a, double s) { return mul_scalar(a, s); }
inline Var operator*(double s, const Var& a) { return mul_scalar(a, s); }
inline Var operator/(const Var& a, double s) { return mul_scalar(a, 1.0 / s); }

} // namespace negtune::ad
