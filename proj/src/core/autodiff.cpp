#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace negtune::ad {

bool& grad_mode() {
    thread_local bool mode = true;
    return mode;
}

Var Var::leaf(Tensor t, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = requires_grad;
    return Var(n);
}

Var Var::constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = false;
    return Var(n);
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool need = false;
    if (grad_mode())
        for (const auto& p : parents) need = need || p.requires_grad();
    if (need) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward = std::move(backward);
    }
    return Var(n);
}

void backward(const Var& root) {
    if (!root.value().is_scalar())
        throw std::invalid_argument("backward: root must be scalar");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS to get a topological order.
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    struct Frame { Node* node; size_t next_child; };
    std::vector<Frame> stack;
    stack.push_back({root.node().get(), 0});
    visited.insert(root.node().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.node->parents.size()) {
            Node* child = f.node->parents[f.next_child++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    root.node()->grad_ref().data[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad_alloc) n->backward(*n);
    }
}

// ---- helpers ----

static void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    a.value().shape_str() + " vs " + b.value().shape_str());
}

static Tensor map1(const Tensor& x, double (*f)(double)) {
    Tensor y = x;
    for (auto& v : y.data) v = f(v);
    return y;
}

// ---- elementwise binary ----

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor y = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += bd[i];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        for (int k = 0; k < 2; ++k)
            if (n.parents[k]->requires_grad) {
                auto& g = n.parents[k]->grad_ref().data;
                for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i];
            }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor y = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] -= bd[i];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) {
            auto& g = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& g = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad.data[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor y = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] *= bd[i];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        const auto& av = n.parents[0]->value.data;
        const auto& bv = n.parents[1]->value.data;
        if (n.parents[0]->requires_grad) {
            auto& g = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] * bv[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& g = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] * av[i];
        }
    });
}

Var div(const Var& a, const Var& b) {
    check_same_shape(a, b, "div");
    Tensor y = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] /= bd[i];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        const auto& av = n.parents[0]->value.data;
        const auto& bv = n.parents[1]->value.data;
        if (n.parents[0]->requires_grad) {
            auto& g = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] / bv[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& g = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i)
                g[i] -= n.grad.data[i] * av[i] / (bv[i] * bv[i]);
        }
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor y = a.value();
    for (auto& v : y.data) v += s;
    return make_op(std::move(y), {a}, [](Node& n) {
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i];
    });
}

Var mul_scalar(const Var& a, double s) {
    Tensor y = a.value();
    for (auto& v : y.data) v *= s;
    return make_op(std::move(y), {a}, [s](Node& n) {
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] * s;
    });
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

// ---- elementwise unary ----

Var exp_v(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return std::exp(v); });
    return make_op(std::move(y), {a}, [](Node& n) {
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] * n.value.data[i];
    });
}

Var log_v(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return std::log(v); });
    return make_op(std::move(y), {a}, [](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] / x[i];
    });
}

Var sqrt_v(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return std::sqrt(v); });
    return make_op(std::move(y), {a}, [](Node& n) {
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad.data[i] * 0.5 / n.value.data[i];
    });
}

Var abs_v(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return std::fabs(v); });
    return make_op(std::move(y), {a}, [](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad.data[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
    });
}

Var square(const Var& a) {
    Tensor y = a.value();
    for (auto& v : y.data) v *= v;
    return make_op(std::move(y), {a}, [](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i] * 2.0 * x[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return make_op(std::move(y), {a}, [](Node& n) {
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i) {
            const double s = n.value.data[i];
            g[i] += n.grad.data[i] * s * (1.0 - s);
        }
    });
}

Var relu(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
    return make_op(std::move(y), {a}, [](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) g[i] += n.grad.data[i];
    });
}

Var leaky_relu(const Var& a, double slope) {
    Tensor y = a.value();
    for (auto& v : y.data) v = v > 0.0 ? v : slope * v;
    return make_op(std::move(y), {a}, [slope](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad.data[i] * (x[i] > 0.0 ? 1.0 : slope);
    });
}

Var clamp(const Var& a, double lo, double hi) {
    Tensor y = a.value();
    for (auto& v : y.data) v = v < lo ? lo : (v > hi ? hi : v);
    return make_op(std::move(y), {a}, [lo, hi](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            if (x[i] >= lo && x[i] <= hi) g[i] += n.grad.data[i];
    });
}

Var clamp_min(const Var& a, double lo) { return clamp(a, lo, std::numeric_limits<double>::infinity()); }
Var clamp_max(const Var& a, double hi) { return clamp(a, -std::numeric_limits<double>::infinity(), hi); }

Var pow_const(const Var& a, double p) {
    Tensor y = a.value();
    for (auto& v : y.data) v = std::pow(v, p);
    return make_op(std::move(y), {a}, [p](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad.data[i] * p * std::pow(x[i], p - 1.0);
    });
}

Var erf_v(const Var& a) {
    Tensor y = map1(a.value(), [](double v) { return std::erf(v); });
    constexpr double two_over_sqrt_pi = 1.1283791670955126;
    return make_op(std::move(y), {a}, [](Node& n) {
        const auto& x = n.parents[0]->value.data;
        auto& g = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < g.size(); ++i)
            g[i] += n.grad.data[i] * two_over_sqrt_pi * std::exp(-x[i] * x[i]);
    });
}

Var where_mask(const Tensor& mask, const Var& a, const Var& b) {
    check_same_shape(a, b, "where_mask");
    if (!mask.same_shape(a.value()))
        throw std::invalid_argument("where_mask: mask shape mismatch");
    Tensor y = a.value();
    const auto& bd = b.value().data;
    for (size_t i = 0; i < y.data.size(); ++i)
        y.data[i] = mask.data[i] != 0.0 ? y.data[i] : bd[i];
    return make_op(std::move(y), {a, b}, [mask](Node& n) {
        if (n.parents[0]->requires_grad) {
            auto& g = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i)
                if (mask.data[i] != 0.0) g[i] += n.grad.data[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& g = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < g.size(); ++i)
                if (mask.data[i] == 0.0) g[i] += n.grad.data[i];
        }
    });
}

// ---- channel broadcast ----

static void check_cvec(const Var& x, const Var& v, const char* op) {
    const Tensor& t = v.value();
    if (t.n != 1 || t.h != 1 || t.w != 1 || t.c != x.value().c)
        throw std::invalid_argument(std::string(op) + ": vector must be (1,C,1,1)");
}

Var add_cvec(const Var& x, const Var& v) {
    check_cvec(x, v, "add_cvec");
    Tensor y = x.value();
    const int C = y.c;
    const size_t hw = static_cast<size_t>(y.h) * y.w;
    for (int in = 0; in < y.n; ++in)
        for (int q = 0; q < C; ++q) {
            double s = v.value().data[q];
            double* p = &y.data[(static_cast<size_t>(in) * C + q) * hw];
            for (size_t k = 0; k < hw; ++k) p[k] += s;
        }
    return make_op(std::move(y), {x, v}, [](Node& n) {
        const Tensor& g = n.grad;
        const size_t hw = static_cast<size_t>(g.h) * g.w;
        if (n.parents[0]->requires_grad) {
            auto& gx = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += g.data[i];
        }
        if (n.parents[1]->requires_grad) {
            auto& gv = n.parents[1]->grad_ref().data;
            for (int in = 0; in < g.n; ++in)
                for (int q = 0; q < g.c; ++q) {
                    const double* p = &g.data[(static_cast<size_t>(in) * g.c + q) * hw];
                    double acc = 0.0;
                    for (size_t k = 0; k < hw; ++k) acc += p[k];
                    gv[q] += acc;
                }
        }
    });
}

Var mul_cvec(const Var& x, const Var& v) {
    check_cvec(x, v, "mul_cvec");
    Tensor y = x.value();
    const int C = y.c;
    const size_t hw = static_cast<size_t>(y.h) * y.w;
    for (int in = 0; in < y.n; ++in)
        for (int q = 0; q < C; ++q) {
            double s = v.value().data[q];
            double* p = &y.data[(static_cast<size_t>(in) * C + q) * hw];
            for (size_t k = 0; k < hw; ++k) p[k] *= s;
        }
    return make_op(std::move(y), {x, v}, [](Node& n) {
        const Tensor& g = n.grad;
        const Tensor& xv = n.parents[0]->value;
        const Tensor& vv = n.parents[1]->value;
        const size_t hw = static_cast<size_t>(g.h) * g.w;
        if (n.parents[0]->requires_grad) {
            auto& gx = n.parents[0]->grad_ref().data;
            for (int in = 0; in < g.n; ++in)
                for (int q = 0; q < g.c; ++q) {
                    const size_t base = (static_cast<size_t>(in) * g.c + q) * hw;
                    for (size_t k = 0; k < hw; ++k) gx[base + k] += g.data[base + k] * vv.data[q];
                }
        }
        if (n.parents[1]->requires_grad) {
            auto& gv = n.parents[1]->grad_ref().data;
            for (int in = 0; in < g.n; ++in)
                for (int q = 0; q < g.c; ++q) {
                    const size_t base = (static_cast<size_t>(in) * g.c + q) * hw;
                    double acc = 0.0;
                    for (size_t k = 0; k < hw; ++k) acc += g.data[base + k] * xv.data[base + k];
                    gv[q] += acc;
                }
        }
    });
}

// ---- reductions / shape ----

Var sum_all(const Var& a) {
    double s = 0.0;
    for (double v : a.value().data) s += v;
    return make_op(Tensor::scalar(s), {a}, [](Node& n) {
        const double g = n.grad.data[0];
        auto& gp = n.parents[0]->grad_ref().data;
        for (auto& v : gp) v += g;
    });
}

Var mean_all(const Var& a) {
    const double inv = 1.0 / static_cast<double>(a.value().size());
    double s = 0.0;
    for (double v : a.value().data) s += v;
    return make_op(Tensor::scalar(s * inv), {a}, [inv](Node& n) {
        const double g = n.grad.data[0] * inv;
        auto& gp = n.parents[0]->grad_ref().data;
        for (auto& v : gp) v += g;
    });
}

Var slice_channels(const Var& a, int c0, int len) {
    const Tensor& x = a.value();
    if (c0 < 0 || c0 + len > x.c) throw std::invalid_argument("slice_channels: out of range");
    Tensor y(x.n, len, x.h, x.w);
    const size_t hw = static_cast<size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int q = 0; q < len; ++q)
            std::copy_n(&x.data[(static_cast<size_t>(in) * x.c + c0 + q) * hw], hw,
                        &y.data[(static_cast<size_t>(in) * len + q) * hw]);
    return make_op(std::move(y), {a}, [c0, len](Node& n) {
        Tensor& gx = n.parents[0]->grad_ref();
        const size_t hw = static_cast<size_t>(gx.h) * gx.w;
        for (int in = 0; in < gx.n; ++in)
            for (int q = 0; q < len; ++q) {
                const double* src = &n.grad.data[(static_cast<size_t>(in) * len + q) * hw];
                double* dst = &gx.data[(static_cast<size_t>(in) * gx.c + c0 + q) * hw];
                for (size_t k = 0; k < hw; ++k) dst[k] += src[k];
            }
    });
}

Var crop_v(const Var& a, int top, int left, int out_h, int out_w) {
    Tensor y = crop(a.value(), top, left, out_h, out_w);
    const int in_h = a.value().h, in_w = a.value().w;
    return make_op(std::move(y), {a}, [top, left, in_h, in_w](Node& n) {
        Tensor& gx = n.parents[0]->grad_ref();
        for (int in = 0; in < n.grad.n; ++in)
            for (int q = 0; q < n.grad.c; ++q)
                for (int i = 0; i < n.grad.h; ++i)
                    for (int j = 0; j < n.grad.w; ++j)
                        gx.at(in, q, top + i, left + j) += n.grad.at(in, q, i, j);
    });
}

// ---- structured ----

Var conv2d_v(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    std::vector<double> bias;
    if (b.defined()) bias = b.value().data;
    Tensor y = conv2d(x.value(), w.value(), bias, stride, pad);
    std::vector<Var> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    const int kh = w.value().h, kw = w.value().w;
    const int in_h = x.value().h, in_w = x.value().w;
    return make_op(std::move(y), std::move(parents), [stride, pad, kh, kw, in_h, in_w](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& wv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor gx = conv2d_grad_input(n.grad, wv, stride, pad, in_h, in_w);
            auto& gp = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gx.data[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor gw = conv2d_grad_weight(n.grad, xv, stride, pad, kh, kw);
            auto& gp = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gw.data[i];
        }
        if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
            auto gb = conv2d_grad_bias(n.grad);
            auto& gp = n.parents[2]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gb[i];
        }
    });
}

Var conv_transpose2d_v(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_pad) {
    std::vector<double> bias;
    if (b.defined()) bias = b.value().data;
    Tensor y = conv_transpose2d(x.value(), w.value(), bias, stride, pad, out_pad);
    std::vector<Var> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    const int kh = w.value().h, kw = w.value().w;
    return make_op(std::move(y), std::move(parents), [stride, pad, kh, kw](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& wv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor gx = conv_transpose2d_grad_input(n.grad, wv, stride, pad);
            auto& gp = n.parents[0]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gx.data[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor gw = conv_transpose2d_grad_weight(n.grad, xv, stride, pad, kh, kw);
            auto& gp = n.parents[1]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gw.data[i];
        }
        if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
            auto gb = conv2d_grad_bias(n.grad);
            auto& gp = n.parents[2]->grad_ref().data;
            for (size_t i = 0; i < gp.size(); ++i) gp[i] += gb[i];
        }
    });
}

Var avg_pool2_v(const Var& x) {
    Tensor y = avg_pool2(x.value());
    const int in_h = x.value().h, in_w = x.value().w;
    return make_op(std::move(y), {x}, [in_h, in_w](Node& n) {
        Tensor gx = avg_pool2_grad(n.grad, in_h, in_w);
        auto& gp = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += gx.data[i];
    });
}

Var decimate2_v(const Var& x) {
    Tensor y = decimate2(x.value());
    const int in_h = x.value().h, in_w = x.value().w;
    return make_op(std::move(y), {x}, [in_h, in_w](Node& n) {
        Tensor gx = decimate2_grad(n.grad, in_h, in_w);
        auto& gp = n.parents[0]->grad_ref().data;
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += gx.data[i];
    });
}

Var decimate2_rows_v(const Var& x) {
    const Tensor& xv = x.value();
    const int oh = (xv.h + 1) / 2;
    Tensor y(xv.n, xv.c, oh, xv.w);
    for (int in = 0; in < xv.n; ++in)
        for (int q = 0; q < xv.c; ++q)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < xv.w; ++j) y.at(in, q, i, j) = xv.at(in, q, 2 * i, j);
    return make_op(std::move(y), {x}, [](Node& n) {
        Tensor& gx = n.parents[0]->grad_ref();
        for (int in = 0; in < n.grad.n; ++in)
            for (int q = 0; q < n.grad.c; ++q)
                for (int i = 0; i < n.grad.h; ++i)
                    for (int j = 0; j < n.grad.w; ++j)
                        gx.at(in, q, 2 * i, j) += n.grad.at(in, q, i, j);
    });
}

Var decimate2_cols_v(const Var& x) {
    const Tensor& xv = x.value();
    const int ow = (xv.w + 1) / 2;
    Tensor y(xv.n, xv.c, xv.h, ow);
    for (int in = 0; in < xv.n; ++in)
        for (int q = 0; q < xv.c; ++q)
            for (int i = 0; i < xv.h; ++i)
                for (int j = 0; j < ow; ++j) y.at(in, q, i, j) = xv.at(in, q, i, 2 * j);
    return make_op(std::move(y), {x}, [](Node& n) {
        Tensor& gx = n.parents[0]->grad_ref();
        for (int in = 0; in < n.grad.n; ++in)
            for (int q = 0; q < n.grad.c; ++q)
                for (int i = 0; i < n.grad.h; ++i)
                    for (int j = 0; j < n.grad.w; ++j)
                        gx.at(in, q, i, 2 * j) += n.grad.at(in, q, i, j);
    });
}

static int reflect_index(int i, int nvalid) {
    if (i < 0) i = -i;
    if (i >= nvalid) i = 2 * nvalid - 2 - i;
    return i;
}

Var pad_reflect_v(const Var& x, int top, int bottom, int left, int right) {
    Tensor y = pad_reflect(x.value(), top, bottom, left, right);
    const int in_h = x.value().h, in_w = x.value().w;
    return make_op(std::move(y), {x}, [top, left, in_h, in_w](Node& n) {
        Tensor& gx = n.parents[0]->grad_ref();
        for (int in = 0; in < n.grad.n; ++in)
            for (int q = 0; q < n.grad.c; ++q)
                for (int i = 0; i < n.grad.h; ++i) {
                    const int si = reflect_index(i - top, in_h);
                    for (int j = 0; j < n.grad.w; ++j)
                        gx.at(in, q, si, reflect_index(j - left, in_w)) += n.grad.at(in, q, i, j);
                }
    });
}

Var reshape_v(const Var& x, int n, int c, int h, int w) {
    if (static_cast<size_t>(n) * c * h * w != x.value().size())
        throw std::invalid_argument("reshape_v: element count mismatch");
    Tensor y(n, c, h, w);
    y.data = x.value().data;
    return make_op(std::move(y), {x}, [](Node& nd) {
        auto& gp = nd.parents[0]->grad_ref().data;
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += nd.grad.data[i];
    });
}

} // namespace negtune::ad
