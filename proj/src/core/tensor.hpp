#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace negtune {

// Dense NCHW tensor, double precision. All pipeline math runs in double so
// that analytic gradients survive central-difference checks at 1e-3 steps.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1, 1, 1);
        t.data[0] = v;
        return t;
    }
    static Tensor plane(int h, int w, double fill = 0.0) { return Tensor(1, 1, h, w, fill); }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    bool is_scalar() const { return size() == 1; }
    double item() const { return data[0]; }

    double& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    double at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    std::string shape_str() const;
    bool all_finite() const;
    double min_value() const;
    double max_value() const;
};

// ---- raw kernels (value domain; autodiff composes these) ----

// Standard cross-correlation conv. weight shape (oc, ic, kh, kw), bias length oc
// (may be empty). Zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
              int stride, int pad);
// Gradient of conv2d w.r.t. input / weight / bias given upstream gy.
Tensor conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int pad,
                         int in_h, int in_w);
Tensor conv2d_grad_weight(const Tensor& gy, const Tensor& x, int stride, int pad,
                          int kh, int kw);
std::vector<double> conv2d_grad_bias(const Tensor& gy);

// Transposed conv (fractionally strided). weight shape (ic, oc, kh, kw),
// input channels first. out = (in-1)*stride - 2*pad + kh + out_pad.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                        int stride, int pad, int out_pad);
Tensor conv_transpose2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int pad);
Tensor conv_transpose2d_grad_weight(const Tensor& gy, const Tensor& x, int stride, int pad,
                                    int kh, int kw);

Tensor avg_pool2(const Tensor& x);                       // kernel 2, stride 2, floor
Tensor avg_pool2_grad(const Tensor& gy, int in_h, int in_w);
Tensor decimate2(const Tensor& x);                       // x[..., 0::2, 0::2]
Tensor decimate2_grad(const Tensor& gy, int in_h, int in_w);
Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right);
Tensor crop(const Tensor& x, int top, int left, int out_h, int out_w);

} // namespace negtune
