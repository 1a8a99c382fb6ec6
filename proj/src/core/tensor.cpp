#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace negtune {

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::min_value() const {
    double m = data.empty() ? 0.0 : data[0];
    for (double v : data) m = std::min(m, v);
    return m;
}

double Tensor::max_value() const {
    double m = data.empty() ? 0.0 : data[0];
    for (double v : data) m = std::max(m, v);
    return m;
}

static int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
              int stride, int pad) {
    const int oc = w.n, ic = w.c, kh = w.h, kw = w.w;
    if (x.c != ic) throw std::invalid_argument("conv2d: channel mismatch");
    const int oh = conv_out_dim(x.h, kh, stride, pad);
    const int ow = conv_out_dim(x.w, kw, stride, pad);
    Tensor y(x.n, oc, oh, ow);

#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < x.n; ++in) {
        for (int o = 0; o < oc; ++o) {
            const double b = bias.empty() ? 0.0 : bias[o];
            double* yp = &y.data[((static_cast<size_t>(in) * oc + o) * oh) * ow];
            for (int i = 0; i < oh; ++i) {
                for (int j = 0; j < ow; ++j) {
                    double acc = b;
                    const int ih0 = i * stride - pad;
                    const int iw0 = j * stride - pad;
                    for (int q = 0; q < ic; ++q) {
                        const double* xp = &x.data[((static_cast<size_t>(in) * ic + q) * x.h) * x.w];
                        const double* wp = &w.data[((static_cast<size_t>(o) * ic + q) * kh) * kw];
                        for (int u = 0; u < kh; ++u) {
                            const int ih = ih0 + u;
                            if (ih < 0 || ih >= x.h) continue;
                            const double* xrow = xp + static_cast<size_t>(ih) * x.w;
                            const double* wrow = wp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -iw0);
                            int v1 = std::min(kw, x.w - iw0);
                            for (int v = v0; v < v1; ++v)
                                acc += xrow[iw0 + v] * wrow[v];
                        }
                    }
                    yp[static_cast<size_t>(i) * ow + j] = acc;
                }
            }
        }
    }
    return y;
}

Tensor conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int pad,
                         int in_h, int in_w) {
    const int oc = w.n, ic = w.c, kh = w.h, kw = w.w;
    Tensor gx(gy.n, ic, in_h, in_w);
#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < gy.n; ++in) {
        for (int q = 0; q < ic; ++q) {
            double* gxp = &gx.data[((static_cast<size_t>(in) * ic + q) * in_h) * in_w];
            for (int o = 0; o < oc; ++o) {
                const double* gyp = &gy.data[((static_cast<size_t>(in) * oc + o) * gy.h) * gy.w];
                const double* wp = &w.data[((static_cast<size_t>(o) * ic + q) * kh) * kw];
                for (int i = 0; i < gy.h; ++i) {
                    const int ih0 = i * stride - pad;
                    for (int j = 0; j < gy.w; ++j) {
                        const double g = gyp[static_cast<size_t>(i) * gy.w + j];
                        if (g == 0.0) continue;
                        const int iw0 = j * stride - pad;
                        for (int u = 0; u < kh; ++u) {
                            const int ih = ih0 + u;
                            if (ih < 0 || ih >= in_h) continue;
                            double* gxrow = gxp + static_cast<size_t>(ih) * in_w;
                            const double* wrow = wp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -iw0);
                            int v1 = std::min(kw, in_w - iw0);
                            for (int v = v0; v < v1; ++v)
                                gxrow[iw0 + v] += g * wrow[v];
                        }
                    }
                }
            }
        }
    }
    return gx;
}

Tensor conv2d_grad_weight(const Tensor& gy, const Tensor& x, int stride, int pad,
                          int kh, int kw) {
    const int oc = gy.c, ic = x.c;
    Tensor gw(oc, ic, kh, kw);
#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int o = 0; o < oc; ++o) {
        for (int q = 0; q < ic; ++q) {
            double* gwp = &gw.data[((static_cast<size_t>(o) * ic + q) * kh) * kw];
            for (int in = 0; in < x.n; ++in) {
                const double* gyp = &gy.data[((static_cast<size_t>(in) * oc + o) * gy.h) * gy.w];
                const double* xp = &x.data[((static_cast<size_t>(in) * ic + q) * x.h) * x.w];
                for (int i = 0; i < gy.h; ++i) {
                    const int ih0 = i * stride - pad;
                    for (int j = 0; j < gy.w; ++j) {
                        const double g = gyp[static_cast<size_t>(i) * gy.w + j];
                        if (g == 0.0) continue;
                        const int iw0 = j * stride - pad;
                        for (int u = 0; u < kh; ++u) {
                            const int ih = ih0 + u;
                            if (ih < 0 || ih >= x.h) continue;
                            const double* xrow = xp + static_cast<size_t>(ih) * x.w;
                            double* gwrow = gwp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -iw0);
                            int v1 = std::min(kw, x.w - iw0);
                            for (int v = v0; v < v1; ++v)
                                gwrow[v] += g * xrow[iw0 + v];
                        }
                    }
                }
            }
        }
    }
    return gw;
}

std::vector<double> conv2d_grad_bias(const Tensor& gy) {
    std::vector<double> gb(gy.c, 0.0);
    for (int in = 0; in < gy.n; ++in)
        for (int o = 0; o < gy.c; ++o) {
            const double* gyp = &gy.data[((static_cast<size_t>(in) * gy.c + o) * gy.h) * gy.w];
            double acc = 0.0;
            for (size_t k = 0; k < static_cast<size_t>(gy.h) * gy.w; ++k) acc += gyp[k];
            gb[o] += acc;
        }
    return gb;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                        int stride, int pad, int out_pad) {
    const int ic = w.n, oc = w.c, kh = w.h, kw = w.w;
    if (x.c != ic) throw std::invalid_argument("conv_transpose2d: channel mismatch");
    const int oh = (x.h - 1) * stride - 2 * pad + kh + out_pad;
    const int ow = (x.w - 1) * stride - 2 * pad + kw + out_pad;
    Tensor y(x.n, oc, oh, ow);

#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < x.n; ++in) {
        for (int o = 0; o < oc; ++o) {
            double* yp = &y.data[((static_cast<size_t>(in) * oc + o) * oh) * ow];
            if (!bias.empty()) {
                const double b = bias[o];
                for (size_t k = 0; k < static_cast<size_t>(oh) * ow; ++k) yp[k] = b;
            }
            for (int q = 0; q < ic; ++q) {
                const double* xp = &x.data[((static_cast<size_t>(in) * ic + q) * x.h) * x.w];
                const double* wp = &w.data[((static_cast<size_t>(q) * oc + o) * kh) * kw];
                for (int i = 0; i < x.h; ++i) {
                    const int oh0 = i * stride - pad;
                    for (int j = 0; j < x.w; ++j) {
                        const double xv = xp[static_cast<size_t>(i) * x.w + j];
                        if (xv == 0.0) continue;
                        const int ow0 = j * stride - pad;
                        for (int u = 0; u < kh; ++u) {
                            const int oy = oh0 + u;
                            if (oy < 0 || oy >= oh) continue;
                            double* yrow = yp + static_cast<size_t>(oy) * ow;
                            const double* wrow = wp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -ow0);
                            int v1 = std::min(kw, ow - ow0);
                            for (int v = v0; v < v1; ++v)
                                yrow[ow0 + v] += xv * wrow[v];
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor conv_transpose2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int pad) {
    // d/dx of transposed conv = ordinary conv of gy with the same (ic, oc, kh, kw)
    // weights read as correlation from the output side.
    const int ic = w.n, oc = w.c, kh = w.h, kw = w.w;
    const int xh = (gy.h + 2 * pad - kh) / stride + 1;
    const int xw = (gy.w + 2 * pad - kw) / stride + 1;
    Tensor gx(gy.n, ic, xh, xw);
#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < gy.n; ++in) {
        for (int q = 0; q < ic; ++q) {
            double* gxp = &gx.data[((static_cast<size_t>(in) * ic + q) * xh) * xw];
            for (int i = 0; i < xh; ++i) {
                for (int j = 0; j < xw; ++j) {
                    double acc = 0.0;
                    const int oh0 = i * stride - pad;
                    const int ow0 = j * stride - pad;
                    for (int o = 0; o < oc; ++o) {
                        const double* gyp = &gy.data[((static_cast<size_t>(in) * oc + o) * gy.h) * gy.w];
                        const double* wp = &w.data[((static_cast<size_t>(q) * oc + o) * kh) * kw];
                        for (int u = 0; u < kh; ++u) {
                            const int oy = oh0 + u;
                            if (oy < 0 || oy >= gy.h) continue;
                            const double* gyrow = gyp + static_cast<size_t>(oy) * gy.w;
                            const double* wrow = wp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -ow0);
                            int v1 = std::min(kw, gy.w - ow0);
                            for (int v = v0; v < v1; ++v)
                                acc += gyrow[ow0 + v] * wrow[v];
                        }
                    }
                    gxp[static_cast<size_t>(i) * xw + j] = acc;
                }
            }
        }
    }
    return gx;
}

Tensor conv_transpose2d_grad_weight(const Tensor& gy, const Tensor& x, int stride, int pad,
                                    int kh, int kw) {
    const int ic = x.c, oc = gy.c;
    Tensor gw(ic, oc, kh, kw);
#if defined(_OPENMP)
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int q = 0; q < ic; ++q) {
        for (int o = 0; o < oc; ++o) {
            double* gwp = &gw.data[((static_cast<size_t>(q) * oc + o) * kh) * kw];
            for (int in = 0; in < x.n; ++in) {
                const double* xp = &x.data[((static_cast<size_t>(in) * ic + q) * x.h) * x.w];
                const double* gyp = &gy.data[((static_cast<size_t>(in) * oc + o) * gy.h) * gy.w];
                for (int i = 0; i < x.h; ++i) {
                    const int oh0 = i * stride - pad;
                    for (int j = 0; j < x.w; ++j) {
                        const double xv = xp[static_cast<size_t>(i) * x.w + j];
                        if (xv == 0.0) continue;
                        const int ow0 = j * stride - pad;
                        for (int u = 0; u < kh; ++u) {
                            const int oy = oh0 + u;
                            if (oy < 0 || oy >= gy.h) continue;
                            const double* gyrow = gyp + static_cast<size_t>(oy) * gy.w;
                            double* gwrow = gwp + static_cast<size_t>(u) * kw;
                            int v0 = std::max(0, -ow0);
                            int v1 = std::min(kw, gy.w - ow0);
                            for (int v = v0; v < v1; ++v)
                                gwrow[v] += xv * gyrow[ow0 + v];
                        }
                    }
                }
            }
        }
    }
    return gw;
}

Tensor avg_pool2(const Tensor& x) {
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor y(x.n, x.c, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int q = 0; q < x.c; ++q)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j)
                    y.at(in, q, i, j) = 0.25 * (x.at(in, q, 2 * i, 2 * j) + x.at(in, q, 2 * i, 2 * j + 1) +
                                                x.at(in, q, 2 * i + 1, 2 * j) + x.at(in, q, 2 * i + 1, 2 * j + 1));
    return y;
}

Tensor avg_pool2_grad(const Tensor& gy, int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
    for (int in = 0; in < gy.n; ++in)
        for (int q = 0; q < gy.c; ++q)
            for (int i = 0; i < gy.h; ++i)
                for (int j = 0; j < gy.w; ++j) {
                    const double g = 0.25 * gy.at(in, q, i, j);
                    gx.at(in, q, 2 * i, 2 * j) += g;
                    gx.at(in, q, 2 * i, 2 * j + 1) += g;
                    gx.at(in, q, 2 * i + 1, 2 * j) += g;
                    gx.at(in, q, 2 * i + 1, 2 * j + 1) += g;
                }
    return gx;
}

Tensor decimate2(const Tensor& x) {
    const int oh = (x.h + 1) / 2, ow = (x.w + 1) / 2;
    Tensor y(x.n, x.c, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int q = 0; q < x.c; ++q)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j)
                    y.at(in, q, i, j) = x.at(in, q, 2 * i, 2 * j);
    return y;
}

Tensor decimate2_grad(const Tensor& gy, int in_h, int in_w) {
    Tensor gx(gy.n, gy.c, in_h, in_w);
    for (int in = 0; in < gy.n; ++in)
        for (int q = 0; q < gy.c; ++q)
            for (int i = 0; i < gy.h; ++i)
                for (int j = 0; j < gy.w; ++j)
                    gx.at(in, q, 2 * i, 2 * j) = gy.at(in, q, i, j);
    return gx;
}

Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right) {
    const int oh = x.h + top + bottom, ow = x.w + left + right;
    if (top >= x.h || bottom >= x.h || left >= x.w || right >= x.w)
        throw std::invalid_argument("pad_reflect: padding exceeds image size");
    Tensor y(x.n, x.c, oh, ow);
    auto reflect = [](int i, int nvalid) {
        if (i < 0) i = -i;
        if (i >= nvalid) i = 2 * nvalid - 2 - i;
        return i;
    };
    for (int in = 0; in < x.n; ++in)
        for (int q = 0; q < x.c; ++q)
            for (int i = 0; i < oh; ++i) {
                const int si = reflect(i - top, x.h);
                for (int j = 0; j < ow; ++j)
                    y.at(in, q, i, j) = x.at(in, q, si, reflect(j - left, x.w));
            }
    return y;
}

Tensor crop(const Tensor& x, int top, int left, int out_h, int out_w) {
    if (top + out_h > x.h || left + out_w > x.w)
        throw std::invalid_argument("crop: window out of range");
    Tensor y(x.n, x.c, out_h, out_w);
    for (int in = 0; in < x.n; ++in)
        for (int q = 0; q < x.c; ++q)
            for (int i = 0; i < out_h; ++i)
                for (int j = 0; j < out_w; ++j)
                    y.at(in, q, i, j) = x.at(in, q, top + i, left + j);
    return y;
}

} // namespace negtune
