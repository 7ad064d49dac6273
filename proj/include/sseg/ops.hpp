#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "sseg/tensor.hpp"

namespace sseg {

enum class Activation { None, Relu };

struct ConvSpec {
    int kernel_h = 1;
    int kernel_w = 1;
    int stride_h = 1;
    int stride_w = 1;
    int pad_h = 0;
    int pad_w = 0;
    Activation activation = Activation::None;
};

inline int conv_out_extent(int in, int pad, int kernel, int stride) {
    int out = (in + 2 * pad - kernel) / stride + 1;
    SSEG_CHECK(out >= 1, "conv output extent < 1");
    return out;
}

// Cross-correlation with zero padding over an [H,W,Cin] input.
// weights: [kh,kw,Cin,Cout], bias: [Cout].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& in, const TensorT<T>& w,
                  const TensorT<T>& b, const ConvSpec& s) {
    SSEG_CHECK(in.rank() == 3 && w.rank() == 4, "conv2d: bad ranks");
    SSEG_CHECK(w.dims[0] == s.kernel_h && w.dims[1] == s.kernel_w,
               "conv2d: weight dims do not match spec");
    SSEG_CHECK(w.dims[2] == in.dims[2], "conv2d: channel mismatch");
    SSEG_CHECK(b.rank() == 1 && b.dims[0] == w.dims[3],
               "conv2d: bias mismatch");
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = conv_out_extent(H, s.pad_h, s.kernel_h, s.stride_h);
    const int Wo = conv_out_extent(W, s.pad_w, s.kernel_w, s.stride_w);

    TensorT<T> out({Ho, Wo, Co});
    const T* ind = in.data.data();
    const T* wd = w.data.data();
    T* od = out.data.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo) {
            T* cell = od + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
            for (int co = 0; co < Co; ++co) cell[co] = b.data[co];
            for (int ky = 0; ky < s.kernel_h; ++ky) {
                int hi = ho * s.stride_h - s.pad_h + ky;
                if (hi < 0 || hi >= H) continue;
                for (int kx = 0; kx < s.kernel_w; ++kx) {
                    int wi = wo * s.stride_w - s.pad_w + kx;
                    if (wi < 0 || wi >= W) continue;
                    const T* px =
                        ind + (static_cast<std::size_t>(hi) * W + wi) * Ci;
                    const T* wk =
                        wd + ((static_cast<std::size_t>(ky) * s.kernel_w + kx) *
                              Ci) *
                                 Co;
                    for (int ci = 0; ci < Ci; ++ci) {
                        T v = px[ci];
                        if (v == T(0)) continue;
                        const T* wrow = wk + static_cast<std::size_t>(ci) * Co;
                        for (int co = 0; co < Co; ++co)
                            cell[co] += v * wrow[co];
                    }
                }
            }
            if (s.activation == Activation::Relu)
                for (int co = 0; co < Co; ++co)
                    if (cell[co] < T(0)) cell[co] = T(0);
        }
    }
    out.check_finite("conv2d output");
    return out;
}

// Accumulates into in.grad / w.grad / b.grad (those buffers must exist on
// whichever tensors need gradients). grad_out is d(loss)/d(out); `out` is
// the forward result, needed to mask relu.
template <typename T>
void conv2d_backward(TensorT<T>& in, TensorT<T>& w, TensorT<T>& b,
                     const ConvSpec& s, const TensorT<T>& out,
                     const TensorT<T>& grad_out) {
    SSEG_CHECK(grad_out.dims == out.dims, "conv2d_backward: grad shape");
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = out.dims[0], Wo = out.dims[1];

    // relu gate applied once
    TensorT<T> g = grad_out;
    if (s.activation == Activation::Relu) {
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (out.data[i] <= T(0)) g.data[i] = T(0);
    }
    const T* gd = g.data.data();
    const T* ind = in.data.data();
    const T* wd = w.data.data();

    if (in.has_grad()) {
        T* dg = in.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int hi = 0; hi < H; ++hi) {
            for (int wi = 0; wi < W; ++wi) {
                T* dst = dg + (static_cast<std::size_t>(hi) * W + wi) * Ci;
                for (int ky = 0; ky < s.kernel_h; ++ky) {
                    int hn = hi + s.pad_h - ky;
                    if (hn < 0 || hn % s.stride_h != 0) continue;
                    int ho = hn / s.stride_h;
                    if (ho >= Ho) continue;
                    for (int kx = 0; kx < s.kernel_w; ++kx) {
                        int wn = wi + s.pad_w - kx;
                        if (wn < 0 || wn % s.stride_w != 0) continue;
                        int wo = wn / s.stride_w;
                        if (wo >= Wo) continue;
                        const T* gcell =
                            gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                        const T* wk =
                            wd +
                            ((static_cast<std::size_t>(ky) * s.kernel_w + kx) *
                             Ci) *
                                Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            const T* wrow =
                                wk + static_cast<std::size_t>(ci) * Co;
                            T acc = T(0);
                            for (int co = 0; co < Co; ++co)
                                acc += gcell[co] * wrow[co];
                            dst[ci] += acc;
                        }
                    }
                }
            }
        }
    }

    if (w.has_grad()) {
        T* dw = w.grad.data();
        const int kn = s.kernel_h * s.kernel_w;
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 0; k < kn; ++k) {
            for (int ci = 0; ci < Ci; ++ci) {
                int ky = k / s.kernel_w, kx = k % s.kernel_w;
                T* dst = dw + (static_cast<std::size_t>(k) * Ci + ci) * Co;
                for (int ho = 0; ho < Ho; ++ho) {
                    int hi = ho * s.stride_h - s.pad_h + ky;
                    if (hi < 0 || hi >= H) continue;
                    for (int wo = 0; wo < Wo; ++wo) {
                        int wi = wo * s.stride_w - s.pad_w + kx;
                        if (wi < 0 || wi >= W) continue;
                        T v = ind[(static_cast<std::size_t>(hi) * W + wi) * Ci +
                                  ci];
                        if (v == T(0)) continue;
                        const T* gcell =
                            gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                        for (int co = 0; co < Co; ++co)
                            dst[co] += v * gcell[co];
                    }
                }
            }
        }
    }

    if (b.has_grad()) {
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo) {
                const T* gcell =
                    gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                for (int co = 0; co < Co; ++co) b.grad[co] += gcell[co];
            }
    }
}

// Transposed convolution. Output extents: (in-1)*stride - 2*pad + kernel.
// With the 1x4 kernel, stride (1,2), width pad 1, this doubles the width
// exactly. Adjoint of conv2d with the same geometry and channel-swapped
// weights.
template <typename T>
TensorT<T> deconv2d(const TensorT<T>& in, const TensorT<T>& w,
                    const TensorT<T>& b, const ConvSpec& s) {
    SSEG_CHECK(in.rank() == 3 && w.rank() == 4, "deconv2d: bad ranks");
    SSEG_CHECK(w.dims[0] == s.kernel_h && w.dims[1] == s.kernel_w,
               "deconv2d: weight dims do not match spec");
    SSEG_CHECK(w.dims[2] == in.dims[2], "deconv2d: channel mismatch");
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = (H - 1) * s.stride_h - 2 * s.pad_h + s.kernel_h;
    const int Wo = (W - 1) * s.stride_w - 2 * s.pad_w + s.kernel_w;
    SSEG_CHECK(Ho >= 1 && Wo >= 1, "deconv2d: output extent < 1");
    SSEG_CHECK(b.rank() == 1 && b.dims[0] == Co, "deconv2d: bias mismatch");

    TensorT<T> out({Ho, Wo, Co});
    const T* ind = in.data.data();
    const T* wd = w.data.data();
    T* od = out.data.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo) {
            T* cell = od + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
            for (int co = 0; co < Co; ++co) cell[co] = b.data[co];
            for (int ky = 0; ky < s.kernel_h; ++ky) {
                int hn = ho + s.pad_h - ky;
                if (hn < 0 || hn % s.stride_h != 0) continue;
                int hi = hn / s.stride_h;
                if (hi >= H) continue;
                for (int kx = 0; kx < s.kernel_w; ++kx) {
                    int wn = wo + s.pad_w - kx;
                    if (wn < 0 || wn % s.stride_w != 0) continue;
                    int wi = wn / s.stride_w;
                    if (wi >= W) continue;
                    const T* px =
                        ind + (static_cast<std::size_t>(hi) * W + wi) * Ci;
                    const T* wk =
                        wd + ((static_cast<std::size_t>(ky) * s.kernel_w + kx) *
                              Ci) *
                                 Co;
                    for (int ci = 0; ci < Ci; ++ci) {
                        T v = px[ci];
                        if (v == T(0)) continue;
                        const T* wrow = wk + static_cast<std::size_t>(ci) * Co;
                        for (int co = 0; co < Co; ++co)
                            cell[co] += v * wrow[co];
                    }
                }
            }
            if (s.activation == Activation::Relu)
                for (int co = 0; co < Co; ++co)
                    if (cell[co] < T(0)) cell[co] = T(0);
        }
    }
    out.check_finite("deconv2d output");
    return out;
}

// The 1x4 / stride-2 width upsampler the decoder uses.
template <typename T>
TensorT<T> deconv2d_width(const TensorT<T>& in, const TensorT<T>& w,
                          const TensorT<T>& b,
                          Activation act = Activation::None) {
    ConvSpec s;
    s.kernel_h = 1;
    s.kernel_w = 4;
    s.stride_h = 1;
    s.stride_w = 2;
    s.pad_h = 0;
    s.pad_w = 1;
    s.activation = act;
    return deconv2d(in, w, b, s);
}

inline ConvSpec deconv_width_spec(Activation act = Activation::None) {
    ConvSpec s;
    s.kernel_h = 1;
    s.kernel_w = 4;
    s.stride_h = 1;
    s.stride_w = 2;
    s.pad_h = 0;
    s.pad_w = 1;
    s.activation = act;
    return s;
}

template <typename T>
void deconv2d_backward(TensorT<T>& in, TensorT<T>& w, TensorT<T>& b,
                       const ConvSpec& s, const TensorT<T>& out,
                       const TensorT<T>& grad_out) {
    SSEG_CHECK(grad_out.dims == out.dims, "deconv2d_backward: grad shape");
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = out.dims[0], Wo = out.dims[1];

    TensorT<T> g = grad_out;
    if (s.activation == Activation::Relu) {
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (out.data[i] <= T(0)) g.data[i] = T(0);
    }
    const T* gd = g.data.data();
    const T* ind = in.data.data();
    const T* wd = w.data.data();

    if (in.has_grad()) {
        T* dg = in.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int hi = 0; hi < H; ++hi) {
            for (int wi = 0; wi < W; ++wi) {
                T* dst = dg + (static_cast<std::size_t>(hi) * W + wi) * Ci;
                for (int ky = 0; ky < s.kernel_h; ++ky) {
                    int ho = hi * s.stride_h - s.pad_h + ky;
                    if (ho < 0 || ho >= Ho) continue;
                    for (int kx = 0; kx < s.kernel_w; ++kx) {
                        int wo = wi * s.stride_w - s.pad_w + kx;
                        if (wo < 0 || wo >= Wo) continue;
                        const T* gcell =
                            gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                        const T* wk =
                            wd +
                            ((static_cast<std::size_t>(ky) * s.kernel_w + kx) *
                             Ci) *
                                Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            const T* wrow =
                                wk + static_cast<std::size_t>(ci) * Co;
                            T acc = T(0);
                            for (int co = 0; co < Co; ++co)
                                acc += gcell[co] * wrow[co];
                            dst[ci] += acc;
                        }
                    }
                }
            }
        }
    }

    if (w.has_grad()) {
        T* dw = w.grad.data();
        const int kn = s.kernel_h * s.kernel_w;
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 0; k < kn; ++k) {
            for (int ci = 0; ci < Ci; ++ci) {
                int ky = k / s.kernel_w, kx = k % s.kernel_w;
                T* dst = dw + (static_cast<std::size_t>(k) * Ci + ci) * Co;
                for (int hi = 0; hi < H; ++hi) {
                    int ho = hi * s.stride_h - s.pad_h + ky;
                    if (ho < 0 || ho >= Ho) continue;
                    for (int wi = 0; wi < W; ++wi) {
                        int wo = wi * s.stride_w - s.pad_w + kx;
                        if (wo < 0 || wo >= Wo) continue;
                        T v = ind[(static_cast<std::size_t>(hi) * W + wi) * Ci +
                                  ci];
                        if (v == T(0)) continue;
                        const T* gcell =
                            gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                        for (int co = 0; co < Co; ++co)
                            dst[co] += v * gcell[co];
                    }
                }
            }
        }
    }

    if (b.has_grad()) {
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo) {
                const T* gcell =
                    gd + (static_cast<std::size_t>(ho) * Wo + wo) * Co;
                for (int co = 0; co < Co; ++co) b.grad[co] += gcell[co];
            }
    }
}

// Width-only max pooling. argmax (flat column index per output element)
// is recorded for the backward pass; ties go to the lowest index.
template <typename T>
TensorT<T> maxpool_width(const TensorT<T>& in, int window_w, int stride_w,
                         std::vector<int>* argmax = nullptr) {
    SSEG_CHECK(in.rank() == 3, "maxpool_width: rank 3 input expected");
    SSEG_CHECK(window_w >= 1 && stride_w >= 1, "maxpool_width: bad window");
    const int H = in.dims[0], W = in.dims[1], C = in.dims[2];
    SSEG_CHECK(window_w <= W, "maxpool_width: window larger than width");
    const int Wo = (W - window_w) / stride_w + 1;

    TensorT<T> out({H, Wo, C});
    if (argmax) argmax->assign(out.numel(), 0);

#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h) {
        for (int wo = 0; wo < Wo; ++wo) {
            for (int c = 0; c < C; ++c) {
                int w0 = wo * stride_w;
                T best = in.at(h, w0, c);
                int besti = w0;
                for (int k = 1; k < window_w; ++k) {
                    T v = in.at(h, w0 + k, c);
                    if (v > best) {
                        best = v;
                        besti = w0 + k;
                    }
                }
                out.at(h, wo, c) = best;
                if (argmax) (*argmax)[out.idx(h, wo, c)] = besti;
            }
        }
    }
    return out;
}

template <typename T>
void maxpool_width_backward(TensorT<T>& in, const TensorT<T>& out,
                            const std::vector<int>& argmax,
                            const TensorT<T>& grad_out) {
    SSEG_CHECK(in.has_grad(), "maxpool_width_backward: input grad missing");
    const int H = out.dims[0], Wo = out.dims[1], C = out.dims[2];
    for (int h = 0; h < H; ++h)
        for (int wo = 0; wo < Wo; ++wo)
            for (int c = 0; c < C; ++c)
                in.grad[in.idx(h, argmax[out.idx(h, wo, c)], c)] +=
                    grad_out.at(h, wo, c);
}

// Per-cell channel softmax with max subtraction.
template <typename T>
TensorT<T> softmax_channels(const TensorT<T>& in) {
    SSEG_CHECK(in.rank() == 3, "softmax_channels: rank 3 expected");
    in.check_finite("softmax input");
    const int H = in.dims[0], W = in.dims[1], K = in.dims[2];
    TensorT<T> out(in.dims);

#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
            const T* z = in.data.data() + in.idx(h, w, 0);
            T* q = out.data.data() + out.idx(h, w, 0);
            T m = z[0];
            for (int k = 1; k < K; ++k) m = std::max(m, z[k]);
            T sum = T(0);
            for (int k = 0; k < K; ++k) {
                q[k] = std::exp(z[k] - m);
                sum += q[k];
            }
            for (int k = 0; k < K; ++k) q[k] /= sum;
        }
    }
    return out;
}

// dL/dz given q = softmax(z) and dL/dq.
template <typename T>
void softmax_channels_backward(const TensorT<T>& q, const TensorT<T>& grad_q,
                               TensorT<T>& grad_z) {
    const int H = q.dims[0], W = q.dims[1], K = q.dims[2];
#pragma omp parallel for collapse(2) schedule(static)
    for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
            const T* qv = q.data.data() + q.idx(h, w, 0);
            const T* gq = grad_q.data.data() + q.idx(h, w, 0);
            T* gz = grad_z.data.data() + q.idx(h, w, 0);
            T dot = T(0);
            for (int k = 0; k < K; ++k) dot += qv[k] * gq[k];
            for (int k = 0; k < K; ++k) gz[k] += qv[k] * (gq[k] - dot);
        }
    }
}

template <typename T>
void sgd_step(const std::vector<TensorT<T>*>& params, T lr) {
    for (auto* p : params)
        SSEG_CHECK(p->has_grad(), "sgd_step: parameter without gradient");
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->data.size(); ++i)
            p->data[i] -= lr * p->grad[i];
        p->zero_grad();
    }
}

}  // namespace sseg
