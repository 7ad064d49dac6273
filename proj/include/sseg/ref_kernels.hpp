#pragma once

// Serial naive-loop reference kernels. Written independently of the
// parallel implementations in ops.hpp; used by the tests as oracles and
// by bench_kernels as the serial baseline. Keep these dumb.

#include "sseg/ops.hpp"
#include "sseg/tensor.hpp"

namespace sseg::ref {

template <typename T>
TensorT<T> conv2d(const TensorT<T>& in, const TensorT<T>& w,
                  const TensorT<T>& b, const ConvSpec& s) {
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = (H + 2 * s.pad_h - s.kernel_h) / s.stride_h + 1;
    const int Wo = (W + 2 * s.pad_w - s.kernel_w) / s.stride_w + 1;
    TensorT<T> out({Ho, Wo, Co});
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int co = 0; co < Co; ++co) {
                T acc = b.data[co];
                for (int ky = 0; ky < s.kernel_h; ++ky)
                    for (int kx = 0; kx < s.kernel_w; ++kx)
                        for (int ci = 0; ci < Ci; ++ci) {
                            int hi = ho * s.stride_h - s.pad_h + ky;
                            int wi = wo * s.stride_w - s.pad_w + kx;
                            if (hi < 0 || hi >= H || wi < 0 || wi >= W)
                                continue;
                            acc += in.at(hi, wi, ci) * w.at(ky, kx, ci, co);
                        }
                if (s.activation == Activation::Relu && acc < T(0)) acc = T(0);
                out.at(ho, wo, co) = acc;
            }
    return out;
}

// Scatter form: every input element is spread into the output.
template <typename T>
TensorT<T> deconv2d(const TensorT<T>& in, const TensorT<T>& w,
                    const TensorT<T>& b, const ConvSpec& s) {
    const int H = in.dims[0], W = in.dims[1], Ci = in.dims[2];
    const int Co = w.dims[3];
    const int Ho = (H - 1) * s.stride_h - 2 * s.pad_h + s.kernel_h;
    const int Wo = (W - 1) * s.stride_w - 2 * s.pad_w + s.kernel_w;
    TensorT<T> out({Ho, Wo, Co});
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int co = 0; co < Co; ++co) out.at(ho, wo, co) = b.data[co];
    for (int hi = 0; hi < H; ++hi)
        for (int wi = 0; wi < W; ++wi)
            for (int ci = 0; ci < Ci; ++ci)
                for (int ky = 0; ky < s.kernel_h; ++ky)
                    for (int kx = 0; kx < s.kernel_w; ++kx) {
                        int ho = hi * s.stride_h - s.pad_h + ky;
                        int wo = wi * s.stride_w - s.pad_w + kx;
                        if (ho < 0 || ho >= Ho || wo < 0 || wo >= Wo) continue;
                        for (int co = 0; co < Co; ++co)
                            out.at(ho, wo, co) +=
                                in.at(hi, wi, ci) * w.at(ky, kx, ci, co);
                    }
    if (s.activation == Activation::Relu)
        for (auto& v : out.data)
            if (v < T(0)) v = T(0);
    return out;
}

template <typename T>
TensorT<T> maxpool_width(const TensorT<T>& in, int window_w, int stride_w) {
    const int H = in.dims[0], W = in.dims[1], C = in.dims[2];
    const int Wo = (W - window_w) / stride_w + 1;
    TensorT<T> out({H, Wo, C});
    for (int h = 0; h < H; ++h)
        for (int wo = 0; wo < Wo; ++wo)
            for (int c = 0; c < C; ++c) {
                T best = in.at(h, wo * stride_w, c);
                for (int k = 1; k < window_w; ++k)
                    best = std::max(best, in.at(h, wo * stride_w + k, c));
                out.at(h, wo, c) = best;
            }
    return out;
}

template <typename T>
TensorT<T> softmax_channels(const TensorT<T>& in) {
    const int H = in.dims[0], W = in.dims[1], K = in.dims[2];
    TensorT<T> out(in.dims);
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            T m = in.at(h, w, 0);
            for (int k = 1; k < K; ++k) m = std::max(m, in.at(h, w, k));
            T sum = T(0);
            for (int k = 0; k < K; ++k) sum += std::exp(in.at(h, w, k) - m);
            for (int k = 0; k < K; ++k)
                out.at(h, w, k) = std::exp(in.at(h, w, k) - m) / sum;
        }
    return out;
}

}  // namespace sseg::ref
