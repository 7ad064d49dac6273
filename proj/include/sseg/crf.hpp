#pragma once

#include <cmath>
#include <vector>

#include "sseg/ops.hpp"
#include "sseg/projection.hpp"
#include "sseg/tensor.hpp"

namespace sseg {

// Mean-field CRF over the spherical grid. Two Gaussian kernels inside a
// fixed 3x5 window; the compatibility transform is a learned KxK matrix,
// Potts (identity minus all-ones) at initialization.
template <typename T>
struct CrfParamsT {
    T w1 = T(1.0);
    T w2 = T(0.3);
    T sigma_alpha = T(3.0);  // angular bins
    T sigma_beta = T(0.5);   // meters
    T sigma_gamma = T(1.5);  // angular bins
    int iterations = 3;
    TensorT<T> compat;  // [K,K]

    static constexpr int window_h = 3;
    static constexpr int window_w = 5;

    static CrfParamsT make_default(int num_classes) {
        CrfParamsT p;
        p.compat = TensorT<T>({num_classes, num_classes});
        for (int a = 0; a < num_classes; ++a)
            for (int b = 0; b < num_classes; ++b)
                p.compat.at(a, b) = (a == b) ? T(0) : T(-1);
        return p;
    }

    void validate() const {
        SSEG_CHECK(sigma_alpha > T(0) && sigma_beta > T(0) &&
                       sigma_gamma > T(0),
                   "crf: bandwidths must be positive");
        SSEG_CHECK(iterations >= 1, "crf: iterations must be >= 1");
        SSEG_CHECK(compat.rank() == 2 && compat.dims[0] == compat.dims[1],
                   "crf: compat must be square");
    }
};

using CrfParams = CrfParamsT<float>;

constexpr int kCrfWindowSize = 15;  // 3x5, center slot kept but zeroed

inline int crf_offset_index(int dr, int dc) {
    return (dr + 1) * 5 + (dc + 2);
}

// Precomputed kernel values toward each window neighbor of each cell.
// Zero toward unoccupied or out-of-range neighbors and at the center.
template <typename T>
struct KernelFieldT {
    int rows = 0, cols = 0;
    std::vector<T> k1, k2;  // rows*cols*15

    T kval1(int r, int c, int o) const {
        return k1[(static_cast<std::size_t>(r) * cols + c) * kCrfWindowSize +
                  o];
    }
    T kval2(int r, int c, int o) const {
        return k2[(static_cast<std::size_t>(r) * cols + c) * kCrfWindowSize +
                  o];
    }
};

using KernelField = KernelFieldT<float>;

template <typename T>
KernelFieldT<T> build_kernels(const SphericalGrid& grid,
                              const CrfParamsT<T>& params) {
    params.validate();
    const int H = grid.config.rows, W = grid.config.cols;
    KernelFieldT<T> field;
    field.rows = H;
    field.cols = W;
    field.k1.assign(static_cast<std::size_t>(H) * W * kCrfWindowSize, T(0));
    field.k2.assign(field.k1.size(), T(0));

    const double inv2a = 1.0 / (2.0 * double(params.sigma_alpha) *
                                double(params.sigma_alpha));
    const double inv2b =
        1.0 / (2.0 * double(params.sigma_beta) * double(params.sigma_beta));
    const double inv2g = 1.0 / (2.0 * double(params.sigma_gamma) *
                                double(params.sigma_gamma));

#pragma omp parallel for collapse(2) schedule(static)
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            if (!grid.occupied(r, c)) continue;
            double xi = grid.features.at(r, c, 0);
            double yi = grid.features.at(r, c, 1);
            double zi = grid.features.at(r, c, 2);
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -2; dc <= 2; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                    if (!grid.occupied(rr, cc)) continue;
                    double dp2 = double(dr) * dr + double(dc) * dc;
                    double dx = xi - grid.features.at(rr, cc, 0);
                    double dy = yi - grid.features.at(rr, cc, 1);
                    double dz = zi - grid.features.at(rr, cc, 2);
                    double dx2 = dx * dx + dy * dy + dz * dz;
                    std::size_t base =
                        (static_cast<std::size_t>(r) * W + c) * kCrfWindowSize +
                        crf_offset_index(dr, dc);
                    field.k1[base] =
                        static_cast<T>(std::exp(-dp2 * inv2a - dx2 * inv2b));
                    field.k2[base] = static_cast<T>(std::exp(-dp2 * inv2g));
                }
            }
        }
    }
    return field;
}

// Locally connected filtering of the probability map:
//   out_i[k] = sum_{j != i in window} (a*k1_ij + b*k2_ij) * probs_j[k]
// Unoccupied cells emit and receive nothing.
template <typename T>
TensorT<T> message_pass(const TensorT<T>& probs, const KernelFieldT<T>& field,
                        const std::vector<std::uint8_t>& mask, T a, T b) {
    const int H = probs.dims[0], W = probs.dims[1], K = probs.dims[2];
    SSEG_CHECK(field.rows == H && field.cols == W,
               "message_pass: kernel field shape mismatch");
    TensorT<T> out({H, W, K});

#pragma omp parallel for collapse(2) schedule(static)
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            if (!mask[static_cast<std::size_t>(r) * W + c]) continue;
            T* dst = out.data.data() + out.idx(r, c, 0);
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -2; dc <= 2; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                    int o = crf_offset_index(dr, dc);
                    T kv = a * field.kval1(r, c, o) + b * field.kval2(r, c, o);
                    if (kv == T(0)) continue;
                    const T* src = probs.data.data() + probs.idx(rr, cc, 0);
                    for (int k = 0; k < K; ++k) dst[k] += kv * src[k];
                }
            }
        }
    }
    return out;
}

template <typename T>
struct CrfActs {
    std::vector<TensorT<T>> q;  // q[0] = softmax(logits), then per iteration
    std::vector<TensorT<T>> m;  // messages per iteration
};

namespace detail {

// Per-cell softmax restricted to occupied cells; unoccupied stay zero.
template <typename T>
TensorT<T> masked_softmax(const TensorT<T>& z,
                          const std::vector<std::uint8_t>& mask) {
    TensorT<T> q = softmax_channels(z);
    const int H = z.dims[0], W = z.dims[1], K = z.dims[2];
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            if (!mask[static_cast<std::size_t>(r) * W + c])
                for (int k = 0; k < K; ++k) q.at(r, c, k) = T(0);
    return q;
}

template <typename T>
TensorT<T> apply_compat(const TensorT<T>& m, const TensorT<T>& compat) {
    const int H = m.dims[0], W = m.dims[1], K = m.dims[2];
    TensorT<T> out({H, W, K});
#pragma omp parallel for collapse(2) schedule(static)
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const T* mv = m.data.data() + m.idx(r, c, 0);
            T* ov = out.data.data() + out.idx(r, c, 0);
            for (int a = 0; a < K; ++a) {
                T acc = T(0);
                for (int b = 0; b < K; ++b) acc += compat.at(a, b) * mv[b];
                ov[a] = acc;
            }
        }
    return out;
}

}  // namespace detail

// Recurrent mean-field refinement. Each iteration filters the current
// probability map, applies the compatibility transform and re-normalizes
// against the fixed unary logits. Weights are shared across iterations.
template <typename T>
TensorT<T> refine(const TensorT<T>& logits, const SphericalGrid& grid,
                  const CrfParamsT<T>& params,
                  const KernelFieldT<T>* prebuilt = nullptr,
                  CrfActs<T>* acts = nullptr) {
    params.validate();
    SSEG_CHECK(logits.dims[0] == grid.config.rows &&
                   logits.dims[1] == grid.config.cols,
               "refine: logits/grid shape mismatch");
    KernelFieldT<T> local;
    const KernelFieldT<T>* field = prebuilt;
    if (!field) {
        local = build_kernels(grid, params);
        field = &local;
    }

    TensorT<T> q = detail::masked_softmax(logits, grid.mask);
    if (acts) {
        acts->q.clear();
        acts->m.clear();
        acts->q.push_back(q);
    }
    for (int it = 0; it < params.iterations; ++it) {
        TensorT<T> m =
            message_pass(q, *field, grid.mask, params.w1, params.w2);
        TensorT<T> r = detail::apply_compat(m, params.compat);
        TensorT<T> z = logits;
        for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] += r.data[i];
        q = detail::masked_softmax(z, grid.mask);
        if (acts) {
            acts->m.push_back(std::move(m));
            acts->q.push_back(q);
        }
    }
    return q;
}

// Backward through refine. Accumulates into grad_logits, grad_compat,
// grad_w1, grad_w2 (any may be null). Kernels are treated as constants.
template <typename T>
void refine_backward(const TensorT<T>& logits, const SphericalGrid& grid,
                     const CrfParamsT<T>& params, const KernelFieldT<T>& field,
                     const CrfActs<T>& acts, const TensorT<T>& grad_q_final,
                     TensorT<T>* grad_logits, TensorT<T>* grad_compat,
                     T* grad_w1, T* grad_w2) {
    const int H = logits.dims[0], W = logits.dims[1], K = logits.dims[2];
    const int iters = params.iterations;
    SSEG_CHECK(static_cast<int>(acts.q.size()) == iters + 1,
               "refine_backward: activations missing");

    TensorT<T> gq = grad_q_final;
    TensorT<T> gl({H, W, K});
    for (int it = iters - 1; it >= 0; --it) {
        // q_{it+1} = masked_softmax(logits + compat * m_it)
        TensorT<T> gz({H, W, K});
        softmax_channels_backward(acts.q[it + 1], gq, gz);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c)
                if (!grid.mask[static_cast<std::size_t>(r) * W + c])
                    for (int k = 0; k < K; ++k) gz.at(r, c, k) = T(0);
        for (std::size_t i = 0; i < gl.data.size(); ++i)
            gl.data[i] += gz.data[i];

        // r = compat * m  =>  dm = compat^T * gz; dcompat += gz m^T
        const TensorT<T>& m = acts.m[it];
        TensorT<T> gm({H, W, K});
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                for (int a = 0; a < K; ++a) {
                    T g = gz.at(r, c, a);
                    if (g == T(0)) continue;
                    for (int b = 0; b < K; ++b) {
                        gm.at(r, c, b) += params.compat.at(a, b) * g;
                        if (grad_compat)
                            grad_compat->at(a, b) += g * m.at(r, c, b);
                    }
                }
            }

        // m = message_pass(q_it) with symmetric kernels: dq = message(gm)
        const TensorT<T>& q_prev = acts.q[it];
        if (grad_w1 || grad_w2) {
            TensorT<T> m1 =
                message_pass(q_prev, field, grid.mask, T(1), T(0));
            TensorT<T> m2 =
                message_pass(q_prev, field, grid.mask, T(0), T(1));
            for (std::size_t i = 0; i < gm.data.size(); ++i) {
                if (grad_w1) *grad_w1 += gm.data[i] * m1.data[i];
                if (grad_w2) *grad_w2 += gm.data[i] * m2.data[i];
            }
        }
        gq = message_pass(gm, field, grid.mask, params.w1, params.w2);
    }
    // initial q0 = masked_softmax(logits)
    TensorT<T> gz({H, W, K});
    softmax_channels_backward(acts.q[0], gq, gz);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            if (!grid.mask[static_cast<std::size_t>(r) * W + c])
                for (int k = 0; k < K; ++k) gz.at(r, c, k) = T(0);
    for (std::size_t i = 0; i < gl.data.size(); ++i) gl.data[i] += gz.data[i];

    if (grad_logits)
        for (std::size_t i = 0; i < gl.data.size(); ++i)
            grad_logits->data[i] += gl.data[i];
}

// Eq-style energy of a label assignment: unary -log P plus Potts pairwise
// terms, each unordered pair counted once. `clamped` reports whether any
// assigned label had (near-)zero probability.
template <typename T>
double energy(const LabelGrid& labels, const TensorT<T>& logits,
              const SphericalGrid& grid, const CrfParamsT<T>& params,
              bool* clamped = nullptr) {
    const int H = logits.dims[0], W = logits.dims[1];
    SSEG_CHECK(labels.rows == H && labels.cols == W,
               "energy: label shape mismatch");
    KernelFieldT<T> field = build_kernels(grid, params);
    TensorT<T> probs = detail::masked_softmax(logits, grid.mask);
    if (clamped) *clamped = false;

    double e = 0.0;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            if (!labels.occupied(r, c)) continue;
            double p = probs.at(r, c, labels.cls(r, c));
            if (p < 1e-12) {
                p = 1e-12;
                if (clamped) *clamped = true;
            }
            e += -std::log(p);
            // forward half of the window only, so each pair counts once
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -2; dc <= 2; ++dc) {
                    if (dr < 0 || (dr == 0 && dc <= 0)) continue;
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                    if (!labels.occupied(rr, cc)) continue;
                    if (labels.cls(r, c) == labels.cls(rr, cc)) continue;
                    int o = crf_offset_index(dr, dc);
                    e += double(params.w1) * field.kval1(r, c, o) +
                         double(params.w2) * field.kval2(r, c, o);
                }
        }
    return e;
}

}  // namespace sseg
