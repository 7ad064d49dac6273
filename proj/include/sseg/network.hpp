#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "sseg/ops.hpp"
#include "sseg/projection.hpp"
#include "sseg/tensor.hpp"

namespace sseg {

enum class Profile { Toy, PaperLike };

struct ProfileWidths {
    int stem;        // conv1a / conv1b output channels
    int stage1;      // first fire pair
    int stage2;
    int stage3;
};

inline ProfileWidths profile_widths(Profile p) {
    if (p == Profile::Toy) return {8, 16, 32, 64};
    return {64, 128, 256, 512};
}

// Total width downsampling: stem stride 2 plus three width pools.
constexpr int kWidthDivisor = 16;

struct LayerCount {
    std::string name;
    long long weights;     // ex-bias
    long long multiplies;  // for a given H, W
};

template <typename T>
struct ConvLayer {
    TensorT<T> w, b;
    ConvSpec spec;

    void init(int kh, int kw, int cin, int cout, ConvSpec s,
              std::mt19937& rng) {
        spec = s;
        spec.kernel_h = kh;
        spec.kernel_w = kw;
        w = TensorT<T>({kh, kw, cin, cout});
        b = TensorT<T>({cout});
        double bound = 1.0 / std::sqrt(double(kh) * kw * cin);
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (auto& v : w.data) v = static_cast<T>(uni(rng));
    }
    long long weight_count() const {
        return static_cast<long long>(w.numel());
    }
};

template <typename T>
struct FireLayer {
    ConvLayer<T> squeeze, expand1, expand3;

    void init(int cin, int cout, std::mt19937& rng) {
        SSEG_CHECK(cout % 4 == 0, "fire: output channels not divisible by 4");
        ConvSpec s1;  // 1x1
        s1.activation = Activation::Relu;
        ConvSpec s3;
        s3.kernel_h = s3.kernel_w = 3;
        s3.pad_h = s3.pad_w = 1;
        s3.activation = Activation::Relu;
        squeeze.init(1, 1, cin, cout / 4, s1, rng);
        expand1.init(1, 1, cout / 4, cout / 2, s1, rng);
        expand3.init(3, 3, cout / 4, cout / 2, s3, rng);
    }
    long long weight_count() const {
        return squeeze.weight_count() + expand1.weight_count() +
               expand3.weight_count();
    }
};

template <typename T>
struct FireDeconvLayer {
    ConvLayer<T> squeeze, expand1, expand3;
    TensorT<T> deconv_w, deconv_b;
    ConvSpec deconv_spec;

    void init(int cin, int cout, std::mt19937& rng) {
        SSEG_CHECK(cout % 4 == 0,
                   "fireDeconv: output channels not divisible by 4");
        ConvSpec s1;
        s1.activation = Activation::Relu;
        squeeze.init(1, 1, cin, cout / 4, s1, rng);
        deconv_spec = deconv_width_spec(Activation::Relu);
        deconv_w = TensorT<T>({1, 4, cout / 4, cout / 4});
        deconv_b = TensorT<T>({cout / 4});
        double bound = 1.0 / std::sqrt(4.0 * (cout / 4));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (auto& v : deconv_w.data) v = static_cast<T>(uni(rng));
        ConvSpec s1b;
        s1b.activation = Activation::Relu;
        ConvSpec s3;
        s3.kernel_h = s3.kernel_w = 3;
        s3.pad_h = s3.pad_w = 1;
        s3.activation = Activation::Relu;
        expand1.init(1, 1, cout / 4, cout / 2, s1b, rng);
        expand3.init(3, 3, cout / 4, cout / 2, s3, rng);
    }
    long long weight_count() const {
        return squeeze.weight_count() +
               static_cast<long long>(deconv_w.numel()) +
               expand1.weight_count() + expand3.weight_count();
    }
};

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    SSEG_CHECK(a.dims[0] == b.dims[0] && a.dims[1] == b.dims[1],
               "concat: spatial mismatch");
    const int H = a.dims[0], W = a.dims[1];
    const int Ca = a.dims[2], Cb = b.dims[2];
    TensorT<T> out({H, W, Ca + Cb});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            for (int c = 0; c < Ca; ++c) out.at(h, w, c) = a.at(h, w, c);
            for (int c = 0; c < Cb; ++c) out.at(h, w, Ca + c) = b.at(h, w, c);
        }
    return out;
}

template <typename T>
void split_channels_grad(const TensorT<T>& grad_cat, TensorT<T>& ga,
                         TensorT<T>& gb) {
    const int H = grad_cat.dims[0], W = grad_cat.dims[1];
    const int Ca = ga.dims[2], Cb = gb.dims[2];
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            for (int c = 0; c < Ca; ++c)
                ga.at(h, w, c) += grad_cat.at(h, w, c);
            for (int c = 0; c < Cb; ++c)
                gb.at(h, w, c) += grad_cat.at(h, w, Ca + c);
        }
}

// Per-channel input normalization applied to occupied cells.
struct InputNorm {
    std::array<double, 5> mean{0.0, 0.0, 0.0, 0.0, 0.0};
    std::array<double, 5> scale{1.0 / 25, 1.0 / 25, 1.0 / 2, 1.0, 1.0 / 25};
};

template <typename T>
struct FireActs {
    TensorT<T> in, sq, e1, e3, out;
};

template <typename T>
struct FireDeconvActs {
    TensorT<T> in, sq, up, e1, e3, out;
};

template <typename T>
struct Activations {
    TensorT<T> input;
    TensorT<T> stem, skip0;
    TensorT<T> p1, p2, p3;
    std::vector<int> am1, am2, am3;
    FireActs<T> f1a, f1b, f2a, f2b, f3a, f3b;
    FireDeconvActs<T> d1, d2, d3, d4;
    TensorT<T> s1, s2, s3, s4;  // deconv + skip sums
    TensorT<T> logits, probs;
};

template <typename T>
class NetworkT {
  public:
    NetworkT() = default;
    NetworkT(Profile profile, int num_classes, std::uint64_t seed)
        : profile_(profile), num_classes_(num_classes) {
        ProfileWidths w = profile_widths(profile);
        std::mt19937 rng(static_cast<std::uint32_t>(seed));
        ConvSpec stem_spec;
        stem_spec.stride_w = 2;
        stem_spec.pad_h = stem_spec.pad_w = 1;
        stem_spec.activation = Activation::Relu;
        stem_.init(3, 3, GridConfig::channels, w.stem, stem_spec, rng);
        ConvSpec skip_spec;
        skip_spec.activation = Activation::Relu;
        skip_.init(1, 1, GridConfig::channels, w.stem, skip_spec, rng);
        f1a_.init(w.stem, w.stage1, rng);
        f1b_.init(w.stage1, w.stage1, rng);
        f2a_.init(w.stage1, w.stage2, rng);
        f2b_.init(w.stage2, w.stage2, rng);
        f3a_.init(w.stage2, w.stage3, rng);
        f3b_.init(w.stage3, w.stage3, rng);
        d1_.init(w.stage3, w.stage2, rng);
        d2_.init(w.stage2, w.stage1, rng);
        d3_.init(w.stage1, w.stem, rng);
        d4_.init(w.stem, w.stem, rng);
        ConvSpec head_spec;  // linear head, softmax applied separately
        head_.init(1, 1, w.stem, num_classes, head_spec, rng);
    }

    Profile profile() const { return profile_; }
    int num_classes() const { return num_classes_; }

    // Masked, normalized 5-channel input tensor.
    TensorT<T> prepare_input(const SphericalGrid& grid) const {
        const int H = grid.config.rows, W = grid.config.cols;
        TensorT<T> x({H, W, GridConfig::channels});
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                if (!grid.occupied(h, w)) continue;
                for (int c = 0; c < GridConfig::channels; ++c)
                    x.at(h, w, c) = static_cast<T>(
                        (grid.features.at(h, w, c) - norm_.mean[c]) *
                        norm_.scale[c]);
            }
        return x;
    }

    TensorT<T> fire_forward(const TensorT<T>& x, FireLayer<T>& p,
                            FireActs<T>* acts = nullptr) const {
        FireActs<T> local;
        FireActs<T>& a = acts ? *acts : local;
        a.in = x;
        a.sq = conv2d(x, p.squeeze.w, p.squeeze.b, p.squeeze.spec);
        a.e1 = conv2d(a.sq, p.expand1.w, p.expand1.b, p.expand1.spec);
        a.e3 = conv2d(a.sq, p.expand3.w, p.expand3.b, p.expand3.spec);
        a.out = concat_channels(a.e1, a.e3);
        return a.out;
    }

    TensorT<T> fire_deconv_forward(const TensorT<T>& x, FireDeconvLayer<T>& p,
                                   FireDeconvActs<T>* acts = nullptr) const {
        FireDeconvActs<T> local;
        FireDeconvActs<T>& a = acts ? *acts : local;
        a.in = x;
        a.sq = conv2d(x, p.squeeze.w, p.squeeze.b, p.squeeze.spec);
        a.up = deconv2d(a.sq, p.deconv_w, p.deconv_b, p.deconv_spec);
        a.e1 = conv2d(a.up, p.expand1.w, p.expand1.b, p.expand1.spec);
        a.e3 = conv2d(a.up, p.expand3.w, p.expand3.b, p.expand3.spec);
        a.out = concat_channels(a.e1, a.e3);
        return a.out;
    }

    // Full forward pass; activations kept when a backward pass will follow.
    TensorT<T> forward(const TensorT<T>& input, Activations<T>& a) {
        SSEG_CHECK(input.rank() == 3 &&
                       input.dims[2] == GridConfig::channels,
                   "forward: expected [H,W,5] input");
        SSEG_CHECK(input.dims[1] % kWidthDivisor == 0,
                   "forward: width not divisible by 16");
        a.input = input;
        a.stem = conv2d(input, stem_.w, stem_.b, stem_.spec);
        a.skip0 = conv2d(input, skip_.w, skip_.b, skip_.spec);

        a.p1 = maxpool_width(a.stem, 2, 2, &a.am1);
        fire_forward(a.p1, f1a_, &a.f1a);
        fire_forward(a.f1a.out, f1b_, &a.f1b);

        a.p2 = maxpool_width(a.f1b.out, 2, 2, &a.am2);
        fire_forward(a.p2, f2a_, &a.f2a);
        fire_forward(a.f2a.out, f2b_, &a.f2b);

        a.p3 = maxpool_width(a.f2b.out, 2, 2, &a.am3);
        fire_forward(a.p3, f3a_, &a.f3a);
        fire_forward(a.f3a.out, f3b_, &a.f3b);

        fire_deconv_forward(a.f3b.out, d1_, &a.d1);
        a.s1 = add(a.d1.out, a.f2b.out);
        fire_deconv_forward(a.s1, d2_, &a.d2);
        a.s2 = add(a.d2.out, a.f1b.out);
        fire_deconv_forward(a.s2, d3_, &a.d3);
        a.s3 = add(a.d3.out, a.stem);
        fire_deconv_forward(a.s3, d4_, &a.d4);
        a.s4 = add(a.d4.out, a.skip0);

        a.logits = conv2d(a.s4, head_.w, head_.b, head_.spec);
        a.probs = softmax_channels(a.logits);
        return a.logits;
    }

    TensorT<T> forward(const SphericalGrid& grid, Activations<T>& a) {
        return forward(prepare_input(grid), a);
    }

    // Class-weighted cross entropy over occupied cells. grad_logits, when
    // given, receives d(loss)/d(logits) (not accumulated).
    T loss(const TensorT<T>& logits, const LabelGrid& labels,
           const std::array<T, kNumClasses>& class_weights,
           TensorT<T>* grad_logits = nullptr) const {
        const int H = logits.dims[0], W = logits.dims[1], K = logits.dims[2];
        SSEG_CHECK(labels.rows == H && labels.cols == W,
                   "loss: label grid shape mismatch");
        TensorT<T> probs = softmax_channels(logits);
        if (grad_logits) *grad_logits = TensorT<T>({H, W, K});

        long long n_occ = 0;
        for (auto m : labels.mask)
            if (m) ++n_occ;
        SSEG_CHECK(n_occ > 0, "loss: no occupied cells");

        double total = 0.0;
        const T inv_n = static_cast<T>(1.0 / double(n_occ));
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                if (!labels.occupied(h, w)) continue;
                int y = labels.cls(h, w);
                SSEG_CHECK(y < K, "loss: label out of range");
                T wt = class_weights[y];
                T p = std::max(probs.at(h, w, y), static_cast<T>(1e-12));
                total += double(wt) * -std::log(double(p));
                if (grad_logits) {
                    for (int k = 0; k < K; ++k) {
                        T g = probs.at(h, w, k);
                        if (k == y) g -= T(1);
                        grad_logits->at(h, w, k) = wt * g * inv_n;
                    }
                }
            }
        return static_cast<T>(total / double(n_occ));
    }

    // Backpropagates grad_logits through the whole network, accumulating
    // into parameter grads. Returns d(loss)/d(input).
    TensorT<T> backward(Activations<T>& a, const TensorT<T>& grad_logits) {
        ensure_param_grads();
        TensorT<T> g_s4(a.s4.dims);
        g_s4.requires_grad();
        {
            TensorT<T> tmp = a.s4;
            tmp.requires_grad();
            conv2d_backward(tmp, head_.w, head_.b, head_.spec, a.logits,
                            grad_logits);
            g_s4.data = tmp.grad;
        }
        // s4 = d4.out + skip0
        TensorT<T> g_d4 = fire_deconv_backward(a.d4, d4_, g_s4);
        TensorT<T>& g_skip0 = g_s4;  // same tensor feeds both branches

        TensorT<T> g_s3 = g_d4;  // grad wrt s3 from d4 input
        TensorT<T> g_d3 = fire_deconv_backward(a.d3, d3_, g_s3);
        // s3 = d3.out + stem -> stem also gets g_s3
        TensorT<T> g_s2 = g_d3;
        TensorT<T> g_d2 = fire_deconv_backward(a.d2, d2_, g_s2);
        TensorT<T> g_s1 = g_d2;
        TensorT<T> g_d1 = fire_deconv_backward(a.d1, d1_, g_s1);

        // encoder, deepest first
        TensorT<T> g_f3b = g_d1;
        TensorT<T> g_f3a = fire_backward(a.f3b, f3b_, g_f3b);
        TensorT<T> g_p3 = fire_backward(a.f3a, f3a_, g_f3a);
        TensorT<T> g_f2b(a.f2b.out.dims);
        {
            TensorT<T> tmp = a.f2b.out;
            tmp.requires_grad();
            maxpool_width_backward(tmp, a.p3, a.am3, g_p3);
            g_f2b.data = tmp.grad;
        }
        // skip: s1 = d1.out + f2b.out
        add_into(g_f2b, g_s1);
        TensorT<T> g_f2a = fire_backward(a.f2b, f2b_, g_f2b);
        TensorT<T> g_p2 = fire_backward(a.f2a, f2a_, g_f2a);
        TensorT<T> g_f1b(a.f1b.out.dims);
        {
            TensorT<T> tmp = a.f1b.out;
            tmp.requires_grad();
            maxpool_width_backward(tmp, a.p2, a.am2, g_p2);
            g_f1b.data = tmp.grad;
        }
        add_into(g_f1b, g_s2);  // s2 = d2.out + f1b.out
        TensorT<T> g_f1a = fire_backward(a.f1b, f1b_, g_f1b);
        TensorT<T> g_p1 = fire_backward(a.f1a, f1a_, g_f1a);
        TensorT<T> g_stem(a.stem.dims);
        {
            TensorT<T> tmp = a.stem;
            tmp.requires_grad();
            maxpool_width_backward(tmp, a.p1, a.am1, g_p1);
            g_stem.data = tmp.grad;
        }
        add_into(g_stem, g_s3);  // s3 = d3.out + stem

        TensorT<T> g_input(a.input.dims);
        {
            TensorT<T> tmp = a.input;
            tmp.requires_grad();
            conv2d_backward(tmp, stem_.w, stem_.b, stem_.spec, a.stem, g_stem);
            conv2d_backward(tmp, skip_.w, skip_.b, skip_.spec, a.skip0,
                            g_skip0);
            g_input.data = tmp.grad;
        }
        return g_input;
    }

    std::vector<TensorT<T>*> params() {
        std::vector<TensorT<T>*> out;
        auto conv = [&](ConvLayer<T>& c) {
            out.push_back(&c.w);
            out.push_back(&c.b);
        };
        auto fire = [&](FireLayer<T>& f) {
            conv(f.squeeze);
            conv(f.expand1);
            conv(f.expand3);
        };
        auto fdec = [&](FireDeconvLayer<T>& f) {
            conv(f.squeeze);
            out.push_back(&f.deconv_w);
            out.push_back(&f.deconv_b);
            conv(f.expand1);
            conv(f.expand3);
        };
        conv(stem_);
        conv(skip_);
        fire(f1a_);
        fire(f1b_);
        fire(f2a_);
        fire(f2b_);
        fire(f3a_);
        fire(f3b_);
        fdec(d1_);
        fdec(d2_);
        fdec(d3_);
        fdec(d4_);
        conv(head_);
        return out;
    }

    void ensure_param_grads() {
        for (auto* p : params()) p->requires_grad();
    }

    std::vector<LayerCount> count_params(int H, int W) const {
        std::vector<LayerCount> out;
        ProfileWidths pw = profile_widths(profile_);
        auto conv = [&](const std::string& name, const ConvLayer<T>& c, int h,
                        int w) {
            long long n = c.weight_count();
            long long ho = (h + 2 * c.spec.pad_h - c.spec.kernel_h) /
                               c.spec.stride_h +
                           1;
            long long wo = (w + 2 * c.spec.pad_w - c.spec.kernel_w) /
                               c.spec.stride_w +
                           1;
            out.push_back({name, n, ho * wo * n});
        };
        auto fire = [&](const std::string& name, const FireLayer<T>& f, int h,
                        int w) {
            conv(name + ".squeeze", f.squeeze, h, w);
            conv(name + ".expand1", f.expand1, h, w);
            conv(name + ".expand3", f.expand3, h, w);
        };
        auto fdec = [&](const std::string& name, const FireDeconvLayer<T>& f,
                        int h, int w) {
            conv(name + ".squeeze", f.squeeze, h, w);
            long long n = static_cast<long long>(f.deconv_w.numel());
            // transposed conv: one MAC per (input element, kernel tap) pair
            out.push_back({name + ".deconv", n, 1LL * h * w * n});
            conv(name + ".expand1", f.expand1, h, 2 * w);
            conv(name + ".expand3", f.expand3, h, 2 * w);
        };
        (void)pw;
        conv("conv1a", stem_, H, W);
        conv("conv1b", skip_, H, W);
        fire("fire1a", f1a_, H, W / 4);
        fire("fire1b", f1b_, H, W / 4);
        fire("fire2a", f2a_, H, W / 8);
        fire("fire2b", f2b_, H, W / 8);
        fire("fire3a", f3a_, H, W / 16);
        fire("fire3b", f3b_, H, W / 16);
        fdec("deconv1", d1_, H, W / 16);
        fdec("deconv2", d2_, H, W / 8);
        fdec("deconv3", d3_, H, W / 4);
        fdec("deconv4", d4_, H, W / 2);
        conv("conv14", head_, H, W);
        return out;
    }

    // Named parameter access, used by the checkpoint writer.
    std::vector<std::pair<std::string, TensorT<T>*>> named_params() {
        std::vector<std::pair<std::string, TensorT<T>*>> out;
        auto conv = [&](const std::string& n, ConvLayer<T>& c) {
            out.emplace_back(n + ".w", &c.w);
            out.emplace_back(n + ".b", &c.b);
        };
        auto fire = [&](const std::string& n, FireLayer<T>& f) {
            conv(n + ".squeeze", f.squeeze);
            conv(n + ".expand1", f.expand1);
            conv(n + ".expand3", f.expand3);
        };
        auto fdec = [&](const std::string& n, FireDeconvLayer<T>& f) {
            conv(n + ".squeeze", f.squeeze);
            out.emplace_back(n + ".deconv.w", &f.deconv_w);
            out.emplace_back(n + ".deconv.b", &f.deconv_b);
            conv(n + ".expand1", f.expand1);
            conv(n + ".expand3", f.expand3);
        };
        conv("conv1a", stem_);
        conv("conv1b", skip_);
        fire("fire1a", f1a_);
        fire("fire1b", f1b_);
        fire("fire2a", f2a_);
        fire("fire2b", f2b_);
        fire("fire3a", f3a_);
        fire("fire3b", f3b_);
        fdec("deconv1", d1_);
        fdec("deconv2", d2_);
        fdec("deconv3", d3_);
        fdec("deconv4", d4_);
        conv("conv14", head_);
        return out;
    }

    FireLayer<T>& fire1a() { return f1a_; }
    FireDeconvLayer<T>& deconv1() { return d1_; }

    // Returns grad wrt the fire layer's input.
    TensorT<T> fire_backward(FireActs<T>& a, FireLayer<T>& p,
                             const TensorT<T>& grad_out) {
        TensorT<T> g_e1(a.e1.dims), g_e3(a.e3.dims);
        split_channels_grad(grad_out, g_e1, g_e3);
        TensorT<T> sq = a.sq;
        sq.requires_grad();
        conv2d_backward(sq, p.expand1.w, p.expand1.b, p.expand1.spec, a.e1,
                        g_e1);
        conv2d_backward(sq, p.expand3.w, p.expand3.b, p.expand3.spec, a.e3,
                        g_e3);
        TensorT<T> g_sq(a.sq.dims);
        g_sq.data = sq.grad;
        TensorT<T> in = a.in;
        in.requires_grad();
        conv2d_backward(in, p.squeeze.w, p.squeeze.b, p.squeeze.spec, a.sq,
                        g_sq);
        TensorT<T> g_in(a.in.dims);
        g_in.data = in.grad;
        return g_in;
    }

    TensorT<T> fire_deconv_backward(FireDeconvActs<T>& a,
                                    FireDeconvLayer<T>& p,
                                    const TensorT<T>& grad_out) {
        TensorT<T> g_e1(a.e1.dims), g_e3(a.e3.dims);
        split_channels_grad(grad_out, g_e1, g_e3);
        TensorT<T> up = a.up;
        up.requires_grad();
        conv2d_backward(up, p.expand1.w, p.expand1.b, p.expand1.spec, a.e1,
                        g_e1);
        conv2d_backward(up, p.expand3.w, p.expand3.b, p.expand3.spec, a.e3,
                        g_e3);
        TensorT<T> g_up(a.up.dims);
        g_up.data = up.grad;
        TensorT<T> sq = a.sq;
        sq.requires_grad();
        deconv2d_backward(sq, p.deconv_w, p.deconv_b, p.deconv_spec, a.up,
                          g_up);
        TensorT<T> g_sq(a.sq.dims);
        g_sq.data = sq.grad;
        TensorT<T> in = a.in;
        in.requires_grad();
        conv2d_backward(in, p.squeeze.w, p.squeeze.b, p.squeeze.spec, a.sq,
                        g_sq);
        TensorT<T> g_in(a.in.dims);
        g_in.data = in.grad;
        return g_in;
    }

  private:
    static TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
        SSEG_CHECK(a.dims == b.dims, "skip add: shape mismatch");
        TensorT<T> out = a;
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += b.data[i];
        return out;
    }
    static void add_into(TensorT<T>& dst, const TensorT<T>& src) {
        SSEG_CHECK(dst.dims == src.dims, "grad add: shape mismatch");
        for (std::size_t i = 0; i < dst.data.size(); ++i)
            dst.data[i] += src.data[i];
    }

    Profile profile_ = Profile::Toy;
    int num_classes_ = kNumClasses;
    InputNorm norm_;
    ConvLayer<T> stem_, skip_, head_;
    FireLayer<T> f1a_, f1b_, f2a_, f2b_, f3a_, f3b_;
    FireDeconvLayer<T> d1_, d2_, d3_, d4_;
};

using Network = NetworkT<float>;
using Network64 = NetworkT<double>;

// Inverse-frequency class weights from label grids, clamped to [0.1, 10].
template <typename T>
std::array<T, kNumClasses> inverse_frequency_weights(
    const std::vector<LabelGrid>& labels) {
    std::array<double, kNumClasses> count{};
    double total = 0;
    for (const auto& lg : labels)
        for (std::size_t i = 0; i < lg.classes.size(); ++i)
            if (lg.mask[i]) {
                count[lg.classes[i]] += 1;
                total += 1;
            }
    std::array<T, kNumClasses> w;
    for (int k = 0; k < kNumClasses; ++k) {
        double freq = count[k] / std::max(total, 1.0);
        double v = freq > 0 ? 1.0 / (kNumClasses * freq) : 10.0;
        w[k] = static_cast<T>(std::clamp(v, 0.1, 10.0));
    }
    return w;
}

// One shuffled pass of per-frame SGD. Returns the mean loss over frames
// (computed before each step).
template <typename T>
T train_epoch(NetworkT<T>& net,
              const std::vector<std::pair<TensorT<T>, LabelGrid>>& dataset,
              const std::array<T, kNumClasses>& class_weights, T lr,
              std::uint64_t seed) {
    SSEG_CHECK(!dataset.empty(), "train_epoch: empty dataset");
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    auto ps = net.params();
    for (std::size_t i : order) {
        Activations<T> acts;
        TensorT<T> logits = net.forward(dataset[i].first, acts);
        TensorT<T> grad_logits;
        T l = net.loss(logits, dataset[i].second, class_weights, &grad_logits);
        total += double(l);
        if (lr != T(0)) {
            net.ensure_param_grads();
            net.backward(acts, grad_logits);
            sgd_step(ps, lr);
        }
    }
    return static_cast<T>(total / double(dataset.size()));
}

}  // namespace sseg
