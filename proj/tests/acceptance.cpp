// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Each check is self-contained and uses independent re-derivations
// (naive loops, closed forms, brute force) rather than the library's own
// fast paths wherever the criterion calls for an oracle.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "sseg/config.hpp"
#include "sseg/crf.hpp"
#include "sseg/eval.hpp"
#include "sseg/gradcheck.hpp"
#include "sseg/instance.hpp"
#include "sseg/network.hpp"
#include "sseg/pipeline.hpp"
#include "sseg/ref_kernels.hpp"
#include "sseg/simulator.hpp"

using namespace sseg;

namespace {

int g_failures = 0;

void verdict(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// ---------------------------------------------------------------- helpers

void fill_uniform(Tensor64& t, std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> uni(lo, hi);
    for (auto& v : t.data) v = uni(rng);
}

// one synthetic point per occupied cell, aimed at the cell center
SphericalGrid make_grid(int H, int W, double occupancy, std::uint32_t seed) {
    GridConfig cfg;
    cfg.rows = H;
    cfg.cols = W;
    std::mt19937 rng(seed);
    std::bernoulli_distribution occ(occupancy);
    std::uniform_real_distribution<double> jr(-0.3, 0.3);
    PointCloud cloud;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            if (!occ(rng)) continue;
            double theta =
                (cfg.zenith_max - (r + 0.5) * cfg.dtheta()) * M_PI / 180.0;
            double phi = (-cfg.azimuth_fov / 2 + (c + 0.5) * cfg.dphi()) *
                         M_PI / 180.0;
            double range = 12.0 + jr(rng);
            Point p;
            p.x = float(range * std::cos(theta) * std::cos(phi));
            p.y = float(range * std::cos(theta) * std::sin(phi));
            p.z = float(range * std::sin(theta));
            cloud.points.push_back(p);
        }
    return project(cloud, cfg);
}

Tensor64 naive_refine(const Tensor64& logits, const SphericalGrid& grid,
                      const CrfParamsT<double>& p) {
    const int H = logits.dims[0], W = logits.dims[1], K = logits.dims[2];
    auto occ = [&](int r, int c) {
        return r >= 0 && r < H && c >= 0 && c < W && grid.occupied(r, c);
    };
    auto softmax_masked = [&](const Tensor64& z) {
        Tensor64 q({H, W, K});
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                if (!occ(r, c)) continue;
                double m = z.at(r, c, 0);
                for (int k = 1; k < K; ++k) m = std::max(m, z.at(r, c, k));
                double s = 0;
                for (int k = 0; k < K; ++k) s += std::exp(z.at(r, c, k) - m);
                for (int k = 0; k < K; ++k)
                    q.at(r, c, k) = std::exp(z.at(r, c, k) - m) / s;
            }
        return q;
    };
    Tensor64 q = softmax_masked(logits);
    for (int it = 0; it < p.iterations; ++it) {
        Tensor64 z = logits;
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                if (!occ(r, c)) continue;
                std::vector<double> msg(K, 0.0);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -2; dc <= 2; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        int rr = r + dr, cc = c + dc;
                        if (!occ(rr, cc)) continue;
                        double dp2 = double(dr) * dr + double(dc) * dc;
                        double dx2 = 0;
                        for (int ch = 0; ch < 3; ++ch) {
                            double d = double(grid.features.at(r, c, ch)) -
                                       double(grid.features.at(rr, cc, ch));
                            dx2 += d * d;
                        }
                        double k1 = std::exp(
                            -dp2 / (2 * p.sigma_alpha * p.sigma_alpha) -
                            dx2 / (2 * p.sigma_beta * p.sigma_beta));
                        double k2 = std::exp(
                            -dp2 / (2 * p.sigma_gamma * p.sigma_gamma));
                        double kv = p.w1 * k1 + p.w2 * k2;
                        for (int k = 0; k < K; ++k)
                            msg[k] += kv * q.at(rr, cc, k);
                    }
                for (int a = 0; a < K; ++a)
                    for (int b = 0; b < K; ++b)
                        z.at(r, c, a) += p.compat.at(a, b) * msg[b];
            }
        q = softmax_masked(z);
    }
    return q;
}

std::vector<int> naive_dbscan(const std::vector<Vec3>& pts, double eps,
                              int min_pts) {
    const int n = static_cast<int>(pts.size());
    constexpr int kUndef = -2;
    std::vector<int> label(n, kUndef);
    double e2 = eps * eps;
    auto query = [&](int i) {
        std::vector<int> out;
        for (int j = 0; j < n; ++j) {
            double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y,
                   dz = pts[i].z - pts[j].z;
            if (dx * dx + dy * dy + dz * dz <= e2) out.push_back(j);
        }
        return out;
    };
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] != kUndef) continue;
        auto nb = query(i);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[i] = kNoise;
            continue;
        }
        int cid = next++;
        label[i] = cid;
        std::deque<int> frontier(nb.begin(), nb.end());
        while (!frontier.empty()) {
            int j = frontier.front();
            frontier.pop_front();
            if (label[j] == kNoise) label[j] = cid;
            if (label[j] != kUndef) continue;
            label[j] = cid;
            auto nb2 = query(j);
            if (static_cast<int>(nb2.size()) >= min_pts)
                frontier.insert(frontier.end(), nb2.begin(), nb2.end());
        }
    }
    return label;
}

// ------------------------------------------------------------ criterion 1

void criterion1() {
    double t0 = now_s();
    bool ok = true;
    std::string detail;
    for (int C : {16, 64, 128}) {
        std::mt19937 rng(1);
        FireLayer<float> fire;
        fire.init(C, C, rng);
        FireDeconvLayer<float> fd;
        fd.init(C, C, rng);
        long long c2 = static_cast<long long>(C) * C;
        ok = ok && fire.weight_count() == 3 * c2 / 2;
        ok = ok && fd.weight_count() == 7 * c2 / 4;
        ok = ok && fire.weight_count() * 6 == 9 * c2;
        ok = ok && fd.weight_count() * 16 == 7 * 4 * c2;
    }
    double dt = now_s() - t0;
    ok = ok && dt < 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "module weight counts 3/2 C^2 and 7/4 C^2 for C in "
                  "{16,64,128} (%.3f s)",
                  dt);
    verdict(1, ok, buf);
}

// ------------------------------------------------------------ criterion 2

double weighted_sum(const Tensor64& t, const Tensor64& r) {
    double s = 0;
    for (std::size_t i = 0; i < t.data.size(); ++i) s += t.data[i] * r.data[i];
    return s;
}

void criterion2() {
    double t0 = now_s();
    std::mt19937 rng(2);
    double worst = 0;

    {  // conv2d with relu, 8x16x3 -> 4
        Tensor64 in({8, 16, 3}), w({3, 3, 3, 4}), b({4});
        fill_uniform(in, rng, -1, 1);
        fill_uniform(w, rng, -1, 1);
        fill_uniform(b, rng, 0.05, 0.5);
        ConvSpec s;
        s.kernel_h = s.kernel_w = 3;
        s.pad_h = s.pad_w = 1;
        s.activation = Activation::Relu;
        Tensor64 r({8, 16, 4});
        fill_uniform(r, rng, -1, 1);
        worst = std::max(worst, grad_check(
            [&](bool g) {
                Tensor64 out = conv2d(in, w, b, s);
                if (g) conv2d_backward(in, w, b, s, out, r);
                return weighted_sum(out, r);
            },
            {&in, &w, &b}));
    }
    {  // width deconv, 8x16x4 -> 8x32x3
        Tensor64 in({8, 16, 4}), w({1, 4, 4, 3}), b({3});
        fill_uniform(in, rng, -1, 1);
        fill_uniform(w, rng, -1, 1);
        fill_uniform(b, rng, -1, 1);
        ConvSpec s = deconv_width_spec();
        Tensor64 r({8, 32, 3});
        fill_uniform(r, rng, -1, 1);
        worst = std::max(worst, grad_check(
            [&](bool g) {
                Tensor64 out = deconv2d(in, w, b, s);
                if (g) deconv2d_backward(in, w, b, s, out, r);
                return weighted_sum(out, r);
            },
            {&in, &w, &b}));
    }
    {  // width max pooling
        Tensor64 in({8, 16, 2});
        fill_uniform(in, rng, -1, 1);
        Tensor64 r({8, 8, 2});
        fill_uniform(r, rng, -1, 1);
        worst = std::max(worst, grad_check(
            [&](bool g) {
                std::vector<int> am;
                Tensor64 out = maxpool_width(in, 2, 2, &am);
                if (g) maxpool_width_backward(in, out, am, r);
                return weighted_sum(out, r);
            },
            {&in}));
    }
    {  // softmax + weighted cross entropy
        Tensor64 logits({8, 16, kNumClasses});
        fill_uniform(logits, rng, -2, 2);
        LabelGrid lg;
        lg.rows = 8;
        lg.cols = 16;
        lg.classes.resize(8 * 16);
        lg.mask.assign(8 * 16, 1);
        std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
        for (auto& c : lg.classes) c = std::uint8_t(cls(rng));
        std::array<double, kNumClasses> wts = {1.0, 2.0, 0.7, 1.3};
        Network64 net(Profile::Toy, kNumClasses, 2);
        worst = std::max(worst, grad_check(
            [&](bool g) {
                Tensor64 grad;
                double l = net.loss(logits, lg, wts, g ? &grad : nullptr);
                if (g)
                    for (std::size_t i = 0; i < grad.data.size(); ++i)
                        logits.grad[i] += grad.data[i];
                return l;
            },
            {&logits}));
    }
    {  // fire module
        Network64 net(Profile::Toy, kNumClasses, 3);
        FireLayer<double> fire;
        std::mt19937 init_rng(7);
        fire.init(8, 8, init_rng);
        for (auto& v : fire.squeeze.b.data) v = 0.05;
        for (auto& v : fire.expand1.b.data) v = 0.05;
        for (auto& v : fire.expand3.b.data) v = 0.05;
        Tensor64 in({8, 16, 8}), r({8, 16, 8});
        fill_uniform(in, rng, -1, 1);
        fill_uniform(r, rng, -1, 1);
        std::vector<Tensor64*> inputs = {&in, &fire.squeeze.w,
                                         &fire.expand3.w};
        worst = std::max(worst, grad_check(
            [&](bool g) {
                FireActs<double> acts;
                Tensor64 out = net.fire_forward(in, fire, &acts);
                if (g) {
                    Tensor64 gi = net.fire_backward(acts, fire, r);
                    for (std::size_t i = 0; i < in.data.size(); ++i)
                        in.grad[i] += gi.data[i];
                }
                return weighted_sum(out, r);
            },
            inputs));
    }
    {  // CRF refine
        SphericalGrid grid = make_grid(8, 16, 0.85, 21);
        auto params = CrfParamsT<double>::make_default(kNumClasses);
        Tensor64 logits({8, 16, kNumClasses});
        fill_uniform(logits, rng, -1.5, 1.5);
        Tensor64 w1t({1}), w2t({1});
        w1t.data[0] = 1.0;
        w2t.data[0] = 0.3;
        Tensor64 r({8, 16, kNumClasses});
        fill_uniform(r, rng, -1, 1);
        worst = std::max(worst, grad_check(
            [&](bool g) {
                CrfParamsT<double> p = params;
                p.w1 = w1t.data[0];
                p.w2 = w2t.data[0];
                KernelFieldT<double> field = build_kernels(grid, p);
                CrfActs<double> acts;
                Tensor64 q = refine(logits, grid, p, &field, &acts);
                if (g) {
                    Tensor64 gl({8, 16, kNumClasses}),
                        gc({kNumClasses, kNumClasses});
                    double gw1 = 0, gw2 = 0;
                    refine_backward(logits, grid, p, field, acts, r, &gl, &gc,
                                    &gw1, &gw2);
                    for (std::size_t i = 0; i < gl.data.size(); ++i)
                        logits.grad[i] += gl.data[i];
                    for (std::size_t i = 0; i < gc.data.size(); ++i)
                        params.compat.grad[i] += gc.data[i];
                    w1t.grad[0] += gw1;
                    w2t.grad[0] += gw2;
                }
                return weighted_sum(q, r);
            },
            {&logits, &params.compat, &w1t, &w2t}));
    }
    {  // full toy network on 8x16x5
        Network64 net(Profile::Toy, kNumClasses, 11);
        // move biases off zero so no dead-input relu sits exactly on a kink
        for (Tensor64* p : net.params())
            if (p->rank() == 1) fill_uniform(*p, rng, 0.05, 0.15);
        Tensor64 x({8, 16, GridConfig::channels});
        fill_uniform(x, rng, -0.5, 0.5);
        LabelGrid lg;
        lg.rows = 8;
        lg.cols = 16;
        lg.classes.resize(8 * 16);
        lg.mask.assign(8 * 16, 1);
        std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
        for (auto& c : lg.classes) c = std::uint8_t(cls(rng));
        std::array<double, kNumClasses> wts = {1.0, 1.5, 0.8, 1.2};
        worst = std::max(worst, grad_check(
            [&](bool g) {
                Activations<double> acts;
                Tensor64 logits = net.forward(x, acts);
                Tensor64 grad_logits;
                double l = net.loss(logits, lg, wts,
                                    g ? &grad_logits : nullptr);
                if (g) {
                    Tensor64 gx = net.backward(acts, grad_logits);
                    for (std::size_t i = 0; i < x.data.size(); ++i)
                        x.grad[i] += gx.data[i];
                }
                return l;
            },
            {&x, &net.fire1a().squeeze.w, &net.deconv1().deconv_b}));
    }
    double dt = now_s() - t0;
    bool ok = worst <= 1e-4 && dt < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "finite-difference gradient suite, worst relative error "
                  "%.2e (%.1f s)",
                  worst, dt);
    verdict(2, ok, buf);
}

// ------------------------------------------------------------ criterion 3

void criterion3() {
    bool ok = true;
    std::mt19937 rng(3);
    double worst_op = 0;

    {  // (a) tensor ops vs naive references
        Tensor in({9, 14, 3});
        Tensor w({3, 3, 3, 5});
        Tensor b({5});
        std::uniform_real_distribution<float> uni(-1.f, 1.f);
        for (auto& v : in.data) v = uni(rng);
        for (auto& v : w.data) v = uni(rng);
        for (auto& v : b.data) v = uni(rng);
        ConvSpec s;
        s.kernel_h = s.kernel_w = 3;
        s.pad_h = s.pad_w = 1;
        s.stride_w = 2;
        s.activation = Activation::Relu;
        Tensor fast = conv2d(in, w, b, s);
        Tensor slow = ref::conv2d(in, w, b, s);
        for (std::size_t i = 0; i < fast.data.size(); ++i)
            worst_op = std::max(
                worst_op, std::fabs(double(fast.data[i]) - slow.data[i]));

        Tensor dw({1, 4, 3, 4});
        Tensor db({4});
        for (auto& v : dw.data) v = uni(rng);
        for (auto& v : db.data) v = uni(rng);
        ConvSpec ds = deconv_width_spec();
        Tensor dfast = deconv2d(in, dw, db, ds);
        Tensor dslow = ref::deconv2d(in, dw, db, ds);
        for (std::size_t i = 0; i < dfast.data.size(); ++i)
            worst_op = std::max(
                worst_op, std::fabs(double(dfast.data[i]) - dslow.data[i]));

        Tensor pfast = maxpool_width(in, 2, 2);
        Tensor pslow = ref::maxpool_width(in, 2, 2);
        for (std::size_t i = 0; i < pfast.data.size(); ++i)
            worst_op = std::max(
                worst_op, std::fabs(double(pfast.data[i]) - pslow.data[i]));

        Tensor sfast = softmax_channels(in);
        Tensor sslow = ref::softmax_channels(in);
        for (std::size_t i = 0; i < sfast.data.size(); ++i)
            worst_op = std::max(
                worst_op, std::fabs(double(sfast.data[i]) - sslow.data[i]));
        ok = ok && worst_op <= 1e-6;
    }

    double worst_crf = 0;
    for (int trial = 0; trial < 50; ++trial) {  // (b) CRF vs naive
        SphericalGrid grid = make_grid(8, 8, 0.8, 100 + trial);
        auto p = CrfParamsT<double>::make_default(kNumClasses);
        Tensor64 logits({8, 8, kNumClasses});
        fill_uniform(logits, rng, -2, 2);
        Tensor64 fast = refine(logits, grid, p);
        Tensor64 slow = naive_refine(logits, grid, p);
        for (std::size_t i = 0; i < fast.data.size(); ++i)
            worst_crf =
                std::max(worst_crf, std::fabs(fast.data[i] - slow.data[i]));
    }
    ok = ok && worst_crf <= 1e-6;

    bool dbscan_ok = true;  // (c) dbscan vs naive
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> nn(5, 200);
        std::uniform_real_distribution<double> coord(-4.0, 4.0);
        std::uniform_real_distribution<double> er(0.3, 1.5);
        std::uniform_int_distribution<int> mp(2, 8);
        int n = nn(rng);
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = {coord(rng), coord(rng), coord(rng)};
        double eps = er(rng);
        int min_pts = mp(rng);
        if (dbscan(pts, eps, min_pts) != naive_dbscan(pts, eps, min_pts))
            dbscan_ok = false;
    }
    ok = ok && dbscan_ok;

    bool metrics_ok = true;  // (d) metrics vs brute force
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 64;  // 8x8
        LabelGrid gt, pred;
        gt.rows = pred.rows = 8;
        gt.cols = pred.cols = 8;
        gt.classes.resize(n);
        pred.classes.resize(n);
        gt.mask.resize(n);
        pred.mask.resize(n);
        std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
        std::bernoulli_distribution occ(0.75);
        for (int i = 0; i < n; ++i) {
            gt.mask[i] = pred.mask[i] = occ(rng) ? 1 : 0;
            gt.classes[i] = std::uint8_t(cls(rng));
            pred.classes[i] = std::uint8_t(cls(rng));
        }
        auto counts = class_counts(pred, gt);
        for (int c = 0; c < kNumClasses; ++c) {
            long long P = 0, G = 0, I = 0;
            for (int i = 0; i < n; ++i) {
                if (!gt.mask[i]) continue;
                bool p = pred.classes[i] == c, g = gt.classes[i] == c;
                P += p;
                G += g;
                I += p && g;
            }
            if (counts[c].pred != P || counts[c].gt != G ||
                counts[c].inter != I)
                metrics_ok = false;
        }
    }
    ok = ok && metrics_ok;

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "oracle equivalences: ops max|diff| %.1e, crf max|diff| "
                  "%.1e, dbscan %s, metrics %s",
                  worst_op, worst_crf, dbscan_ok ? "identical" : "MISMATCH",
                  metrics_ok ? "exact" : "MISMATCH");
    verdict(3, ok, buf);
}

// ------------------------------------------------------------ criterion 4

void criterion4() {
    std::mt19937 rng(4);
    SphericalGrid grid = make_grid(8, 16, 0.85, 40);
    Tensor64 logits({8, 16, kNumClasses});
    fill_uniform(logits, rng, -2, 2);

    auto p0 = CrfParamsT<double>::make_default(kNumClasses);
    p0.w1 = 0.0;
    p0.w2 = 0.0;
    Tensor64 q0 = refine(logits, grid, p0);
    Tensor64 base = softmax_channels(logits);
    double worst_id = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 16; ++c) {
            if (!grid.occupied(r, c)) continue;
            for (int k = 0; k < kNumClasses; ++k)
                worst_id = std::max(
                    worst_id, std::fabs(q0.at(r, c, k) - base.at(r, c, k)));
        }

    auto p = CrfParamsT<double>::make_default(kNumClasses);
    CrfActs<double> acts;
    refine(logits, grid, p, static_cast<const KernelFieldT<double>*>(nullptr),
           &acts);
    double worst_sum = 0;
    for (const auto& q : acts.q)
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 16; ++c) {
                if (!grid.occupied(r, c)) continue;
                double s = 0;
                for (int k = 0; k < kNumClasses; ++k) s += q.at(r, c, k);
                worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
            }

    bool ok = worst_id <= 1e-7 && worst_sum <= 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "zero-weight identity max|diff| %.1e; per-iteration sum "
                  "deviation %.1e",
                  worst_id, worst_sum);
    verdict(4, ok, buf);
}

// ------------------------------------------------------------ criterion 5

double car_iou(Network& net,
               const std::vector<std::pair<Tensor, LabelGrid>>& data,
               const std::vector<SphericalGrid>& grids) {
    long long pred = 0, gt = 0, inter = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Activations<float> acts;
        net.forward(data[i].first, acts);
        LabelGrid lg = argmax_labels(acts.probs, grids[i]);
        auto counts = class_counts(lg, data[i].second);
        pred += counts[kCar].pred;
        gt += counts[kCar].gt;
        inter += counts[kCar].inter;
    }
    long long uni = pred + gt - inter;
    return uni > 0 ? double(inter) / double(uni) : 0.0;
}

void criterion5() {
    double t0 = now_s();
    Config cfg;
    cfg.set("grid.rows", "64");
    cfg.set("grid.cols", "128");
    cfg.set("net.profile", "toy");
    GridConfig gcfg = cfg.grid();
    LidarConfig lidar = cfg.lidar();

    std::vector<std::pair<Tensor, LabelGrid>> data;
    std::vector<SphericalGrid> grids;
    std::vector<LabelGrid> label_grids;
    Network net(Profile::Toy, kNumClasses, 7);
    Network twin(Profile::Toy, kNumClasses, 7);
    for (int i = 0; i < 20; ++i) {
        Scene scene = generate_scene(500 + i, cfg.scene_gen());
        RaycastResult rc = raycast(scene, lidar);
        SphericalGrid grid = project(rc.cloud, gcfg);
        LabelGrid labels = project_labels(rc.cloud, grid);
        data.emplace_back(net.prepare_input(grid), labels);
        grids.push_back(std::move(grid));
        label_grids.push_back(std::move(labels));
    }
    auto weights = inverse_frequency_weights<float>(label_grids);

    // bit-reproducibility probe: two identical runs stay identical
    bool reproducible = true;
    for (int e = 0; e < 3; ++e) {
        float la = train_epoch(net, data, weights, 0.05f, 900 + e);
        float lb = train_epoch(twin, data, weights, 0.05f, 900 + e);
        reproducible = reproducible && la == lb;
    }
    auto pa = net.params();
    auto pb = twin.params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        reproducible = reproducible && pa[i]->data == pb[i]->data;

    double iou = car_iou(net, data, grids);
    int epochs = 3;
    while (iou < 0.90 && epochs < 500 && now_s() - t0 < 540.0) {
        for (int k = 0; k < 5 && epochs < 500; ++k, ++epochs)
            train_epoch(net, data, weights, 0.05f,
                        900 + static_cast<std::uint64_t>(epochs));
        iou = car_iou(net, data, grids);
    }
    double dt = now_s() - t0;
    bool ok = iou >= 0.90 && epochs <= 500 && dt < 600.0 && reproducible;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "toy overfit: car IoU %.3f after %d epochs (%.0f s), "
                  "reproducible=%s",
                  iou, epochs, dt, reproducible ? "yes" : "NO");
    verdict(5, ok, buf);
}

// ------------------------------------------------------------ criterion 6

void criterion6() {
    Config cfg;
    cfg.set("grid.rows", "64");
    cfg.set("grid.cols", "128");
    GridConfig gcfg = cfg.grid();
    LidarConfig lidar = cfg.lidar();

    int improved = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Scene scene = generate_scene(700 + trial, cfg.scene_gen());
        RaycastResult rc = raycast(scene, lidar);
        SphericalGrid grid = project(rc.cloud, gcfg);
        LabelGrid gt = project_labels(rc.cloud, grid);
        const int H = gt.rows, W = gt.cols;

        // interior cells of homogeneous regions: all 8 neighbors occupied
        // with the same class
        auto interior = [&](int r, int c) {
            if (!gt.occupied(r, c)) return false;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= H || cc < 0 || cc >= W) return false;
                    if (!gt.occupied(rr, cc) ||
                        gt.cls(rr, cc) != gt.cls(r, c))
                        return false;
                }
            return true;
        };
        std::vector<int> interior_cells;
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c)
                if (interior(r, c)) interior_cells.push_back(r * W + c);

        std::mt19937 rng(1234 + trial);
        std::shuffle(interior_cells.begin(), interior_cells.end(), rng);
        std::size_t n_flip = interior_cells.size() / 20;  // 5%
        if (n_flip == 0) continue;

        // confident correct probabilities, corrupted cells lean wrong
        Tensor64 logits({H, W, kNumClasses});
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                if (!gt.occupied(r, c)) continue;
                for (int k = 0; k < kNumClasses; ++k) {
                    double p = k == gt.cls(r, c) ? 0.9 : 0.1 / 3;
                    logits.at(r, c, k) = std::log(p);
                }
            }
        std::uniform_int_distribution<int> other(1, kNumClasses - 1);
        for (std::size_t i = 0; i < n_flip; ++i) {
            int cell = interior_cells[i];
            int r = cell / W, c = cell % W;
            int wrong = (gt.cls(r, c) + other(rng)) % kNumClasses;
            for (int k = 0; k < kNumClasses; ++k) {
                double p = k == wrong ? 0.6 : 0.4 / 3;
                logits.at(r, c, k) = std::log(p);
            }
        }

        auto accuracy = [&](const Tensor64& probs) {
            long long right = 0, occ = 0;
            for (int r = 0; r < H; ++r)
                for (int c = 0; c < W; ++c) {
                    if (!gt.occupied(r, c)) continue;
                    ++occ;
                    int best = 0;
                    for (int k = 1; k < kNumClasses; ++k)
                        if (probs.at(r, c, k) > probs.at(r, c, best))
                            best = k;
                    if (best == gt.cls(r, c)) ++right;
                }
            return double(right) / double(occ);
        };

        Tensor64 before = softmax_channels(logits);
        auto p = CrfParamsT<double>::make_default(kNumClasses);
        Tensor64 after = refine(logits, grid, p);
        ++total;
        if (accuracy(after) > accuracy(before)) ++improved;
    }
    bool ok = total >= 15 && improved == total;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "refinement strictly improved accuracy on %d/%d corrupted "
                  "maps",
                  improved, total);
    verdict(6, ok, buf);
}

// ------------------------------------------------------------ criterion 7

void criterion7() {
    const int R = 8, C = 8, N = 10000;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> er(0.0, 0.9);
    std::vector<float> true_eps(R * C);
    for (auto& e : true_eps) e = float(er(rng));

    std::vector<std::vector<std::uint8_t>> masks(N);
    for (int f = 0; f < N; ++f) {
        masks[f].resize(R * C);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int i = 0; i < R * C; ++i)
            masks[f][i] = uni(rng) < true_eps[i] ? 0 : 1;
    }
    NoiseModel est = estimate_noise(masks, R, C);
    double worst = 0;
    for (int i = 0; i < R * C; ++i)
        worst = std::max(worst, std::fabs(double(est.eps[i]) - true_eps[i]));

    // inject into fully occupied grids, re-estimate
    SphericalGrid full = make_grid(R, C, 1.0, 70);
    bool fully_occupied = true;
    for (auto m : full.mask) fully_occupied = fully_occupied && m;
    NoiseModel model;
    model.rows = R;
    model.cols = C;
    model.n_frames = N;
    model.eps.assign(true_eps.begin(), true_eps.end());
    std::vector<std::vector<std::uint8_t>> masks2(N);
    for (int f = 0; f < N; ++f)
        masks2[f] = inject_noise(full, model, 9000 + f).mask;
    NoiseModel est2 = estimate_noise(masks2, R, C);
    double worst2 = 0;
    for (int i = 0; i < R * C; ++i)
        worst2 =
            std::max(worst2, std::fabs(double(est2.eps[i]) - true_eps[i]));

    bool ok = fully_occupied && worst <= 0.015 && worst2 <= 0.015;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "noise estimate error %.4f, inject+re-estimate error %.4f "
                  "(bound 0.015)",
                  worst, worst2);
    verdict(7, ok, buf);
}

// ------------------------------------------------------------ criterion 8

// independent surface-membership and nearest-hit checks
bool on_box_surface(const SceneObject& b, const double p[3], double tol) {
    double lo[3] = {b.cx - b.sx / 2, b.cy - b.sy / 2, 0.0};
    double hi[3] = {b.cx + b.sx / 2, b.cy + b.sy / 2, b.sz};
    bool inside = true, on_face = false;
    for (int a = 0; a < 3; ++a) {
        if (p[a] < lo[a] - tol || p[a] > hi[a] + tol) inside = false;
        if (std::fabs(p[a] - lo[a]) <= tol || std::fabs(p[a] - hi[a]) <= tol)
            on_face = true;
    }
    return inside && on_face;
}

bool on_cylinder_surface(const SceneObject& c, const double p[3],
                         double tol) {
    double lat = std::hypot(p[0] - c.cx, p[1] - c.cy);
    if (p[2] < -tol || p[2] > c.sz + tol) return false;
    if (std::fabs(lat - c.sx) <= tol) return true;  // lateral wall
    if (lat <= c.sx + tol &&
        (std::fabs(p[2]) <= tol || std::fabs(p[2] - c.sz) <= tol))
        return true;  // caps
    return false;
}

// conservative lower bound on the entry distance of a ray into an object
double entry_t(const SceneObject& obj, const double o[3], const double d[3]) {
    const double inf = std::numeric_limits<double>::infinity();
    if (obj.shape == ShapeKind::Box) {
        double lo[3] = {obj.cx - obj.sx / 2, obj.cy - obj.sy / 2, 0.0};
        double hi[3] = {obj.cx + obj.sx / 2, obj.cy + obj.sy / 2, obj.sz};
        double tmin = 0.0, tmax = inf;
        for (int a = 0; a < 3; ++a) {
            if (std::fabs(d[a]) < 1e-15) {
                if (o[a] < lo[a] || o[a] > hi[a]) return inf;
                continue;
            }
            double t1 = (lo[a] - o[a]) / d[a], t2 = (hi[a] - o[a]) / d[a];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
            if (tmin > tmax) return inf;
        }
        return tmin > 1e-9 ? tmin : inf;
    }
    double best = inf;
    double ox = o[0] - obj.cx, oy = o[1] - obj.cy;
    double a2 = d[0] * d[0] + d[1] * d[1];
    if (a2 > 1e-15) {
        double bq = 2 * (ox * d[0] + oy * d[1]);
        double cq = ox * ox + oy * oy - obj.sx * obj.sx;
        double disc = bq * bq - 4 * a2 * cq;
        if (disc >= 0) {
            double sq = std::sqrt(disc);
            for (double t : {(-bq - sq) / (2 * a2), (-bq + sq) / (2 * a2)}) {
                if (t <= 1e-9 || t >= best) continue;
                double z = o[2] + t * d[2];
                if (z >= 0 && z <= obj.sz) best = t;
            }
        }
    }
    if (std::fabs(d[2]) > 1e-15) {
        for (double zc : {0.0, obj.sz}) {
            double t = (zc - o[2]) / d[2];
            if (t <= 1e-9 || t >= best) continue;
            double x = ox + t * d[0], y = oy + t * d[1];
            if (x * x + y * y <= obj.sx * obj.sx) best = t;
        }
    }
    return best;
}

void criterion8() {
    LidarConfig cfg;
    cfg.rays_v = 32;
    cfg.rays_h = 128;
    const double tol = 1e-6;
    long long checked = 0;
    bool surface_ok = true, nearest_ok = true;

    for (int s = 0; s < 6 && checked < 1000; ++s) {
        SceneGenConfig gen;
        gen.cars = 2;
        gen.pedestrians = 2;
        gen.cyclists = 1;
        Scene scene = generate_scene(800 + s, gen);
        RaycastResult rc = raycast(scene, cfg);
        const double o[3] = {0, 0, cfg.sensor_height};
        for (std::size_t i = 0; i < rc.cloud.points.size(); ++i) {
            const Point& p = rc.cloud.points[i];
            double world[3] = {p.x, p.y, double(p.z) + cfg.sensor_height};
            double d[3] = {world[0] - o[0], world[1] - o[1],
                           world[2] - o[2]};
            double t_hit =
                std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            for (double& v : d) v /= t_hit;
            ++checked;

            if (rc.instance_ids[i] == 0) {
                if (std::fabs(world[2]) > tol) surface_ok = false;
            } else {
                const SceneObject* hit = nullptr;
                for (const auto& obj : scene.objects)
                    if (obj.instance_id == rc.instance_ids[i]) hit = &obj;
                if (!hit) {
                    surface_ok = false;
                    continue;
                }
                bool on = hit->shape == ShapeKind::Box
                              ? on_box_surface(*hit, world, tol)
                              : on_cylinder_surface(*hit, world, tol);
                surface_ok = surface_ok && on;
            }
            // nothing else intersects this ray closer
            for (const auto& obj : scene.objects)
                if (entry_t(obj, o, d) < t_hit - 1e-6) nearest_ok = false;
            if (scene.ground && d[2] < 0 && -o[2] / d[2] < t_hit - 1e-6)
                nearest_ok = false;
        }
    }

    // label round trip through the projection
    GridConfig gcfg;
    gcfg.rows = cfg.rays_v;
    gcfg.cols = cfg.rays_h;
    gcfg.zenith_min = cfg.zenith_min;
    gcfg.zenith_max = cfg.zenith_max;
    gcfg.azimuth_fov = cfg.azimuth_fov;
    Scene scene = generate_scene(990, SceneGenConfig{});
    RaycastResult rc = raycast(scene, cfg);
    SphericalGrid grid = project(rc.cloud, gcfg);
    LabelGrid lg = project_labels(rc.cloud, grid);
    long long occ = 0;
    bool labels_ok = true;
    for (std::size_t cell = 0; cell < grid.mask.size(); ++cell) {
        if (!grid.mask[cell]) continue;
        ++occ;
        labels_ok = labels_ok &&
                    lg.classes[cell] ==
                        rc.cloud.labels[grid.point_index[cell]];
    }
    labels_ok =
        labels_ok && occ == static_cast<long long>(rc.cloud.points.size());

    bool ok = checked >= 1000 && surface_ok && nearest_ok && labels_ok;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%lld rays: surfaces %s, nearest-hit %s, projected label "
                  "round-trip %s",
                  checked, surface_ok ? "exact" : "VIOLATED",
                  nearest_ok ? "verified" : "VIOLATED",
                  labels_ok ? "exact" : "BROKEN");
    verdict(8, ok, buf);
}

// ------------------------------------------------------------ criterion 9

void criterion9() {
    Config cfg;
    cfg.set("grid.rows", "32");
    cfg.set("grid.cols", "64");
    cfg.set("net.profile", "toy");
    GridConfig gcfg = cfg.grid();
    LidarConfig lidar = cfg.lidar();
    Scene scene = generate_scene(11, cfg.scene_gen());
    RaycastResult rc = raycast(scene, lidar);
    SphericalGrid grid = project(rc.cloud, gcfg);
    Network net(Profile::Toy, kNumClasses, 11);
    CrfParams crf = CrfParams::make_default(kNumClasses);

    const int frames = 100;
    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        std::vector<double> fwd_ms(frames), crf_ms(frames);
        Tensor last_fwd, last_crf;
        for (int i = 0; i < frames; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            Activations<float> acts;
            net.forward(grid, acts);
            auto t1 = std::chrono::steady_clock::now();
            Tensor probs = refine(acts.logits, grid, crf);
            auto t2 = std::chrono::steady_clock::now();
            fwd_ms[i] =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            crf_ms[i] =
                std::chrono::duration<double, std::milli>(t2 - t0).count();
            last_fwd = acts.probs;
            last_crf = probs;
        }
        auto stats = [&](const std::vector<double>& v) {
            double mean = 0;
            for (double x : v) mean += x;
            mean /= v.size();
            double var = 0;
            for (double x : v) var += (x - mean) * (x - mean);
            return std::make_pair(mean, std::sqrt(var / (v.size() - 1)));
        };
        return std::make_tuple(stats(fwd_ms), stats(crf_ms), last_fwd,
                               last_crf);
    };

    int max_threads = omp_get_max_threads();
    auto [f1, c1, out1f, out1c] = run(1);
    auto [f2, c2, out2f, out2c] = run(std::max(2, max_threads));
    omp_set_num_threads(max_threads);

    bool identical =
        out1f.data == out2f.data && out1c.data == out2c.data;
    std::printf("  forward      mean %.3f ms  std %.3f ms\n", f2.first,
                f2.second);
    std::printf("  forward+crf  mean %.3f ms  std %.3f ms\n", c2.first,
                c2.second);
    bool ok = identical && f2.first > 0 && c2.first >= f2.first;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "timing over %d frames reported; outputs across thread "
                  "counts %s",
                  frames, identical ? "bit-identical" : "DIFFER");
    verdict(9, ok, buf);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
