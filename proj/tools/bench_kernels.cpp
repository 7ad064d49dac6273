// Compares the OpenMP kernels against the serial reference loops on
// realistic layer geometries and reports speedups. The reference results
// double as a correctness check on every run.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "sseg/ops.hpp"
#include "sseg/ref_kernels.hpp"
#include "sseg/tensor.hpp"

using namespace sseg;

namespace {

Tensor randn(const std::vector<int>& dims, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
    Tensor t(dims);
    for (auto& v : t.data) v = uni(rng);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::fabs(double(a.data[i]) - b.data[i]));
    return worst;
}

struct Result {
    Tensor out;
    double ms;
};

Result timed(const std::function<Tensor()>& fn, int reps) {
    Tensor out = fn();  // warm-up, also the checked output
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) out = fn();
    auto t1 = std::chrono::steady_clock::now();
    return {std::move(out),
            std::chrono::duration<double, std::milli>(t1 - t0).count() / reps};
}

void report(const std::string& name, const Result& serial,
            const Result& parallel) {
    double diff = max_abs_diff(serial.out, parallel.out);
    std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx"
                "   max|diff| %.2e\n",
                name.c_str(), serial.ms, parallel.ms,
                serial.ms / parallel.ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::max(1, std::atoi(argv[1]));
    std::printf("threads=%d reps=%d\n", omp_get_max_threads(), reps);

    {
        // encoder-style 3x3 convolution, 64x256x32 -> 64
        Tensor in = randn({64, 256, 32}, 1);
        Tensor w = randn({3, 3, 32, 64}, 2);
        Tensor b = randn({64}, 3);
        ConvSpec s;
        s.kernel_h = s.kernel_w = 3;
        s.pad_h = s.pad_w = 1;
        Result rs = timed([&] { return ref::conv2d(in, w, b, s); }, reps);
        Result rp = timed([&] { return conv2d(in, w, b, s); }, reps);
        report("conv2d 3x3 64x256x32->64", rs, rp);
    }
    {
        // squeeze-style 1x1 convolution
        Tensor in = randn({64, 128, 128}, 4);
        Tensor w = randn({1, 1, 128, 32}, 5);
        Tensor b = randn({32}, 6);
        ConvSpec s;
        Result rs = timed([&] { return ref::conv2d(in, w, b, s); }, reps);
        Result rp = timed([&] { return conv2d(in, w, b, s); }, reps);
        report("conv2d 1x1 64x128x128->32", rs, rp);
    }
    {
        // decoder width upsampler
        Tensor in = randn({64, 64, 64}, 7);
        Tensor w = randn({1, 4, 64, 64}, 8);
        Tensor b = randn({64}, 9);
        ConvSpec s = deconv_width_spec();
        Result rs = timed([&] { return ref::deconv2d(in, w, b, s); }, reps);
        Result rp = timed([&] { return deconv2d(in, w, b, s); }, reps);
        report("deconv 1x4 64x64x64", rs, rp);
    }
    {
        Tensor in = randn({64, 512, 64}, 10);
        Result rs = timed([&] { return ref::maxpool_width(in, 2, 2); }, reps);
        Result rp = timed([&] { return maxpool_width(in, 2, 2); }, reps);
        report("maxpool w2s2 64x512x64", rs, rp);
    }
    {
        Tensor in = randn({64, 512, 4}, 11);
        Result rs = timed([&] { return ref::softmax_channels(in); }, reps);
        Result rp = timed([&] { return softmax_channels(in); }, reps);
        report("softmax 64x512x4", rs, rp);
    }
    return 0;
}
