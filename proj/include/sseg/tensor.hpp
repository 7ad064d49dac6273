#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sseg {

struct TensorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SSEG_CHECK(cond, msg)                                                  \
    do {                                                                       \
        if (!(cond)) throw ::sseg::TensorError(msg);                           \
    } while (0)

// Dense row-major tensor. Gradient buffer allocated on demand; same layout
// as data. Two instantiations are used: float for the operational path,
// double for finite-difference gradient checking.
template <typename T>
struct TensorT {
    std::vector<int> dims;
    std::vector<T> data;
    std::vector<T> grad;  // empty unless requires_grad() was called

    TensorT() = default;

    explicit TensorT(std::vector<int> d) : dims(std::move(d)) {
        for (int e : dims) SSEG_CHECK(e > 0, "tensor extent must be positive");
        data.assign(numel(), T(0));
    }

    static TensorT zeros(std::vector<int> d) { return TensorT(std::move(d)); }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int e : dims) n *= static_cast<std::size_t>(e);
        return n;
    }

    int rank() const { return static_cast<int>(dims.size()); }

    void requires_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
    }
    bool has_grad() const { return !grad.empty(); }
    void zero_grad() {
        std::fill(grad.begin(), grad.end(), T(0));
    }

    // Row-major offsets for the ranks the pipeline uses.
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * dims[1] + j;
    }
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
    }
    std::size_t idx(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k) *
                   dims[3] +
               l;
    }

    T& at(int i, int j) { return data[idx(i, j)]; }
    T at(int i, int j) const { return data[idx(i, j)]; }
    T& at(int i, int j, int k) { return data[idx(i, j, k)]; }
    T at(int i, int j, int k) const { return data[idx(i, j, k)]; }
    T& at(int i, int j, int k, int l) { return data[idx(i, j, k, l)]; }
    T at(int i, int j, int k, int l) const { return data[idx(i, j, k, l)]; }

    bool same_shape(const TensorT& o) const { return dims == o.dims; }

    void check_finite(const char* what) const {
        for (T v : data)
            SSEG_CHECK(std::isfinite(static_cast<double>(v)),
                       std::string("non-finite value in ") + what);
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T, typename U>
TensorT<U> tensor_cast(const TensorT<T>& t) {
    TensorT<U> out(t.dims);
    for (std::size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = static_cast<U>(t.data[i]);
    return out;
}

}  // namespace sseg
