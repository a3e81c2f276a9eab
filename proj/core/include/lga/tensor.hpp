#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <vector>

namespace lga {

/// Dense row-major tensor of doubles. Rank is dynamic; the model only ever
/// uses rank 1, 2, 3 and 4.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(static_cast<std::size_t>(numel_of(shape)), 0.0);
    }

    static long numel_of(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) n *= d;
        return n;
    }

    long numel() const { return static_cast<long>(v.size()); }
    bool empty() const { return v.empty(); }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    // Indexing helpers for cold paths; hot loops use raw pointers.
    double& at2(int i, int j) {
        assert(shape.size() == 2);
        return v[static_cast<std::size_t>(i) * shape[1] + j];
    }
    double at2(int i, int j) const {
        assert(shape.size() == 2);
        return v[static_cast<std::size_t>(i) * shape[1] + j];
    }
    double& at3(int c, int i, int j) {
        assert(shape.size() == 3);
        return v[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    double at3(int c, int i, int j) const {
        assert(shape.size() == 3);
        return v[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    double& at4(int o, int c, int i, int j) {
        assert(shape.size() == 4);
        return v[((static_cast<std::size_t>(o) * shape[1] + c) * shape[2] + i) * shape[3] + j];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    double mean() const {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }
};

} // namespace lga
