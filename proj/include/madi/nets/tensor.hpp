#pragma once

#include <cblas.h>

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace madi {

// Dense row-major tensor. Shapes are small vectors of longs; data is flat.
template <typename T>
struct Tensor {
    std::vector<long> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<long> s) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }

    static long numel_of(const std::vector<long>& s) {
        long n = 1;
        for (long d : s) n *= d;
        return n;
    }

    long numel() const { return static_cast<long>(v.size()); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// C = alpha * op(A) * op(B) + beta * C, row-major.
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                 int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace madi
