// Compiled with -mavx2 -mfma. Only reached after a CPUID check.
#include <immintrin.h>

#include "demn/kernels.hpp"

namespace demn::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* a, const double* b) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[i * k + p], b + p * n, c + i * n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(k, a + i * k, b + j * k);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) axpy(n, a[p * m + i], b + p * n, c + i * n);
}

template <typename VecOp, typename ScalarOp>
inline void binary(std::size_t n, const double* a, const double* b, double* out, VecOp vop, ScalarOp sop) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = sop(a[i], b[i]);
}

void add(std::size_t n, const double* a, const double* b, double* out) {
    binary(n, a, b, out, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
           [](double x, double y) { return x + y; });
}

void sub(std::size_t n, const double* a, const double* b, double* out) {
    binary(n, a, b, out, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
           [](double x, double y) { return x - y; });
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    binary(n, a, b, out, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
           [](double x, double y) { return x * y; });
}

void mul_acc(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), _mm256_loadu_pd(out + i)));
    for (; i < n; ++i) out[i] += a[i] * b[i];
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{Backend::avx2, gemm_nn, gemm_nt, gemm_tn, dot, axpy, add, sub, mul, mul_acc};
    return t;
}

}  // namespace demn::kernels
