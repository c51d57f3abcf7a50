#include "vecops_internal.hpp"

#if defined(KGRAG_HAVE_AVX2)

#include <immintrin.h>

// AVX2 backend. One __m256d register holds the four accumulation lanes the
// scalar reference keeps by hand; mul and add stay separate (no fma) so
// per-lane arithmetic matches the scalar backend exactly.

namespace kgrag::vecops::detail {
namespace {

// (l0 + l2) + (l1 + l3), the documented combine order.
inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);    // {l0, l1}
    __m128d hi = _mm256_extractf128_pd(v, 1);  // {l2, l3}
    __m128d s2 = _mm_add_pd(lo, hi);           // {l0+l2, l1+l3}
    __m128d swapped = _mm_unpackhi_pd(s2, s2);
    return _mm_cvtsd_f64(_mm_add_sd(s2, swapped));
}

double avx2_dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double avx2_squared_norm(const double* a, std::size_t n) {
    return avx2_dot(a, a, n);
}

double avx2_translation_sq_dist(const double* h, const double* r, const double* t,
                                std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        __m256d vh = _mm256_loadu_pd(h + i);
        __m256d vr = _mm256_loadu_pd(r + i);
        __m256d vt = _mm256_loadu_pd(t + i);
        __m256d d = _mm256_sub_pd(_mm256_add_pd(vh, vr), vt);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = (h[i] + r[i]) - t[i];
        s += d * d;
    }
    return s;
}

void avx2_translation_residual(const double* h, const double* r, const double* t, double* out,
                               std::size_t n) {
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        __m256d vh = _mm256_loadu_pd(h + i);
        __m256d vr = _mm256_loadu_pd(r + i);
        __m256d vt = _mm256_loadu_pd(t + i);
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_add_pd(vh, vr), vt));
    }
    for (; i < n; ++i) out[i] = (h[i] + r[i]) - t[i];
}

void avx2_axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void avx2_scale(double* x, double alpha, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) x[i] = x[i] * alpha;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        avx2_dot,  avx2_squared_norm, avx2_translation_sq_dist,
        avx2_translation_residual, avx2_axpy, avx2_scale,
    };
    return table;
}

}  // namespace kgrag::vecops::detail

#endif  // KGRAG_HAVE_AVX2
