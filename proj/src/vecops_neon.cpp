#include "vecops_internal.hpp"

#if defined(KGRAG_HAVE_NEON)

#include <arm_neon.h>

// NEON backend. float64x2 is two lanes wide, so a pair of registers covers
// the four accumulation lanes: accA holds lanes {0,1}, accB lanes {2,3}.
// vaddq_f64(accA, accB) yields {l0+l2, l1+l3}; summing its two lanes gives
// the documented combine order (l0 + l2) + (l1 + l3).

namespace kgrag::vecops::detail {
namespace {

inline double hsum4(float64x2_t acc_a, float64x2_t acc_b) {
    float64x2_t s2 = vaddq_f64(acc_a, acc_b);
    return vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
}

double neon_dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc_a = vdupq_n_f64(0.0);
    float64x2_t acc_b = vdupq_n_f64(0.0);
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        acc_a = vaddq_f64(acc_a, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc_b = vaddq_f64(acc_b, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double s = hsum4(acc_a, acc_b);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double neon_squared_norm(const double* a, std::size_t n) {
    return neon_dot(a, a, n);
}

double neon_translation_sq_dist(const double* h, const double* r, const double* t,
                                std::size_t n) {
    float64x2_t acc_a = vdupq_n_f64(0.0);
    float64x2_t acc_b = vdupq_n_f64(0.0);
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        float64x2_t d0 = vsubq_f64(vaddq_f64(vld1q_f64(h + i), vld1q_f64(r + i)),
                                   vld1q_f64(t + i));
        float64x2_t d1 = vsubq_f64(vaddq_f64(vld1q_f64(h + i + 2), vld1q_f64(r + i + 2)),
                                   vld1q_f64(t + i + 2));
        acc_a = vaddq_f64(acc_a, vmulq_f64(d0, d0));
        acc_b = vaddq_f64(acc_b, vmulq_f64(d1, d1));
    }
    double s = hsum4(acc_a, acc_b);
    for (; i < n; ++i) {
        double d = (h[i] + r[i]) - t[i];
        s += d * d;
    }
    return s;
}

void neon_translation_residual(const double* h, const double* r, const double* t, double* out,
                               std::size_t n) {
    std::size_t i = 0;
    std::size_t n2 = n & ~std::size_t{1};
    for (; i < n2; i += 2) {
        vst1q_f64(out + i,
                  vsubq_f64(vaddq_f64(vld1q_f64(h + i), vld1q_f64(r + i)), vld1q_f64(t + i)));
    }
    for (; i < n; ++i) out[i] = (h[i] + r[i]) - t[i];
}

void neon_axpy(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    std::size_t n2 = n & ~std::size_t{1};
    for (; i < n2; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void neon_scale(double* x, double alpha, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    std::size_t n2 = n & ~std::size_t{1};
    for (; i < n2; i += 2) {
        vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
    }
    for (; i < n; ++i) x[i] = x[i] * alpha;
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{
        neon_dot,  neon_squared_norm, neon_translation_sq_dist,
        neon_translation_residual, neon_axpy, neon_scale,
    };
    return table;
}

}  // namespace kgrag::vecops::detail

#endif  // KGRAG_HAVE_NEON
