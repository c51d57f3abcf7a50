#include "vecops_internal.hpp"

// Reference backend. The four-lane accumulation mirrors one 256-bit (or
// two 128-bit) vector register; SIMD backends must match it bit for bit.

namespace kgrag::vecops::detail {
namespace {

double scalar_dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s2) + (s1 + s3);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double scalar_squared_norm(const double* a, std::size_t n) {
    return scalar_dot(a, a, n);
}

double scalar_translation_sq_dist(const double* h, const double* r, const double* t,
                                  std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        double d0 = (h[i] + r[i]) - t[i];
        double d1 = (h[i + 1] + r[i + 1]) - t[i + 1];
        double d2 = (h[i + 2] + r[i + 2]) - t[i + 2];
        double d3 = (h[i + 3] + r[i + 3]) - t[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    double s = (s0 + s2) + (s1 + s3);
    for (; i < n; ++i) {
        double d = (h[i] + r[i]) - t[i];
        s += d * d;
    }
    return s;
}

void scalar_translation_residual(const double* h, const double* r, const double* t, double* out,
                                 std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (h[i] + r[i]) - t[i];
}

void scalar_axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scalar_scale(double* x, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] * alpha;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        scalar_dot,  scalar_squared_norm, scalar_translation_sq_dist,
        scalar_translation_residual, scalar_axpy, scalar_scale,
    };
    return table;
}

}  // namespace kgrag::vecops::detail
