#pragma once

#include <cstddef>
#include <string>

namespace kgrag::vecops {

// Double-precision kernels behind the scoring, training and retrieval
// inner loops. A runtime-selected backend (scalar everywhere, AVX2 on
// x86-64, NEON on aarch64) implements each kernel.
//
// Bit-identity contract: every reduction accumulates into four partial
// sums, lane j taking elements j, j+4, j+8, ..., combined as
// (s0 + s2) + (s1 + s3), then the scalar tail in element order. Elementwise
// kernels evaluate in the written operand order with no fma contraction.
// All backends therefore return bit-identical doubles for identical
// inputs, which keeps seeded runs reproducible regardless of the CPU the
// dispatcher picks. The equivalence tests assert this bit-for-bit.

double dot(const double* a, const double* b, std::size_t n);
double squared_norm(const double* a, std::size_t n);

/// sum_i ((h[i] + r[i]) - t[i])^2 — the translation distance behind
/// score(h, r, t) = -||h + r - t||^2.
double translation_sq_dist(const double* h, const double* r, const double* t, std::size_t n);

/// out[i] = (h[i] + r[i]) - t[i]
void translation_residual(const double* h, const double* r, const double* t, double* out,
                          std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// x[i] *= alpha
void scale(double* x, double alpha, std::size_t n);

enum class Kernel { scalar, avx2, neon };

const char* kernel_name(Kernel k);
bool kernel_available(Kernel k);

/// Backend currently in use.
Kernel active_kernel();

/// Pin a backend (tests use this to cross-check backends). Throws
/// Error("kernel-unavailable") if the CPU lacks it.
void force_kernel(Kernel k);

/// Back to auto-detection: best available backend, unless the environment
/// variable KGRAG_VECOPS names one of "scalar", "avx2", "neon".
void reset_kernel();

}  // namespace kgrag::vecops
