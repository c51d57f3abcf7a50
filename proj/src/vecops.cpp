#include "kgrag/vecops.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kgrag/errors.hpp"
#include "vecops_internal.hpp"

namespace kgrag::vecops {
namespace {

using detail::KernelTable;

const KernelTable* table_for(Kernel k) {
    switch (k) {
        case Kernel::scalar:
            return &detail::scalar_table();
        case Kernel::avx2:
#if defined(KGRAG_HAVE_AVX2)
            if (__builtin_cpu_supports("avx2")) return &detail::avx2_table();
#endif
            return nullptr;
        case Kernel::neon:
#if defined(KGRAG_HAVE_NEON)
            // Every aarch64 core has Advanced SIMD.
            return &detail::neon_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

Kernel detect() {
    if (const char* env = std::getenv("KGRAG_VECOPS")) {
        if (std::strcmp(env, "scalar") == 0) return Kernel::scalar;
        if (std::strcmp(env, "avx2") == 0 && table_for(Kernel::avx2)) return Kernel::avx2;
        if (std::strcmp(env, "neon") == 0 && table_for(Kernel::neon)) return Kernel::neon;
    }
    if (table_for(Kernel::avx2)) return Kernel::avx2;
    if (table_for(Kernel::neon)) return Kernel::neon;
    return Kernel::scalar;
}

struct Dispatch {
    Kernel kernel;
    const KernelTable* table;
};

Dispatch make_dispatch(Kernel k) { return Dispatch{k, table_for(k)}; }

std::atomic<const Dispatch*> g_active{nullptr};

const Dispatch* storage(Kernel k) {
    static Dispatch slots[3] = {make_dispatch(Kernel::scalar), make_dispatch(Kernel::avx2),
                                make_dispatch(Kernel::neon)};
    return &slots[static_cast<int>(k)];
}

const Dispatch& active() {
    const Dispatch* d = g_active.load(std::memory_order_acquire);
    if (!d) {
        d = storage(detect());
        g_active.store(d, std::memory_order_release);
    }
    return *d;
}

}  // namespace

const char* kernel_name(Kernel k) {
    switch (k) {
        case Kernel::scalar:
            return "scalar";
        case Kernel::avx2:
            return "avx2";
        case Kernel::neon:
            return "neon";
    }
    return "?";
}

bool kernel_available(Kernel k) { return table_for(k) != nullptr; }

Kernel active_kernel() { return active().kernel; }

void force_kernel(Kernel k) {
    if (!kernel_available(k)) {
        raise("kernel-unavailable",
              std::string("vecops backend not available on this CPU: ") + kernel_name(k));
    }
    g_active.store(storage(k), std::memory_order_release);
}

void reset_kernel() { g_active.store(storage(detect()), std::memory_order_release); }

double dot(const double* a, const double* b, std::size_t n) { return active().table->dot(a, b, n); }

double squared_norm(const double* a, std::size_t n) { return active().table->squared_norm(a, n); }

double translation_sq_dist(const double* h, const double* r, const double* t, std::size_t n) {
    return active().table->translation_sq_dist(h, r, t, n);
}

void translation_residual(const double* h, const double* r, const double* t, double* out,
                          std::size_t n) {
    active().table->translation_residual(h, r, t, out, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().table->axpy(alpha, x, y, n);
}

void scale(double* x, double alpha, std::size_t n) { active().table->scale(x, alpha, n); }

}  // namespace kgrag::vecops
