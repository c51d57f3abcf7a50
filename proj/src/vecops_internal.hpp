#pragma once

#include <cstddef>

// Backend entry points. Each translation unit implements the same blocked
// accumulation order documented in kgrag/vecops.hpp.

namespace kgrag::vecops::detail {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*squared_norm)(const double*, std::size_t);
    double (*translation_sq_dist)(const double*, const double*, const double*, std::size_t);
    void (*translation_residual)(const double*, const double*, const double*, double*,
                                 std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
};

const KernelTable& scalar_table();

#if defined(KGRAG_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(KGRAG_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace kgrag::vecops::detail
