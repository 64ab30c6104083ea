#pragma once
// Dense double-precision inner loops used by the tensor layer.
//
// Every kernel has a scalar reference implementation. Wider variants (AVX2+FMA
// on x86-64) are compiled into separate translation units and picked once at
// startup from CPUID. Results agree with the reference up to reassociation of
// floating-point sums; the equivalence tests pin that tolerance.

#include <cstddef>
#include <string_view>

namespace demn::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    Backend backend;
    // c(m×n) += a(m×k) · b(k×n)
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    // c(m×n) += a(m×k) · b(n×k)ᵀ
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    // c(m×n) += a(k×m)ᵀ · b(k×n)
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    double (*dot)(std::size_t n, const double* a, const double* b);
    // y += alpha · x
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    void (*add)(std::size_t n, const double* a, const double* b, double* out);
    void (*sub)(std::size_t n, const double* a, const double* b, double* out);
    void (*mul)(std::size_t n, const double* a, const double* b, double* out);
    // out += a ⊙ b
    void (*mul_acc)(std::size_t n, const double* a, const double* b, double* out);
};

const KernelTable& scalar_table();
#if defined(DEMN_WITH_AVX2)
const KernelTable& avx2_table();
#endif

/// True when the backend was compiled in and the running CPU supports it.
bool available(Backend backend);

/// Table for a specific backend; falls back to scalar when unavailable.
const KernelTable& table(Backend backend);

/// The table used by the tensor layer. Chosen on first use: the widest
/// available backend, unless DEMN_KERNELS=scalar is set in the environment.
const KernelTable& active();

/// Overrides the runtime choice. Returns false (and changes nothing) when the
/// backend is unavailable.
bool select(Backend backend);

std::string_view name(Backend backend);

}  // namespace demn::kernels
