#include <atomic>
#include <cstdlib>
#include <string>

#include "demn/kernels.hpp"

namespace demn::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(DEMN_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_choice() {
    if (const char* env = std::getenv("DEMN_KERNELS"); env != nullptr && std::string(env) == "scalar")
        return &scalar_table();
    return &table(Backend::avx2);
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{initial_choice()};
    return ptr;
}

}  // namespace

bool available(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
            return cpu_has_avx2();
    }
    return false;
}

const KernelTable& table(Backend backend) {
#if defined(DEMN_WITH_AVX2)
    if (backend == Backend::avx2 && available(Backend::avx2)) return avx2_table();
#endif
    (void)backend;
    return scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Backend backend) {
    if (!available(backend)) return false;
    current().store(&table(backend), std::memory_order_relaxed);
    return true;
}

std::string_view name(Backend backend) {
    return backend == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace demn::kernels
