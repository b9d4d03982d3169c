#include <atomic>
#include <cstdlib>
#include <string>

#include "mlenkf/kernels.hpp"

namespace mlenkf::kernels {
namespace {

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
            return detail::neon_table() != nullptr;
    }
    return false;
}

const KernelTable* best_available() {
    if (const char* forced = std::getenv("MLENKF_ISA")) {
        const std::string name(forced);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (name == isa_name(isa) && cpu_supports(isa)) return &table(isa);
        }
    }
    if (cpu_supports(Isa::avx2)) return detail::avx2_table();
    if (cpu_supports(Isa::neon)) return detail::neon_table();
    return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> selected{best_available()};
    return selected;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "unknown";
}

bool available(Isa isa) { return cpu_supports(isa); }

const KernelTable& table(Isa isa) {
    require(cpu_supports(isa), "kernel variant not available: " + std::string(isa_name(isa)));
    switch (isa) {
        case Isa::avx2:
            return *detail::avx2_table();
        case Isa::neon:
            return *detail::neon_table();
        default:
            return detail::scalar_table();
    }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace mlenkf::kernels
