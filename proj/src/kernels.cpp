#include "coagents/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace coagents::kern {

const Kernels* avx2_kernels();  // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels* pick(const std::string& name) {
    if (name == "scalar") return &scalar();
    if (name == "avx2") {
        const Kernels* k = avx2_kernels();
        if (k == nullptr || !cpu_has_avx2())
            throw std::invalid_argument("kernels: avx2 not available on this build/CPU");
        return k;
    }
    throw std::invalid_argument("kernels: unknown implementation '" + name + "'");
}

const Kernels*& selected() {
    static const Kernels* sel = [] {
        if (const char* env = std::getenv("COAGENTS_KERNELS")) return pick(env);
        const Kernels* k = avx2_kernels();
        if (k != nullptr && cpu_has_avx2()) return k;
        return &scalar();
    }();
    return sel;
}

}  // namespace

bool avx2_available() { return avx2_kernels() != nullptr && cpu_has_avx2(); }

const Kernels& active() { return *selected(); }

void force(const std::string& name) { selected() = pick(name); }

}  // namespace coagents::kern
