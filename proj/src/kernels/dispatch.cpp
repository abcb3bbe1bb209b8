#include "freeconv/errors.hpp"
#include "freeconv/kernels.hpp"

namespace freeconv::kernels {

namespace {

Backend detect() {
#if defined(__x86_64__) || defined(__i386__)
    if (__builtin_cpu_supports("avx512f")) return Backend::Avx512;
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
    return Backend::Scalar;
}

Backend g_backend = detect();

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Avx512: return "avx512";
    }
    return "?";
}

bool backend_available(Backend b) {
#if defined(__x86_64__) || defined(__i386__)
    if (b == Backend::Avx512) return __builtin_cpu_supports("avx512f");
    if (b == Backend::Avx2) return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    if (b != Backend::Scalar) return false;
#endif
    return true;
}

Backend active_backend() { return g_backend; }

void force_backend(Backend b) {
    if (!backend_available(b)) raise(Errc::ConfigError, "kernel backend not available on this CPU");
    g_backend = b;
}

void reset_backend() { g_backend = detect(); }

MomentSums moment_sums(const double* x, const double* w, std::size_t n, std::complex<double> z) {
    switch (g_backend) {
        case Backend::Avx512: return moment_sums_avx512(x, w, n, z);
        case Backend::Avx2: return moment_sums_avx2(x, w, n, z);
        default: return moment_sums_scalar(x, w, n, z);
    }
}

MomentSumsReal moment_sums_real(const double* x, const double* w, std::size_t n, double e) {
    switch (g_backend) {
        case Backend::Avx512: return moment_sums_real_avx512(x, w, n, e);
        case Backend::Avx2: return moment_sums_real_avx2(x, w, n, e);
        default: return moment_sums_real_scalar(x, w, n, e);
    }
}

}  // namespace freeconv::kernels
