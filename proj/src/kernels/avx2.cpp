#include <immintrin.h>

#include "freeconv/kernels.hpp"

// Compiled with -mavx2 -mfma (see src/CMakeLists.txt); only dispatched to
// when CPUID reports both.

namespace freeconv::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

MomentSums moment_sums_avx2(const double* x, const double* w, std::size_t n, std::complex<double> z) {
    const __m256d zr = _mm256_set1_pd(z.real());
    const __m256d zi = _mm256_set1_pd(z.imag());
    const __m256d zi2 = _mm256_mul_pd(zi, zi);
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d mr = _mm256_setzero_pd(), mi = _mm256_setzero_pd();
    __m256d s1r = _mm256_setzero_pd(), s1i = _mm256_setzero_pd();
    __m256d s2r = _mm256_setzero_pd(), s2i = _mm256_setzero_pd();
    __m256d s3r = _mm256_setzero_pd(), s3i = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xv = _mm256_loadu_pd(x + k);
        const __m256d wv = _mm256_loadu_pd(w + k);
        const __m256d dr = _mm256_sub_pd(xv, zr);
        const __m256d den = _mm256_fmadd_pd(dr, dr, zi2);
        const __m256d inv = _mm256_div_pd(one, den);
        const __m256d ur = _mm256_mul_pd(dr, inv);
        const __m256d ui = _mm256_mul_pd(zi, inv);
        const __m256d px = _mm256_mul_pd(wv, xv);
        mr = _mm256_fmadd_pd(wv, ur, mr);
        mi = _mm256_fmadd_pd(wv, ui, mi);
        s1r = _mm256_fmadd_pd(px, ur, s1r);
        s1i = _mm256_fmadd_pd(px, ui, s1i);
        const __m256d u2r = _mm256_fmsub_pd(ur, ur, _mm256_mul_pd(ui, ui));
        const __m256d u2i = _mm256_mul_pd(_mm256_add_pd(ur, ur), ui);
        s2r = _mm256_fmadd_pd(px, u2r, s2r);
        s2i = _mm256_fmadd_pd(px, u2i, s2i);
        const __m256d u3r = _mm256_fmsub_pd(u2r, ur, _mm256_mul_pd(u2i, ui));
        const __m256d u3i = _mm256_fmadd_pd(u2r, ui, _mm256_mul_pd(u2i, ur));
        s3r = _mm256_fmadd_pd(px, u3r, s3r);
        s3i = _mm256_fmadd_pd(px, u3i, s3i);
    }
    MomentSums tail = moment_sums_scalar(x + k, w + k, n - k, z);
    return {
        tail.m + std::complex<double>(hsum(mr), hsum(mi)),
        tail.s1 + std::complex<double>(hsum(s1r), hsum(s1i)),
        tail.s2 + std::complex<double>(hsum(s2r), hsum(s2i)),
        tail.s3 + std::complex<double>(hsum(s3r), hsum(s3i)),
    };
}

MomentSumsReal moment_sums_real_avx2(const double* x, const double* w, std::size_t n, double e) {
    const __m256d ev = _mm256_set1_pd(e);
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d m = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xv = _mm256_loadu_pd(x + k);
        const __m256d wv = _mm256_loadu_pd(w + k);
        const __m256d u = _mm256_div_pd(one, _mm256_sub_pd(xv, ev));
        const __m256d px = _mm256_mul_pd(wv, xv);
        const __m256d u2 = _mm256_mul_pd(u, u);
        m = _mm256_fmadd_pd(wv, u, m);
        s1 = _mm256_fmadd_pd(px, u, s1);
        s2 = _mm256_fmadd_pd(px, u2, s2);
        s3 = _mm256_fmadd_pd(px, _mm256_mul_pd(u2, u), s3);
    }
    MomentSumsReal tail = moment_sums_real_scalar(x + k, w + k, n - k, e);
    return {tail.m + hsum(m), tail.s1 + hsum(s1), tail.s2 + hsum(s2), tail.s3 + hsum(s3)};
}

}  // namespace freeconv::kernels
