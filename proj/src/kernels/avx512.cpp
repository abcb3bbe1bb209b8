#include <immintrin.h>

#include "freeconv/kernels.hpp"

// Compiled with -mavx512f; only dispatched to when CPUID reports AVX-512F.

namespace freeconv::kernels {

MomentSums moment_sums_avx512(const double* x, const double* w, std::size_t n, std::complex<double> z) {
    const __m512d zr = _mm512_set1_pd(z.real());
    const __m512d zi = _mm512_set1_pd(z.imag());
    const __m512d zi2 = _mm512_mul_pd(zi, zi);
    const __m512d one = _mm512_set1_pd(1.0);
    __m512d mr = _mm512_setzero_pd(), mi = _mm512_setzero_pd();
    __m512d s1r = _mm512_setzero_pd(), s1i = _mm512_setzero_pd();
    __m512d s2r = _mm512_setzero_pd(), s2i = _mm512_setzero_pd();
    __m512d s3r = _mm512_setzero_pd(), s3i = _mm512_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        const __m512d xv = _mm512_loadu_pd(x + k);
        const __m512d wv = _mm512_loadu_pd(w + k);
        const __m512d dr = _mm512_sub_pd(xv, zr);
        const __m512d den = _mm512_fmadd_pd(dr, dr, zi2);
        const __m512d inv = _mm512_div_pd(one, den);
        const __m512d ur = _mm512_mul_pd(dr, inv);
        const __m512d ui = _mm512_mul_pd(zi, inv);
        const __m512d px = _mm512_mul_pd(wv, xv);
        mr = _mm512_fmadd_pd(wv, ur, mr);
        mi = _mm512_fmadd_pd(wv, ui, mi);
        s1r = _mm512_fmadd_pd(px, ur, s1r);
        s1i = _mm512_fmadd_pd(px, ui, s1i);
        const __m512d u2r = _mm512_fmsub_pd(ur, ur, _mm512_mul_pd(ui, ui));
        const __m512d u2i = _mm512_mul_pd(_mm512_add_pd(ur, ur), ui);
        s2r = _mm512_fmadd_pd(px, u2r, s2r);
        s2i = _mm512_fmadd_pd(px, u2i, s2i);
        const __m512d u3r = _mm512_fmsub_pd(u2r, ur, _mm512_mul_pd(u2i, ui));
        const __m512d u3i = _mm512_fmadd_pd(u2r, ui, _mm512_mul_pd(u2i, ur));
        s3r = _mm512_fmadd_pd(px, u3r, s3r);
        s3i = _mm512_fmadd_pd(px, u3i, s3i);
    }
    MomentSums tail = moment_sums_scalar(x + k, w + k, n - k, z);
    return {
        tail.m + std::complex<double>(_mm512_reduce_add_pd(mr), _mm512_reduce_add_pd(mi)),
        tail.s1 + std::complex<double>(_mm512_reduce_add_pd(s1r), _mm512_reduce_add_pd(s1i)),
        tail.s2 + std::complex<double>(_mm512_reduce_add_pd(s2r), _mm512_reduce_add_pd(s2i)),
        tail.s3 + std::complex<double>(_mm512_reduce_add_pd(s3r), _mm512_reduce_add_pd(s3i)),
    };
}

MomentSumsReal moment_sums_real_avx512(const double* x, const double* w, std::size_t n, double e) {
    const __m512d ev = _mm512_set1_pd(e);
    const __m512d one = _mm512_set1_pd(1.0);
    __m512d m = _mm512_setzero_pd(), s1 = _mm512_setzero_pd();
    __m512d s2 = _mm512_setzero_pd(), s3 = _mm512_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        const __m512d xv = _mm512_loadu_pd(x + k);
        const __m512d wv = _mm512_loadu_pd(w + k);
        const __m512d u = _mm512_div_pd(one, _mm512_sub_pd(xv, ev));
        const __m512d px = _mm512_mul_pd(wv, xv);
        const __m512d u2 = _mm512_mul_pd(u, u);
        m = _mm512_fmadd_pd(wv, u, m);
        s1 = _mm512_fmadd_pd(px, u, s1);
        s2 = _mm512_fmadd_pd(px, u2, s2);
        s3 = _mm512_fmadd_pd(px, _mm512_mul_pd(u2, u), s3);
    }
    MomentSumsReal tail = moment_sums_real_scalar(x + k, w + k, n - k, e);
    return {tail.m + _mm512_reduce_add_pd(m), tail.s1 + _mm512_reduce_add_pd(s1),
            tail.s2 + _mm512_reduce_add_pd(s2), tail.s3 + _mm512_reduce_add_pd(s3)};
}

}  // namespace freeconv::kernels
