#pragma once

#include <complex>
#include <cstddef>

namespace freeconv::kernels {

// Moment sums of a weighted point set against resolvent kernels:
//   m  = sum_i w_i          / (x_i - z)
//   s1 = sum_i w_i x_i      / (x_i - z)
//   s2 = sum_i w_i x_i      / (x_i - z)^2
//   s3 = sum_i w_i x_i      / (x_i - z)^3
// Stieltjes/M/L transforms and their first two derivatives are assembled
// algebraically from these four sums, so this is the only arithmetic inner
// loop of the transform layer. Empirical-spectral measures carry thousands of
// atoms and the solvers evaluate transforms at every iterate of every grid
// point, which makes this loop the hot spot of the whole library.
struct MomentSums {
    std::complex<double> m, s1, s2, s3;
};

struct MomentSumsReal {
    double m, s1, s2, s3;
};

enum class Backend { Scalar, Avx2, Avx512 };

const char* backend_name(Backend b);

// Backend chosen at startup from CPUID; force_backend overrides it (used by
// the equivalence tests), reset_backend restores the detected one.
Backend active_backend();
void force_backend(Backend b);
void reset_backend();
bool backend_available(Backend b);

MomentSums moment_sums(const double* x, const double* w, std::size_t n, std::complex<double> z);
MomentSumsReal moment_sums_real(const double* x, const double* w, std::size_t n, double e);

// Fixed-backend entry points. All variants are compiled unconditionally; the
// AVX ones must only be called when backend_available says so.
MomentSums moment_sums_scalar(const double* x, const double* w, std::size_t n, std::complex<double> z);
MomentSumsReal moment_sums_real_scalar(const double* x, const double* w, std::size_t n, double e);
MomentSums moment_sums_avx2(const double* x, const double* w, std::size_t n, std::complex<double> z);
MomentSumsReal moment_sums_real_avx2(const double* x, const double* w, std::size_t n, double e);
MomentSums moment_sums_avx512(const double* x, const double* w, std::size_t n, std::complex<double> z);
MomentSumsReal moment_sums_real_avx512(const double* x, const double* w, std::size_t n, double e);

}  // namespace freeconv::kernels
