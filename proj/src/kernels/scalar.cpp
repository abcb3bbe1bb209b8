#include "freeconv/kernels.hpp"

namespace freeconv::kernels {

// Reference implementation. The AVX variants must agree with this one to
// rounding noise; the equivalence tests in test_kernels.cpp enforce that.
MomentSums moment_sums_scalar(const double* x, const double* w, std::size_t n, std::complex<double> z) {
    const double zr = z.real(), zi = z.imag();
    double mr = 0, mi = 0, s1r = 0, s1i = 0, s2r = 0, s2i = 0, s3r = 0, s3i = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dr = x[k] - zr;            // d = x - z, imag part is -zi
        const double den = dr * dr + zi * zi;
        const double inv = 1.0 / den;
        const double ur = dr * inv;             // u = 1/d = conj(d)/|d|^2
        const double ui = zi * inv;
        const double wk = w[k];
        const double px = wk * x[k];
        mr += wk * ur;
        mi += wk * ui;
        s1r += px * ur;
        s1i += px * ui;
        const double u2r = ur * ur - ui * ui;   // u^2
        const double u2i = 2.0 * ur * ui;
        s2r += px * u2r;
        s2i += px * u2i;
        const double u3r = u2r * ur - u2i * ui; // u^3
        const double u3i = u2r * ui + u2i * ur;
        s3r += px * u3r;
        s3i += px * u3i;
    }
    return {{mr, mi}, {s1r, s1i}, {s2r, s2i}, {s3r, s3i}};
}

MomentSumsReal moment_sums_real_scalar(const double* x, const double* w, std::size_t n, double e) {
    double m = 0, s1 = 0, s2 = 0, s3 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = 1.0 / (x[k] - e);
        const double wk = w[k];
        const double px = wk * x[k];
        const double u2 = u * u;
        m += wk * u;
        s1 += px * u;
        s2 += px * u2;
        s3 += px * u2 * u;
    }
    return {m, s1, s2, s3};
}

}  // namespace freeconv::kernels
