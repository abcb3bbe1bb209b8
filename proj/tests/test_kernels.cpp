#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "freeconv/kernels.hpp"

using namespace freeconv::kernels;

namespace {

struct Inputs {
    std::vector<double> x, w;
};

Inputs random_inputs(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> loc(0.3, 5.0), wt(0.0, 1.0);
    Inputs in;
    in.x.resize(n);
    in.w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        in.x[i] = loc(rng);
        in.w[i] = wt(rng);
    }
    return in;
}

double rel_err(std::complex<double> a, std::complex<double> b) {
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("simd variants match the scalar reference") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> re(-6.0, 8.0), im(1e-6, 4.0);
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{7}, std::size_t{64},
                          std::size_t{1001}, std::size_t{4097}}) {
        const Inputs in = random_inputs(rng, n);
        for (int rep = 0; rep < 5; ++rep) {
            const std::complex<double> z(re(rng), im(rng));
            const MomentSums ref = moment_sums_scalar(in.x.data(), in.w.data(), n, z);
            if (backend_available(Backend::Avx2)) {
                const MomentSums got = moment_sums_avx2(in.x.data(), in.w.data(), n, z);
                CHECK(rel_err(got.m, ref.m) < 1e-13);
                CHECK(rel_err(got.s1, ref.s1) < 1e-13);
                CHECK(rel_err(got.s2, ref.s2) < 1e-13);
                CHECK(rel_err(got.s3, ref.s3) < 1e-13);
            }
            if (backend_available(Backend::Avx512)) {
                const MomentSums got = moment_sums_avx512(in.x.data(), in.w.data(), n, z);
                CHECK(rel_err(got.m, ref.m) < 1e-13);
                CHECK(rel_err(got.s3, ref.s3) < 1e-13);
            }
            const double e = -0.5;  // real argument below the support
            const MomentSumsReal rref = moment_sums_real_scalar(in.x.data(), in.w.data(), n, e);
            if (backend_available(Backend::Avx2)) {
                const MomentSumsReal got = moment_sums_real_avx2(in.x.data(), in.w.data(), n, e);
                CHECK(std::abs(got.m - rref.m) < 1e-13 * std::max(1.0, std::abs(rref.m)));
                CHECK(std::abs(got.s3 - rref.s3) < 1e-13 * std::max(1.0, std::abs(rref.s3)));
            }
            if (backend_available(Backend::Avx512)) {
                const MomentSumsReal got = moment_sums_real_avx512(in.x.data(), in.w.data(), n, e);
                CHECK(std::abs(got.s2 - rref.s2) < 1e-13 * std::max(1.0, std::abs(rref.s2)));
            }
        }
    }
}

TEST_CASE("dispatch honors forced backends") {
    const Backend detected = active_backend();
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Avx512}) {
        if (!backend_available(b)) continue;
        force_backend(b);
        CHECK(active_backend() == b);
        const double x[2] = {1.0, 3.0};
        const double w[2] = {0.5, 0.5};
        const MomentSums s = moment_sums(x, w, 2, {0.0, 2.0});
        // m at 2i for (delta_1 + delta_3)/2
        CHECK(rel_err(s.m, {0.21538461538461537, 0.27692307692307694}) < 1e-14);
    }
    reset_backend();
    CHECK(active_backend() == detected);
}

TEST_CASE("Herglotz property of the kernel sums") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> re(-4.0, 10.0), im(1e-8, 3.0);
    const Inputs in = random_inputs(rng, 257);
    for (int rep = 0; rep < 50; ++rep) {
        const std::complex<double> z(re(rng), im(rng));
        const MomentSums s = moment_sums(in.x.data(), in.w.data(), in.x.size(), z);
        CHECK(s.m.imag() > 0.0);
    }
}
