#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "freeconv/measure.hpp"
#include "helpers.hpp"

using freeconv::Errc;
using freeconv::Error;
using freeconv::SpectralMeasure;
using freeconv::TransformValue;
using cplx = std::complex<double>;

namespace {

// Richardson-extrapolated centered difference, the independent oracle for the
// analytic L derivatives.
cplx fd_derivative(const SpectralMeasure& mu, cplx z, double h) {
    const cplx f1 = (mu.transforms(z + h).L - mu.transforms(z - h).L) / (2.0 * h);
    const cplx f2 = (mu.transforms(z + h / 2.0).L - mu.transforms(z - h / 2.0).L) / h;
    return (4.0 * f2 - f1) / 3.0;
}

// Second differences lose ~eps/h^2 to roundoff, so the step is wider than
// for the first derivative.
cplx fd_second_derivative(const SpectralMeasure& mu, cplx z, double h = 1e-3) {
    auto second = [&](double step) {
        return (mu.transforms(z + step).L - 2.0 * mu.transforms(z).L + mu.transforms(z - step).L) / (step * step);
    };
    const cplx f1 = second(h), f2 = second(h / 2.0);
    return (4.0 * f2 - f1) / 3.0;
}

}  // namespace

TEST_CASE("stieltjes closed forms") {
    const auto d1 = SpectralMeasure::dirac(1.0);
    CHECK(std::abs(d1.stieltjes({0.0, 2.0}) - cplx(0.2, 0.4)) < 1e-15);

    const auto two = testutil::two_atom();
    CHECK(std::abs(two.stieltjes({0.0, 2.0}) - cplx(0.21538461538461537, 0.27692307692307694)) < 1e-15);
}

TEST_CASE("gridded stieltjes matches a refined-grid quadrature oracle") {
    const auto coarse = testutil::semicircle(1.0, 3.0, 20001);
    const auto fine = testutil::semicircle(1.0, 3.0, 200001);
    const cplx z(2.0, 1.0);
    CHECK(std::abs(coarse.stieltjes(z) - fine.stieltjes(z)) < 1e-6);
}

TEST_CASE("transform closed forms and identities") {
    const auto d2 = SpectralMeasure::dirac(2.0);
    const TransformValue t = d2.transforms({3.0, 1.0});
    CHECK(std::abs(t.M - cplx(1.5, 0.5)) < 1e-14);

    const auto d1 = SpectralMeasure::dirac(1.0);
    const TransformValue t1 = d1.transforms({2.0, 1.0});
    CHECK(std::abs(t1.M - cplx(2.0, 1.0)) < 1e-14);
    CHECK(std::abs(t1.L - 1.0) < 1e-14);

    // M recomputed from the stored m must agree bit-for-bit.
    const auto two = testutil::two_atom();
    const cplx z(1.7, 0.4);
    const TransformValue tv = two.transforms(z);
    const cplx m_identity = (z * tv.m) / (1.0 + z * tv.m);
    CHECK(tv.M == m_identity);
    CHECK(tv.L == tv.M / z);
}

TEST_CASE("L derivatives agree with finite differences") {
    const auto two = testutil::two_atom();
    {
        // frozen spec example: z = 5 on the real axis
        const TransformValue tv = two.transforms({5.0, 0.0});
        const cplx fd = fd_derivative(two, {5.0, 0.0}, 1e-6);
        CHECK(std::abs(tv.L1 - fd) / std::abs(fd) < 1e-7);
    }
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> re(-3.0, 8.0), im(0.3, 2.0);
    for (int rep = 0; rep < 25; ++rep) {
        const auto mu = testutil::random_atomic(rng);
        cplx z(re(rng), im(rng));
        if (mu.dist_to_support(z) < 0.1) z += cplx(0.0, 2.5);
        const TransformValue tv = mu.transforms(z);
        const cplx d1 = fd_derivative(mu, z, 1e-5);
        const cplx d2 = fd_second_derivative(mu, z);
        CHECK(std::abs(tv.L1 - d1) / std::max(1e-12, std::abs(d1)) < 1e-6);
        CHECK(std::abs(tv.L2 - d2) / std::max(1e-12, std::abs(d2)) < 1e-6);
    }
}

TEST_CASE("Herglotz property") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> re(-5.0, 9.0), im(1e-7, 4.0);
    for (int rep = 0; rep < 40; ++rep) {
        const auto mu = testutil::random_atomic(rng);
        const cplx z(re(rng), im(rng));
        CHECK(mu.stieltjes(z).imag() > 0.0);
    }
}

TEST_CASE("scaling covariance of m and M") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> re(-4.0, 8.0), im(0.1, 3.0);
    for (double c : {2.0, 0.5}) {
        const auto mu = testutil::random_atomic(rng);
        const auto dil = mu.dilated(c);
        for (int rep = 0; rep < 20; ++rep) {
            const cplx z(re(rng), im(rng));
            CHECK(std::abs(dil.stieltjes(c * z) - mu.stieltjes(z) / c) < 1e-12);
            CHECK(std::abs(dil.transforms(c * z).M - mu.transforms(z).M) < 1e-12);
        }
    }
}

TEST_CASE("levy distance: frozen oracle values and metric axioms") {
    const auto d1 = SpectralMeasure::dirac(1.0);
    const auto d15 = SpectralMeasure::dirac(1.5);
    const auto two = testutil::two_atom();

    CHECK(freeconv::levy_distance(two, two) == 0.0);
    CHECK(std::abs(freeconv::levy_distance(d1, d15) - 0.5) < 1e-6);
    CHECK(std::abs(freeconv::levy_distance(d1, d15) - testutil::brute_force_levy(d1, d15)) < 2e-6);
    CHECK(std::abs(freeconv::levy_distance(two, d1) - testutil::brute_force_levy(two, d1)) < 2e-6);

    const std::vector<SpectralMeasure> family = {
        d1, d15, two, SpectralMeasure::atomic({0.7, 2.0, 3.5}, {0.25, 0.5, 0.25}), testutil::semicircle(1.0, 3.0, 301)};
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = 0; j < family.size(); ++j) {
            const double dij = freeconv::levy_distance(family[i], family[j]);
            const double dji = freeconv::levy_distance(family[j], family[i]);
            CHECK(std::abs(dij - dji) < 1e-10);
            if (i == j) CHECK(dij < 1e-10);
            for (std::size_t k = 0; k < family.size(); ++k) {
                const double dik = freeconv::levy_distance(family[i], family[k]);
                const double dkj = freeconv::levy_distance(family[k], family[j]);
                CHECK(dij <= dik + dkj + 1e-9);
            }
        }
}

TEST_CASE("empirical_from_samples") {
    const auto mu = freeconv::empirical_from_samples({2.0, 1.0, 3.0});
    CHECK(mu.atom_locations() == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(mu.atom_weights()[0] == doctest::Approx(1.0 / 3.0));

    const auto single = freeconv::empirical_from_samples({1.0});
    CHECK(single.atom_locations() == std::vector<double>{1.0});
    CHECK(single.atom_weights()[0] == 1.0);

    const auto merged = freeconv::empirical_from_samples({1.0, 1.0, 1.0});
    CHECK(merged.atom_locations().size() == 1);
    CHECK(merged.atom_weights()[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(freeconv::empirical_from_samples({1.0, -2.0}), Error);
    CHECK_THROWS_AS(freeconv::empirical_from_samples({}), Error);
}

TEST_CASE("error paths") {
    const auto two = testutil::two_atom();
    CHECK_THROWS_AS(two.stieltjes({1.0, 0.0}), Error);  // on an atom
    try {
        two.stieltjes({3.0, 0.0});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SupportCollision);
    }
    // M-transform pole in the gap: 1 + z m(z) = 0 at z = 1.5 for this measure
    try {
        two.transforms({1.5, 0.0});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MTransformPole);
    }
    const auto sc = testutil::semicircle(1.0, 3.0, 101);
    CHECK_THROWS_AS(sc.stieltjes({2.0, 0.0}), Error);  // inside gridded support

    CHECK_THROWS_AS(SpectralMeasure::atomic({1.0, 2.0}, {0.5, 0.6}), Error);  // mass != 1
    CHECK_THROWS_AS(SpectralMeasure::atomic({-1.0}, {1.0}), Error);
    CHECK_THROWS_AS(SpectralMeasure::gridded({1.0, 2.0}, {1.0, 2.0}), Error);  // unnormalized
}

TEST_CASE("atom merging at construction") {
    const auto mu = SpectralMeasure::atomic({2.0, 2.0 * (1.0 + 1e-14), 1.0}, {0.3, 0.3, 0.4});
    CHECK(mu.atom_locations().size() == 2);
    CHECK(mu.atom_weights()[0] == doctest::Approx(0.6));
}

TEST_CASE("json round trip preserves evaluations") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 5; ++rep) {
        const auto mu = testutil::random_atomic(rng);
        const auto back = freeconv::measure_from_json_text(freeconv::measure_to_json_text(mu));
        const cplx z(0.3, 1.1);
        CHECK(std::abs(mu.stieltjes(z) - back.stieltjes(z)) < 1e-15);
    }
    const auto sc = testutil::semicircle(1.0, 3.0, 201);
    const auto back = freeconv::measure_from_json_text(freeconv::measure_to_json_text(sc));
    CHECK(back.kind() == freeconv::MeasureKind::GriddedDensity);
    CHECK(std::abs(sc.stieltjes({2.0, 0.5}) - back.stieltjes({2.0, 0.5})) < 1e-15);
}

TEST_CASE("mean normalization is explicit, never implicit") {
    const auto two = testutil::two_atom();
    CHECK(two.mean() == doctest::Approx(2.0));
    const auto norm = two.normalized_mean();
    CHECK(norm.mean() == doctest::Approx(1.0));
    CHECK(norm.atom_locations()[0] == doctest::Approx(1.5));
}
