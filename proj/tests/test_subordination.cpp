#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "freeconv/subordination.hpp"
#include "helpers.hpp"

using namespace freeconv;
using cplx = std::complex<double>;

TEST_CASE("phi vanishes at the identity-measure solution") {
    const auto d1 = SpectralMeasure::dirac(1.0);
    const auto two = testutil::two_atom();
    const cplx z(0.0, 2.0);
    const cplx omega_b = two.transforms(z).M;
    const auto [pa, pb] = phi(d1, two, z, omega_b, z);
    CHECK(std::abs(pa) < 1e-14);
    CHECK(std::abs(pb) < 1e-14);
}

TEST_CASE("phi vanishes at the point-mass pair solution") {
    const auto d2 = SpectralMeasure::dirac(2.0);
    const auto d3 = SpectralMeasure::dirac(3.0);
    const cplx z(1.0, 1.0);
    const auto [pa, pb] = phi(d2, d3, z / 2.0, z / 3.0, z);
    CHECK(std::abs(pa) < 1e-15);
    CHECK(std::abs(pb) < 1e-15);
}

TEST_CASE("phi perturbation matches the Jacobian row") {
    const auto two = testutil::two_atom();
    const cplx z(0.5, 1.5);
    const auto sol = solve_at(two, two, z);
    const double h = 1e-3;
    const auto [pa0, pb0] = phi(two, two, sol.omega_a, sol.omega_b, z);
    const auto [pa1, pb1] = phi(two, two, sol.omega_a + h, sol.omega_b, z);
    const auto tb = two.transforms(sol.omega_a);
    const cplx l1b = tb.L1;  // dPhi_B/domega_1
    // linear to within the second-order Taylor remainder
    CHECK(std::abs((pb1 - pb0) - l1b * h) < 0.6 * std::abs(tb.L2) * h * h + 1e-12);
    // dPhi_A/domega_1 = -1/z
    CHECK(std::abs((pa1 - pa0) - (-1.0 / z) * h) < 1e-12);
}

TEST_CASE("identity measure solves in a few iterations") {
    const auto d1 = SpectralMeasure::dirac(1.0);
    const auto two = testutil::two_atom();
    const cplx z(0.0, 2.0);
    const auto sol = solve_at(d1, two, z);
    CHECK(std::abs(sol.omega_a - z) < 1e-10);
    CHECK(std::abs(sol.omega_b - two.transforms(z).M) < 1e-10);
    CHECK(sol.iterations <= 3);
}

TEST_CASE("point-mass pair closed form") {
    const auto d2 = SpectralMeasure::dirac(2.0);
    const auto d3 = SpectralMeasure::dirac(3.0);
    for (const cplx z : {cplx(1.0, 1.0), cplx(-2.0, 0.5), cplx(4.0, 1e-3)}) {
        const auto sol = solve_at(d2, d3, z);
        CHECK(std::abs(sol.omega_a - z / 2.0) < 1e-10);
        CHECK(std::abs(sol.omega_b - z / 3.0) < 1e-10);
    }
}

TEST_CASE("subordination and convolution identities at random pairs") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> re(-2.0, 10.0), im(1e-3, 2.0);
    for (int rep = 0; rep < 8; ++rep) {
        const auto muA = testutil::random_atomic(rng);
        const auto muB = testutil::random_atomic(rng);
        for (int pt = 0; pt < 6; ++pt) {
            const cplx z(re(rng), im(rng));
            const auto sol = solve_at(muA, muB, z);
            const double tol10 = 10.0 * 1e-11;
            const cplx ma = muA.transforms(sol.omega_b).M;
            const cplx mb = muB.transforms(sol.omega_a).M;
            CHECK(std::abs(z * ma - sol.omega_a * sol.omega_b) < tol10);
            CHECK(std::abs(z * mb - sol.omega_a * sol.omega_b) < tol10);
            // convolution identity: z m + 1 via both routes
            const cplx m_box = ma / (z * (1.0 - ma));
            const cplx lhs = z * m_box + 1.0;
            const cplx rhs = sol.omega_b * muA.stieltjes(sol.omega_b) + 1.0;
            CHECK(std::abs(lhs - rhs) < tol10 * 10);
        }
    }
}

TEST_CASE("self-consistency at z = 10 + 0.01i") {
    const auto two = testutil::two_atom();
    const auto sol = solve_at(two, two, {10.0, 0.01});
    const cplx ma = two.transforms(sol.omega_b).M;
    CHECK(std::abs(sol.omega_a * sol.omega_b - sol.z * ma) <= 1e-10);
}

TEST_CASE("interior imaginary part stays order one inside the bulk") {
    // square-root regular pair; midpoint of the bulk
    const auto sc = testutil::semicircle(1.0, 3.0, 801);
    const double mid = 4.2;  // between E- ~ 1.56 and E+ ~ 7.19
    const auto sol = solve_at(sc, sc, {mid, 1e-6});
    CHECK(sol.omega_a.imag() > 0.01);
    CHECK(sol.omega_b.imag() > 0.01);
}

TEST_CASE("swap symmetry is exact") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 6; ++rep) {
        const auto muA = testutil::random_atomic(rng);
        const auto muB = testutil::random_atomic(rng);
        std::uniform_real_distribution<double> re(-1.0, 9.0), im(1e-4, 2.0);
        const cplx z(re(rng), im(rng));
        const auto ab = solve_at(muA, muB, z);
        const auto ba = solve_at(muB, muA, z);
        CHECK(ab.omega_a == ba.omega_b);
        CHECK(ab.omega_b == ba.omega_a);
        CHECK(ab.iterations == ba.iterations);
    }
}

TEST_CASE("herglotz invariants of solutions") {
    std::mt19937_64 rng(888);
    std::uniform_real_distribution<double> re(-2.0, 9.0), im(1e-4, 1.5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto muA = testutil::random_atomic(rng);
        const auto muB = testutil::random_atomic(rng);
        const cplx z(re(rng), im(rng));
        const auto sol = solve_at(muA, muB, z);
        CHECK(sol.omega_a.imag() >= -1e-13);
        CHECK(sol.omega_b.imag() >= -1e-13);
        CHECK(sol.residual <= 1e-11);
    }
    // mean-1 normalized measures additionally satisfy im(omega) >= im(z)
    for (int rep = 0; rep < 10; ++rep) {
        const auto muA = testutil::random_atomic(rng).normalized_mean();
        const auto muB = testutil::random_atomic(rng).normalized_mean();
        const cplx z(re(rng), im(rng));
        const auto sol = solve_at(muA, muB, z);
        CHECK(sol.omega_a.imag() >= z.imag() * (1.0 - 1e-9));
        CHECK(sol.omega_b.imag() >= z.imag() * (1.0 - 1e-9));
    }
}

TEST_CASE("solve_path: identity measure gives omega_a = z exactly") {
    const auto d1 = SpectralMeasure::dirac(1.0);
    const auto two = testutil::two_atom();
    const double eta_high = default_eta_high(d1, two);
    const auto path = solve_path(d1, two, 2.0, geometric_schedule(eta_high, 1e-4), {});
    for (const auto& sol : path) CHECK(std::abs(sol.omega_a - sol.z) < 1e-10);
}

TEST_CASE("solve_path outside the bulk reaches a real limit") {
    const auto sc = testutil::semicircle(1.0, 3.0, 801);
    const double e_out = 8.0;  // above E+ ~ 7.19
    auto schedule = geometric_schedule(default_eta_high(sc, sc), 1e-8);
    schedule.push_back(0.0);
    const auto path = solve_path(sc, sc, e_out, schedule, {});
    const auto& last = path.back();
    CHECK(std::abs(last.omega_b.imag()) <= 1e-8);
    // cross-check against the direct real-axis solve
    const auto direct = solve_at(sc, sc, {e_out, 0.0});
    CHECK(std::abs(last.omega_b - direct.omega_b) < 1e-8);
    CHECK(std::abs(last.omega_a - direct.omega_a) < 1e-8);
}

TEST_CASE("solve_path inside the bulk stabilizes (Cauchy in eta)") {
    const auto sc = testutil::semicircle(1.0, 3.0, 801);
    auto schedule = geometric_schedule(default_eta_high(sc, sc), 1e-6);
    const auto path = solve_path(sc, sc, 4.2, schedule, {});
    const auto& s1 = path[path.size() - 2];
    const auto& s2 = path.back();
    CHECK(std::abs(s2.omega_b.imag() - s1.omega_b.imag()) / std::abs(s2.omega_b.imag()) < 1e-4);
}

TEST_CASE("monotone continuation outside the support") {
    const auto sc = testutil::semicircle(1.0, 3.0, 801);
    const double e_plus_approx = 7.194;  // kappa > 0.1 at E = 7.5
    auto schedule = geometric_schedule(default_eta_high(sc, sc), 1e-8);
    const auto path = solve_path(sc, sc, e_plus_approx + 0.4, schedule, {});
    for (std::size_t i = 1; i < path.size(); ++i)
        CHECK(path[i].omega_b.imag() <= path[i - 1].omega_b.imag() + 1e-12);
    CHECK(path.back().omega_b.imag() < 1e-4);
}

TEST_CASE("schedule validation") {
    const auto two = testutil::two_atom();
    CHECK_THROWS_AS(solve_path(two, two, 2.0, {}, {}), Error);
    CHECK_THROWS_AS(solve_path(two, two, 2.0, {1.0, 0.5}, {}), Error);              // starts below eta_high
    CHECK_THROWS_AS(solve_path(two, two, 2.0, {100.0, 1.0, 2.0}, {}), Error);       // not decreasing
    CHECK_THROWS_AS(solve_path(two, two, 2.0, {100.0, 1.0}, {}), Error);            // ratio 100 > max_step_ratio
}

TEST_CASE("stability: point-mass pair has S_AB = -1 and exact derivatives") {
    const auto d2 = SpectralMeasure::dirac(2.0);
    const auto d3 = SpectralMeasure::dirac(3.0);
    const cplx z(1.0, 0.7);
    const auto sol = solve_at(d2, d3, z);
    const auto st = stability(d2, d3, sol);
    // L of a point mass is constant, so S = -1, T = 0, Omega' = Omega/z
    CHECK(std::abs(st.s_ab - cplx(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(st.t_a) < 1e-12);
    CHECK(std::abs(st.omega_a_prime - 0.5) < 1e-12);
    CHECK(std::abs(st.omega_b_prime - cplx(1.0, 0.0) / 3.0) < 1e-12);
}

TEST_CASE("omega derivatives agree with Richardson finite differences") {
    const auto two = testutil::two_atom();
    const auto sc = testutil::semicircle(1.0, 3.0, 401);
    auto fd_check = [](const SpectralMeasure& a, const SpectralMeasure& b, cplx z) {
        const auto sol = solve_at(a, b, z);
        const auto st = stability(a, b, sol);
        const double h = 1e-6;
        auto omega_at = [&](cplx zz) {
            const auto s = solve_at(a, b, zz);
            return std::make_pair(s.omega_a, s.omega_b);
        };
        const auto [ap1, bp1] = omega_at(z + h);
        const auto [am1, bm1] = omega_at(z - h);
        const auto [ap2, bp2] = omega_at(z + h / 2.0);
        const auto [am2, bm2] = omega_at(z - h / 2.0);
        const cplx fd_a = (4.0 * (ap2 - am2) / h - (ap1 - am1) / (2.0 * h)) / 3.0;
        const cplx fd_b = (4.0 * (bp2 - bm2) / h - (bp1 - bm1) / (2.0 * h)) / 3.0;
        CHECK(std::abs(st.omega_a_prime - fd_a) / std::abs(fd_a) < 1e-5);
        CHECK(std::abs(st.omega_b_prime - fd_b) / std::abs(fd_b) < 1e-5);
    };
    fd_check(two, two, {2.0, 0.1});
    fd_check(sc, sc, {4.0, 0.1});
    fd_check(two, sc, {3.0, 0.2});
}

TEST_CASE("kantorovich certificate at high eta") {
    const auto two = testutil::two_atom();
    const auto sc = testutil::semicircle(1.0, 3.0, 401);
    SolverConfig cfg;
    cfg.certify = true;
    for (const auto* pair : {&two, &sc}) {
        const auto sol = solve_at(*pair, *pair, {2.0, 10.0}, {}, cfg);
        REQUIRE(sol.certificate.has_value());
        CHECK(sol.certificate->passed);
        CHECK(2.0 * sol.certificate->b * sol.certificate->L < 1.0);
    }
}

TEST_CASE("kantorovich soundness: Newton lands within t_star") {
    const auto two = testutil::two_atom();
    const cplx z(2.0, 10.0);
    const auto sol = solve_at(two, two, z);
    // certify a deliberately perturbed point
    const cplx w1 = sol.omega_a + cplx(0.05, 0.02);
    const cplx w2 = sol.omega_b - cplx(0.03, 0.01);
    const auto cert = kantorovich_certificate(two, two, w1, w2, z);
    REQUIRE(cert.passed);
    const auto refined = solve_at(two, two, z, std::make_pair(w1, w2));
    const double dist = std::sqrt(std::norm(refined.omega_a - w1) + std::norm(refined.omega_b - w2));
    CHECK(dist <= cert.t_star * (1.0 + 1e-9));
}

TEST_CASE("solver error taxonomy") {
    const auto two = testutil::two_atom();
    SolverConfig strict;
    strict.max_iter = 2;
    try {
        solve_at(two, two, {5.0, 1e-6}, {}, strict);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoConvergence);
    }
    // a guess pinned inside the support margin
    SolverConfig cfg;
    try {
        solve_at(two, two, {5.0, 0.5}, std::make_pair(cplx(1.0 + 1e-12, 0.0), cplx(3.0, 0.0)), cfg);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::LeftAdmissibleRegion);
    }
}
