#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "freeconv/measure.hpp"

namespace testutil {

inline freeconv::SpectralMeasure two_atom() { return freeconv::SpectralMeasure::atomic({1.0, 3.0}, {0.5, 0.5}); }

// Semicircle-shaped density on [lo, hi]; a regular input with square-root
// edges.
inline freeconv::SpectralMeasure semicircle(double lo, double hi, int npts = 2001) {
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    std::vector<double> g(npts), d(npts);
    for (int i = 0; i < npts; ++i) {
        g[i] = lo + (hi - lo) * i / (npts - 1);
        const double t = r * r - (g[i] - c) * (g[i] - c);
        d[i] = t > 0 ? std::sqrt(t) : 0.0;
    }
    return freeconv::SpectralMeasure::gridded_normalized(std::move(g), std::move(d));
}

inline freeconv::SpectralMeasure random_atomic(std::mt19937_64& rng, int max_atoms = 6) {
    std::uniform_int_distribution<int> natoms(2, max_atoms);
    std::uniform_real_distribution<double> loc(0.5, 4.0), wt(0.2, 1.0);
    const int k = natoms(rng);
    std::vector<double> xs(k), ws(k);
    double total = 0;
    for (int i = 0; i < k; ++i) {
        xs[i] = loc(rng);
        ws[i] = wt(rng);
        total += ws[i];
    }
    for (double& w : ws) w /= total;
    return freeconv::SpectralMeasure::atomic(std::move(xs), std::move(ws));
}

// Independent oracle: Levy distance by brute-force scan over epsilon in fixed
// steps, checking the shifted-CDF sandwich on breakpoint-anchored points.
inline double brute_force_levy(const freeconv::SpectralMeasure& m1, const freeconv::SpectralMeasure& m2,
                               double eps_step = 1e-6) {
    auto points_of = [](const freeconv::SpectralMeasure& m) {
        return m.kind() == freeconv::MeasureKind::Atomic ? m.nodes() : m.grid();
    };
    std::vector<double> base = points_of(m1);
    const auto p2 = points_of(m2);
    base.insert(base.end(), p2.begin(), p2.end());
    auto feasible = [&](double eps) {
        std::vector<double> xs;
        for (double b : base)
            for (double x : {b - eps - 1e-9, b - eps, b - 1e-9, b, b + eps - 1e-9, b + eps}) xs.push_back(x);
        for (double x : xs) {
            if (m2.cdf(x) < m1.cdf(x - eps) - eps - 1e-12) return false;
            if (m2.cdf(x) > m1.cdf(x + eps) + eps + 1e-12) return false;
            if (m1.cdf(x) < m2.cdf(x - eps) - eps - 1e-12) return false;
            if (m1.cdf(x) > m2.cdf(x + eps) + eps + 1e-12) return false;
        }
        return true;
    };
    double eps = 0.0;
    while (!feasible(eps)) eps += eps_step;
    return eps;
}

}  // namespace testutil
