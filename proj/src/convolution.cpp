#include "freeconv/convolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

namespace freeconv {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

double bisect_newton_m(const SpectralMeasure& mu, double target, double lo, double hi, bool increasing) {
    // Bracketed bisection on M(x) - target followed by Newton steps; M is
    // monotone increasing on both real branches used here.
    (void)increasing;
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > 1e-16 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double f = mu.transforms_real(mid).M - target;
        (f < 0 ? a : b) = mid;
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 4; ++it) {
        const auto rt = mu.transforms_real(x);
        if (rt.M1 == 0) break;
        const double step = (rt.M - target) / rt.M1;
        const double cand = x - step;
        if (cand <= lo || cand >= hi) break;
        x = cand;
    }
    return x;
}

struct ZtildeEval {
    double z, z1, z2;  // ztilde and its first two derivatives in Omega
    double w, y;       // Minv_{muA}(y) and y = M_{muB}(Omega)
};

// Evaluates ztilde(Omega) = Omega * w / y with w = Minv_{muA}(M_{muB}(Omega))
// on one of the two real branches. Returns false when the target leaves the
// branch range of M_{muA} (possible for gridded measures near the support).
bool ztilde_eval(const SpectralMeasure& muA, const SpectralMeasure& muB, double omega, bool upper, ZtildeEval& out) {
    const auto rb = muB.transforms_real(omega);
    const double y = rb.M;
    double w;
    if (upper) {
        if (!(y > 1.0)) return false;
        const double lo = muA.support_hi() * (1.0 + 1e-9);
        const double m_lo = muA.transforms_real(lo).M;
        if (y <= m_lo) {
            w = lo;  // inverse clamps onto the support-margin boundary
        } else {
            double hi = std::max(1e6, 10.0 * muA.mean() * y + muA.support_hi());
            w = bisect_newton_m(muA, y, lo, hi, true);
        }
    } else {
        if (!(y > 0.0) || !(y < 1.0)) return false;
        const double hi = muA.support_lo() * (1.0 - 1e-9);
        const double m_hi = muA.transforms_real(hi).M;
        if (y >= m_hi) {
            w = hi;
        } else {
            w = bisect_newton_m(muA, y, muA.support_lo() * 1e-15, hi, true);
        }
    }
    const auto ra = muA.transforms_real(w);
    if (ra.M1 == 0) return false;
    const double w1 = rb.M1 / ra.M1;
    const double w2 = (rb.M2 - ra.M2 * w1 * w1) / ra.M1;
    const double g = w1 * y - w * rb.M1;  // numerator of (w/y)'
    out.y = y;
    out.w = w;
    out.z = omega * w / y;
    out.z1 = w / y + omega * g / (y * y);
    out.z2 = 2.0 * g / (y * y) + omega * ((w2 * y - w * rb.M2) / (y * y) - 2.0 * rb.M1 * g / (y * y * y));
    return true;
}

struct EdgeScanResult {
    double omega;  // critical point (or boundary) on the Omega ray
    ZtildeEval at;
};

EdgeScanResult edge_scan(const SpectralMeasure& muA, const SpectralMeasure& muB, bool upper, const EdgeConfig& cfg) {
    double lo, hi;
    if (upper) {
        lo = muB.support_hi() * (1.0 + 1e-9);
        hi = muB.support_hi() * cfg.bracket_hi_factor;
    } else {
        lo = muB.support_lo() * 1e-6;
        hi = muB.support_lo() * (1.0 - 1e-9);
    }
    const int npts = std::max(cfg.scan_points, 8);
    const double lf = std::log(lo), step = (std::log(hi) - lf) / (npts - 1);

    // Scan for sign changes of ztilde'. Several local extrema can occur for
    // multi-atom inputs; the top edge is the rightmost minimum (the first
    // obstruction met when continuing Omega_A(x) down from x = +inf), the
    // bottom edge is the leftmost maximum.
    double prev_omega = 0, prev_z1 = 0;
    bool have_prev = false;
    double first_omega = 0, last_omega = 0;
    ZtildeEval first_ev{}, last_ev{};
    bool have_any = false;
    double a = 0, b = 0;
    bool bracketed = false;
    for (int i = 0; i < npts; ++i) {
        const double omega = std::exp(lf + step * i);
        ZtildeEval ev;
        bool ok;
        try {
            ok = ztilde_eval(muA, muB, omega, upper, ev);
        } catch (const Error&) {
            ok = false;
        }
        if (!ok) continue;
        if (!have_any) {
            have_any = true;
            first_omega = omega;
            first_ev = ev;
        }
        if (have_prev && ((prev_z1 < 0) != (ev.z1 < 0))) {
            const bool is_min = prev_z1 < 0;  // minimum when z1 crosses - to +
            if (is_min == upper && (!bracketed || upper)) {
                a = prev_omega;
                b = omega;
                bracketed = true;
                if (!upper) { /* keep the first maximum */ }
            }
            if (bracketed && !upper) break;
        }
        last_omega = omega;
        last_ev = ev;
        prev_omega = omega;
        prev_z1 = ev.z1;
        have_prev = true;
    }
    if (!have_any) raise(Errc::EdgeBracketFailure, "ztilde undefined on the whole bracket");

    if (!bracketed) {
        // No interior critical point. For the regular branch orientation the
        // extremum then sits at the bracket end next to the support (the
        // point-mass dilation case and hard-edged atomic pairs); otherwise
        // the bracket is genuinely bad.
        const bool boundary_case = upper ? (first_ev.z1 > 0) : (last_ev.z1 > 0);
        if (!boundary_case) raise(Errc::EdgeBracketFailure, "no sign change of ztilde' in the bracket");
        EdgeScanResult res;
        res.omega = upper ? first_omega : last_omega;
        res.at = upper ? first_ev : last_ev;
        // The boundary value is evaluated a hair off the support; clamp it to
        // the a-priori support product bound.
        const double cap = muA.support_hi() * muB.support_hi();
        const double floor_prod = muA.support_lo() * muB.support_lo();
        if (upper && res.at.z > cap) res.at.z = cap;
        if (!upper && res.at.z < floor_prod) res.at.z = floor_prod;
        return res;
    }

    ZtildeEval ev_a;
    ztilde_eval(muA, muB, a, upper, ev_a);
    const bool neg_at_a = ev_a.z1 < 0;
    for (int it = 0; it < 200 && (b - a) > 1e-16 * std::max(1.0, a); ++it) {
        const double mid = 0.5 * (a + b);
        ZtildeEval ev;
        if (!ztilde_eval(muA, muB, mid, upper, ev)) {
            // infeasible midpoints only occur flush against the support
            (upper ? a : b) = mid;
            continue;
        }
        ((ev.z1 < 0) == neg_at_a ? a : b) = mid;
    }
    double omega = 0.5 * (a + b);
    ZtildeEval ev;
    ztilde_eval(muA, muB, omega, upper, ev);
    for (int it = 0; it < 8 && ev.z2 != 0; ++it) {  // Newton polish on ztilde'
        const double cand = omega - ev.z1 / ev.z2;
        ZtildeEval ev2;
        if (cand <= a || cand >= b || !ztilde_eval(muA, muB, cand, upper, ev2)) break;
        omega = cand;
        ev = ev2;
        if (std::abs(ev.z1) < 1e-14 * std::max(1.0, std::abs(ev.z))) break;
    }
    return {omega, ev};
}

}  // namespace

double m_inverse_above(const SpectralMeasure& mu, double target) {
    if (!(target > 1.0)) raise(Errc::EdgeBracketFailure, "m_inverse_above needs target > 1");
    const double lo = mu.support_hi() * (1.0 + 1e-9);
    if (target <= mu.transforms_real(lo).M) return lo;
    const double hi = std::max(1e6, 10.0 * mu.mean() * target + mu.support_hi());
    return bisect_newton_m(mu, target, lo, hi, true);
}

double m_inverse_below(const SpectralMeasure& mu, double target) {
    if (!(target > 0.0 && target < 1.0)) raise(Errc::EdgeBracketFailure, "m_inverse_below needs target in (0,1)");
    const double hi = mu.support_lo() * (1.0 - 1e-9);
    if (target >= mu.transforms_real(hi).M) return hi;
    return bisect_newton_m(mu, target, mu.support_lo() * 1e-15, hi, true);
}

EdgePoint find_upper_edge(const SpectralMeasure& muA, const SpectralMeasure& muB, const EdgeConfig& cfg) {
    const EdgeScanResult res = edge_scan(muA, muB, true, cfg);
    return {res.at.z, res.omega, res.at.w};
}

double find_lower_edge(const SpectralMeasure& muA, const SpectralMeasure& muB, const EdgeConfig& cfg) {
    return edge_scan(muA, muB, false, cfg).at.z;
}

std::vector<double> default_grid(const SpectralMeasure& muA, const SpectralMeasure& muB, int count) {
    if (count < 2) raise(Errc::ConfigError, "grid needs at least 2 points");
    const double lo = 0.9 * muA.support_lo() * muB.support_lo();
    const double hi = 1.1 * muA.support_hi() * muB.support_hi();
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
    return g;
}

namespace {

void density_chunk(const SpectralMeasure& muA, const SpectralMeasure& muB, const std::vector<double>& grid,
                   double eval_eta, const DensityConfig& cfg, std::size_t i0, std::size_t i1, ConvolutionResult& out) {
    const double eta_work = std::max(eval_eta, 1e-9);
    const bool limit_mode = eval_eta == 0.0;
    std::optional<std::pair<cplx, cplx>> seed;
    for (std::size_t i = i0; i < i1; ++i) {
        const cplx z(grid[i], eta_work);
        SubordinationSolution sol;
        bool ok = true;
        try {
            if (seed) {
                try {
                    sol = solve_at(muA, muB, z, seed, cfg.solver);
                } catch (const Error&) {
                    sol = solve_at(muA, muB, z, {}, cfg.solver);  // fresh vertical restart
                }
            } else {
                sol = solve_at(muA, muB, z, {}, cfg.solver);
            }
            seed = std::make_pair(sol.omega_a, sol.omega_b);
            if (limit_mode) {
                try {
                    sol = solve_at(muA, muB, cplx(grid[i], 0.0), seed, cfg.solver);
                } catch (const Error&) {
                    // keep the eta = 1e-9 approximation for this point
                }
            }
        } catch (const Error&) {
            ok = false;
            seed.reset();
        }
        if (!ok) {
            out.point_ok[i] = 0;
            out.density[i] = 0.0;
            out.stieltjes_row[i] = {std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN()};
            continue;
        }
        const cplx zz = sol.z;
        const cplx M = muA.transforms(sol.omega_b).M;
        const cplx m = M / (zz * (1.0 - M));
        out.point_ok[i] = 1;
        out.stieltjes_row[i] = m;
        out.density[i] = std::max(0.0, m.imag() / kPi);
    }
}

}  // namespace

ConvolutionResult density(const SpectralMeasure& muA, const SpectralMeasure& muB, const std::vector<double>& grid,
                          double eval_eta, const DensityConfig& cfg) {
    if (grid.size() < 2) raise(Errc::ConfigError, "density grid needs at least 2 points");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i + 1] > grid[i])) raise(Errc::ConfigError, "density grid must increase");
    if (eval_eta < 0) raise(Errc::ConfigError, "eval_eta must be >= 0");

    ConvolutionResult out;
    out.grid = grid;
    out.eval_eta = eval_eta;
    out.density.assign(grid.size(), 0.0);
    out.stieltjes_row.assign(grid.size(), {0.0, 0.0});
    out.point_ok.assign(grid.size(), 0);
    const EdgePoint up = find_upper_edge(muA, muB, EdgeConfig{.solver = cfg.solver});
    out.e_plus = up.e_plus;
    out.e_minus = find_lower_edge(muA, muB, EdgeConfig{.solver = cfg.solver});

    const std::size_t n = grid.size();
    const std::size_t chunk = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.chunk));
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t nthreads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : std::max(1u, hw);
    nthreads = std::min<std::size_t>(nthreads, nchunks);

    if (nthreads <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            density_chunk(muA, muB, grid, eval_eta, cfg, c * chunk, std::min(n, (c + 1) * chunk), out);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1))
                    density_chunk(muA, muB, grid, eval_eta, cfg, c * chunk, std::min(n, (c + 1) * chunk), out);
            });
        for (auto& th : pool) th.join();
    }

    // Support confinement: the limit density vanishes off [E-, E+]; the tiny
    // finite-eta halo next to the edges is clamped, the raw transform row is
    // kept as computed.
    for (std::size_t i = 0; i < n; ++i) {
        const double step_lo = (i > 0) ? grid[i] - grid[i - 1] : grid[1] - grid[0];
        const double step_hi = (i + 1 < n) ? grid[i + 1] - grid[i] : grid[n - 1] - grid[n - 2];
        if (grid[i] < out.e_minus - step_lo || grid[i] > out.e_plus + step_hi) out.density[i] = 0.0;
    }
    return out;
}

QuantileTable quantiles(const ConvolutionResult& result, int n) {
    if (n <= 0) raise(Errc::ConfigError, "quantiles needs n >= 1");
    const auto& x = result.grid;
    const auto& rho = result.density;
    const std::size_t m = x.size();
    std::vector<double> tail(m, 0.0);  // int_{x_i}^inf rho
    for (std::size_t i = m - 1; i-- > 0;)
        tail[i] = tail[i + 1] + 0.5 * (x[i + 1] - x[i]) * (rho[i] + rho[i + 1]);
    const double total = tail[0];
    if (!(total > 0)) raise(Errc::ConfigError, "density carries no mass");

    QuantileTable table;
    table.n = n;
    table.gammas.resize(n);
    for (int j = 1; j <= n; ++j) {
        const double target = total * static_cast<double>(j) / n;
        // first index with tail <= target (tail is nonincreasing in x)
        const auto it = std::lower_bound(tail.begin(), tail.end(), target,
                                         [](double t, double tgt) { return t > tgt; });
        double g;
        if (it == tail.begin()) {
            g = x.front();
        } else if (it == tail.end()) {
            g = x.back();
        } else {
            const std::size_t k = static_cast<std::size_t>(it - tail.begin()) - 1;
            const double t0 = tail[k], t1 = tail[k + 1];
            const double frac = (t0 > t1) ? (t0 - target) / (t0 - t1) : 1.0;
            g = x[k] + frac * (x[k + 1] - x[k]);
        }
        table.gammas[j - 1] = std::clamp(g, result.e_minus, result.e_plus);
    }
    return table;
}

void write_density_csv(const ConvolutionResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::ConfigError, "cannot open output file: " + path);
    out << "x,rho,re_m,im_m\n";
    char line[160];
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r.grid[i], r.density[i],
                      r.stieltjes_row[i].real(), r.stieltjes_row[i].imag());
        out << line;
    }
}

std::string density_meta_json(const ConvolutionResult& r, const std::string& config_hash, const std::string& version) {
    nlohmann::json j;
    j["e_minus"] = r.e_minus;
    j["e_plus"] = r.e_plus;
    j["eval_eta"] = r.eval_eta;
    j["config_hash"] = config_hash;
    j["version"] = version;
    return j.dump(2);
}

}  // namespace freeconv
