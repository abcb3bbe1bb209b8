#include "freeconv/subordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace freeconv {

namespace {

using cplx = std::complex<double>;

struct PointEval {
    cplx phi_a, phi_b;   // residual components
    cplx l1_a, l1_b;     // L'_{muA}(omega_b), L'_{muB}(omega_a)
    double residual;
};

PointEval eval_point(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx w1, cplx w2, cplx z,
                     cplx* fix_a = nullptr, cplx* fix_b = nullptr) {
    const TransformValue ta = muA.transforms(w2);
    const TransformValue tb = muB.transforms(w1);
    PointEval ev;
    ev.phi_a = ta.L - w1 / z;
    ev.phi_b = tb.L - w2 / z;
    ev.l1_a = ta.L1;
    ev.l1_b = tb.L1;
    ev.residual = std::max(std::abs(ev.phi_a), std::abs(ev.phi_b));
    if (fix_a) *fix_a = z * ta.L;  // fixed-point images z L_{muA}(w2), z L_{muB}(w1)
    if (fix_b) *fix_b = z * tb.L;
    return ev;
}

bool admissible(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx w1, cplx w2, double margin) {
    return muB.dist_to_support(w1) > margin && muA.dist_to_support(w2) > margin;
}

// Admissibility: omega stays in the closed upper half-plane
// with arg(omega) >= arg(z). (The stronger im(omega) >= im(z) holds only for
// mean-1 normalized measures and is not enforced here.)
bool herglotz_ok(cplx w, cplx z) {
    if (z.imag() <= 0) return true;  // real-axis extension carries no constraint
    if (w.imag() < -1e-15 * std::abs(w)) return false;
    const double cross = w.imag() * z.real() - w.real() * z.imag();  // im(w conj(z))
    return cross >= -1e-12 * std::abs(w) * std::abs(z);
}

// Damped fixed point + Newton endgame from a given seed. Throws on
// inadmissible iterates; returns unconverged state when the budget runs out.
SubordinationSolution iterate_from(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx z, cplx w1, cplx w2,
                                   const SolverConfig& cfg, int budget) {
    if (!admissible(muA, muB, w1, w2, cfg.support_margin))
        raise(Errc::LeftAdmissibleRegion, "initial guess violates the support margin");

    SubordinationSolution sol;
    sol.z = z;
    cplx fa, fb;
    PointEval ev = eval_point(muA, muB, w1, w2, z, &fa, &fb);
    int it = 0;
    while (ev.residual > cfg.tol && it < budget) {
        ++it;
        bool stepped = false;
        if (ev.residual < cfg.newton_switch) {
            const cplx a = -1.0 / z;
            const cplx det = a * a - ev.l1_a * ev.l1_b;
            if (std::abs(det) > 1e-300) {
                const cplx d1 = (ev.l1_a * ev.phi_b - a * ev.phi_a) / det;
                const cplx d2 = (ev.l1_b * ev.phi_a - a * ev.phi_b) / det;
                double s = 1.0;
                for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
                    const cplx c1 = w1 + s * d1, c2 = w2 + s * d2;
                    if (!admissible(muA, muB, c1, c2, cfg.support_margin)) continue;
                    if (!herglotz_ok(c1, z) || !herglotz_ok(c2, z)) continue;
                    cplx nfa, nfb;
                    PointEval cand = eval_point(muA, muB, c1, c2, z, &nfa, &nfb);
                    if (cand.residual < ev.residual) {
                        w1 = c1;
                        w2 = c2;
                        ev = cand;
                        fa = nfa;
                        fb = nfb;
                        stepped = true;
                        break;
                    }
                }
            }
        }
        if (!stepped) {
            // Simultaneous fixed-point sweep; both components update from the
            // previous iterate, which keeps the (muA, muB) <-> (muB, muA)
            // solver path exactly mirrored. Damping factor 0.5 whenever the
            // raw step would leave the admissible sector.
            double d = 1.0;
            cplx c1, c2;
            for (int tries = 0;; ++tries) {
                c1 = w1 + d * (fa - w1);
                c2 = w2 + d * (fb - w2);
                if (herglotz_ok(c1, z) && herglotz_ok(c2, z)) break;
                if (tries >= 60) break;
                d *= 0.5;
            }
            if (!admissible(muA, muB, c1, c2, cfg.support_margin))
                raise(Errc::LeftAdmissibleRegion, "iterate entered the support margin");
            w1 = c1;
            w2 = c2;
            ev = eval_point(muA, muB, w1, w2, z, &fa, &fb);
        }
    }
    sol.omega_a = w1;
    sol.omega_b = w2;
    sol.residual = ev.residual;
    sol.iterations = it;
    return sol;
}

// Snap a numerically real solution onto the axis when that does not hurt the
// residual; downstream real-axis algebra (edges, spikes) relies on it.
void try_snap_real(const SpectralMeasure& muA, const SpectralMeasure& muB, SubordinationSolution& sol,
                   const SolverConfig& cfg) {
    if (sol.z.imag() != 0.0) return;
    const double scale = std::max({1.0, std::abs(sol.omega_a), std::abs(sol.omega_b)});
    if (std::abs(sol.omega_a.imag()) > 1e-9 * scale || std::abs(sol.omega_b.imag()) > 1e-9 * scale) return;
    const cplx w1(sol.omega_a.real(), 0.0), w2(sol.omega_b.real(), 0.0);
    if (!admissible(muA, muB, w1, w2, cfg.support_margin)) return;
    const PointEval ev = eval_point(muA, muB, w1, w2, sol.z);
    if (ev.residual <= std::max(sol.residual, cfg.tol)) {
        sol.omega_a = w1;
        sol.omega_b = w2;
        sol.residual = ev.residual;
    }
}

SubordinationSolution solve_with_continuation(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx z,
                                              const SolverConfig& cfg, int* spent) {
    const double eta = z.imag();
    const double eta_high = std::max(default_eta_high(muA, muB, cfg), eta);
    const double eta_stop = (eta > 0) ? eta : 1e-9;
    int total = spent ? *spent : 0;
    cplx z0(z.real(), eta_high);
    SubordinationSolution cur = iterate_from(muA, muB, z0, z0, z0, cfg, cfg.max_iter);
    total += cur.iterations;
    double h = eta_high;
    while (h > eta_stop) {
        h = std::max(h * 0.5, eta_stop);
        const cplx zh(z.real(), h);
        cur = iterate_from(muA, muB, zh, cur.omega_a, cur.omega_b, cfg, cfg.max_iter);
        total += cur.iterations;
        if (cur.residual > cfg.tol)
            raise(Errc::NoConvergence, "continuation stalled at eta = " + std::to_string(h));
    }
    if (eta == 0.0) {
        cur = iterate_from(muA, muB, z, cur.omega_a, cur.omega_b, cfg, cfg.max_iter);
        total += cur.iterations;
    }
    cur.z = z;
    cur.iterations = total;
    if (spent) *spent = total;
    return cur;
}

}  // namespace

std::pair<cplx, cplx> phi(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx omega_a, cplx omega_b, cplx z) {
    if (std::abs(z) == 0.0) raise(Errc::ConfigError, "phi requires z != 0");
    const TransformValue ta = muA.transforms(omega_b);
    const TransformValue tb = muB.transforms(omega_a);
    return {ta.L - omega_a / z, tb.L - omega_b / z};
}

double default_eta_high(const SpectralMeasure& muA, const SpectralMeasure& muB, const SolverConfig& cfg) {
    return cfg.eta_high_factor * muA.support_hi() * muB.support_hi();
}

SubordinationSolution solve_at(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx z,
                               std::optional<std::pair<cplx, cplx>> guess, const SolverConfig& cfg) {
    if (std::abs(z) == 0.0) raise(Errc::ConfigError, "solve_at requires z != 0");
    if (z.imag() < 0.0) raise(Errc::ConfigError, "solve_at requires imag(z) >= 0");

    SubordinationSolution sol;
    if (guess) {
        sol = iterate_from(muA, muB, z, guess->first, guess->second, cfg, cfg.max_iter);
        if (sol.residual > cfg.tol)
            raise(Errc::NoConvergence, "no convergence from supplied guess, residual " + std::to_string(sol.residual));
        if (z.imag() == 0.0) try_snap_real(muA, muB, sol, cfg);
    } else if (z.imag() > 0.0) {
        // Direct attempt from the high-eta asymptote Omega ~ z; fall back to
        // vertical continuation when the plain iteration stalls or wanders
        // off (small eta inside the bulk is only mildly contracting).
        int spent = 0;
        try {
            sol = iterate_from(muA, muB, z, z, z, cfg, cfg.max_iter / 4);
            spent = sol.iterations;
        } catch (const Error&) {
            sol.residual = std::numeric_limits<double>::infinity();
        }
        if (sol.residual > cfg.tol) {
            sol = solve_with_continuation(muA, muB, z, cfg, &spent);
        }
        if (sol.residual > cfg.tol) raise(Errc::NoConvergence, "iteration cap hit");
    } else {
        // Real axis: eta -> 0 continuation plus a final real Newton polish.
        int spent = 0;
        sol = solve_with_continuation(muA, muB, z, cfg, &spent);
        if (sol.residual > cfg.tol) raise(Errc::NoConvergence, "real-axis polish did not converge");
        try_snap_real(muA, muB, sol, cfg);
    }
    sol.z = z;
    if (cfg.certify) sol.certificate = kantorovich_certificate(muA, muB, sol.omega_a, sol.omega_b, z);
    return sol;
}

std::vector<double> geometric_schedule(double eta_high, double eta_low, double ratio) {
    if (!(eta_high > 0) || !(eta_low > 0) || !(ratio > 0) || !(ratio < 1))
        raise(Errc::ConfigError, "geometric_schedule needs eta_high, eta_low > 0 and ratio in (0,1)");
    std::vector<double> out;
    for (double h = eta_high; h > eta_low; h *= ratio) out.push_back(h);
    out.push_back(eta_low);
    return out;
}

namespace {

SubordinationSolution bridged_step(const SpectralMeasure& muA, const SpectralMeasure& muB, double E,
                                   const SubordinationSolution& prev, double eta_next, const SolverConfig& cfg,
                                   int depth) {
    const cplx target(E, eta_next);
    SubordinationSolution cand =
        iterate_from(muA, muB, target, prev.omega_a, prev.omega_b, cfg, cfg.max_iter);
    if (cand.residual > cfg.tol) raise(Errc::NoConvergence, "continuation step failed to converge");
    const double jump = std::max(std::abs(cand.omega_a - prev.omega_a), std::abs(cand.omega_b - prev.omega_b));
    const double drift = std::abs(target - prev.z);
    if (jump <= cfg.continuation_jump + 10.0 * drift) {
        if (eta_next == 0.0) try_snap_real(muA, muB, cand, cfg);
        return cand;
    }
    if (depth >= cfg.max_bridge_halvings)
        raise(Errc::BranchJump, "consecutive subordination values jumped by " + std::to_string(jump));
    const double eta_prev = prev.z.imag();
    const double eta_mid = (eta_next > 0) ? std::sqrt(eta_prev * eta_next) : 0.5 * eta_prev;
    SubordinationSolution mid = bridged_step(muA, muB, E, prev, eta_mid, cfg, depth + 1);
    return bridged_step(muA, muB, E, mid, eta_next, cfg, depth + 1);
}

}  // namespace

std::vector<SubordinationSolution> solve_path(const SpectralMeasure& muA, const SpectralMeasure& muB, double E,
                                              const std::vector<double>& eta_schedule, const SolverConfig& cfg) {
    if (eta_schedule.empty()) raise(Errc::ConfigError, "empty eta schedule");
    for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
        const double h = eta_schedule[i];
        if (h < 0 || (h == 0 && i + 1 != eta_schedule.size()))
            raise(Errc::ConfigError, "eta schedule must be positive with at most a trailing 0");
        if (i > 0) {
            if (!(h < eta_schedule[i - 1])) raise(Errc::ConfigError, "eta schedule must decrease");
            if (h > 0 && eta_schedule[i - 1] / h > cfg.max_step_ratio * (1 + 1e-12))
                raise(Errc::ConfigError, "eta schedule step exceeds max_step_ratio");
        }
    }
    if (eta_schedule.front() + 1e-12 < default_eta_high(muA, muB, cfg))
        raise(Errc::ConfigError, "eta schedule must start at or above eta_high");

    std::vector<SubordinationSolution> out;
    out.reserve(eta_schedule.size());
    const cplx z0(E, eta_schedule.front());
    out.push_back(iterate_from(muA, muB, z0, z0, z0, cfg, cfg.max_iter));
    if (out.back().residual > cfg.tol) raise(Errc::NoConvergence, "no convergence at the top of the schedule");
    for (std::size_t i = 1; i < eta_schedule.size(); ++i)
        out.push_back(bridged_step(muA, muB, E, out.back(), eta_schedule[i], cfg, 0));
    return out;
}

StabilityReport stability(const SpectralMeasure& muA, const SpectralMeasure& muB, const SubordinationSolution& sol) {
    if (!(sol.residual <= 1e-9))
        raise(Errc::ConfigError, "stability requires a solution with residual <= 1e-9");
    const cplx z = sol.z, w1 = sol.omega_a, w2 = sol.omega_b;
    const TransformValue ta = muA.transforms(w2);
    const TransformValue tb = muB.transforms(w1);
    StabilityReport rep;
    rep.s_ab = z * z * tb.L1 * ta.L1 - 1.0;
    rep.t_a = 0.5 * (z * tb.L2 * ta.L1 + (z * tb.L1) * (z * tb.L1) * ta.L2);
    rep.t_b = 0.5 * (z * ta.L2 * tb.L1 + (z * ta.L1) * (z * ta.L1) * tb.L2);
    if (std::abs(rep.s_ab) < 1e-13)
        raise(Errc::StabilityDegenerate, "S_AB vanishes at this point (spectral edge)");
    const cplx f = -1.0 / (z * rep.s_ab);
    rep.omega_a_prime = f * (z * ta.L1 * w2 + w1);
    rep.omega_b_prime = f * (w2 + z * tb.L1 * w1);
    return rep;
}

KantorovichCertificate kantorovich_certificate(const SpectralMeasure& muA, const SpectralMeasure& muB, cplx omega_a,
                                               cplx omega_b, cplx z) {
    KantorovichCertificate cert;
    const TransformValue ta = muA.transforms(omega_b);
    const TransformValue tb = muB.transforms(omega_a);
    const cplx phi_a = ta.L - omega_a / z;
    const cplx phi_b = tb.L - omega_b / z;
    const cplx a = -1.0 / z;
    const cplx det = a * a - ta.L1 * tb.L1;
    if (std::abs(det) < 1e-300) return cert;
    // Jinv = (1/det) [[a, -L1_A], [-L1_B, a]]
    const cplx i11 = a / det, i12 = -ta.L1 / det, i21 = -tb.L1 / det, i22 = a / det;
    const cplx d1 = -(i11 * phi_a + i12 * phi_b);
    const cplx d2 = -(i21 * phi_a + i22 * phi_b);
    cert.b = std::sqrt(std::norm(d1) + std::norm(d2));
    // operator norm of Jinv: largest singular value of the 2x2 matrix
    const double fro2 = std::norm(i11) + std::norm(i12) + std::norm(i21) + std::norm(i22);
    const double det2 = std::norm(i11 * i22 - i12 * i21);
    const double disc = std::max(0.0, fro2 * fro2 - 4.0 * det2);
    const double opnorm = std::sqrt(0.5 * (fro2 + std::sqrt(disc)));
    // Lipschitz constant of DPhi on the ball of radius 2b around the point:
    // off-diagonal entries move by at most sup|L''| per unit step, and the
    // Pick representation bounds |L''_mu| by 2 * mass / dist^3 to the hull.
    const double rho = 2.0 * cert.b;
    const double dist_a = muA.dist_to_hull(omega_b) - rho;
    const double dist_b = muB.dist_to_hull(omega_a) - rho;
    if (dist_a <= 0 || dist_b <= 0) return cert;
    const double s2 = std::max(2.0 * muA.l_pick_mass() / (dist_a * dist_a * dist_a),
                               2.0 * muB.l_pick_mass() / (dist_b * dist_b * dist_b));
    cert.L = opnorm * s2;
    const double blb = 2.0 * cert.b * cert.L;
    if (blb >= 1.0) return cert;
    cert.t_star = (cert.L > 0) ? (1.0 - std::sqrt(1.0 - blb)) / cert.L : cert.b;
    // Admissible-region check: the certified ball must stay inside
    // C_z = {|omega| >= |z|/4} in the upper half-plane.
    const double min_mod = std::min(std::abs(omega_a), std::abs(omega_b)) - cert.t_star;
    if (min_mod < 0.25 * std::abs(z)) return cert;
    if (z.imag() > 0 && std::min(omega_a.imag(), omega_b.imag()) - cert.t_star <= 0) return cert;
    cert.passed = true;
    return cert;
}

}  // namespace freeconv
