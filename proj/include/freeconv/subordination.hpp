#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "freeconv/measure.hpp"

namespace freeconv {

struct SolverConfig {
    double tol = 1e-11;            // residual target, max(|Phi_A|, |Phi_B|)
    double newton_switch = 1e-3;   // residual below which Newton takes over
    int max_iter = 200;
    double support_margin = 1e-8;  // admissible distance of iterates from the supports
    bool certify = false;          // attach a Kantorovich certificate to solutions
    double eta_high_factor = 10.0; // eta_high = factor * a_1 * b_1
    double max_step_ratio = 10.0;  // largest allowed eta_k / eta_{k+1} in a schedule
    double continuation_jump = 0.5;// |Omega| step flagged as a branch jump
    int max_bridge_halvings = 24;  // schedule refinements before giving up on a jump
};

struct KantorovichCertificate {
    double b = 0;       // |DPhi(x0)^{-1} Phi(x0)|
    double L = 0;       // Lipschitz bound for DPhi(x0)^{-1} DPhi on the certified ball
    double t_star = 0;  // (1 - sqrt(1 - 2bL)) / L
    bool passed = false;
};

struct SubordinationSolution {
    std::complex<double> z;
    std::complex<double> omega_a, omega_b;
    double residual = 0;
    int iterations = 0;
    std::optional<KantorovichCertificate> certificate;
};

struct StabilityReport {
    std::complex<double> s_ab, t_a, t_b;
    std::complex<double> omega_a_prime, omega_b_prime;
};

// Residuals of the subordination system at (omega_a, omega_b):
//   Phi_A = M_{muA}(omega_b)/omega_b - omega_a/z
//   Phi_B = M_{muB}(omega_a)/omega_a - omega_b/z
std::pair<std::complex<double>, std::complex<double>> phi(const SpectralMeasure& muA, const SpectralMeasure& muB,
                                                          std::complex<double> omega_a, std::complex<double> omega_b,
                                                          std::complex<double> z);

// Solves Phi_AB = 0 at one spectral point. For imag(z) > 0 this runs a damped
// simultaneous fixed-point sweep seeded at (z, z) and finishes with Newton.
// For real z (strictly outside the support of muA x muB, caller's
// responsibility) it continues eta -> 0 from eta_high and polishes with one
// real-axis Newton stage.
SubordinationSolution solve_at(const SpectralMeasure& muA, const SpectralMeasure& muB, std::complex<double> z,
                               std::optional<std::pair<std::complex<double>, std::complex<double>>> guess = {},
                               const SolverConfig& cfg = {});

// Continuation along decreasing eta at fixed E; each solution seeds the next.
// A trailing 0 entry requests the real-axis limit point. Consecutive steps
// larger than cfg.continuation_jump trigger bridging by step-halving and,
// if that fails, a BranchJump error.
std::vector<SubordinationSolution> solve_path(const SpectralMeasure& muA, const SpectralMeasure& muB, double E,
                                              const std::vector<double>& eta_schedule, const SolverConfig& cfg = {});

std::vector<double> geometric_schedule(double eta_high, double eta_low, double ratio = 0.7);

// S_AB, T_A, T_B of the system and the derivatives (Omega_A', Omega_B')
// obtained from the 2x2 linear system d/dz Phi_AB = 0.
StabilityReport stability(const SpectralMeasure& muA, const SpectralMeasure& muB, const SubordinationSolution& sol);

// Kantorovich data for Newton started at (omega_a, omega_b): if passed, the
// system has a true solution within t_star of the point.
KantorovichCertificate kantorovich_certificate(const SpectralMeasure& muA, const SpectralMeasure& muB,
                                               std::complex<double> omega_a, std::complex<double> omega_b,
                                               std::complex<double> z);

double default_eta_high(const SpectralMeasure& muA, const SpectralMeasure& muB, const SolverConfig& cfg = {});

}  // namespace freeconv
