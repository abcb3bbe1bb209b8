#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "freeconv/subordination.hpp"

namespace freeconv {

struct ConvolutionResult {
    std::vector<double> grid;
    std::vector<double> density;
    double e_minus = 0, e_plus = 0;
    std::vector<std::complex<double>> stieltjes_row;
    double eval_eta = 0;
    std::vector<std::uint8_t> point_ok;  // per-grid-point solver status
};

struct QuantileTable {
    int n = 0;
    std::vector<double> gammas;  // gamma_1 >= ... >= gamma_n
};

struct DensityConfig {
    double eval_eta = 1e-6;  // 0 requests the real-line limit mode
    int threads = 0;         // 0 = hardware concurrency
    int chunk = 256;         // grid points per independently seeded chunk
    SolverConfig solver;
};

struct EdgeConfig {
    double bracket_hi_factor = 50.0;  // upper bracket: (support_hi, factor * support_hi)
    int scan_points = 400;
    SolverConfig solver;
};

struct EdgePoint {
    double e_plus = 0;
    double omega_a = 0;  // Omega_A(E+)
    double omega_b = 0;  // Omega_B(E+)
};

std::vector<double> default_grid(const SpectralMeasure& muA, const SpectralMeasure& muB, int count = 2000);

// Density of muA x muB by Stieltjes inversion of the solved subordination
// system: rho(x) = Im m(x + i eval_eta) / pi with M = M_{muA}(Omega_B).
// Values outside the computed [e_minus, e_plus] (one grid step of slack) are
// clamped to zero; stieltjes_row keeps the raw transform values.
ConvolutionResult density(const SpectralMeasure& muA, const SpectralMeasure& muB, const std::vector<double>& grid,
                          double eval_eta = 1e-6, const DensityConfig& cfg = {});

// Upper edge as the critical value of ztilde(Omega) =
// Omega * Minv_{muA}(M_{muB}(Omega)) / M_{muB}(Omega) on the real ray above
// supp muB. When ztilde' has no interior zero (point-mass dilation), the
// infimum sits at the lower bracket end and is returned instead.
EdgePoint find_upper_edge(const SpectralMeasure& muA, const SpectralMeasure& muB, const EdgeConfig& cfg = {});
double find_lower_edge(const SpectralMeasure& muA, const SpectralMeasure& muB, const EdgeConfig& cfg = {});

// gamma_j solves int_{gamma_j}^inf rho = j/n on the normalized density.
QuantileTable quantiles(const ConvolutionResult& result, int n);

// Real-axis M-transform inversion on the two monotone branches.
double m_inverse_above(const SpectralMeasure& mu, double target);
double m_inverse_below(const SpectralMeasure& mu, double target);

// CSV export, header "x,rho,re_m,im_m"; metadata goes to a JSON side file.
void write_density_csv(const ConvolutionResult& r, const std::string& path);
std::string density_meta_json(const ConvolutionResult& r, const std::string& config_hash,
                              const std::string& version);

}  // namespace freeconv
