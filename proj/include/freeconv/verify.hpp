#pragma once

#include "freeconv/rmt.hpp"

namespace freeconv {

// Monte Carlo verification battery: samples trials of A U B U*, compares the
// spectra and resolvents against the subordination predictions, and reports
// summary statistics per check.
struct VerifyOptions {
    int n = 1000;
    int trials = 5;
    std::uint64_t seed = 1;
    Ensemble ensemble = Ensemble::Orthogonal;
    int grid_points = 8000;       // theory density resolution
    bool with_vectors = true;     // enables delocalization and local-law checks
    bool local_law = true;
    double rigidity_c = 0.4;
    int threads = 0;
};

struct VerifyOutcome {
    double e_minus = 0, e_plus = 0;
    double mean_lambda1 = 0, edge_abs_err = 0;
    double pooled_ks = 0;
    double local_diag_a_med = 0, local_diag_b_med = 0, local_off_med = 0, local_avg_med = 0;
    double rigidity_med = 0, deloc_med = 0;
    std::complex<double> local_z;
    SimulationReport report;
};

// Piecewise-linear CDF of a computed density, normalized to total mass 1.
struct TheoryCdf {
    std::vector<double> grid, cum;
    double operator()(double x) const;
};
TheoryCdf theory_cdf(const ConvolutionResult& r);

double kolmogorov_distance(std::vector<double> samples, const TheoryCdf& cdf);

VerifyOutcome run_verify(const SpectralMeasure& muA, const SpectralMeasure& muB, const VerifyOptions& opt);

std::string verify_to_json(const VerifyOutcome& v, const VerifyOptions& opt, const std::string& config_hash,
                           const std::string& version);

}  // namespace freeconv
