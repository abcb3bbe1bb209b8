#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "freeconv/spiked.hpp"

namespace freeconv {

enum class Ensemble { Unitary, Orthogonal };

// One sampled model H = A U B U*: diagonals (possibly spiked, descending) and
// the RNG stream that generates the Haar factor.
struct ModelInstance {
    int n = 0;
    std::vector<double> a_diag, b_diag;
    Ensemble ensemble = Ensemble::Orthogonal;
    std::uint64_t seed = 0;
    int trial = 0;  // distinct trials draw independent streams from (seed, trial)
};

ModelInstance make_instance(const SpectralMeasure& muA, const SpectralMeasure& muB, int n, Ensemble ensemble,
                            std::uint64_t seed, int trial = 0);
ModelInstance make_spiked_instance(const SpikedModel& model, Ensemble ensemble, std::uint64_t seed, int trial = 0);

std::mt19937_64 rng_for(std::uint64_t seed, int trial);

// Haar sampler: QR of a Ginibre matrix with the R-diagonal sign (orthogonal)
// or phase (unitary) normalization, computed through the Householder factors
// directly. Column-major n x n output.
std::vector<double> sample_haar_orthogonal(int n, std::mt19937_64& rng);
std::vector<std::complex<double>> sample_haar_unitary(int n, std::mt19937_64& rng);

// Eigenvalues of H-tilde = A^{1/2} U B U* A^{1/2}, descending. Values-only
// fast path (syrk + two-stage solver).
std::vector<double> sample_spectrum(const ModelInstance& inst);

// Full decomposition via the SVD of Y = A^{1/2} U B^{1/2}: eigenvalues
// lambda_k = s_k^2 descending, left vectors u_k (H-tilde side) and right
// vectors v_k (the B^{1/2} U* A U B^{1/2} side).
struct Decomposition {
    int n = 0;
    bool complex_data = false;
    std::vector<double> lambda;
    std::vector<double> ur, vr;                 // col-major, column k = vector k
    std::vector<std::complex<double>> uc, vc;   // used when complex_data

    std::complex<double> u_entry(int i, int k) const {
        return complex_data ? uc[static_cast<std::size_t>(k) * n + i] : ur[static_cast<std::size_t>(k) * n + i];
    }
    std::complex<double> v_entry(int i, int k) const {
        return complex_data ? vc[static_cast<std::size_t>(k) * n + i] : vr[static_cast<std::size_t>(k) * n + i];
    }
};

Decomposition build_and_decompose(const ModelInstance& inst);

// Dense resolvent U diag(1/(lambda-z)) U^* of the chosen side, column-major.
void resolvent_dense(const Decomposition& d, std::complex<double> z, bool left_side,
                     std::vector<std::complex<double>>& out);

struct LocalLawDeviation {
    std::complex<double> z;
    double diag_a = 0, diag_b = 0, offdiag = 0, averaged = 0;
};

// Deviations of the resolvents from the subordination limits
// a_i/(a_i - Omega_B) and b_i/(b_i - Omega_A).
LocalLawDeviation local_law_check(const Decomposition& d, const std::vector<double>& a_diag,
                                  const std::vector<double>& b_diag, std::complex<double> z,
                                  std::complex<double> omega_a, std::complex<double> omega_b);

// max_i sum_j |G_ij|^2 - Im G_ii / eta over rows; zero for an exact resolvent.
double ward_max_defect(const Decomposition& d, std::complex<double> z);

// max_{i <= c n} |lambda_i - gamma_i| i^{1/3} n^{2/3}
double rigidity_max_ratio(const std::vector<double>& lambda_desc, const std::vector<double>& gammas_desc,
                          double c = 0.4);

// n * max coordinate mass over the top c n singular vectors, skipping ranks
// listed in excluded (outliers concentrate and are not delocalized).
double delocalization_statistic(const Decomposition& d, double c = 0.4, const std::vector<int>& excluded_ranks = {});

// Count of localized vectors among the top c n ranks on each side.
std::pair<int, int> estimate_spike_counts(const Decomposition& d, double omega_threshold, double c = 0.4);

// Measured outliers and spike-direction overlaps across trials, next to the
// theoretical locations, overlap limits and fluctuation scales.
struct OutlierExperimentRow {
    int trial = 0;
    OutlierLabel label;
    int rank = 0;                  // eigenvalue rank pi(label)
    double lambda_measured = 0;
    double location_predicted = 0;
    double fluctuation_scale = 0;  // n^{-1/2} Delta^{1/2}
    double overlap_measured = 0;   // |<u_rank, e_spike>|^2 (v-side for B labels)
    double overlap_predicted = 0;  // diagonal overlap limit g
};

std::vector<OutlierExperimentRow> outlier_experiment(const SpikedModel& model, Ensemble ensemble, int trials,
                                                     std::uint64_t seed);

// Spike-value estimators: tr A - (1/N) sum_{j>r+s} a_j / (x G_jj(x) + 1) with
// the resolvent diagonal taken over non-outlier eigenpairs at the outlier
// location x. outlier_ranks_* are the 1-based eigenvalue ranks per spike.
struct SpikeEstimates {
    std::vector<double> a_hat, b_hat;
};
SpikeEstimates estimate_spikes(const Decomposition& d, const std::vector<double>& a_base_diag,
                               const std::vector<double>& b_base_diag, const std::vector<int>& outlier_ranks_a,
                               const std::vector<int>& outlier_ranks_b, double e_plus);

struct OverlapRecord {
    int trial = 0, k = 0, i = 0;
    double value = 0;
};

struct LocalLawRecord {
    int trial = 0;
    std::complex<double> z;
    double diag_a = 0, diag_b = 0, offdiag = 0, averaged = 0;
};

struct SimulationReport {
    std::uint64_t seed = 0;
    int n = 0, trials = 0;
    Ensemble ensemble = Ensemble::Orthogonal;
    std::vector<std::vector<double>> eigenvalue_rows;
    std::vector<OverlapRecord> top_vector_overlaps;
    std::vector<LocalLawRecord> local_law_errors;
    std::vector<double> rigidity_ratios;
    std::vector<double> deloc_max;
    double timing_seconds = 0;  // console diagnostics; not persisted
};

// Persisted artifacts: JSON (deterministic for a fixed seed/config; timing is
// deliberately left out) and per-table CSV next to it.
std::string report_to_json(const SimulationReport& rep, const std::string& config_hash, const std::string& version);
void write_report_csv_tables(const SimulationReport& rep, const std::string& prefix);

double median(std::vector<double> values);

}  // namespace freeconv
