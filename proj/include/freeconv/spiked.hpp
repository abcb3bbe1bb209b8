#pragma once

#include <string>
#include <vector>

#include "freeconv/convolution.hpp"

namespace freeconv {

// Base measures plus finite-rank multiplicative spikes a_k -> a_k (1 + d_k).
// Spikes attach to the largest base values at ESD resolution n; the base
// measures themselves stay untouched for all bulk computations.
struct SpikedModel {
    SpectralMeasure muA, muB;
    std::vector<double> d_a, d_b;
    long n = 0;

    std::vector<double> a_hat, b_hat;  // spiked values, sorted descending

    static SpikedModel make(SpectralMeasure muA, SpectralMeasure muB, std::vector<double> d_a,
                            std::vector<double> d_b, long n);

private:
    SpikedModel(SpectralMeasure a, SpectralMeasure b) : muA(std::move(a)), muB(std::move(b)) {}
};

enum class SpikeSide { FromA, FromB };

struct OutlierLabel {
    SpikeSide side = SpikeSide::FromA;
    int index = 0;  // 1-based spike index on its side
    bool operator==(const OutlierLabel&) const = default;
};

struct OutlierPrediction {
    OutlierLabel label;
    int pi_index = 0;       // rank among all r+s predicted locations
    double location = 0;    // Omega^{-1}(hat value), or E+ for non-outliers
    double fluctuation = 0; // n^{-1/2} Delta^{1/2}, or n^{-2/3} for non-outliers
    bool supercritical = false;
};

// Edge data and per-spike classification shared by the prediction routines.
struct Classification {
    double e_plus = 0;
    double omega_a_edge = 0;  // Omega_A(E+)
    double omega_b_edge = 0;  // Omega_B(E+)
    std::vector<OutlierLabel> outliers;       // O: hat value above Omega(E+)
    std::vector<OutlierLabel> supercritical;  // O+: above Omega(E+) + n^{-1/3}
    std::vector<int> pi_a, pi_b;              // ranks, 1-based per side
    std::vector<double> loc_a, loc_b;         // predicted locations per spike
};

struct DeltaTable {
    // delta[i][j]: gap from declared label i to declared label j (labels
    // ordered A-side spikes then B-side), using the side-appropriate formula.
    std::vector<std::vector<double>> pairwise;
    std::vector<double> delta_s;  // delta_frak(S) per declared label
    std::vector<double> base_gap; // gap from each label to the nearest non-spiked base value
};

struct OverlapPrediction {
    std::vector<OutlierLabel> set_s;
    std::vector<double> g_a_diag;  // per A-label in S
    std::vector<double> g_b_diag;  // per B-label in S
    DeltaTable delta_table;
    bool assumption_ok = false;
};

enum class WhichOmega { A, B };

// Inverse subordination function on (E+, inf): returns x with Omega(x) equal
// to target, which must exceed Omega(E+). A-side spikes invert Omega_B and
// B-side spikes invert Omega_A.
double omega_inverse(WhichOmega which, const SpikedModel& model, double target);
// Omega_A / Omega_B evaluated at a real point x > E+.
double omega_at_real(WhichOmega which, const SpikedModel& model, double x);

Classification classify(const SpikedModel& model);
std::vector<OutlierPrediction> predict_outliers(const SpikedModel& model);
DeltaTable nonoverlap_deltas(const SpikedModel& model, const std::vector<OutlierLabel>& S);
OverlapPrediction predict_overlaps(const SpikedModel& model, const std::vector<OutlierLabel>& S,
                                   double tau1 = 1.0 / 3.0, double tau2 = 0.5);

// JSON spike spec {"d_a":[...],"d_b":[...],"n":N}
SpikedModel spiked_model_from_json_text(const SpectralMeasure& muA, const SpectralMeasure& muB,
                                        const std::string& text);
std::string predictions_to_json(const SpikedModel& model, const Classification& cls,
                                const std::vector<OutlierPrediction>& preds);

}  // namespace freeconv
