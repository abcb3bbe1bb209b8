#pragma once

#include <complex>
#include <string>
#include <vector>

#include "freeconv/errors.hpp"

namespace freeconv {

enum class MeasureKind { Atomic, GriddedDensity };

// Stieltjes transform m, M-transform, L-transform and the first two
// derivatives of L, all evaluated at one spectral argument.
struct TransformValue {
    std::complex<double> m, M, L, L1, L2;
};

// A compactly supported probability measure on (0, inf), either a finite set
// of atoms or a density sampled on a grid. Immutable after construction; all
// evaluations are const and safe to call concurrently.
class SpectralMeasure {
public:
    static SpectralMeasure atomic(std::vector<double> locations, std::vector<double> weights);
    static SpectralMeasure dirac(double location);
    // grid strictly increasing, density >= 0, trapezoid mass 1 within 1e-8.
    static SpectralMeasure gridded(std::vector<double> grid, std::vector<double> density);
    // Same, but rescales the density to unit mass first.
    static SpectralMeasure gridded_normalized(std::vector<double> grid, std::vector<double> density);

    MeasureKind kind() const { return kind_; }
    // Atom views follow the a_1 >= ... >= a_N ordering.
    const std::vector<double>& atom_locations() const { return atoms_desc_; }
    const std::vector<double>& atom_weights() const { return atom_weights_desc_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density_values() const { return density_; }

    double support_lo() const { return support_lo_; }
    double support_hi() const { return support_hi_; }
    double mean() const { return mean_; }
    double second_moment() const { return second_moment_; }
    double variance() const { return second_moment_ - mean_ * mean_; }
    // Mass of the Pick measure representing L: int x^2 dmu / mean^2 - 1.
    double l_pick_mass() const { return second_moment_ / (mean_ * mean_) - 1.0; }

    double cdf(double x) const;
    // Smallest x with tail mass int_x^inf dmu <= tail; the k-th largest of n
    // ESD samples sits at tail = (k - 1/2)/n.
    double upper_quantile(double tail) const;
    double dist_to_support(std::complex<double> w) const;
    // Distance to the convex hull [support_lo, support_hi]; the Pick measures
    // behind L live inside the hull, so derivative bounds use this.
    double dist_to_hull(std::complex<double> w) const;

    SpectralMeasure dilated(double c) const;
    SpectralMeasure normalized_mean() const;

    std::complex<double> stieltjes(std::complex<double> z) const;
    TransformValue transforms(std::complex<double> z) const;

    // Real-axis evaluations used by the edge finder and spike machinery.
    // T = int x/(x-e) dmu; M = 1 - 1/T; M1, M2 = M', M''. Requires e off the
    // support (and off the zero of T, where M has its pole).
    struct RealTransforms {
        double m, T, M, M1, M2, L, L1, L2;
    };
    RealTransforms transforms_real(double e) const;

    // Quadrature view: atoms for Atomic, trapezoid nodes/weights for gridded.
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& node_weights() const { return weights_; }

private:
    SpectralMeasure() = default;
    void finalize_moments();
    void check_real_arg(double e) const;

    MeasureKind kind_ = MeasureKind::Atomic;
    std::vector<double> atoms_desc_, atom_weights_desc_;
    std::vector<double> grid_, density_;
    std::vector<double> nodes_, weights_;  // ascending quadrature representation
    double support_lo_ = 0, support_hi_ = 0;
    double mean_ = 0, second_moment_ = 0;
};

SpectralMeasure empirical_from_samples(const std::vector<double>& values);
double levy_distance(const SpectralMeasure& mu1, const SpectralMeasure& mu2);

// JSON schema: {"kind":"atomic","atoms":[[x,w],...]} or
//              {"kind":"density","grid":[...],"values":[...]}
SpectralMeasure measure_from_json_text(const std::string& text);
SpectralMeasure measure_from_json_file(const std::string& path);
std::string measure_to_json_text(const SpectralMeasure& mu);

}  // namespace freeconv
