#include "freeconv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "freeconv/kernels.hpp"

namespace freeconv {

namespace {

constexpr double kAtomMergeRel = 1e-12;
constexpr double kMassTolAtomic = 1e-12;
constexpr double kMassTolGridded = 1e-8;
constexpr double kRealArgMargin = 1e-14;
constexpr double kPoleTol = 1e-13;

}  // namespace

SpectralMeasure SpectralMeasure::atomic(std::vector<double> locations, std::vector<double> weights) {
    if (locations.empty() || locations.size() != weights.size())
        raise(Errc::InvalidMeasure, "atomic measure needs matching nonempty locations/weights");
    std::vector<std::size_t> idx(locations.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return locations[a] < locations[b]; });

    SpectralMeasure mu;
    mu.kind_ = MeasureKind::Atomic;
    for (std::size_t k : idx) {
        const double x = locations[k], w = weights[k];
        if (!(x > 0)) raise(Errc::InvalidMeasure, "atom location must be positive");
        if (!(w > 0)) raise(Errc::InvalidMeasure, "atom weight must be positive");
        // Atoms closer than 1e-12 relative distance are merged on construction.
        if (!mu.nodes_.empty() && x - mu.nodes_.back() <= kAtomMergeRel * x) {
            mu.weights_.back() += w;
        } else {
            mu.nodes_.push_back(x);
            mu.weights_.push_back(w);
        }
    }
    const double mass = std::accumulate(mu.weights_.begin(), mu.weights_.end(), 0.0);
    if (std::abs(mass - 1.0) > kMassTolAtomic)
        raise(Errc::InvalidMeasure, "atomic weights must sum to 1 (got " + std::to_string(mass) + ")");
    mu.atoms_desc_.assign(mu.nodes_.rbegin(), mu.nodes_.rend());
    mu.atom_weights_desc_.assign(mu.weights_.rbegin(), mu.weights_.rend());
    mu.support_lo_ = mu.nodes_.front();
    mu.support_hi_ = mu.nodes_.back();
    mu.finalize_moments();
    return mu;
}

SpectralMeasure SpectralMeasure::dirac(double location) { return atomic({location}, {1.0}); }

SpectralMeasure SpectralMeasure::gridded(std::vector<double> grid, std::vector<double> density) {
    if (grid.size() < 2 || grid.size() != density.size())
        raise(Errc::InvalidMeasure, "gridded measure needs matching grid/values with >= 2 points");
    if (!(grid.front() > 0)) raise(Errc::InvalidMeasure, "grid must lie in (0, inf)");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i + 1] > grid[i])) raise(Errc::InvalidMeasure, "grid must be strictly increasing");
    for (double v : density)
        if (!(v >= 0)) raise(Errc::InvalidMeasure, "density values must be nonnegative");

    SpectralMeasure mu;
    mu.kind_ = MeasureKind::GriddedDensity;
    mu.grid_ = std::move(grid);
    mu.density_ = std::move(density);
    const std::size_t n = mu.grid_.size();
    mu.nodes_ = mu.grid_;
    mu.weights_.assign(n, 0.0);
    // Trapezoid rule as a discrete quadrature measure: integrating f against
    // the density on the stored grid equals sum_i weights_[i] * f(nodes_[i]).
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = mu.grid_[i + 1] - mu.grid_[i];
        mu.weights_[i] += 0.5 * h * mu.density_[i];
        mu.weights_[i + 1] += 0.5 * h * mu.density_[i + 1];
    }
    const double mass = std::accumulate(mu.weights_.begin(), mu.weights_.end(), 0.0);
    if (std::abs(mass - 1.0) > kMassTolGridded)
        raise(Errc::InvalidMeasure, "gridded density must integrate to 1 (got " + std::to_string(mass) + ")");
    mu.support_lo_ = mu.grid_.front();
    mu.support_hi_ = mu.grid_.back();
    mu.finalize_moments();
    return mu;
}

SpectralMeasure SpectralMeasure::gridded_normalized(std::vector<double> grid, std::vector<double> density) {
    double mass = 0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        mass += 0.5 * (grid[i + 1] - grid[i]) * (density[i] + density[i + 1]);
    if (!(mass > 0)) raise(Errc::InvalidMeasure, "density has no mass");
    for (double& v : density) v /= mass;
    return gridded(std::move(grid), std::move(density));
}

void SpectralMeasure::finalize_moments() {
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        m1 += weights_[i] * nodes_[i];
        m2 += weights_[i] * nodes_[i] * nodes_[i];
    }
    mean_ = m1;
    second_moment_ = m2;
}

double SpectralMeasure::cdf(double x) const {
    if (kind_ == MeasureKind::Atomic) {
        double c = 0;
        for (std::size_t i = 0; i < nodes_.size() && nodes_[i] <= x; ++i) c += weights_[i];
        return c;
    }
    if (x <= grid_.front()) return 0.0;
    double c = 0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        const double x0 = grid_[i], x1 = grid_[i + 1];
        if (x >= x1) {
            c += 0.5 * (x1 - x0) * (density_[i] + density_[i + 1]);
        } else {
            const double t = x - x0, h = x1 - x0;
            const double rho_t = density_[i] + (density_[i + 1] - density_[i]) * (t / h);
            c += 0.5 * t * (density_[i] + rho_t);
            return c;
        }
    }
    return c;
}

double SpectralMeasure::upper_quantile(double tail) const {
    if (kind_ == MeasureKind::Atomic) {
        double cum = 0;
        for (std::size_t i = 0; i < atoms_desc_.size(); ++i) {
            cum += atom_weights_desc_[i];
            if (cum >= tail - 1e-15) return atoms_desc_[i];
        }
        return atoms_desc_.back();
    }
    const double total = cdf(grid_.back());
    const double target = total - tail;
    if (target <= 0) return grid_.front();
    double prev_c = 0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        const double c1 = cdf(grid_[i + 1]);
        if (c1 >= target) {
            const double frac = (c1 > prev_c) ? (target - prev_c) / (c1 - prev_c) : 0.0;
            return grid_[i] + frac * (grid_[i + 1] - grid_[i]);
        }
        prev_c = c1;
    }
    return grid_.back();
}

double SpectralMeasure::dist_to_support(std::complex<double> w) const {
    if (kind_ == MeasureKind::Atomic) {
        double best = std::numeric_limits<double>::infinity();
        for (double x : nodes_) best = std::min(best, std::abs(w - x));
        return best;
    }
    return dist_to_hull(w);
}

double SpectralMeasure::dist_to_hull(std::complex<double> w) const {
    const double re = w.real(), im = w.imag();
    if (re >= support_lo_ && re <= support_hi_) return std::abs(im);
    const double gap = (re < support_lo_) ? support_lo_ - re : re - support_hi_;
    return std::hypot(gap, im);
}

SpectralMeasure SpectralMeasure::dilated(double c) const {
    if (!(c > 0)) raise(Errc::InvalidMeasure, "dilation factor must be positive");
    if (kind_ == MeasureKind::Atomic) {
        std::vector<double> xs(nodes_), ws(weights_);
        for (double& x : xs) x *= c;
        return atomic(std::move(xs), std::move(ws));
    }
    std::vector<double> g(grid_), d(density_);
    for (double& x : g) x *= c;
    for (double& v : d) v /= c;
    return gridded(std::move(g), std::move(d));
}

SpectralMeasure SpectralMeasure::normalized_mean() const { return dilated(1.0 / mean_); }

void SpectralMeasure::check_real_arg(double e) const {
    if (kind_ == MeasureKind::Atomic) {
        if (dist_to_support(e) <= kRealArgMargin)
            raise(Errc::SupportCollision, "real argument collides with an atom");
    } else {
        if (e >= support_lo_ - kRealArgMargin && e <= support_hi_ + kRealArgMargin)
            raise(Errc::SupportCollision, "real argument inside the gridded support");
    }
}

std::complex<double> SpectralMeasure::stieltjes(std::complex<double> z) const {
    if (z.imag() == 0.0) check_real_arg(z.real());
    return kernels::moment_sums(nodes_.data(), weights_.data(), nodes_.size(), z).m;
}

TransformValue SpectralMeasure::transforms(std::complex<double> z) const {
    if (z.imag() == 0.0) check_real_arg(z.real());
    if (std::abs(z) == 0.0) raise(Errc::MTransformPole, "transforms undefined at z = 0");
    const auto s = kernels::moment_sums(nodes_.data(), weights_.data(), nodes_.size(), z);
    const std::complex<double> m = s.m;
    const std::complex<double> T = 1.0 + z * m;
    if (std::abs(T) <= kPoleTol) raise(Errc::MTransformPole, "1 + z m(z) vanishes");
    TransformValue out;
    out.m = m;
    out.M = (z * m) / T;
    out.L = out.M / z;
    const std::complex<double> M1 = s.s2 / (T * T);
    const std::complex<double> M2 = 2.0 * s.s3 / (T * T) - 2.0 * s.s2 * s.s2 / (T * T * T);
    out.L1 = M1 / z - out.M / (z * z);
    out.L2 = M2 / z - 2.0 * M1 / (z * z) + 2.0 * out.M / (z * z * z);
    return out;
}

SpectralMeasure::RealTransforms SpectralMeasure::transforms_real(double e) const {
    check_real_arg(e);
    if (e == 0.0) raise(Errc::MTransformPole, "transforms undefined at z = 0");
    const auto s = kernels::moment_sums_real(nodes_.data(), weights_.data(), nodes_.size(), e);
    const double T = s.s1;
    if (std::abs(T) <= kPoleTol) raise(Errc::MTransformPole, "1 + z m(z) vanishes");
    RealTransforms out;
    out.m = s.m;
    out.T = T;
    out.M = 1.0 - 1.0 / T;
    out.M1 = s.s2 / (T * T);
    out.M2 = 2.0 * s.s3 / (T * T) - 2.0 * s.s2 * s.s2 / (T * T * T);
    out.L = out.M / e;
    out.L1 = out.M1 / e - out.M / (e * e);
    out.L2 = out.M2 / e - 2.0 * out.M1 / (e * e) + 2.0 * out.M / (e * e * e);
    return out;
}

SpectralMeasure empirical_from_samples(const std::vector<double>& values) {
    if (values.empty()) raise(Errc::NonPositiveSample, "empty sample set");
    for (double v : values)
        if (!(v > 0)) raise(Errc::NonPositiveSample, "samples must be positive");
    std::vector<double> w(values.size(), 1.0 / static_cast<double>(values.size()));
    return SpectralMeasure::atomic(values, std::move(w));
}

namespace {

double cdf_left(const SpectralMeasure& mu, double x) {
    if (mu.kind() != MeasureKind::Atomic) return mu.cdf(x);
    double c = 0;
    const auto& xs = mu.nodes();
    const auto& ws = mu.node_weights();
    for (std::size_t i = 0; i < xs.size() && xs[i] < x; ++i) c += ws[i];
    return c;
}

std::vector<double> breakpoints(const SpectralMeasure& mu) {
    return mu.kind() == MeasureKind::Atomic ? mu.nodes() : mu.grid();
}

// sup_x [G(x) - F(x + eps)] over the breakpoint candidates of both CDFs.
double one_sided_gap(const SpectralMeasure& g, const SpectralMeasure& f, double eps) {
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : breakpoints(g)) worst = std::max(worst, g.cdf(t) - f.cdf(t + eps));
    for (double s : breakpoints(f)) worst = std::max(worst, cdf_left(g, s - eps) - cdf_left(f, s));
    return worst;
}

}  // namespace

double levy_distance(const SpectralMeasure& mu1, const SpectralMeasure& mu2) {
    auto feasible = [&](double eps) {
        return one_sided_gap(mu2, mu1, eps) <= eps + 1e-15 && one_sided_gap(mu1, mu2, eps) <= eps + 1e-15;
    };
    double lo = 0.0;
    double hi = std::max(mu1.support_hi(), mu2.support_hi()) - std::min(mu1.support_lo(), mu2.support_lo()) + 1.0;
    if (feasible(0.0)) return 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

SpectralMeasure measure_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        raise(Errc::InvalidMeasure, std::string("measure JSON parse error: ") + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "atomic") {
        std::vector<double> xs, ws;
        for (const auto& pair : j.at("atoms")) {
            xs.push_back(pair.at(0).get<double>());
            ws.push_back(pair.at(1).get<double>());
        }
        return SpectralMeasure::atomic(std::move(xs), std::move(ws));
    }
    if (kind == "density") {
        return SpectralMeasure::gridded(j.at("grid").get<std::vector<double>>(),
                                        j.at("values").get<std::vector<double>>());
    }
    raise(Errc::InvalidMeasure, "measure JSON: kind must be \"atomic\" or \"density\"");
}

SpectralMeasure measure_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::InvalidMeasure, "cannot open measure file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return measure_from_json_text(ss.str());
}

std::string measure_to_json_text(const SpectralMeasure& mu) {
    nlohmann::json j;
    if (mu.kind() == MeasureKind::Atomic) {
        j["kind"] = "atomic";
        auto atoms = nlohmann::json::array();
        for (std::size_t i = 0; i < mu.atom_locations().size(); ++i)
            atoms.push_back({mu.atom_locations()[i], mu.atom_weights()[i]});
        j["atoms"] = std::move(atoms);
    } else {
        j["kind"] = "density";
        j["grid"] = mu.grid();
        j["values"] = mu.density_values();
    }
    return j.dump();
}

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::InvalidMeasure: return "InvalidMeasure";
        case Errc::SupportCollision: return "SupportCollision";
        case Errc::MTransformPole: return "MTransformPole";
        case Errc::NonPositiveSample: return "NonPositiveSample";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::LeftAdmissibleRegion: return "LeftAdmissibleRegion";
        case Errc::BranchJump: return "BranchJump";
        case Errc::StabilityDegenerate: return "StabilityDegenerate";
        case Errc::EdgeBracketFailure: return "EdgeBracketFailure";
        case Errc::SubcriticalTarget: return "SubcriticalTarget";
        case Errc::SubcriticalInS: return "SubcriticalInS";
        case Errc::OutlierInsideBulk: return "OutlierInsideBulk";
        case Errc::DecompositionFailure: return "DecompositionFailure";
        case Errc::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

}  // namespace freeconv
