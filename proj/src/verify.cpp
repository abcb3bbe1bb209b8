#include "freeconv/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace freeconv {

double TheoryCdf::operator()(double x) const {
    if (x <= grid.front()) return 0.0;
    if (x >= grid.back()) return 1.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double h = grid[k + 1] - grid[k];
    const double frac = h > 0 ? (x - grid[k]) / h : 0.0;
    return cum[k] + frac * (cum[k + 1] - cum[k]);
}

TheoryCdf theory_cdf(const ConvolutionResult& r) {
    TheoryCdf c;
    c.grid = r.grid;
    c.cum.assign(r.grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < r.grid.size(); ++i)
        c.cum[i + 1] = c.cum[i] + 0.5 * (r.grid[i + 1] - r.grid[i]) * (r.density[i] + r.density[i + 1]);
    const double total = c.cum.back();
    if (total > 0)
        for (double& v : c.cum) v /= total;
    return c;
}

double kolmogorov_distance(std::vector<double> samples, const TheoryCdf& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double f = cdf(samples[k]);
        worst = std::max(worst, std::abs((k + 1) / n - f));
        worst = std::max(worst, std::abs(k / n - f));
    }
    return worst;
}

VerifyOutcome run_verify(const SpectralMeasure& muA, const SpectralMeasure& muB, const VerifyOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    VerifyOutcome out;

    const auto grid = default_grid(muA, muB, opt.grid_points);
    DensityConfig dcfg;
    dcfg.threads = opt.threads;
    ConvolutionResult dens = density(muA, muB, grid, 0.0, dcfg);
    out.e_minus = dens.e_minus;
    out.e_plus = dens.e_plus;
    const TheoryCdf cdf = theory_cdf(dens);
    const QuantileTable qt = quantiles(dens, opt.n);

    // theory side of the local law: Omega at z = E+ + i n^{-1/3}
    std::complex<double> omega_a_z, omega_b_z;
    if (opt.with_vectors && opt.local_law) {
        out.local_z = {out.e_plus, std::pow(static_cast<double>(opt.n), -1.0 / 3.0)};
        const SubordinationSolution sol = solve_at(muA, muB, out.local_z);
        omega_a_z = sol.omega_a;
        omega_b_z = sol.omega_b;
    }

    SimulationReport& rep = out.report;
    rep.seed = opt.seed;
    rep.n = opt.n;
    rep.trials = opt.trials;
    rep.ensemble = opt.ensemble;

    std::vector<double> pooled, lambda1s;
    std::vector<double> ll_a, ll_b, ll_off, ll_avg;
    for (int t = 0; t < opt.trials; ++t) {
        const ModelInstance inst = make_instance(muA, muB, opt.n, opt.ensemble, opt.seed, t);
        if (opt.with_vectors) {
            const Decomposition d = build_and_decompose(inst);
            rep.eigenvalue_rows.push_back(d.lambda);
            rep.rigidity_ratios.push_back(rigidity_max_ratio(d.lambda, qt.gammas, opt.rigidity_c));
            rep.deloc_max.push_back(delocalization_statistic(d, opt.rigidity_c));
            if (opt.local_law) {
                const LocalLawDeviation dev =
                    local_law_check(d, inst.a_diag, inst.b_diag, out.local_z, omega_a_z, omega_b_z);
                rep.local_law_errors.push_back({t, dev.z, dev.diag_a, dev.diag_b, dev.offdiag, dev.averaged});
                ll_a.push_back(dev.diag_a);
                ll_b.push_back(dev.diag_b);
                ll_off.push_back(dev.offdiag);
                ll_avg.push_back(dev.averaged);
            }
        } else {
            std::vector<double> lambda = sample_spectrum(inst);
            rep.eigenvalue_rows.push_back(lambda);
            rep.rigidity_ratios.push_back(rigidity_max_ratio(lambda, qt.gammas, opt.rigidity_c));
        }
        const auto& lam = rep.eigenvalue_rows.back();
        lambda1s.push_back(lam.front());
        pooled.insert(pooled.end(), lam.begin(), lam.end());
    }

    out.mean_lambda1 = std::accumulate(lambda1s.begin(), lambda1s.end(), 0.0) / lambda1s.size();
    out.edge_abs_err = std::abs(out.mean_lambda1 - out.e_plus);
    out.pooled_ks = kolmogorov_distance(pooled, cdf);
    out.rigidity_med = median(rep.rigidity_ratios);
    if (!rep.deloc_max.empty()) out.deloc_med = median(rep.deloc_max);
    if (!ll_a.empty()) {
        out.local_diag_a_med = median(ll_a);
        out.local_diag_b_med = median(ll_b);
        out.local_off_med = median(ll_off);
        out.local_avg_med = median(ll_avg);
    }
    rep.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string verify_to_json(const VerifyOutcome& v, const VerifyOptions& opt, const std::string& config_hash,
                           const std::string& version) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["seed"] = opt.seed;
    j["n"] = opt.n;
    j["trials"] = opt.trials;
    j["ensemble"] = opt.ensemble == Ensemble::Orthogonal ? "orthogonal" : "unitary";
    j["e_minus"] = v.e_minus;
    j["e_plus"] = v.e_plus;
    j["mean_lambda1"] = v.mean_lambda1;
    j["edge_abs_err"] = v.edge_abs_err;
    j["pooled_ks"] = v.pooled_ks;
    j["rigidity_median"] = v.rigidity_med;
    if (!v.report.deloc_max.empty()) j["deloc_median"] = v.deloc_med;
    if (!v.report.local_law_errors.empty()) {
        j["local_law"] = {{"z", {v.local_z.real(), v.local_z.imag()}},
                          {"diag_a_median", v.local_diag_a_med},
                          {"diag_b_median", v.local_diag_b_med},
                          {"offdiag_median", v.local_off_med},
                          {"averaged_median", v.local_avg_med}};
    }
    j["rigidity_ratios"] = v.report.rigidity_ratios;
    j["deloc_max"] = v.report.deloc_max;
    return j.dump(2);
}

}  // namespace freeconv
