// freeconv: free multiplicative convolution of spectral measures, spiked-model
// predictions, and Monte Carlo verification of the subordination limits.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "freeconv/convolution.hpp"
#include "freeconv/verify.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using freeconv::Ensemble;
using freeconv::SpectralMeasure;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Options {
    std::string mu_a_path, mu_b_path, preset, spikes, out;
    std::string grid_spec;
    double eta = 1e-6;
    int n = 1000;
    int trials = 5;
    std::uint64_t seed = 1;
    double tol = 1e-11;
    int threads = 0;
    std::string ensemble = "orthogonal";

    std::string canonical(const std::string& command) const {
        std::ostringstream ss;
        ss << command << "|muA=" << mu_a_path << "|muB=" << mu_b_path << "|preset=" << preset
           << "|spikes=" << spikes << "|grid=" << grid_spec << "|eta=" << eta << "|n=" << n
           << "|trials=" << trials << "|seed=" << seed << "|tol=" << tol << "|ensemble=" << ensemble;
        return ss.str();
    }
};

SpectralMeasure two_atom_measure() { return SpectralMeasure::atomic({1.0, 3.0}, {0.5, 0.5}); }

struct ResolvedInputs {
    std::optional<SpectralMeasure> mu_a, mu_b;
    std::string spikes_json;  // empty unless a spiked preset or --spikes given
};

// Spiked presets pin the gap above Omega(E+), so the strengths depend on the
// solved edge of the base pair.
std::string spiked_preset_json(const SpectralMeasure& muA, const SpectralMeasure& muB, int n, bool multi) {
    const freeconv::EdgePoint edge = freeconv::find_upper_edge(muA, muB);
    const double base_a = muA.upper_quantile(0.5 / n);
    const double base_b = muB.upper_quantile(0.5 / n);
    nlohmann::json j;
    if (!multi) {
        j["d_a"] = {(edge.omega_b + 0.5) / base_a - 1.0};
        j["d_b"] = nlohmann::json::array();
    } else {
        const double base_a2 = muA.upper_quantile(1.5 / n);
        j["d_a"] = {(edge.omega_b + 1.5) / base_a - 1.0, (edge.omega_b + 0.8) / base_a2 - 1.0};
        j["d_b"] = {(edge.omega_a + 2.5) / base_b - 1.0};
    }
    j["n"] = n;
    return j.dump();
}

ResolvedInputs resolve_inputs(const Options& opt) {
    ResolvedInputs in;
    if (!opt.preset.empty()) {
        if (opt.preset == "two-atom") {
            in.mu_a = two_atom_measure();
            in.mu_b = two_atom_measure();
        } else if (opt.preset == "spiked-single" || opt.preset == "spiked-multi") {
            in.mu_a = two_atom_measure();
            in.mu_b = two_atom_measure();
            in.spikes_json = spiked_preset_json(*in.mu_a, *in.mu_b, opt.n, opt.preset == "spiked-multi");
        } else {
            freeconv::raise(freeconv::Errc::ConfigError, "unknown preset: " + opt.preset);
        }
    }
    if (!opt.mu_a_path.empty()) in.mu_a = freeconv::measure_from_json_file(opt.mu_a_path);
    if (!opt.mu_b_path.empty()) in.mu_b = freeconv::measure_from_json_file(opt.mu_b_path);
    if (!opt.spikes.empty()) {
        std::ifstream f(opt.spikes);
        if (!f) freeconv::raise(freeconv::Errc::ConfigError, "cannot open spikes file: " + opt.spikes);
        std::stringstream ss;
        ss << f.rdbuf();
        in.spikes_json = ss.str();
    }
    if (!in.mu_a || !in.mu_b)
        freeconv::raise(freeconv::Errc::ConfigError, "need --muA/--muB or a --preset");
    return in;
}

std::vector<double> parse_grid(const std::string& spec, const SpectralMeasure& muA, const SpectralMeasure& muB) {
    if (spec.empty()) return freeconv::default_grid(muA, muB);
    double lo = 0, hi = 0;
    int count = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 2 || !(hi > lo))
        freeconv::raise(freeconv::Errc::ConfigError, "grid spec must be lo:hi:count");
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
    return g;
}

Ensemble parse_ensemble(const std::string& name) {
    if (name == "orthogonal") return Ensemble::Orthogonal;
    if (name == "unitary") return Ensemble::Unitary;
    freeconv::raise(freeconv::Errc::ConfigError, "ensemble must be orthogonal or unitary");
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) freeconv::raise(freeconv::Errc::ConfigError, "cannot open output file: " + path);
    out << text << "\n";
}

int cmd_density(const Options& opt) {
    const auto in = resolve_inputs(opt);
    const auto grid = parse_grid(opt.grid_spec, *in.mu_a, *in.mu_b);
    freeconv::DensityConfig cfg;
    cfg.eval_eta = opt.eta;
    cfg.threads = opt.threads;
    cfg.solver.tol = opt.tol;
    const auto result = freeconv::density(*in.mu_a, *in.mu_b, grid, opt.eta, cfg);
    const std::string hash = hex64(fnv1a(opt.canonical("density")));
    if (opt.out.empty()) freeconv::raise(freeconv::Errc::ConfigError, "density needs --out");
    freeconv::write_density_csv(result, opt.out);
    std::ofstream meta(opt.out + ".meta.json");
    meta << freeconv::density_meta_json(result, hash, kVersion) << "\n";
    std::cout << "density: " << result.grid.size() << " points, edges [" << result.e_minus << ", "
              << result.e_plus << "] -> " << opt.out << "\n";
    return 0;
}

int cmd_edges(const Options& opt) {
    const auto in = resolve_inputs(opt);
    const auto up = freeconv::find_upper_edge(*in.mu_a, *in.mu_b);
    const double lo = freeconv::find_lower_edge(*in.mu_a, *in.mu_b);
    nlohmann::json j;
    j["e_minus"] = lo;
    j["e_plus"] = up.e_plus;
    j["omega_a_edge"] = up.omega_a;
    j["omega_b_edge"] = up.omega_b;
    j["config_hash"] = hex64(fnv1a(opt.canonical("edges")));
    j["version"] = kVersion;
    write_text(opt.out, j.dump(2));
    return 0;
}

int cmd_subordinate(const Options& opt) {
    const auto in = resolve_inputs(opt);
    const auto grid = parse_grid(opt.grid_spec, *in.mu_a, *in.mu_b);
    freeconv::SolverConfig cfg;
    cfg.tol = opt.tol;
    auto arr = nlohmann::json::array();
    std::optional<std::pair<std::complex<double>, std::complex<double>>> seed;
    for (double e : grid) {
        const std::complex<double> z(e, opt.eta);
        freeconv::SubordinationSolution sol;
        try {
            sol = seed ? freeconv::solve_at(*in.mu_a, *in.mu_b, z, seed, cfg)


                       : freeconv::solve_at(*in.mu_a, *in.mu_b, z, {}, cfg);
        } catch (const freeconv::Error&) {
            sol = freeconv::solve_at(*in.mu_a, *in.mu_b, z, {}, cfg);
        }
        seed = std::make_pair(sol.omega_a, sol.omega_b);
        arr.push_back({{"z", {sol.z.real(), sol.z.imag()}},
                       {"omega_a", {sol.omega_a.real(), sol.omega_a.imag()}},
                       {"omega_b", {sol.omega_b.real(), sol.omega_b.imag()}},
                       {"residual", sol.residual},
                       {"iterations", sol.iterations}});
    }
    nlohmann::json j;
    j["config_hash"] = hex64(fnv1a(opt.canonical("subordinate")));
    j["version"] = kVersion;
    j["solutions"] = std::move(arr);
    write_text(opt.out, j.dump(2));
    return 0;
}

int cmd_spiked_predict(const Options& opt) {
    const auto in = resolve_inputs(opt);
    if (in.spikes_json.empty())
        freeconv::raise(freeconv::Errc::ConfigError, "spiked-predict needs --spikes or a spiked preset");
    const auto model = freeconv::spiked_model_from_json_text(*in.mu_a, *in.mu_b, in.spikes_json);
    const auto cls = freeconv::classify(model);
    const auto preds = freeconv::predict_outliers(model);
    nlohmann::json j = nlohmann::json::parse(freeconv::predictions_to_json(model, cls, preds));
    if (!cls.supercritical.empty()) {
        const auto ov = freeconv::predict_overlaps(model, cls.supercritical);
        j["overlaps"] = {{"g_a", ov.g_a_diag}, {"g_b", ov.g_b_diag}, {"assumption_ok", ov.assumption_ok}};
    }
    j["config_hash"] = hex64(fnv1a(opt.canonical("spiked-predict")));
    j["version"] = kVersion;
    write_text(opt.out, j.dump(2));
    return 0;
}

int cmd_simulate(const Options& opt) {
    const auto in = resolve_inputs(opt);
    freeconv::SimulationReport rep;
    rep.seed = opt.seed;
    rep.n = opt.n;
    rep.trials = opt.trials;
    rep.ensemble = parse_ensemble(opt.ensemble);
    for (int t = 0; t < opt.trials; ++t) {
        freeconv::ModelInstance inst;
        if (!in.spikes_json.empty()) {
            const auto model = freeconv::spiked_model_from_json_text(*in.mu_a, *in.mu_b, in.spikes_json);
            inst = freeconv::make_spiked_instance(model, rep.ensemble, opt.seed, t);
        } else {
            inst = freeconv::make_instance(*in.mu_a, *in.mu_b, opt.n, rep.ensemble, opt.seed, t);
        }
        rep.eigenvalue_rows.push_back(freeconv::sample_spectrum(inst));
    }
    const std::string hash = hex64(fnv1a(opt.canonical("simulate")));
    if (opt.out.empty()) freeconv::raise(freeconv::Errc::ConfigError, "simulate needs --out");
    write_text(opt.out, freeconv::report_to_json(rep, hash, kVersion));
    freeconv::write_report_csv_tables(rep, opt.out);
    std::cout << "simulate: " << opt.trials << " trials at n=" << opt.n << " -> " << opt.out << "\n";
    return 0;
}

int cmd_verify(const Options& opt) {
    const auto in = resolve_inputs(opt);
    freeconv::VerifyOptions vopt;
    vopt.n = opt.n;
    vopt.trials = opt.trials;
    vopt.seed = opt.seed;
    vopt.ensemble = parse_ensemble(opt.ensemble);
    vopt.threads = opt.threads;
    const auto outcome = freeconv::run_verify(*in.mu_a, *in.mu_b, vopt);
    const std::string hash = hex64(fnv1a(opt.canonical("verify")));
    write_text(opt.out, freeconv::verify_to_json(outcome, vopt, hash, kVersion));
    std::cerr << "verify: n=" << opt.n << " trials=" << opt.trials << " took " << outcome.report.timing_seconds
              << "s\n";
    return 0;
}

int cmd_estimate(const Options& opt) {
    const auto in = resolve_inputs(opt);
    if (in.spikes_json.empty())
        freeconv::raise(freeconv::Errc::ConfigError, "estimate needs --spikes or a spiked preset");
    const auto model = freeconv::spiked_model_from_json_text(*in.mu_a, *in.mu_b, in.spikes_json);
    const auto cls = freeconv::classify(model);
    const auto preds = freeconv::predict_outliers(model);
    const Ensemble ens = parse_ensemble(opt.ensemble);

    std::vector<int> ranks_a, ranks_b;
    std::vector<double> true_a, true_b;
    for (const auto& p : preds) {
        if (!p.supercritical) continue;
        if (p.label.side == freeconv::SpikeSide::FromA) {
            ranks_a.push_back(p.pi_index);
            true_a.push_back(model.a_hat[p.label.index - 1]);
        } else {
            ranks_b.push_back(p.pi_index);
            true_b.push_back(model.b_hat[p.label.index - 1]);
        }
    }

    nlohmann::json trials_json = nlohmann::json::array();
    const double omega_threshold = 10.0 * std::log(static_cast<double>(opt.n)) / static_cast<double>(opt.n);
    std::vector<std::vector<double>> est_a(ranks_a.size()), est_b(ranks_b.size());
    std::vector<int> rhats, shats;
    const auto base = freeconv::make_instance(*in.mu_a, *in.mu_b, opt.n, ens, 0, 0);
    for (int t = 0; t < opt.trials; ++t) {
        const auto inst = freeconv::make_spiked_instance(model, ens, opt.seed, t);
        const auto d = freeconv::build_and_decompose(inst);
        const auto est = freeconv::estimate_spikes(d, base.a_diag, base.b_diag, ranks_a, ranks_b, cls.e_plus);
        const auto counts = freeconv::estimate_spike_counts(d, omega_threshold);
        rhats.push_back(counts.first);
        shats.push_back(counts.second);
        for (std::size_t i = 0; i < est.a_hat.size(); ++i) est_a[i].push_back(est.a_hat[i]);
        for (std::size_t i = 0; i < est.b_hat.size(); ++i) est_b[i].push_back(est.b_hat[i]);
        trials_json.push_back({{"trial", t}, {"a_hat", est.a_hat}, {"b_hat", est.b_hat},
                               {"r_hat", counts.first}, {"s_hat", counts.second}});
    }
    nlohmann::json j;
    j["config_hash"] = hex64(fnv1a(opt.canonical("estimate")));
    j["version"] = kVersion;
    j["seed"] = opt.seed;
    j["true_a"] = true_a;
    j["true_b"] = true_b;
    j["trials"] = std::move(trials_json);
    auto med = [](std::vector<double> v) { return freeconv::median(std::move(v)); };
    nlohmann::json med_a = nlohmann::json::array(), med_b = nlohmann::json::array();
    for (auto& col : est_a) med_a.push_back(med(col));
    for (auto& col : est_b) med_b.push_back(med(col));
    j["median_a_hat"] = std::move(med_a);
    j["median_b_hat"] = std::move(med_b);
    write_text(opt.out, j.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"free multiplicative convolution toolkit"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--muA", opt.mu_a_path, "measure JSON for A");
        sub->add_option("--muB", opt.mu_b_path, "measure JSON for B");
        sub->add_option("--preset", opt.preset, "two-atom | spiked-single | spiked-multi");
        sub->add_option("--grid", opt.grid_spec, "lo:hi:count");
        sub->add_option("--eta", opt.eta, "spectral imaginary part");
        sub->add_option("--n", opt.n, "matrix dimension");
        sub->add_option("--trials", opt.trials, "Monte Carlo trials");
        sub->add_option("--seed", opt.seed, "RNG seed");
        sub->add_option("--spikes", opt.spikes, "spike spec JSON file");
        sub->add_option("--out", opt.out, "output path");
        sub->add_option("--tol", opt.tol, "solver tolerance");
        sub->add_option("--threads", opt.threads, "worker threads (0 = auto)");
        sub->add_option("--ensemble", opt.ensemble, "orthogonal | unitary");
    };

    auto* density = app.add_subcommand("density", "density of muA x muB on a grid");
    auto* edges = app.add_subcommand("edges", "support edges E- and E+");
    auto* subordinate = app.add_subcommand("subordinate", "subordination functions on a grid");
    auto* spiked = app.add_subcommand("spiked-predict", "outlier and overlap predictions");
    auto* simulate = app.add_subcommand("simulate", "sample spectra of A U B U*");
    auto* verify = app.add_subcommand("verify", "Monte Carlo verification battery");
    auto* estimate = app.add_subcommand("estimate", "spike value/count estimators");
    for (auto* sub : {density, edges, subordinate, spiked, simulate, verify, estimate}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(density)) return cmd_density(opt);
        if (app.got_subcommand(edges)) return cmd_edges(opt);
        if (app.got_subcommand(subordinate)) return cmd_subordinate(opt);
        if (app.got_subcommand(spiked)) return cmd_spiked_predict(opt);
        if (app.got_subcommand(simulate)) return cmd_simulate(opt);
        if (app.got_subcommand(verify)) return cmd_verify(opt);
        if (app.got_subcommand(estimate)) return cmd_estimate(opt);
    } catch (const freeconv::Error& e) {
        if (e.code() == freeconv::Errc::ConfigError || e.code() == freeconv::Errc::InvalidMeasure) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }
        nlohmann::json err;
        err["error"] = {{"code", freeconv::errc_name(e.code())}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
