#include "freeconv/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <cblas.h>
#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include <json.hpp>

namespace freeconv {

namespace {

using cplx = std::complex<double>;

std::vector<double> quantile_diag(const SpectralMeasure& mu, int n) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = mu.upper_quantile((i + 0.5) / static_cast<double>(n));
    return d;
}

void check_instance(const ModelInstance& inst) {
    if (inst.n < 2) raise(Errc::ConfigError, "instance needs n >= 2");
    if (static_cast<int>(inst.a_diag.size()) != inst.n || static_cast<int>(inst.b_diag.size()) != inst.n)
        raise(Errc::ConfigError, "diagonal length mismatch");
    for (int i = 1; i < inst.n; ++i)
        if (inst.a_diag[i] > inst.a_diag[i - 1] || inst.b_diag[i] > inst.b_diag[i - 1])
            raise(Errc::ConfigError, "diagonals must be sorted descending");
}

// Y = diag(sqrt(a)) U diag(sqrt(b)), in place.
template <class T>
void sandwich_scale(std::vector<T>& u, const std::vector<double>& a, const std::vector<double>& b, int n) {
    std::vector<double> ra(n), rb(n);
    for (int i = 0; i < n; ++i) ra[i] = std::sqrt(a[i]);
    for (int i = 0; i < n; ++i) rb[i] = std::sqrt(b[i]);
    for (int j = 0; j < n; ++j) {
        T* col = u.data() + static_cast<std::size_t>(j) * n;
        const double cj = rb[j];
        for (int i = 0; i < n; ++i) col[i] *= ra[i] * cj;
    }
}

}  // namespace

std::mt19937_64 rng_for(std::uint64_t seed, int trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

ModelInstance make_instance(const SpectralMeasure& muA, const SpectralMeasure& muB, int n, Ensemble ensemble,
                            std::uint64_t seed, int trial) {
    ModelInstance inst;
    inst.n = n;
    inst.a_diag = quantile_diag(muA, n);
    inst.b_diag = quantile_diag(muB, n);
    inst.ensemble = ensemble;
    inst.seed = seed;
    inst.trial = trial;
    check_instance(inst);
    return inst;
}

ModelInstance make_spiked_instance(const SpikedModel& model, Ensemble ensemble, std::uint64_t seed, int trial) {
    ModelInstance inst;
    inst.n = static_cast<int>(model.n);
    inst.a_diag = quantile_diag(model.muA, inst.n);
    inst.b_diag = quantile_diag(model.muB, inst.n);
    for (std::size_t k = 0; k < model.d_a.size(); ++k) inst.a_diag[k] *= 1.0 + model.d_a[k];
    for (std::size_t k = 0; k < model.d_b.size(); ++k) inst.b_diag[k] *= 1.0 + model.d_b[k];
    std::sort(inst.a_diag.rbegin(), inst.a_diag.rend());
    std::sort(inst.b_diag.rbegin(), inst.b_diag.rend());
    inst.ensemble = ensemble;
    inst.seed = seed;
    inst.trial = trial;
    check_instance(inst);
    return inst;
}

namespace {

// Leading k columns of a Haar orthogonal matrix. Householder QR of a Ginibre
// matrix, column by column: orthogonal invariance makes each reflector a
// function of a fresh Gaussian vector, so the factorization pass itself can
// be skipped, and reflectors beyond index k never touch the first k columns.
std::vector<double> haar_orthogonal_columns(int n, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<double> v(static_cast<std::size_t>(n) * k, 0.0);
    std::vector<double> tau(k), sign(k);
    for (int j = 0; j < k; ++j) {
        double* col = v.data() + static_cast<std::size_t>(j) * n;
        for (int i = j; i < n; ++i) col[i] = gauss(rng);
        double alpha = col[j];
        LAPACKE_dlarfg(n - j, &alpha, col + std::min(j + 1, n - 1), 1, &tau[j]);
        sign[j] = alpha >= 0 ? 1.0 : -1.0;
        col[j] = alpha;  // dorgqr ignores it, kept for clarity
    }
    int info = LAPACKE_dorgqr(LAPACK_COL_MAJOR, n, k, k, v.data(), n, tau.data());
    if (info != 0) raise(Errc::DecompositionFailure, "dorgqr failed");
    for (int j = 0; j < k; ++j) {
        double* col = v.data() + static_cast<std::size_t>(j) * n;
        if (sign[j] < 0)
            for (int i = 0; i < n; ++i) col[i] = -col[i];
    }
    return v;
}

std::vector<cplx> haar_unitary_columns(int n, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::vector<cplx> v(static_cast<std::size_t>(n) * k, cplx(0, 0));
    std::vector<cplx> tau(k);
    std::vector<double> sign(k);
    for (int j = 0; j < k; ++j) {
        cplx* col = v.data() + static_cast<std::size_t>(j) * n;
        for (int i = j; i < n; ++i) col[i] = cplx(gauss(rng), gauss(rng));
        cplx alpha = col[j];
        LAPACKE_zlarfg(n - j, reinterpret_cast<lapack_complex_double*>(&alpha),
                       reinterpret_cast<lapack_complex_double*>(col + std::min(j + 1, n - 1)), 1,
                       reinterpret_cast<lapack_complex_double*>(&tau[j]));
        sign[j] = alpha.real() >= 0 ? 1.0 : -1.0;  // zlarfg returns a real beta
        col[j] = alpha;
    }
    int info = LAPACKE_zungqr(LAPACK_COL_MAJOR, n, k, k, reinterpret_cast<lapack_complex_double*>(v.data()), n,
                              reinterpret_cast<lapack_complex_double*>(tau.data()));
    if (info != 0) raise(Errc::DecompositionFailure, "zungqr failed");
    for (int j = 0; j < k; ++j) {
        cplx* col = v.data() + static_cast<std::size_t>(j) * n;
        if (sign[j] < 0)
            for (int i = 0; i < n; ++i) col[i] = -col[i];
    }
    return v;
}

}  // namespace

std::vector<double> sample_haar_orthogonal(int n, std::mt19937_64& rng) {
    return haar_orthogonal_columns(n, n, rng);
}

std::vector<cplx> sample_haar_unitary(int n, std::mt19937_64& rng) {
    return haar_unitary_columns(n, n, rng);
}

std::vector<double> sample_spectrum(const ModelInstance& inst) {
    check_instance(inst);
    const int n = inst.n;
    auto rng = rng_for(inst.seed, inst.trial);
    std::vector<double> w(n);
    int info = 0;

    // B - b_min I often has low rank (two-valued ESD diagonals); then
    // H-tilde = b_min A + S S^* with S = A^{1/2} U_k D^{1/2} built from the
    // leading k Haar columns only, which cuts the Haar and syrk cost.
    const double bmin = inst.b_diag.back();
    int k = n;
    while (k > 0 && inst.b_diag[k - 1] - bmin <= 1e-14 * inst.b_diag.front()) --k;
    const bool low_rank = k <= 3 * n / 4;
    const int cols = low_rank ? k : n;

    std::vector<double> ra(n);
    for (int i = 0; i < n; ++i) ra[i] = std::sqrt(inst.a_diag[i]);

    if (inst.ensemble == Ensemble::Orthogonal) {
        std::vector<double> y = haar_orthogonal_columns(n, cols, rng);
        for (int j = 0; j < cols; ++j) {
            const double cj = std::sqrt(low_rank ? inst.b_diag[j] - bmin : inst.b_diag[j]);
            double* col = y.data() + static_cast<std::size_t>(j) * n;
            for (int i = 0; i < n; ++i) col[i] *= ra[i] * cj;
        }
        std::vector<double> h(static_cast<std::size_t>(n) * n);
        cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, n, cols, 1.0, y.data(), n, 0.0, h.data(), n);
        if (low_rank)
            for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i) * n + i] += bmin * inst.a_diag[i];
        info = LAPACKE_dsyev_2stage(LAPACK_COL_MAJOR, 'N', 'L', n, h.data(), n, w.data());
    } else {
        std::vector<cplx> y = haar_unitary_columns(n, cols, rng);
        for (int j = 0; j < cols; ++j) {
            const double cj = std::sqrt(low_rank ? inst.b_diag[j] - bmin : inst.b_diag[j]);
            cplx* col = y.data() + static_cast<std::size_t>(j) * n;
            for (int i = 0; i < n; ++i) col[i] *= ra[i] * cj;
        }
        std::vector<cplx> h(static_cast<std::size_t>(n) * n);
        cblas_zherk(CblasColMajor, CblasLower, CblasNoTrans, n, cols, 1.0, y.data(), n, 0.0, h.data(), n);
        if (low_rank)
            for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i) * n + i] += bmin * inst.a_diag[i];
        info = LAPACKE_zheev_2stage(LAPACK_COL_MAJOR, 'N', 'L', n,
                                    reinterpret_cast<lapack_complex_double*>(h.data()), n, w.data());
    }
    if (info != 0) raise(Errc::DecompositionFailure, "eigenvalue solver failed");
    std::reverse(w.begin(), w.end());
    return w;
}

Decomposition build_and_decompose(const ModelInstance& inst) {
    check_instance(inst);
    const int n = inst.n;
    auto rng = rng_for(inst.seed, inst.trial);
    Decomposition d;
    d.n = n;
    std::vector<double> w(n);
    // Eigen-decompose H-tilde = Y Y^* for the left vectors, then recover the
    // right vectors from the SVD relation v_k = Y^* u_k / s_k (one gemm,
    // cheaper than a full dense SVD).
    if (inst.ensemble == Ensemble::Orthogonal) {
        d.complex_data = false;
        std::vector<double> y = sample_haar_orthogonal(n, rng);
        sandwich_scale(y, inst.a_diag, inst.b_diag, n);
        std::vector<double> h(static_cast<std::size_t>(n) * n);
        cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, n, n, 1.0, y.data(), n, 0.0, h.data(), n);
        int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, h.data(), n, w.data());
        if (info != 0) raise(Errc::DecompositionFailure, "dsyevd failed");
        d.ur.resize(static_cast<std::size_t>(n) * n);
        for (int k = 0; k < n; ++k)  // reverse to descending order
            std::copy_n(h.data() + static_cast<std::size_t>(n - 1 - k) * n, n,
                        d.ur.data() + static_cast<std::size_t>(k) * n);
        d.vr.resize(static_cast<std::size_t>(n) * n);
        cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, n, n, n, 1.0, y.data(), n, d.ur.data(), n, 0.0,
                    d.vr.data(), n);
        d.lambda.assign(w.rbegin(), w.rend());
        for (int k = 0; k < n; ++k) {
            const double sk = std::sqrt(std::max(d.lambda[k], 1e-300));
            double* col = d.vr.data() + static_cast<std::size_t>(k) * n;
            for (int i = 0; i < n; ++i) col[i] /= sk;
        }
    } else {
        d.complex_data = true;
        std::vector<cplx> y = sample_haar_unitary(n, rng);
        sandwich_scale(y, inst.a_diag, inst.b_diag, n);
        std::vector<cplx> h(static_cast<std::size_t>(n) * n);
        cblas_zherk(CblasColMajor, CblasLower, CblasNoTrans, n, n, 1.0, y.data(), n, 0.0, h.data(), n);
        int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, reinterpret_cast<lapack_complex_double*>(h.data()),
                                  n, w.data());
        if (info != 0) raise(Errc::DecompositionFailure, "zheevd failed");
        d.uc.resize(static_cast<std::size_t>(n) * n);
        for (int k = 0; k < n; ++k)
            std::copy_n(h.data() + static_cast<std::size_t>(n - 1 - k) * n, n,
                        d.uc.data() + static_cast<std::size_t>(k) * n);
        d.vc.resize(static_cast<std::size_t>(n) * n);
        const cplx one(1, 0), zero(0, 0);
        cblas_zgemm(CblasColMajor, CblasConjTrans, CblasNoTrans, n, n, n, &one, y.data(), n, d.uc.data(), n, &zero,
                    d.vc.data(), n);
        d.lambda.assign(w.rbegin(), w.rend());
        for (int k = 0; k < n; ++k) {
            const double sk = std::sqrt(std::max(d.lambda[k], 1e-300));
            cplx* col = d.vc.data() + static_cast<std::size_t>(k) * n;
            for (int i = 0; i < n; ++i) col[i] /= sk;
        }
    }
    return d;
}

void resolvent_dense(const Decomposition& d, cplx z, bool left_side, std::vector<cplx>& out) {
    const int n = d.n;
    out.assign(static_cast<std::size_t>(n) * n, cplx(0, 0));
    if (d.complex_data) {
        const auto& vecs = left_side ? d.uc : d.vc;
        std::vector<cplx> scaled(vecs);
        for (int k = 0; k < n; ++k) {
            const cplx f = 1.0 / (d.lambda[k] - z);
            cplx* col = scaled.data() + static_cast<std::size_t>(k) * n;
            for (int i = 0; i < n; ++i) col[i] *= f;
        }
        const cplx one(1, 0), zero(0, 0);
        cblas_zgemm(CblasColMajor, CblasNoTrans, CblasConjTrans, n, n, n, &one, scaled.data(), n, vecs.data(), n,
                    &zero, out.data(), n);
        return;
    }
    const auto& vecs = left_side ? d.ur : d.vr;
    std::vector<double> scaled(vecs), part(static_cast<std::size_t>(n) * n);
    // real part
    for (int k = 0; k < n; ++k) {
        const double f = (1.0 / (d.lambda[k] - z)).real();
        double* col = scaled.data() + static_cast<std::size_t>(k) * n;
        const double* src = vecs.data() + static_cast<std::size_t>(k) * n;
        for (int i = 0; i < n; ++i) col[i] = src[i] * f;
    }
    cblas_dgemm(CblasColMajor, CblasNoTrans, CblasTrans, n, n, n, 1.0, scaled.data(), n, vecs.data(), n, 0.0,
                part.data(), n);
    for (std::size_t i = 0; i < part.size(); ++i) out[i] = part[i];
    // imaginary part
    for (int k = 0; k < n; ++k) {
        const double f = (1.0 / (d.lambda[k] - z)).imag();
        double* col = scaled.data() + static_cast<std::size_t>(k) * n;
        const double* src = vecs.data() + static_cast<std::size_t>(k) * n;
        for (int i = 0; i < n; ++i) col[i] = src[i] * f;
    }
    cblas_dgemm(CblasColMajor, CblasNoTrans, CblasTrans, n, n, n, 1.0, scaled.data(), n, vecs.data(), n, 0.0,
                part.data(), n);
    for (std::size_t i = 0; i < part.size(); ++i) out[i] += cplx(0.0, part[i]);
}

LocalLawDeviation local_law_check(const Decomposition& d, const std::vector<double>& a_diag,
                                  const std::vector<double>& b_diag, cplx z, cplx omega_a, cplx omega_b) {
    const int n = d.n;
    LocalLawDeviation dev;
    dev.z = z;
    std::vector<cplx> g;
    resolvent_dense(d, z, true, g);
    cplx avg(0, 0);
    for (int i = 0; i < n; ++i) {
        const cplx gii = g[static_cast<std::size_t>(i) * n + i];
        const cplx delta = z * gii + 1.0 - a_diag[i] / (a_diag[i] - omega_b);
        dev.diag_a = std::max(dev.diag_a, std::abs(delta));
        avg += delta;
    }
    dev.averaged = std::abs(avg) / n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const double scale = std::sqrt(a_diag[i] / a_diag[j]);
            dev.offdiag = std::max(dev.offdiag, scale * std::abs(g[static_cast<std::size_t>(j) * n + i]));
        }
    resolvent_dense(d, z, false, g);
    for (int i = 0; i < n; ++i) {
        const cplx gii = g[static_cast<std::size_t>(i) * n + i];
        dev.diag_b = std::max(dev.diag_b, std::abs(z * gii + 1.0 - b_diag[i] / (b_diag[i] - omega_a)));
    }
    return dev;
}

double ward_max_defect(const Decomposition& d, cplx z) {
    const int n = d.n;
    std::vector<cplx> g;
    resolvent_dense(d, z, true, g);
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        double row = 0;
        for (int j = 0; j < n; ++j) row += std::norm(g[static_cast<std::size_t>(j) * n + i]);
        const double rhs = g[static_cast<std::size_t>(i) * n + i].imag() / z.imag();
        worst = std::max(worst, std::abs(row - rhs));
    }
    return worst;
}

double rigidity_max_ratio(const std::vector<double>& lambda_desc, const std::vector<double>& gammas_desc, double c) {
    const int n = static_cast<int>(lambda_desc.size());
    const int top = std::max(1, static_cast<int>(c * n));
    const double n23 = std::pow(static_cast<double>(n), 2.0 / 3.0);
    double worst = 0;
    for (int i = 1; i <= top && i <= static_cast<int>(gammas_desc.size()); ++i) {
        const double ratio =
            std::abs(lambda_desc[i - 1] - gammas_desc[i - 1]) * std::cbrt(static_cast<double>(i)) * n23;
        worst = std::max(worst, ratio);
    }
    return worst;
}

double delocalization_statistic(const Decomposition& d, double c, const std::vector<int>& excluded_ranks) {
    const int n = d.n;
    const int top = std::max(1, static_cast<int>(c * n));
    double worst = 0;
    for (int k = 0; k < top; ++k) {
        bool skip = false;
        for (int e : excluded_ranks)
            if (e == k + 1) skip = true;
        if (skip) continue;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, std::max(std::norm(d.u_entry(i, k)), std::norm(d.v_entry(i, k))));
    }
    return worst * n;
}

std::vector<OutlierExperimentRow> outlier_experiment(const SpikedModel& model, Ensemble ensemble, int trials,
                                                     std::uint64_t seed) {
    const auto preds = predict_outliers(model);
    bool any_super = false;
    for (const auto& p : preds) any_super |= p.supercritical;
    if (!any_super) raise(Errc::ConfigError, "outlier_experiment needs at least one supercritical spike");

    std::vector<double> g_of_label(preds.size(), 0.0);
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (!preds[k].supercritical) continue;
        const auto ov = predict_overlaps(model, {preds[k].label});
        g_of_label[k] = preds[k].label.side == SpikeSide::FromA ? ov.g_a_diag[0] : ov.g_b_diag[0];
    }

    std::vector<OutlierExperimentRow> rows;
    for (int t = 0; t < trials; ++t) {
        const auto inst = make_spiked_instance(model, ensemble, seed, t);
        const auto d = build_and_decompose(inst);
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const auto& p = preds[k];
            if (!p.supercritical) continue;
            OutlierExperimentRow row;
            row.trial = t;
            row.label = p.label;
            row.rank = p.pi_index;
            row.lambda_measured = d.lambda[p.pi_index - 1];
            row.location_predicted = p.location;
            row.fluctuation_scale = p.fluctuation;
            // supercritical spiked values exceed every base entry, so spike i
            // of a side occupies coordinate i-1 of the sorted diagonal
            const int coord = p.label.index - 1;
            row.overlap_measured = p.label.side == SpikeSide::FromA
                                       ? std::norm(d.u_entry(coord, p.pi_index - 1))
                                       : std::norm(d.v_entry(coord, p.pi_index - 1));
            row.overlap_predicted = g_of_label[k];
            rows.push_back(row);
        }
    }
    return rows;
}

std::pair<int, int> estimate_spike_counts(const Decomposition& d, double omega_threshold, double c) {
    const int n = d.n;
    const int top = std::max(1, static_cast<int>(c * n));
    int r_hat = 0, s_hat = 0;
    for (int k = 0; k < top; ++k) {
        double umax = 0, vmax = 0;
        for (int i = 0; i < n; ++i) {
            umax = std::max(umax, std::norm(d.u_entry(i, k)));
            vmax = std::max(vmax, std::norm(d.v_entry(i, k)));
        }
        if (umax > omega_threshold) ++r_hat;
        if (vmax > omega_threshold) ++s_hat;
    }
    return {r_hat, s_hat};
}

namespace {

// Resolvent diagonal over non-outlier eigenpairs at a real point outside the
// remaining spectrum.
std::vector<double> partial_resolvent_diag(const Decomposition& d, bool left_side, double x,
                                           const std::vector<int>& excluded_ranks) {
    const int n = d.n;
    std::vector<bool> skip(n, false);
    for (int e : excluded_ranks)
        if (e >= 1 && e <= n) skip[e - 1] = true;
    std::vector<double> diag(n, 0.0);
    for (int k = 0; k < n; ++k) {
        if (skip[k]) continue;
        const double f = 1.0 / (d.lambda[k] - x);
        for (int i = 0; i < n; ++i) {
            const double w = left_side ? std::norm(d.u_entry(i, k)) : std::norm(d.v_entry(i, k));
            diag[i] += w * f;
        }
    }
    return diag;
}

}  // namespace

SpikeEstimates estimate_spikes(const Decomposition& d, const std::vector<double>& a_base_diag,
                               const std::vector<double>& b_base_diag, const std::vector<int>& outlier_ranks_a,
                               const std::vector<int>& outlier_ranks_b, double e_plus) {
    const int n = d.n;
    const int r = static_cast<int>(outlier_ranks_a.size());
    const int s = static_cast<int>(outlier_ranks_b.size());
    std::vector<int> all_ranks(outlier_ranks_a);
    all_ranks.insert(all_ranks.end(), outlier_ranks_b.begin(), outlier_ranks_b.end());
    for (int rank : all_ranks) {
        if (rank < 1 || rank > n) raise(Errc::ConfigError, "outlier rank out of range");
        if (d.lambda[rank - 1] <= e_plus + 1e-9)
            raise(Errc::OutlierInsideBulk, "claimed outlier sits at or below the bulk edge");
    }
    const double tr_a = std::accumulate(a_base_diag.begin(), a_base_diag.end(), 0.0) / n;
    const double tr_b = std::accumulate(b_base_diag.begin(), b_base_diag.end(), 0.0) / n;

    SpikeEstimates est;
    for (int idx = 0; idx < r; ++idx) {
        const double x = d.lambda[outlier_ranks_a[idx] - 1];
        const auto diag = partial_resolvent_diag(d, true, x, all_ranks);
        double sum = 0;
        for (int j = r + s; j < n; ++j) sum += a_base_diag[j] / (x * diag[j] + 1.0);
        est.a_hat.push_back(tr_a - sum / n);
    }
    for (int idx = 0; idx < s; ++idx) {
        const double x = d.lambda[outlier_ranks_b[idx] - 1];
        const auto diag = partial_resolvent_diag(d, false, x, all_ranks);
        double sum = 0;
        for (int j = r + s; j < n; ++j) sum += b_base_diag[j] / (x * diag[j] + 1.0);
        est.b_hat.push_back(tr_b - sum / n);
    }
    return est;
}

double median(std::vector<double> values) {
    if (values.empty()) raise(Errc::ConfigError, "median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return (m % 2 == 1) ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

std::string report_to_json(const SimulationReport& rep, const std::string& config_hash, const std::string& version) {
    nlohmann::json j;
    j["seed"] = rep.seed;
    j["n"] = rep.n;
    j["trials"] = rep.trials;
    j["ensemble"] = rep.ensemble == Ensemble::Orthogonal ? "orthogonal" : "unitary";
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["eigenvalue_rows"] = rep.eigenvalue_rows;
    auto overlaps = nlohmann::json::array();
    for (const auto& o : rep.top_vector_overlaps)
        overlaps.push_back({{"trial", o.trial}, {"k", o.k}, {"i", o.i}, {"value", o.value}});
    j["top_vector_overlaps"] = std::move(overlaps);
    auto lls = nlohmann::json::array();
    for (const auto& l : rep.local_law_errors)
        lls.push_back({{"trial", l.trial},
                       {"z", {l.z.real(), l.z.imag()}},
                       {"diag_a", l.diag_a},
                       {"diag_b", l.diag_b},
                       {"offdiag", l.offdiag},
                       {"averaged", l.averaged}});
    j["local_law_errors"] = std::move(lls);
    j["rigidity_ratios"] = rep.rigidity_ratios;
    j["deloc_max"] = rep.deloc_max;
    return j.dump(2);
}

void write_report_csv_tables(const SimulationReport& rep, const std::string& prefix) {
    {
        std::ofstream out(prefix + "_eigenvalues.csv");
        if (!out) raise(Errc::ConfigError, "cannot open " + prefix + "_eigenvalues.csv");
        out << "# seed=" << rep.seed << " n=" << rep.n << " trials=" << rep.trials << "\n";
        out << "trial,rank,lambda\n";
        char line[96];
        for (std::size_t t = 0; t < rep.eigenvalue_rows.size(); ++t)
            for (std::size_t i = 0; i < rep.eigenvalue_rows[t].size(); ++i) {
                std::snprintf(line, sizeof line, "%zu,%zu,%.17g\n", t, i + 1, rep.eigenvalue_rows[t][i]);
                out << line;
            }
    }
    if (!rep.rigidity_ratios.empty() || !rep.deloc_max.empty()) {
        std::ofstream out(prefix + "_trial_stats.csv");
        out << "# seed=" << rep.seed << " n=" << rep.n << " trials=" << rep.trials << "\n";
        out << "trial,rigidity_max_ratio,deloc_max\n";
        const std::size_t rows = std::max(rep.rigidity_ratios.size(), rep.deloc_max.size());
        char line[96];
        for (std::size_t t = 0; t < rows; ++t) {
            const double rg = t < rep.rigidity_ratios.size() ? rep.rigidity_ratios[t] : 0.0;
            const double dl = t < rep.deloc_max.size() ? rep.deloc_max[t] : 0.0;
            std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", t, rg, dl);
            out << line;
        }
    }
}

}  // namespace freeconv
