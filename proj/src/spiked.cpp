#include "freeconv/spiked.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace freeconv {

namespace {

constexpr int kMaxSpikes = 32;
constexpr double kMaxStrength = 1e3;
constexpr double kTieTol = 1e-12;

// k-th largest diagonal entry (1-based) of the n-point ESD discretization.
double base_value(const SpectralMeasure& mu, int k, long n) {
    return mu.upper_quantile((static_cast<double>(k) - 0.5) / static_cast<double>(n));
}

struct EdgeCtx {
    EdgePoint up;
};

EdgeCtx make_edge(const SpikedModel& m) { return {find_upper_edge(m.muA, m.muB)}; }

// Given a target value t of Omega_B on (Omega_B(E+), inf), the subordination
// identities collapse the inversion to two real M-transform inversions:
//   M* = M_{muA}(t),  Omega_A = Minv_{muB}(M*),  x = Omega_A * t / M*.
double invert_closed_form(const SpectralMeasure& muA, const SpectralMeasure& muB, double t) {
    const double mstar = muA.transforms_real(t).M;
    const double omega_other = m_inverse_above(muB, mstar);
    return omega_other * t / mstar;
}

double omega_b_edge_of(const SpikedModel& m, const EdgeCtx& e, WhichOmega which) {
    return which == WhichOmega::B ? e.up.omega_b : e.up.omega_a;
}

// Omega_{which} and its derivative at real x > E+, via a Newton-polished
// solve seeded with the closed-form construction.
struct RealOmega {
    double value = 0, derivative = 0;
    SubordinationSolution sol;
};

RealOmega omega_real_point(const SpikedModel& m, const EdgeCtx& e, WhichOmega which, double x) {
    if (!(x > e.up.e_plus)) raise(Errc::SubcriticalTarget, "real evaluation point must exceed E+");
    // seed by bisecting ztilde on the increasing branch: Omega_A in (Omega_A(E+), inf)
    double lo = e.up.omega_a;
    double hi = std::max(2.0 * lo, lo + 1.0);
    auto zt = [&](double omega) {
        const double y = m.muB.transforms_real(omega).M;
        const double w = m_inverse_above(m.muA, y);
        return omega * w / y;
    };
    int guard = 0;
    while (zt(hi) < x && guard++ < 120) hi *= 2.0;
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        (zt(mid) < x ? lo : hi) = mid;
    }
    const double omega_a = 0.5 * (lo + hi);
    const double y = m.muB.transforms_real(omega_a).M;
    const double omega_b = m_inverse_above(m.muA, y);
    SubordinationSolution sol =
        solve_at(m.muA, m.muB, {x, 0.0}, std::make_pair(std::complex<double>(omega_a, 0.0),
                                                        std::complex<double>(omega_b, 0.0)));
    const StabilityReport st = stability(m.muA, m.muB, sol);
    RealOmega out;
    out.sol = sol;
    if (which == WhichOmega::B) {
        out.value = sol.omega_b.real();
        out.derivative = st.omega_b_prime.real();
    } else {
        out.value = sol.omega_a.real();
        out.derivative = st.omega_a_prime.real();
    }
    return out;
}

double omega_inverse_impl(const SpikedModel& m, const EdgeCtx& e, WhichOmega which, double target) {
    const double omega_edge = omega_b_edge_of(m, e, which);
    if (target <= omega_edge + 1e-12)
        raise(Errc::SubcriticalTarget, "target does not exceed Omega(E+)");
    double x = (which == WhichOmega::B) ? invert_closed_form(m.muA, m.muB, target)
                                        : invert_closed_form(m.muB, m.muA, target);
    // Newton polish with Omega' from the stability system.
    for (int it = 0; it < 3; ++it) {
        if (!(x > e.up.e_plus)) break;
        const RealOmega ro = omega_real_point(m, e, which, x);
        const double f = ro.value - target;
        if (std::abs(f) <= 1e-12 * std::max(1.0, std::abs(target)) || ro.derivative <= 0) break;
        const double cand = x - f / ro.derivative;
        if (!(cand > e.up.e_plus)) break;
        x = cand;
    }
    return x;
}

struct LabelInfo {
    OutlierLabel label;
    double hat = 0;         // spiked value
    double edge_omega = 0;  // Omega_B(E+) for A labels, Omega_A(E+) for B labels
    double location = 0;    // Omega^{-1}(hat) or E+
    bool in_o = false, in_o_plus = false;
};

std::vector<LabelInfo> label_infos(const SpikedModel& m, const EdgeCtx& e) {
    const long n = m.n;
    const double thresh = std::pow(static_cast<double>(n), -1.0 / 3.0);
    std::vector<LabelInfo> out;
    for (int i = 0; i < static_cast<int>(m.a_hat.size()); ++i) {
        LabelInfo li;
        li.label = {SpikeSide::FromA, i + 1};
        li.hat = m.a_hat[i];
        li.edge_omega = e.up.omega_b;
        li.in_o = li.hat > li.edge_omega;
        li.in_o_plus = li.hat >= li.edge_omega + thresh;
        li.location = li.in_o ? omega_inverse_impl(m, e, WhichOmega::B, li.hat) : e.up.e_plus;
        out.push_back(li);
    }
    for (int j = 0; j < static_cast<int>(m.b_hat.size()); ++j) {
        LabelInfo li;
        li.label = {SpikeSide::FromB, j + 1};
        li.hat = m.b_hat[j];
        li.edge_omega = e.up.omega_a;
        li.in_o = li.hat > li.edge_omega;
        li.in_o_plus = li.hat >= li.edge_omega + thresh;
        li.location = li.in_o ? omega_inverse_impl(m, e, WhichOmega::A, li.hat) : e.up.e_plus;
        out.push_back(li);
    }
    return out;
}

// Rank labels by location, descending; coincident locations (within 1e-12)
// put A labels before B labels, then lower original index.
std::vector<int> rank_order(const std::vector<LabelInfo>& infos) {
    std::vector<int> order(infos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return infos[a].location > infos[b].location; });
    // regroup tie clusters deterministically
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() &&
               std::abs(infos[order[j]].location - infos[order[i]].location) <=
                   kTieTol * std::max(1.0, std::abs(infos[order[i]].location)))
            ++j;
        std::sort(order.begin() + i, order.begin() + j, [&](int a, int b) {
            const auto& la = infos[a].label;
            const auto& lb = infos[b].label;
            if (la.side != lb.side) return la.side == SpikeSide::FromA;
            return la.index < lb.index;
        });
        i = j;
    }
    return order;
}

int label_slot(const SpikedModel& m, const OutlierLabel& l) {
    return l.side == SpikeSide::FromA ? l.index - 1 : static_cast<int>(m.a_hat.size()) + l.index - 1;
}

}  // namespace

SpikedModel SpikedModel::make(SpectralMeasure muA, SpectralMeasure muB, std::vector<double> d_a,
                              std::vector<double> d_b, long n) {
    if (n < 2) raise(Errc::ConfigError, "spiked model needs n >= 2");
    if (static_cast<int>(d_a.size()) > kMaxSpikes || static_cast<int>(d_b.size()) > kMaxSpikes)
        raise(Errc::ConfigError, "at most 32 spikes per side");
    for (double d : d_a)
        if (!(d >= 0) || d > kMaxStrength) raise(Errc::ConfigError, "spike strength must lie in [0, 1e3]");
    for (double d : d_b)
        if (!(d >= 0) || d > kMaxStrength) raise(Errc::ConfigError, "spike strength must lie in [0, 1e3]");
    SpikedModel m(std::move(muA), std::move(muB));
    m.d_a = std::move(d_a);
    m.d_b = std::move(d_b);
    m.n = n;
    for (std::size_t k = 0; k < m.d_a.size(); ++k)
        m.a_hat.push_back(base_value(m.muA, static_cast<int>(k) + 1, n) * (1.0 + m.d_a[k]));
    for (std::size_t k = 0; k < m.d_b.size(); ++k)
        m.b_hat.push_back(base_value(m.muB, static_cast<int>(k) + 1, n) * (1.0 + m.d_b[k]));
    std::sort(m.a_hat.rbegin(), m.a_hat.rend());
    std::sort(m.b_hat.rbegin(), m.b_hat.rend());
    return m;
}

double omega_inverse(WhichOmega which, const SpikedModel& model, double target) {
    const EdgeCtx e = make_edge(model);
    return omega_inverse_impl(model, e, which, target);
}

double omega_at_real(WhichOmega which, const SpikedModel& model, double x) {
    const EdgeCtx e = make_edge(model);
    return omega_real_point(model, e, which, x).value;
}

Classification classify(const SpikedModel& model) {
    const EdgeCtx e = make_edge(model);
    const auto infos = label_infos(model, e);
    const auto order = rank_order(infos);

    Classification cls;
    cls.e_plus = e.up.e_plus;
    cls.omega_a_edge = e.up.omega_a;
    cls.omega_b_edge = e.up.omega_b;
    cls.pi_a.assign(model.a_hat.size(), 0);
    cls.pi_b.assign(model.b_hat.size(), 0);
    cls.loc_a.assign(model.a_hat.size(), 0);
    cls.loc_b.assign(model.b_hat.size(), 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const LabelInfo& li = infos[order[rank]];
        if (li.label.side == SpikeSide::FromA) {
            cls.pi_a[li.label.index - 1] = static_cast<int>(rank) + 1;
            cls.loc_a[li.label.index - 1] = li.location;
        } else {
            cls.pi_b[li.label.index - 1] = static_cast<int>(rank) + 1;
            cls.loc_b[li.label.index - 1] = li.location;
        }
        if (li.in_o) cls.outliers.push_back(li.label);
        if (li.in_o_plus) cls.supercritical.push_back(li.label);
    }
    return cls;
}

std::vector<OutlierPrediction> predict_outliers(const SpikedModel& model) {
    const EdgeCtx e = make_edge(model);
    const auto infos = label_infos(model, e);
    const auto order = rank_order(infos);
    const double n = static_cast<double>(model.n);
    std::vector<OutlierPrediction> preds;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const LabelInfo& li = infos[order[rank]];
        OutlierPrediction p;
        p.label = li.label;
        p.pi_index = static_cast<int>(rank) + 1;
        p.supercritical = li.in_o_plus;
        if (li.in_o_plus) {
            p.location = li.location;
            p.fluctuation = std::sqrt(li.hat - li.edge_omega) / std::sqrt(n);
        } else {
            p.location = e.up.e_plus;
            p.fluctuation = std::pow(n, -2.0 / 3.0);
        }
        preds.push_back(p);
    }
    return preds;
}

DeltaTable nonoverlap_deltas(const SpikedModel& model, const std::vector<OutlierLabel>& S) {
    const EdgeCtx e = make_edge(model);
    const auto infos = label_infos(model, e);
    const int r = static_cast<int>(model.a_hat.size());
    const int s = static_cast<int>(model.b_hat.size());
    const int total = r + s;

    std::vector<bool> in_s(total, false);
    for (const auto& l : S) in_s[label_slot(model, l)] = true;

    // Omega_A(Omega_B^{-1}(a_hat)) per A label and the mirror per B label.
    std::vector<double> cross(total, 0.0);
    for (int t = 0; t < total; ++t) {
        const LabelInfo& li = infos[t];
        if (!li.in_o) {
            cross[t] = li.label.side == SpikeSide::FromA ? e.up.omega_a : e.up.omega_b;
            continue;
        }
        cross[t] = li.label.side == SpikeSide::FromA
                       ? omega_real_point(model, e, WhichOmega::A, li.location).value
                       : omega_real_point(model, e, WhichOmega::B, li.location).value;
    }

    DeltaTable table;
    table.pairwise.assign(total, std::vector<double>(total, 0.0));
    for (int f = 0; f < total; ++f) {
        for (int t = 0; t < total; ++t) {
            if (f == t) continue;
            const bool from_a = infos[f].label.side == SpikeSide::FromA;
            const bool to_a = infos[t].label.side == SpikeSide::FromA;
            if (from_a == to_a)
                table.pairwise[f][t] = std::abs(infos[f].hat - infos[t].hat);
            else
                table.pairwise[f][t] = std::abs(infos[t].hat - cross[f]);
        }
    }

    // nearest non-spiked base value on each side, seen from each label
    const double base_a_next = base_value(model.muA, r + 1, model.n);
    const double base_b_next = base_value(model.muB, s + 1, model.n);
    table.base_gap.assign(total, 0.0);
    for (int f = 0; f < total; ++f) {
        const bool from_a = infos[f].label.side == SpikeSide::FromA;
        const double own_gap = std::abs(infos[f].hat - (from_a ? base_a_next : base_b_next));
        const double other_gap = std::abs((from_a ? base_b_next : base_a_next) - cross[f]);
        table.base_gap[f] = std::min(own_gap, other_gap);
    }

    table.delta_s.assign(total, std::numeric_limits<double>::infinity());
    for (int t = 0; t < total; ++t) {
        double best = std::numeric_limits<double>::infinity();
        if (in_s[t]) {
            for (int other = 0; other < total; ++other)
                if (other != t && !in_s[other]) best = std::min(best, table.pairwise[t][other]);
            best = std::min(best, table.base_gap[t]);
        } else {
            for (int from = 0; from < total; ++from)
                if (in_s[from]) best = std::min(best, table.pairwise[from][t]);
        }
        table.delta_s[t] = best;
    }
    return table;
}

OverlapPrediction predict_overlaps(const SpikedModel& model, const std::vector<OutlierLabel>& S, double tau1,
                                   double tau2) {
    const EdgeCtx e = make_edge(model);
    const auto infos = label_infos(model, e);
    std::vector<bool> in_s(infos.size(), false);
    for (const auto& l : S) {
        const int slot = label_slot(model, l);
        if (slot < 0 || slot >= static_cast<int>(infos.size()))
            raise(Errc::ConfigError, "label outside the declared spikes");
        if (!infos[slot].in_o_plus) raise(Errc::SubcriticalInS, "S must contain supercritical labels only");
        in_s[slot] = true;
    }

    OverlapPrediction out;
    out.set_s = S;
    for (std::size_t t = 0; t < infos.size(); ++t) {
        if (!in_s[t]) continue;
        const LabelInfo& li = infos[t];
        const WhichOmega which = li.label.side == SpikeSide::FromA ? WhichOmega::B : WhichOmega::A;
        const RealOmega ro = omega_real_point(model, e, which, li.location);
        if (!(ro.derivative > 0))
            raise(Errc::StabilityDegenerate, "Omega' must be positive above the edge");
        const double g = li.hat * (1.0 / ro.derivative) / li.location;
        (li.label.side == SpikeSide::FromA ? out.g_a_diag : out.g_b_diag).push_back(g);
    }
    out.delta_table = nonoverlap_deltas(model, S);

    const double n = static_cast<double>(model.n);
    const double gap_floor = std::pow(n, -1.0 / 3.0 + tau1);
    bool ok = true;
    for (std::size_t t = 0; t < infos.size(); ++t) {
        if (!in_s[t]) continue;
        const double gap = infos[t].hat - infos[t].edge_omega;
        if (gap < gap_floor) ok = false;
        const double need = std::pow(n, -0.5 + tau2) / std::sqrt(std::max(gap, 1e-300));
        if (out.delta_table.delta_s[t] < need) ok = false;
    }
    out.assumption_ok = ok;
    return out;
}

SpikedModel spiked_model_from_json_text(const SpectralMeasure& muA, const SpectralMeasure& muB,
                                        const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& ex) {
        raise(Errc::ConfigError, std::string("spike JSON parse error: ") + ex.what());
    }
    std::vector<double> da, db;
    long n = 0;
    try {
        da = j.value("d_a", std::vector<double>{});
        db = j.value("d_b", std::vector<double>{});
        n = j.at("n").get<long>();
    } catch (const std::exception& ex) {
        raise(Errc::ConfigError, std::string("spike spec: ") + ex.what());
    }
    return SpikedModel::make(muA, muB, std::move(da), std::move(db), n);
}

std::string predictions_to_json(const SpikedModel& model, const Classification& cls,
                                const std::vector<OutlierPrediction>& preds) {
    nlohmann::json j;
    j["n"] = model.n;
    j["e_plus"] = cls.e_plus;
    j["omega_a_edge"] = cls.omega_a_edge;
    j["omega_b_edge"] = cls.omega_b_edge;
    auto arr = nlohmann::json::array();
    for (const auto& p : preds) {
        nlohmann::json rec;
        rec["side"] = p.label.side == SpikeSide::FromA ? "A" : "B";
        rec["index"] = p.label.index;
        rec["pi"] = p.pi_index;
        rec["location"] = p.location;
        rec["fluctuation"] = p.fluctuation;
        rec["supercritical"] = p.supercritical;
        arr.push_back(rec);
    }
    j["predictions"] = std::move(arr);
    return j.dump(2);
}

}  // namespace freeconv
