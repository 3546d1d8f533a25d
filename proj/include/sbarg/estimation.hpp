#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sbarg/closed_form.hpp"
#include "sbarg/core_types.hpp"
#include "sbarg/csv.hpp"
#include "sbarg/line_search.hpp"

namespace sbarg {

enum class ModelTag { Original, RevisedI, RevisedII };

inline std::string_view to_string(ModelTag m) {
    switch (m) {
    case ModelTag::Original: return "Original";
    case ModelTag::RevisedI: return "RevisedI";
    case ModelTag::RevisedII: return "RevisedII";
    }
    return "?";
}

inline ModelTag parse_model_tag(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "original") return ModelTag::Original;
    if (k == "revisedi" || k == "revised1") return ModelTag::RevisedI;
    if (k == "revisedii" || k == "revised2") return ModelTag::RevisedII;
    throw InvalidParameter("unknown model tag '" + std::string(s) + "'");
}

struct ShareObservation {
    Institution institution;
    Contract contract;
    Arm arm;
    double share;        // observed entrepreneur share, fraction
    double weight = 1.0;

    void validate() const {
        if (!(share >= 0 && share <= 1)) throw InvalidParameter("observed share must lie in [0, 1]");
        if (!(weight > 0 && std::isfinite(weight))) throw InvalidParameter("weight must be > 0");
        if (institution == Institution::TIL)
            throw InvalidParameter("estimation covers SI and TI observations only");
    }
};

struct FitResult {
    std::vector<double> theta_hat;
    double mse;
    ModelTag model_tag;
    std::vector<double> residuals; // predicted minus observed, in input order
};

struct ModelComparisonRow {
    Institution institution;
    ModelTag model;
    FitResult fit;
    // SI has no partial disagreement, so RevisedII repeats RevisedI.
    bool coincides_with_revised_i = false;
};

// Entrepreneur share predicted at powers theta (one entry broadcasts). TI
// uses the both-invest outcome.
inline double predict_share(const Scenario& sc, const std::vector<double>& theta, BeliefModel belief) {
    const int n = sc.n_investors();
    std::vector<double> th = theta;
    if (th.size() == 1 && n == 2) th.push_back(th[0]);
    const auto& mp = sc.params();
    switch (sc.institution()) {
    case Institution::SI:
        if (th.size() != 1) throw InvalidParameter("SI prediction takes one theta");
        return solve_si(mp, th[0], sc.contract()).entrepreneur_share();
    case Institution::TI: {
        if (th.size() != 2) throw InvalidParameter("TI prediction takes one or two theta values");
        const auto set = solve_ti(mp, {th[0], th[1]}, sc.contract(), belief);
        const auto& o = set.primary();
        if (o.regime() == Regime::NoDeal || o.regime() == Regime::TIOneInvestor)
            throw DomainError("no both-invest outcome at these parameters");
        return o.entrepreneur_share();
    }
    case Institution::TIL: break;
    }
    throw InvalidParameter("estimation covers SI and TI only");
}

namespace detail {

using ObsKey = std::tuple<Institution, Contract, Arm>;

inline BeliefModel belief_for(ModelTag m) {
    return m == ModelTag::RevisedII ? BeliefModel::JointDisagreement : BeliefModel::Standard;
}

struct MseEvaluator {
    const std::vector<ShareObservation>* obs;
    BeliefModel belief;
    std::map<ObsKey, Scenario> scenarios;

    explicit MseEvaluator(const std::vector<ShareObservation>& o, BeliefModel b) : obs(&o), belief(b) {
        for (const auto& x : o) {
            ObsKey k{x.institution, x.contract, x.arm};
            if (!scenarios.count(k)) scenarios.emplace(k, make_paper_scenario(x.arm, x.institution, x.contract));
        }
    }

    std::vector<double> residuals(const std::vector<double>& theta) const {
        std::map<ObsKey, double> pred;
        for (const auto& [k, sc] : scenarios) pred[k] = predict_share(sc, theta, belief);
        std::vector<double> r;
        r.reserve(obs->size());
        for (const auto& x : *obs) r.push_back(pred.at({x.institution, x.contract, x.arm}) - x.share);
        return r;
    }

    double mse_of(const std::vector<double>& r) const {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            num += (*obs)[i].weight * r[i] * r[i];
            den += (*obs)[i].weight;
        }
        return num / den;
    }

    double mse(const std::vector<double>& theta) const { return mse_of(residuals(theta)); }
};

// Grid then golden section over [0, 1]; ties go to the lower theta.
template <class F>
double minimize_unit(F&& f) {
    constexpr int G = 101;
    int kbest = 0;
    double fbest = f(0.0);
    for (int k = 1; k < G; ++k) {
        const double v = f(static_cast<double>(k) / (G - 1));
        if (v < fbest) {
            fbest = v;
            kbest = k;
        }
    }
    const double a = std::max(kbest - 1, 0) / double(G - 1);
    const double b = std::min(kbest + 1, G - 1) / double(G - 1);
    const auto gs = golden_section_min(f, a, b, 1e-13, 300);
    const double xg = std::clamp(gs.x, 0.0, 1.0);
    const double grid_x = kbest / double(G - 1);
    const double fg = f(xg);
    if (fg < fbest) return xg;
    if (fg == fbest) return std::min(xg, grid_x);
    return grid_x;
}

} // namespace detail

inline FitResult fit_theta(const std::vector<ShareObservation>& obs, ModelTag model,
                           bool common_theta = true) {
    if (obs.empty()) throw InvalidParameter("no observations to fit");
    for (const auto& x : obs) x.validate();
    const detail::MseEvaluator ev(obs, detail::belief_for(model));

    std::vector<double> theta;
    if (model == ModelTag::Original) {
        theta = {0.5};
    } else if (common_theta) {
        theta = {detail::minimize_unit([&](double t) { return ev.mse({t}); })};
    } else {
        for (const auto& x : obs)
            if (x.institution != Institution::TI)
                throw InvalidParameter("separate powers apply to TI observations only");
        // Coordinate search over (theta1, theta2).
        double t1 = detail::minimize_unit([&](double t) { return ev.mse({t}); });
        double t2 = t1;
        for (int round = 0; round < 100; ++round) {
            const double n1 = detail::minimize_unit([&](double t) { return ev.mse({t, t2}); });
            const double n2 = detail::minimize_unit([&](double t) { return ev.mse({n1, t}); });
            const bool done = std::abs(n1 - t1) < 1e-12 && std::abs(n2 - t2) < 1e-12;
            t1 = n1;
            t2 = n2;
            if (done) break;
        }
        theta = {t1, t2};
    }
    FitResult r;
    r.theta_hat = theta;
    r.residuals = ev.residuals(theta);
    r.mse = ev.mse_of(r.residuals);
    r.model_tag = model;
    return r;
}

// One row per (institution present, model). Institutions without data are
// absent.
inline std::vector<ModelComparisonRow> compare_models(const std::vector<ShareObservation>& obs) {
    std::vector<ModelComparisonRow> rows;
    for (Institution inst : {Institution::SI, Institution::TI}) {
        std::vector<ShareObservation> sub;
        for (const auto& x : obs)
            if (x.institution == inst) sub.push_back(x);
        if (sub.empty()) continue;
        for (ModelTag m : {ModelTag::Original, ModelTag::RevisedI, ModelTag::RevisedII}) {
            ModelComparisonRow row{inst, m, fit_theta(sub, m), false};
            row.coincides_with_revised_i = inst == Institution::SI && m == ModelTag::RevisedII;
            rows.push_back(std::move(row));
        }
    }
    for (const auto& x : obs)
        if (x.institution == Institution::TIL)
            throw InvalidParameter("estimation covers SI and TI observations only");
    return rows;
}

// Columns: institution,contract,arm,share[,weight]. Header required.
inline std::vector<ShareObservation> read_observations_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    const auto ci = t.require("institution"), cc = t.require("contract"), ca = t.require("arm"),
               cs = t.require("share");
    const auto cw = t.find("weight");
    std::vector<ShareObservation> out;
    for (const auto& row : t.rows) {
        auto fail = [&](const std::string& why) -> DataError {
            return DataError("line " + std::to_string(row.line) + ": " + why);
        };
        if (row.fields.size() != t.header.size()) throw fail("expected " + std::to_string(t.header.size()) + " fields");
        ShareObservation o{};
        try {
            o.institution = parse_institution(row.fields[ci]);
            o.contract = parse_contract(row.fields[cc]);
            o.arm = parse_arm(row.fields[ca]);
        } catch (const InvalidParameter& ex) {
            throw fail(ex.what());
        }
        const auto s = csv::parse_double(row.fields[cs]);
        if (!s) throw fail("share is not a number");
        o.share = *s;
        if (cw) {
            const auto w = csv::parse_double(row.fields[*cw]);
            if (!w) throw fail("weight is not a number");
            o.weight = *w;
        }
        try {
            o.validate();
        } catch (const InvalidParameter& ex) {
            throw fail(ex.what());
        }
        out.push_back(o);
    }
    return out;
}

} // namespace sbarg
