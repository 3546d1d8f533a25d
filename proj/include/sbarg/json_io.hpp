#pragma once

// JSON encoding of the shared value types. Field names are fixed and
// documented in docs/schema/; doubles are written in shortest
// round-trip form.

#include <string>

#include <json.hpp>

#include "sbarg/closed_form.hpp"
#include "sbarg/core_types.hpp"

namespace sbarg {

using json = nlohmann::json;

namespace detail {

template <class F>
auto json_guard(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& ex) {
        throw DataError(std::string("malformed JSON: ") + ex.what());
    }
}

} // namespace detail

} // namespace sbarg

namespace nlohmann {

template <>
struct adl_serializer<sbarg::MarketParams> {
    static void to_json(json& j, const sbarg::MarketParams& m) {
        j = json{{"e", m.e()}, {"alpha_h", m.alpha_h()}, {"alpha_l", m.alpha_l()}, {"p", m.p()}, {"d_e", m.d_e()}};
    }
    static sbarg::MarketParams from_json(const json& j) {
        return sbarg::MarketParams(j.at("e").get<double>(), j.at("alpha_h").get<double>(),
                                   j.at("alpha_l").get<double>(), j.at("p").get<double>(),
                                   j.at("d_e").get<double>());
    }
};

template <>
struct adl_serializer<sbarg::RiskProfile> {
    static void to_json(json& j, const sbarg::RiskProfile& r) {
        j = json{{"rho_e", r.rho_e()}, {"rho_i", r.rho_i()}};
    }
    static sbarg::RiskProfile from_json(const json& j) {
        return sbarg::RiskProfile(j.at("rho_e").get<double>(), j.at("rho_i").get<std::vector<double>>());
    }
};

template <>
struct adl_serializer<sbarg::Scenario> {
    static void to_json(json& j, const sbarg::Scenario& s) {
        j = json{{"institution", sbarg::to_string(s.institution())},
                 {"contract", sbarg::to_string(s.contract())},
                 {"params", s.params()},
                 {"theta", s.powers().theta()},
                 {"belief", sbarg::to_string(s.belief())},
                 {"risk", s.risk()},
                 {"proration", sbarg::to_string(s.proration())}};
    }
    static sbarg::Scenario from_json(const json& j) {
        auto risk = j.contains("risk") ? j.at("risk").get<sbarg::RiskProfile>() : sbarg::RiskProfile{};
        auto belief = j.contains("belief") ? sbarg::parse_belief(j.at("belief").get<std::string>())
                                           : sbarg::BeliefModel::Standard;
        auto pro = j.contains("proration") ? sbarg::parse_proration(j.at("proration").get<std::string>())
                                           : sbarg::ProrationRule::Linear;
        return sbarg::Scenario(sbarg::parse_institution(j.at("institution").get<std::string>()),
                               sbarg::parse_contract(j.at("contract").get<std::string>()),
                               j.at("params").get<sbarg::MarketParams>(),
                               sbarg::BargainingPowers(j.at("theta").get<std::vector<double>>()), belief,
                               risk, pro);
    }
};

template <>
struct adl_serializer<sbarg::EquilibriumOutcome> {
    static void to_json(json& j, const sbarg::EquilibriumOutcome& o) {
        j = json{{"investments", o.investments()},
                 {"shares", o.shares()},
                 {"entrepreneur_share", o.entrepreneur_share()},
                 {"expected_profit_e", o.expected_profit_e()},
                 {"expected_profit_i", o.expected_profit_i()},
                 {"regime", sbarg::to_string(o.regime())}};
        if (o.continuum_i1()) j["continuum_i1"] = *o.continuum_i1();
    }
    // entrepreneur_share is derived and ignored on input.
    static sbarg::EquilibriumOutcome from_json(const json& j) {
        std::optional<double> i1;
        if (j.contains("continuum_i1") && !j.at("continuum_i1").is_null())
            i1 = j.at("continuum_i1").get<double>();
        return sbarg::EquilibriumOutcome(
            j.at("investments").get<std::vector<double>>(), j.at("shares").get<std::vector<double>>(),
            j.at("expected_profit_e").get<double>(), j.at("expected_profit_i").get<std::vector<double>>(),
            sbarg::parse_regime(j.at("regime").get<std::string>()), i1);
    }
};

template <>
struct adl_serializer<sbarg::Interval> {
    static void to_json(json& j, const sbarg::Interval& iv) { j = json::array({iv.lo, iv.hi}); }
    static sbarg::Interval from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
};

} // namespace nlohmann

namespace sbarg {

inline json to_json(const EquilibriumSet& set) {
    json j;
    j["outcomes"] = set.outcomes;
    if (set.continuum) {
        j["continuum"] = json{{"intervals", set.continuum->intervals()}};
    } else {
        j["continuum"] = nullptr;
    }
    return j;
}

inline Scenario scenario_from_json(const std::string& text) {
    return detail::json_guard([&] { return json::parse(text).get<Scenario>(); });
}

inline EquilibriumOutcome outcome_from_json(const std::string& text) {
    return detail::json_guard([&] { return json::parse(text).get<EquilibriumOutcome>(); });
}

inline std::string to_json_string(const Scenario& s) { return json(s).dump(); }
inline std::string to_json_string(const EquilibriumOutcome& o) { return json(o).dump(); }

} // namespace sbarg
