#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sbarg {

// ---------------------------------------------------------------------------
// Errors. Every error carries a stable name() used by the CLI on stderr.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* name() const noexcept { return "Error"; }
};

// Model-domain errors (bad parameters, assumptions, infeasible inputs).
class ModelError : public Error {
public:
    using Error::Error;
    const char* name() const noexcept override { return "ModelError"; }
};

class InvalidParameter : public ModelError {
public:
    using ModelError::ModelError;
    const char* name() const noexcept override { return "InvalidParameter"; }
};

class AssumptionViolated : public ModelError {
public:
    using ModelError::ModelError;
    const char* name() const noexcept override { return "AssumptionViolated"; }
};

class InfeasibleAllocation : public ModelError {
public:
    using ModelError::ModelError;
    const char* name() const noexcept override { return "InfeasibleAllocation"; }
};

class DomainError : public ModelError {
public:
    using ModelError::ModelError;
    const char* name() const noexcept override { return "DomainError"; }
};

class NoRegimeMatched : public ModelError {
public:
    using ModelError::ModelError;
    const char* name() const noexcept override { return "NoRegimeMatched"; }
};

class NumericError : public Error {
public:
    using Error::Error;
    const char* name() const noexcept override { return "NumericError"; }
};

class MaxIterationsExceeded : public NumericError {
public:
    MaxIterationsExceeded(const std::string& what, std::vector<std::string> trace)
        : NumericError(what), trace_(std::move(trace)) {}
    const char* name() const noexcept override { return "MaxIterationsExceeded"; }
    const std::vector<std::string>& trace() const noexcept { return trace_; }

private:
    std::vector<std::string> trace_;
};

// Malformed input files.
class DataError : public Error {
public:
    using Error::Error;
    const char* name() const noexcept override { return "DataError"; }
};

// ---------------------------------------------------------------------------
// Tags

enum class Institution { SI, TI, TIL };
enum class Contract { Common, Preferred };
enum class BeliefModel { Standard, JointDisagreement };
enum class ProrationRule { Linear, Forfeit };
enum class Arm { PoorEnt, RichEnt };

enum class Regime {
    SI,
    TIBothInvest,
    TIOneInvestor,
    TILContinuum,
    TILExclusionary,
    PreferredRegime1,
    PreferredRegime2,
    PreferredRegime3,
    PreferredRegime4,
    NoDeal,
    Numeric,
};

inline std::string_view to_string(Institution v) {
    switch (v) {
    case Institution::SI: return "SI";
    case Institution::TI: return "TI";
    case Institution::TIL: return "TIL";
    }
    return "?";
}

inline std::string_view to_string(Contract v) {
    return v == Contract::Common ? "Common" : "Preferred";
}

inline std::string_view to_string(BeliefModel v) {
    return v == BeliefModel::Standard ? "Standard" : "JointDisagreement";
}

inline std::string_view to_string(ProrationRule v) {
    return v == ProrationRule::Linear ? "Linear" : "Forfeit";
}

inline std::string_view to_string(Arm v) {
    return v == Arm::PoorEnt ? "PoorEnt" : "RichEnt";
}

inline std::string_view to_string(Regime v) {
    switch (v) {
    case Regime::SI: return "SI";
    case Regime::TIBothInvest: return "TI-BothInvest";
    case Regime::TIOneInvestor: return "TI-OneInvestor";
    case Regime::TILContinuum: return "TIL-Continuum";
    case Regime::TILExclusionary: return "TIL-Exclusionary";
    case Regime::PreferredRegime1: return "Preferred-Regime1";
    case Regime::PreferredRegime2: return "Preferred-Regime2";
    case Regime::PreferredRegime3: return "Preferred-Regime3";
    case Regime::PreferredRegime4: return "Preferred-Regime4";
    case Regime::NoDeal: return "NoDeal";
    case Regime::Numeric: return "Numeric";
    }
    return "?";
}

namespace detail {

inline std::string lower_alnum(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

} // namespace detail

// Parsers accept the canonical names case-insensitively, ignoring
// punctuation ("TI-L", "til", "Til" are all TIL).
inline Institution parse_institution(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "si") return Institution::SI;
    if (k == "ti") return Institution::TI;
    if (k == "til") return Institution::TIL;
    throw InvalidParameter("unknown institution '" + std::string(s) + "'");
}

inline Contract parse_contract(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "common" || k == "c") return Contract::Common;
    if (k == "preferred" || k == "p") return Contract::Preferred;
    throw InvalidParameter("unknown contract '" + std::string(s) + "'");
}

inline BeliefModel parse_belief(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "standard") return BeliefModel::Standard;
    if (k == "joint" || k == "jointdisagreement") return BeliefModel::JointDisagreement;
    throw InvalidParameter("unknown belief model '" + std::string(s) + "'");
}

inline ProrationRule parse_proration(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "linear") return ProrationRule::Linear;
    if (k == "forfeit") return ProrationRule::Forfeit;
    throw InvalidParameter("unknown proration rule '" + std::string(s) + "'");
}

inline Arm parse_arm(std::string_view s) {
    auto k = detail::lower_alnum(s);
    if (k == "poor" || k == "poorent") return Arm::PoorEnt;
    if (k == "rich" || k == "richent") return Arm::RichEnt;
    throw InvalidParameter("unknown arm '" + std::string(s) + "'");
}

inline Regime parse_regime(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(Regime::Numeric); ++i) {
        auto r = static_cast<Regime>(i);
        if (to_string(r) == s) return r;
    }
    throw InvalidParameter("unknown regime '" + std::string(s) + "'");
}

inline int investor_count(Institution inst) { return inst == Institution::SI ? 1 : 2; }

// Per-investor endowment: SI holds the whole requirement, TI investors
// hold half each, TIL investors can each fund the whole round.
inline double endowment(Institution inst, double e) {
    return inst == Institution::TI ? e / 2.0 : e;
}

// ---------------------------------------------------------------------------

class MarketParams {
public:
    MarketParams(double e, double alpha_h, double alpha_l, double p, double d_e)
        : e_(e), alpha_h_(alpha_h), alpha_l_(alpha_l), p_(p), d_e_(d_e) {
        if (!(std::isfinite(e) && e > 0)) throw InvalidParameter("e must be > 0");
        if (!(std::isfinite(alpha_h) && alpha_h > 1)) throw InvalidParameter("alpha_h must be > 1");
        if (!(std::isfinite(alpha_l) && alpha_l > 0 && alpha_l <= 1))
            throw InvalidParameter("alpha_l must lie in (0, 1]");
        if (!(p > 0 && p < 1)) throw InvalidParameter("p must lie in (0, 1)");
        if (!(std::isfinite(d_e) && d_e >= 0)) throw InvalidParameter("d_e must be >= 0");
        if (!(d_e < mu_alpha() * e))
            throw InvalidParameter("d_e must be < mu_alpha * e (no gains from trade otherwise)");
    }

    double e() const noexcept { return e_; }
    double alpha_h() const noexcept { return alpha_h_; }
    double alpha_l() const noexcept { return alpha_l_; }
    double p() const noexcept { return p_; }
    double d_e() const noexcept { return d_e_; }

    double mu_alpha() const noexcept { return p_ * alpha_h_ + (1.0 - p_) * alpha_l_; }

    // Closed-form both-invest equilibria are only derived for mu_alpha >= 2.
    bool assumption_holds() const noexcept { return mu_alpha() >= 2.0; }

    MarketParams with_d_e(double d_e) const { return {e_, alpha_h_, alpha_l_, p_, d_e}; }

    friend bool operator==(const MarketParams&, const MarketParams&) = default;

private:
    double e_, alpha_h_, alpha_l_, p_, d_e_;
};

class BargainingPowers {
public:
    BargainingPowers(std::vector<double> theta) : theta_(std::move(theta)) {
        if (theta_.empty() || theta_.size() > 2)
            throw InvalidParameter("theta must have 1 or 2 entries");
        for (double t : theta_) {
            if (!(t >= 0 && t <= 1)) throw InvalidParameter("theta entries must lie in [0, 1]");
        }
    }
    BargainingPowers(std::initializer_list<double> theta)
        : BargainingPowers(std::vector<double>(theta)) {}

    const std::vector<double>& theta() const noexcept { return theta_; }
    double operator[](std::size_t i) const { return theta_.at(i); }
    std::size_t size() const noexcept { return theta_.size(); }
    // Entrepreneur's power against investor i.
    double entrepreneur_power(std::size_t i) const { return 1.0 - theta_.at(i); }

    bool interior() const noexcept {
        for (double t : theta_)
            if (t <= 0 || t >= 1) return false;
        return true;
    }

    friend bool operator==(const BargainingPowers&, const BargainingPowers&) = default;

private:
    std::vector<double> theta_;
};

class RiskProfile {
public:
    RiskProfile() = default;
    RiskProfile(double rho_e, std::vector<double> rho_i) : rho_e_(rho_e), rho_i_(std::move(rho_i)) {
        check(rho_e_);
        if (rho_i_.empty()) rho_i_.push_back(0.0);
        if (rho_i_.size() > 2) throw InvalidParameter("rho_i must have 1 or 2 entries");
        for (double r : rho_i_) check(r);
    }
    RiskProfile(double rho_e, double rho_i) : RiskProfile(rho_e, std::vector<double>{rho_i}) {}

    double rho_e() const noexcept { return rho_e_; }
    const std::vector<double>& rho_i() const noexcept { return rho_i_; }
    // A single rho_i entry applies to every investor.
    double rho_investor(std::size_t i) const {
        return rho_i_.size() == 1 ? rho_i_[0] : rho_i_.at(i);
    }
    bool neutral() const noexcept {
        if (rho_e_ != 0) return false;
        for (double r : rho_i_)
            if (r != 0) return false;
        return true;
    }

    friend bool operator==(const RiskProfile&, const RiskProfile&) = default;

private:
    static void check(double r) {
        if (!(r >= 0 && r < 1)) throw InvalidParameter("CRRA exponents must lie in [0, 1)");
    }
    double rho_e_ = 0.0;
    std::vector<double> rho_i_{0.0};
};

class Scenario {
public:
    Scenario(Institution inst, Contract contract, MarketParams params, BargainingPowers powers,
             BeliefModel belief = BeliefModel::Standard, RiskProfile risk = {},
             ProrationRule proration = ProrationRule::Linear)
        : inst_(inst), contract_(contract), params_(params), powers_(std::move(powers)),
          belief_(belief), risk_(std::move(risk)), proration_(proration) {
        if (static_cast<int>(powers_.size()) != investor_count(inst_))
            throw InvalidParameter("theta needs " + std::to_string(investor_count(inst_)) +
                                   " entries for institution " + std::string(to_string(inst_)));
        if (risk_.rho_i().size() == 2 && inst_ == Institution::SI)
            throw InvalidParameter("SI takes a single investor CRRA exponent");
        if (contract_ == Contract::Preferred && params_.alpha_l() != 1.0)
            throw InvalidParameter("Preferred contracts require alpha_l = 1");
    }

    Institution institution() const noexcept { return inst_; }
    Contract contract() const noexcept { return contract_; }
    const MarketParams& params() const noexcept { return params_; }
    const BargainingPowers& powers() const noexcept { return powers_; }
    BeliefModel belief() const noexcept { return belief_; }
    const RiskProfile& risk() const noexcept { return risk_; }
    ProrationRule proration() const noexcept { return proration_; }

    int n_investors() const noexcept { return investor_count(inst_); }
    double endowment(int i) const {
        if (i < 0 || i >= n_investors()) throw InvalidParameter("investor index out of range");
        return sbarg::endowment(inst_, params_.e());
    }
    std::vector<double> endowments() const {
        return std::vector<double>(static_cast<std::size_t>(n_investors()),
                                   sbarg::endowment(inst_, params_.e()));
    }

    Scenario with_params(const MarketParams& p) const {
        return {inst_, contract_, p, powers_, belief_, risk_, proration_};
    }
    Scenario with_powers(BargainingPowers b) const {
        return {inst_, contract_, params_, std::move(b), belief_, risk_, proration_};
    }
    Scenario with_belief(BeliefModel b) const {
        return {inst_, contract_, params_, powers_, b, risk_, proration_};
    }
    Scenario with_risk(RiskProfile r) const {
        return {inst_, contract_, params_, powers_, belief_, std::move(r), proration_};
    }
    Scenario with_proration(ProrationRule r) const {
        return {inst_, contract_, params_, powers_, belief_, risk_, r};
    }

    friend bool operator==(const Scenario&, const Scenario&) = default;

private:
    Institution inst_;
    Contract contract_;
    MarketParams params_;
    BargainingPowers powers_;
    BeliefModel belief_;
    RiskProfile risk_;
    ProrationRule proration_;
};

// ---------------------------------------------------------------------------

class EquilibriumOutcome {
public:
    EquilibriumOutcome(std::vector<double> investments, std::vector<double> shares,
                       double expected_profit_e, std::vector<double> expected_profit_i,
                       Regime regime, std::optional<double> continuum_i1 = std::nullopt)
        : investments_(std::move(investments)), shares_(std::move(shares)),
          expected_profit_e_(expected_profit_e), expected_profit_i_(std::move(expected_profit_i)),
          regime_(regime), continuum_i1_(continuum_i1) {
        if (investments_.size() != shares_.size() || investments_.empty() || investments_.size() > 2)
            throw InfeasibleAllocation("investments and shares must both have 1 or 2 entries");
        double total = 0;
        for (double s : shares_) {
            if (!(s >= 0 && s <= 1)) throw InfeasibleAllocation("shares must lie in [0, 1]");
            total += s;
        }
        if (total > 1.0 + 1e-12) throw InfeasibleAllocation("investor shares sum above 1");
        for (double I : investments_) {
            if (!(I >= 0 && std::isfinite(I))) throw InfeasibleAllocation("investments must be >= 0");
        }
    }

    const std::vector<double>& investments() const noexcept { return investments_; }
    const std::vector<double>& shares() const noexcept { return shares_; }
    // Residual, never stored.
    double entrepreneur_share() const noexcept {
        return 1.0 - std::accumulate(shares_.begin(), shares_.end(), 0.0);
    }
    double total_investment() const noexcept {
        return std::accumulate(investments_.begin(), investments_.end(), 0.0);
    }
    double expected_profit_e() const noexcept { return expected_profit_e_; }
    const std::vector<double>& expected_profit_i() const noexcept { return expected_profit_i_; }
    Regime regime() const noexcept { return regime_; }
    std::optional<double> continuum_i1() const noexcept { return continuum_i1_; }

    // "TIL-Continuum(I1=100)" style label; other regimes print their tag.
    std::string regime_label() const {
        std::string s(to_string(regime_));
        if (continuum_i1_) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "(I1=%.17g)", *continuum_i1_);
            s += buf;
        }
        return s;
    }

    friend bool operator==(const EquilibriumOutcome&, const EquilibriumOutcome&) = default;

private:
    std::vector<double> investments_;
    std::vector<double> shares_;
    double expected_profit_e_;
    std::vector<double> expected_profit_i_;
    Regime regime_;
    std::optional<double> continuum_i1_;
};

// Experimental parameterization: e = 200, (alpha_h, alpha_l, p) = (11, 1, 0.2),
// d_e = 0 (poor) or 160 (rich), equal powers, Standard belief, risk neutral.
inline Scenario make_paper_scenario(Arm arm, Institution inst, Contract contract) {
    MarketParams mp(200.0, 11.0, 1.0, 0.2, arm == Arm::PoorEnt ? 0.0 : 160.0);
    std::vector<double> theta(static_cast<std::size_t>(investor_count(inst)), 0.5);
    return Scenario(inst, contract, mp, BargainingPowers(theta));
}

} // namespace sbarg
