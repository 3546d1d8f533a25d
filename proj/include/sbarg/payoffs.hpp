#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sbarg/core_types.hpp"
#include "sbarg/dual.hpp"

namespace sbarg {

enum class State { High, Low };

struct StateOutcome {
    State state;
    double value;
};

struct RealizedPayoffs {
    double entrepreneur;
    std::vector<double> investors;
};

struct ExpectedProfits {
    double entrepreneur;
    std::vector<double> investors;
};

struct DisagreementPoints {
    std::vector<double> d_e_vs; // entrepreneur's point against each investor
    std::vector<double> d_i;    // each investor's point (its endowment)
};

// Counterpart deal seen from one bilateral negotiation.
struct OtherDeal {
    double investment = 0.0;
    double share = 0.0;
};

enum class ExposureDomain { Gain, GainOrLoss };

inline std::string_view to_string(ExposureDomain d) {
    return d == ExposureDomain::Gain ? "Gain" : "GainOrLoss";
}

inline double state_alpha(const MarketParams& mp, State st) {
    return st == State::High ? mp.alpha_h() : mp.alpha_l();
}

// ---------------------------------------------------------------------------
// Scalar-generic kernels. Arrays always have two slots; the second is unused
// for SI. No validation happens here.

template <class T>
struct RealizedT {
    T ent;
    std::array<T, 2> inv;
};

template <class T>
RealizedT<T> realized_kernel(const Scenario& sc, const std::array<T, 2>& I,
                             const std::array<T, 2>& s, State st) {
    const auto& mp = sc.params();
    const int n = sc.n_investors();
    const double endow = endowment(sc.institution(), mp.e());
    RealizedT<T> r{T(0.0), {T(0.0), T(0.0)}};

    T sum_i = I[0];
    if (n == 2) sum_i = sum_i + I[1];
    if (value_of(sum_i) == 0.0) {
        r.ent = T(mp.d_e());
        for (int j = 0; j < n; ++j) r.inv[j] = T(endow);
        return r;
    }

    const T V = state_alpha(mp, st) * sum_i;
    if (sc.contract() == Contract::Common) {
        T claimed(0.0);
        for (int j = 0; j < n; ++j) {
            T eq = s[j] * V;
            claimed = claimed + s[j];
            r.inv[j] = eq + (endow - I[j]);
        }
        r.ent = (T(1.0) - claimed) * V;
        return r;
    }

    // Preferred, liquidation multiple 1.
    T paid(0.0);
    for (int j = 0; j < n; ++j) {
        T eq;
        if (st == State::Low) {
            eq = I[j];
        } else {
            T comp(0.0);
            if (n == 2) comp = smax(I[1 - j] - V * (T(1.0) - s[j]), T(0.0));
            eq = smax(V * s[j] - comp, I[j]);
        }
        paid = paid + eq;
        r.inv[j] = eq + (endow - I[j]);
    }
    r.ent = smax(V - paid, T(0.0));
    return r;
}

template <class T>
T crra(T x, double rho) {
    if (rho == 0.0) return x;
    return spow(x, 1.0 - rho);
}

// Expected utility (or profit when every rho is 0) of each party.
template <class T>
RealizedT<T> expected_kernel(const Scenario& sc, const std::array<T, 2>& I,
                             const std::array<T, 2>& s, double rho_e,
                             const std::array<double, 2>& rho_i) {
    const double p = sc.params().p();
    const auto hi = realized_kernel(sc, I, s, State::High);
    const auto lo = realized_kernel(sc, I, s, State::Low);
    RealizedT<T> r{T(0.0), {T(0.0), T(0.0)}};
    r.ent = p * crra(hi.ent, rho_e) + (1.0 - p) * crra(lo.ent, rho_e);
    for (int j = 0; j < sc.n_investors(); ++j)
        r.inv[j] = p * crra(hi.inv[j], rho_i[j]) + (1.0 - p) * crra(lo.inv[j], rho_i[j]);
    return r;
}

// Outside option kept by the entrepreneur when only `secured` of the
// requirement is raised.
inline double prorated_outside_option(const Scenario& sc, double secured) {
    const auto& mp = sc.params();
    if (secured <= 0.0) return mp.d_e();
    if (sc.proration() == ProrationRule::Forfeit) return 0.0;
    const double frac = (mp.e() - secured) / mp.e();
    return frac > 0.0 ? mp.d_e() * frac : 0.0;
}

// Entrepreneur's expected utility when only the counterpart deal j stands,
// with the pro-rated outside option on top. rho_e = 0 gives profit.
inline double standalone_entrepreneur_value(const Scenario& sc, int j, OtherDeal other,
                                            double rho_e) {
    const double p = sc.params().p();
    if (other.investment <= 0.0) return crra(sc.params().d_e(), rho_e);
    std::array<double, 2> I{0.0, 0.0}, s{0.0, 0.0};
    I[j] = other.investment;
    s[j] = other.share;
    const double keep = prorated_outside_option(sc, other.investment);
    const auto hi = realized_kernel(sc, I, s, State::High);
    const auto lo = realized_kernel(sc, I, s, State::Low);
    return p * crra(hi.ent + keep, rho_e) + (1.0 - p) * crra(lo.ent + keep, rho_e);
}

// ---------------------------------------------------------------------------
// Validated double-precision API.

inline void check_allocation(const Scenario& sc, const std::vector<double>& investments,
                             const std::vector<double>& shares) {
    const int n = sc.n_investors();
    if (static_cast<int>(investments.size()) != n || static_cast<int>(shares.size()) != n)
        throw InfeasibleAllocation("expected " + std::to_string(n) + " investments and shares");
    const double e = sc.params().e();
    const double endow = endowment(sc.institution(), e);
    double sum_i = 0, sum_s = 0;
    for (int j = 0; j < n; ++j) {
        const double I = investments[j], s = shares[j];
        if (!(I >= 0 && I <= endow * (1 + 1e-12)))
            throw InfeasibleAllocation("investment outside [0, endowment]");
        if (!(s >= 0 && s <= 1)) throw InfeasibleAllocation("share outside [0, 1]");
        if (I == 0 && s != 0) throw InfeasibleAllocation("share granted without investment");
        sum_i += I;
        sum_s += s;
    }
    if (sum_i > e * (1 + 1e-12)) throw InfeasibleAllocation("total investment exceeds e");
    if (sum_s > 1 + 1e-12) throw InfeasibleAllocation("investor shares sum above 1");
}

namespace detail {

inline std::array<double, 2> to_arr(const std::vector<double>& v) {
    std::array<double, 2> a{0.0, 0.0};
    for (std::size_t i = 0; i < v.size() && i < 2; ++i) a[i] = v[i];
    return a;
}

} // namespace detail

inline StateOutcome state_outcome(const Scenario& sc, const std::vector<double>& investments,
                                  State st) {
    double sum_i = 0;
    for (double I : investments) sum_i += I;
    return {st, state_alpha(sc.params(), st) * sum_i};
}

inline RealizedPayoffs realized_payoffs(const Scenario& sc, const std::vector<double>& investments,
                                        const std::vector<double>& shares, State st) {
    check_allocation(sc, investments, shares);
    const auto r = realized_kernel(sc, detail::to_arr(investments), detail::to_arr(shares), st);
    RealizedPayoffs out{r.ent, {}};
    for (int j = 0; j < sc.n_investors(); ++j) out.investors.push_back(r.inv[j]);
    return out;
}

inline ExpectedProfits expected_profits(const Scenario& sc, const std::vector<double>& investments,
                                        const std::vector<double>& shares) {
    check_allocation(sc, investments, shares);
    const auto r = expected_kernel(sc, detail::to_arr(investments), detail::to_arr(shares), 0.0,
                                   {0.0, 0.0});
    ExpectedProfits out{r.ent, {}};
    for (int j = 0; j < sc.n_investors(); ++j) out.investors.push_back(r.inv[j]);
    return out;
}

inline ExpectedProfits expected_utilities(const Scenario& sc, const RiskProfile& risk,
                                          const std::vector<double>& investments,
                                          const std::vector<double>& shares) {
    check_allocation(sc, investments, shares);
    const auto I = detail::to_arr(investments), s = detail::to_arr(shares);
    const int n = sc.n_investors();
    std::array<double, 2> rho_i{0.0, 0.0};
    for (int j = 0; j < n; ++j) rho_i[j] = risk.rho_investor(static_cast<std::size_t>(j));
    for (State st : {State::High, State::Low}) {
        const auto r = realized_kernel(sc, I, s, st);
        if (r.ent < 0 && risk.rho_e() > 0)
            throw DomainError("negative entrepreneur payoff outside the CRRA domain");
        for (int j = 0; j < n; ++j)
            if (r.inv[j] < 0 && rho_i[j] > 0)
                throw DomainError("negative investor payoff outside the CRRA domain");
    }
    const auto r = expected_kernel(sc, I, s, risk.rho_e(), rho_i);
    ExpectedProfits out{r.ent, {}};
    for (int j = 0; j < n; ++j) out.investors.push_back(r.inv[j]);
    return out;
}

// d_e^{-i}: the entrepreneur's expected profit if the deal with investor i
// fails while the counterpart deal `other` stands.
inline double entrepreneur_disagreement(const Scenario& sc, int i, OtherDeal other) {
    if (sc.n_investors() == 1 || sc.belief() == BeliefModel::JointDisagreement)
        return sc.params().d_e();
    return standalone_entrepreneur_value(sc, 1 - i, other, 0.0);
}

// Utility analogue of entrepreneur_disagreement.
inline double entrepreneur_disagreement_utility(const Scenario& sc, double rho_e, int i,
                                                OtherDeal other) {
    if (sc.n_investors() == 1 || sc.belief() == BeliefModel::JointDisagreement)
        return crra(sc.params().d_e(), rho_e);
    return standalone_entrepreneur_value(sc, 1 - i, other, rho_e);
}

// Points for every bilateral negotiation, each against the other deal in
// (investments, shares).
inline DisagreementPoints disagreement_points(const Scenario& sc,
                                              const std::vector<double>& investments,
                                              const std::vector<double>& shares) {
    check_allocation(sc, investments, shares);
    DisagreementPoints dp;
    const int n = sc.n_investors();
    for (int i = 0; i < n; ++i) {
        OtherDeal other{};
        if (n == 2) other = {investments[1 - i], shares[1 - i]};
        dp.d_e_vs.push_back(entrepreneur_disagreement(sc, i, other));
        dp.d_i.push_back(sc.endowment(i));
    }
    return dp;
}

// Points when every negotiation faces the same counterpart deal (or none).
inline DisagreementPoints disagreement_points(const Scenario& sc,
                                              std::optional<OtherDeal> other_deal) {
    DisagreementPoints dp;
    const int n = sc.n_investors();
    const OtherDeal other = other_deal.value_or(OtherDeal{});
    if (other.investment < 0 || other.investment > sc.endowment(0) * (1 + 1e-12) ||
        other.share < 0 || other.share > 1)
        throw InfeasibleAllocation("counterpart deal outside its feasible range");
    for (int i = 0; i < n; ++i) {
        dp.d_e_vs.push_back(entrepreneur_disagreement(sc, i, other));
        dp.d_i.push_back(sc.endowment(i));
    }
    return dp;
}

// Whether each side's equilibrium payoff can fall below its outside option.
inline std::pair<ExposureDomain, ExposureDomain> risk_exposure_domains(const Scenario& sc) {
    const auto ent = sc.params().d_e() == 0.0 ? ExposureDomain::Gain : ExposureDomain::GainOrLoss;
    const auto inv =
        sc.contract() == Contract::Preferred ? ExposureDomain::Gain : ExposureDomain::GainOrLoss;
    return {ent, inv};
}

} // namespace sbarg
