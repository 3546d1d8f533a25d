#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "sbarg/core_types.hpp"
#include "sbarg/payoffs.hpp"

namespace sbarg {

struct Interval {
    double lo;
    double hi;
    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

// Family of two-large-investor outcomes with I1 + I2 = e.
class TilContinuum {
public:
    TilContinuum(Scenario sc, std::vector<Interval> intervals)
        : sc_(std::move(sc)), intervals_(std::move(intervals)) {}

    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    const Scenario& scenario() const noexcept { return sc_; }
    bool empty() const noexcept { return intervals_.empty(); }
    bool contains(double i1) const {
        return std::any_of(intervals_.begin(), intervals_.end(),
                           [&](const Interval& iv) { return iv.contains(i1); });
    }

    // Displayed share formula; valid only inside the intervals.
    std::array<double, 2> shares(double i1) const { return shares_at(sc_, i1); }

    EquilibriumOutcome outcome(double i1) const;

    static std::array<double, 2> shares_at(const Scenario& sc, double i1) {
        const auto& mp = sc.params();
        const double e = mp.e(), mu = mp.mu_alpha(), de = mp.d_e();
        const double t1 = sc.powers()[0], t2 = sc.powers()[1];
        const double i2 = e - i1;
        const double den = mu * e * (e * e - i1 * i2 * t1 * t2);
        auto one = [&](double Ii, double ti, double tj) {
            return Ii *
                   (Ii * e * ti * (1 - tj + mu * tj) - e * e * (ti * (2 - mu * (1 - tj) - tj) - 1) -
                    de * (ti * (1 - tj) * e + Ii * t1 * t2)) /
                   den;
        };
        return {one(i1, t1, t2), one(i2, t2, t1)};
    }

    // The displayed existence bound: mu must be at least max_i f_i(I_i).
    static double existence_bound(const Scenario& sc, double i1) {
        const auto& mp = sc.params();
        const double e = mp.e(), de = mp.d_e();
        const double t1 = sc.powers()[0], t2 = sc.powers()[1];
        auto f = [&](double Ii, double ti) {
            return (e * e * e + e * e * Ii - 2 * e * e * Ii * ti + e * Ii * Ii * ti -
                    de * (e * Ii * (ti - t1 * t2) + Ii * Ii * t1 * t2)) /
                   (e * e * e - e * e * Ii * ti);
        };
        return std::max(f(i1, t1), f(e - i1, t2));
    }

private:
    Scenario sc_;
    std::vector<Interval> intervals_;
};

struct EquilibriumSet {
    std::vector<EquilibriumOutcome> outcomes;
    std::optional<TilContinuum> continuum;

    // First listed outcome; both-invest comes first whenever it exists.
    const EquilibriumOutcome& primary() const {
        if (outcomes.empty()) throw DomainError("empty equilibrium set");
        return outcomes.front();
    }
};

struct CorollaryGap {
    double s_e_si;
    double s_e_ti;
    double gap;
};

namespace detail {

inline EquilibriumOutcome make_outcome(const Scenario& sc, std::vector<double> I,
                                       std::vector<double> s, Regime regime,
                                       std::optional<double> i1 = std::nullopt) {
    for (auto& x : s) {
        if (x < 0 && x > -1e-12) x = 0.0;
    }
    const auto pr = expected_profits(sc, I, s);
    return EquilibriumOutcome(std::move(I), std::move(s), pr.entrepreneur, pr.investors, regime, i1);
}

inline EquilibriumOutcome no_deal(const Scenario& sc) {
    const int n = sc.n_investors();
    return make_outcome(sc, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                        Regime::NoDeal);
}

inline double gain_tol(const MarketParams& mp) { return 1e-9 * (1.0 + mp.e()); }

inline bool shares_feasible(const std::vector<double>& s) {
    double tot = 0;
    for (double x : s) {
        if (!(x >= -1e-12 && x <= 1)) return false;
        tot += x;
    }
    return tot <= 1 + 1e-12;
}

// Participation: every active bilateral deal leaves both sides at or above
// their disagreement points.
inline bool participation_holds(const Scenario& sc, const std::vector<double>& I,
                                const std::vector<double>& s) {
    if (!shares_feasible(s)) return false;
    std::vector<double> sc_s = s;
    for (auto& x : sc_s) x = std::max(x, 0.0);
    const auto pr = expected_profits(sc, I, sc_s);
    const auto dp = disagreement_points(sc, I, sc_s);
    const double tol = gain_tol(sc.params());
    for (int i = 0; i < sc.n_investors(); ++i) {
        if (I[i] <= 0) continue;
        if (pr.investors[i] - dp.d_i[i] < -tol) return false;
        if (pr.entrepreneur - dp.d_e_vs[i] < -tol) return false;
    }
    return true;
}

inline void require_assumption(const MarketParams& mp) {
    if (!mp.assumption_holds())
        throw AssumptionViolated("mu_alpha = " + std::to_string(mp.mu_alpha()) +
                                 " is below 2; closed forms are not available");
}

// Surplus of a single deal funding `amount` with no counterpart deal.
inline double single_deal_surplus(const MarketParams& mp, double amount) {
    return (mp.mu_alpha() - 1.0) * amount - mp.d_e();
}

// Adds the only-investor-i outcomes for TI when their strict conditions hold.
inline void add_one_investor(const Scenario& sc, std::vector<EquilibriumOutcome>& out) {
    const auto& mp = sc.params();
    const double e = mp.e(), de = mp.d_e();
    const bool pref = sc.contract() == Contract::Preferred;
    const double m = pref ? mp.alpha_h() : mp.mu_alpha();
    const double dd = pref ? de / mp.p() : de;
    for (int i = 0; i < 2; ++i) {
        const double t = sc.powers()[i];
        const double bound = ((2 - t) - 2 * dd * t / e) / (1 - t);
        if (!(m < bound)) continue;
        std::vector<double> I(2, 0.0), s(2, 0.0);
        I[i] = e / 2;
        s[i] = ((m - 1) * t + 1) / m - 2 * dd * t / (e * m);
        if (single_deal_surplus(mp, e / 2) <= 0 || !participation_holds(sc, I, s)) continue;
        out.push_back(make_outcome(sc, I, s, Regime::TIOneInvestor));
    }
}

inline void finish_or_no_deal(const Scenario& sc, std::vector<EquilibriumOutcome>& out,
                              double single_amount) {
    if (!out.empty()) return;
    if (single_deal_surplus(sc.params(), single_amount) <= 0) {
        out.push_back(no_deal(sc));
        return;
    }
    throw DomainError("no closed-form outcome satisfies participation for these parameters");
}

inline std::array<double, 2> ti_common_standard(const MarketParams& mp, double t1, double t2) {
    const double mu = mp.mu_alpha(), e = mp.e(), de = mp.d_e();
    const double q = 4 - t1 * t2;
    auto s = [&](double t) {
        return (3 - 2 * mu) * (2 - t) / (mu * q) + (mu - 1) / mu - de * (2 * t - t1 * t2) / (e * mu * q);
    };
    return {s(t1), s(t2)};
}

inline std::array<double, 2> ti_common_joint(const MarketParams& mp, double t1, double t2) {
    const double mu = mp.mu_alpha(), e = mp.e(), de = mp.d_e();
    if (t1 == t2) {
        const double t = t1;
        const double v = (1 + (2 * mu - 1) * t) / (2 * mu * (1 + t)) - de * t / (e * mu * (1 + t));
        return {v, v};
    }
    const double q = 1 - t1 * t2;
    auto s = [&](double t) {
        return (1 - 2 * t + 2 * mu * t + (1 - 2 * mu) * t1 * t2) / (2 * mu * q) -
               de * (t - t1 * t2) / (e * mu * q);
    };
    return {s(t1), s(t2)};
}

inline bool ti_common_joint_exists(const MarketParams& mp, double t1, double t2) {
    const double mu = mp.mu_alpha(), e = mp.e(), de = mp.d_e();
    if (t1 == t2) return mu >= (3 + t1) / 2 - de * t1 / e;
    auto b = [&](double ti) {
        return (3 - 2 * ti - t1 * t2) / (2 * (1 - ti)) - de * (ti - t1 * t2) / (e * (1 - ti));
    };
    return mu >= std::max(b(t1), b(t2));
}

inline std::array<double, 2> ti_preferred_joint(const MarketParams& mp, double t1, double t2) {
    const double a = mp.alpha_h(), e = mp.e(), de = mp.d_e(), p = mp.p();
    if (t1 == t2) {
        const double t = t1;
        const double v = (2 * a * t + 1 - t) / (2 * a * (1 + t)) - de * t / (a * e * p * (1 + t));
        return {v, v};
    }
    const double q = 1 - t1 * t2;
    auto s = [&](double ti, double tj) {
        return (ti * (2 * a * (1 - tj) + tj - 2) + 1) / (2 * a * q) -
               de * ti * (1 - tj) / (a * e * p * q);
    };
    return {s(t1, t2), s(t2, t1)};
}

inline bool ti_preferred_joint_exists(const MarketParams& mp, double t1, double t2) {
    const double a = mp.alpha_h(), e = mp.e(), de = mp.d_e(), p = mp.p();
    if (t1 == t2) return a >= 1.5 + t1 / 2 - de * t1 / (e * p);
    auto b = [&](double ti, double tj) {
        return 1.5 + (1 - ti) * tj / (2 * (1 - tj)) - de * (1 - ti) * tj / (e * p * (1 - tj));
    };
    return a >= std::max(b(t1, t2), b(t2, t1));
}

struct PreferredRegimeShares {
    Regime regime;
    std::array<double, 2> s;
};

// Standard-belief Preferred both-invest shares for every regime whose
// alpha_h condition holds.
inline std::vector<PreferredRegimeShares> ti_preferred_standard(const MarketParams& mp, double t1,
                                                                double t2) {
    const double a = mp.alpha_h(), e = mp.e(), de = mp.d_e(), p = mp.p();
    const double dd = de / (e * p);
    const double tt = t1 * t2;
    const bool sym = t1 == t2;

    auto T1 = [&](double ti) {
        if (sym) return (1 + 2 * ti) / ti + dd;
        return (1 - 2 * tt + ti) / (ti - tt) + dd;
    };
    auto T2 = [&](double ti) { return (2 + 3 * ti - 2 * tt) / (2 * ti - tt) + dd; };

    std::vector<PreferredRegimeShares> out;
    if (a <= std::min(T1(t1), T1(t2))) {
        std::array<double, 2> s{};
        if (sym) {
            const double t = t1;
            s[0] = s[1] = (1 + a * t) / (2 * a * (1 + t)) - de * t / (2 * a * p * e * (1 + t));
        } else {
            const double q = 1 - tt;
            s[0] = (1 - a * tt + a * t1 - t1) / (2 * a * q) - de * (t1 - tt) / (2 * a * p * e * q);
            s[1] = (1 - a * tt + a * t2 - t2) / (2 * a * q) - de * (t2 - tt) / (2 * a * p * e * q);
        }
        out.push_back({Regime::PreferredRegime1, s});
    }
    const double q2 = 2 - tt;
    if (T1(t1) < a && a <= T2(t2)) {
        std::array<double, 2> s{};
        s[0] = (1 - a * tt + a * t1 + tt - t1) / (a * q2) - de * (t1 - tt) / (a * p * e * q2);
        s[1] = (2 - a * tt + 2 * a * t2 - 3 * t2) / (2 * a * q2) -
               de * (2 * t2 - tt) / (2 * a * p * e * q2);
        out.push_back({Regime::PreferredRegime2, s});
    }
    if (T1(t2) < a && a <= T2(t1)) {
        std::array<double, 2> s{};
        s[0] = (2 - a * tt + 2 * a * t1 - 3 * t1) / (2 * a * q2) -
               de * (2 * t1 - tt) / (2 * a * p * e * q2);
        s[1] = (1 - a * tt + a * t2 + tt - t2) / (a * q2) - de * (t2 - tt) / (a * p * e * q2);
        out.push_back({Regime::PreferredRegime3, s});
    }
    if (a > std::max(T2(t1), T2(t2))) {
        const double q4 = 4 - tt;
        std::array<double, 2> s{};
        s[0] = (2 - a * tt + 2 * a * t1 + tt - 3 * t1) / (a * q4) - de * (2 * t1 - tt) / (a * p * e * q4);
        s[1] = (2 - a * tt + 2 * a * t2 + tt - 3 * t2) / (a * q4) - de * (2 * t2 - tt) / (a * p * e * q4);
        out.push_back({Regime::PreferredRegime4, s});
    }
    return out;
}

} // namespace detail

inline EquilibriumOutcome TilContinuum::outcome(double i1) const {
    if (!contains(i1)) throw DomainError("I1 lies outside the continuum interval");
    const double e = sc_.params().e();
    const auto s = shares(i1);
    return detail::make_outcome(sc_, {i1, e - i1}, {s[0], s[1]}, Regime::TILContinuum, i1);
}

// Guard that investor shares leave room to repay the other investor's
// preference in the high state.
inline bool preferred_guard_holds(const MarketParams& mp, const EquilibriumOutcome& o,
                                  double tol = 1e-9) {
    if (o.investments().size() != 2) return true;
    const double tot = o.total_investment();
    for (int i = 0; i < 2; ++i) {
        if (mp.alpha_h() * tot * (1 - o.shares()[i]) < o.investments()[1 - i] - tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

inline EquilibriumOutcome solve_si(const MarketParams& mp, double theta0, Contract contract) {
    detail::require_assumption(mp);
    const Scenario sc(Institution::SI, contract, mp, BargainingPowers{theta0});
    const double e = mp.e(), de = mp.d_e(), mu = mp.mu_alpha(), t = theta0;
    if (detail::single_deal_surplus(mp, e) <= 0) return detail::no_deal(sc);
    double s;
    if (contract == Contract::Common) {
        s = ((mu - 1) * t + 1) / mu - t * de / (e * mu);
    } else {
        const double a = mp.alpha_h();
        s = (t * (a - 1) + 1) / a - t * de / (e * a * mp.p());
    }
    return detail::make_outcome(sc, {e}, {s}, Regime::SI);
}

inline EquilibriumSet solve_ti(const MarketParams& mp, std::array<double, 2> theta, Contract contract,
                               BeliefModel belief = BeliefModel::Standard) {
    detail::require_assumption(mp);
    const Scenario sc(Institution::TI, contract, mp, BargainingPowers{theta[0], theta[1]}, belief);
    const double e = mp.e(), t1 = theta[0], t2 = theta[1];
    const std::vector<double> both{e / 2, e / 2};

    EquilibriumSet set;
    auto push_both = [&](std::array<double, 2> s, Regime r) {
        std::vector<double> sv{s[0], s[1]};
        if (detail::participation_holds(sc, both, sv))
            set.outcomes.push_back(detail::make_outcome(sc, both, sv, r));
    };

    if (contract == Contract::Common) {
        if (belief == BeliefModel::Standard) {
            push_both(detail::ti_common_standard(mp, t1, t2), Regime::TIBothInvest);
        } else if (detail::ti_common_joint_exists(mp, t1, t2)) {
            push_both(detail::ti_common_joint(mp, t1, t2), Regime::TIBothInvest);
        }
    } else if (belief == BeliefModel::Standard) {
        const auto regimes = detail::ti_preferred_standard(mp, t1, t2);
        if (regimes.empty())
            throw NoRegimeMatched("no Preferred regime condition holds for alpha_h = " +
                                  std::to_string(mp.alpha_h()));
        for (const auto& r : regimes) push_both(r.s, r.regime);
    } else if (detail::ti_preferred_joint_exists(mp, t1, t2)) {
        push_both(detail::ti_preferred_joint(mp, t1, t2), Regime::TIBothInvest);
    }

    detail::add_one_investor(sc, set.outcomes);
    detail::finish_or_no_deal(sc, set.outcomes, e / 2);
    return set;
}

inline EquilibriumSet solve_til(const MarketParams& mp, std::array<double, 2> theta,
                                Contract contract = Contract::Common) {
    detail::require_assumption(mp);
    if (contract != Contract::Common)
        throw DomainError("no closed form for two large investors with Preferred stock; use the numeric solver");
    const Scenario sc(Institution::TIL, contract, mp, BargainingPowers{theta[0], theta[1]});
    const double e = mp.e(), mu = mp.mu_alpha(), de = mp.d_e();

    auto valid = [&](double i1) {
        if (!(mu >= TilContinuum::existence_bound(sc, i1))) return false;
        const auto s = TilContinuum::shares_at(sc, i1);
        return detail::participation_holds(sc, {i1, e - i1}, {s[0], s[1]});
    };

    // Scan, then sharpen each edge by bisection.
    constexpr int kScan = 2000;
    std::vector<Interval> ivs;
    auto x_at = [&](int k) { return k == kScan ? e : e * k / kScan; };
    auto refine = [&](double bad, double good) {
        for (int it = 0; it < 200 && std::abs(good - bad) > 1e-15 * e; ++it) {
            const double mid = 0.5 * (bad + good);
            (valid(mid) ? good : bad) = mid;
        }
        return good;
    };
    bool prev = false;
    double start = 0;
    for (int k = 0; k <= kScan; ++k) {
        const bool cur = valid(x_at(k));
        if (cur && !prev) start = k == 0 ? 0.0 : refine(x_at(k - 1), x_at(k));
        if (!cur && prev) ivs.push_back({start, refine(x_at(k), x_at(k - 1))});
        prev = cur;
    }
    if (prev) ivs.push_back({start, e});

    EquilibriumSet set;
    TilContinuum cont(sc, ivs);
    if (!cont.empty()) {
        const double rep = cont.contains(e / 2) ? e / 2 : 0.5 * (ivs.front().lo + ivs.front().hi);
        set.outcomes.push_back(cont.outcome(rep));
    }
    set.continuum = cont;

    for (int i = 0; i < 2; ++i) {
        const double t = theta[i];
        const double bound = 1 + 1 / (1 - t) - de * t / (e * (1 - t));
        if (!(mu < bound)) continue;
        std::vector<double> I(2, 0.0), s(2, 0.0);
        I[i] = e;
        s[i] = (e + e * (mu - 1) * t - de * t) / (e * mu);
        if (detail::single_deal_surplus(mp, e) <= 0 || !detail::participation_holds(sc, I, s)) continue;
        set.outcomes.push_back(detail::make_outcome(sc, I, s, Regime::TILExclusionary));
    }
    detail::finish_or_no_deal(sc, set.outcomes, e);
    return set;
}

// Dispatch on a full scenario. Closed forms are risk neutral.
inline EquilibriumSet solve_closed_form(const Scenario& sc) {
    if (!sc.risk().neutral())
        throw DomainError("closed forms assume risk neutrality; use the numeric solver");
    const auto& th = sc.powers();
    switch (sc.institution()) {
    case Institution::SI: {
        EquilibriumSet set;
        set.outcomes.push_back(solve_si(sc.params(), th[0], sc.contract()));
        return set;
    }
    case Institution::TI:
        if (sc.belief() == BeliefModel::Standard && sc.proration() != ProrationRule::Linear)
            throw DomainError("closed forms assume linear pro-ration of the outside option");
        return solve_ti(sc.params(), {th[0], th[1]}, sc.contract(), sc.belief());
    case Institution::TIL:
        if (sc.belief() != BeliefModel::Standard)
            throw DomainError("no closed form for two large investors under joint disagreement");
        if (sc.proration() != ProrationRule::Linear)
            throw DomainError("closed forms assume linear pro-ration of the outside option");
        return solve_til(sc.params(), {th[0], th[1]}, sc.contract());
    }
    throw DomainError("unknown institution");
}

// Entrepreneur share with one investor versus two at equal powers.
inline CorollaryGap corollary_gap(const MarketParams& mp, Contract contract,
                                  BeliefModel belief = BeliefModel::Standard) {
    const double si = solve_si(mp, 0.5, contract).entrepreneur_share();
    const double ti = solve_ti(mp, {0.5, 0.5}, contract, belief).primary().entrepreneur_share();
    return {si, ti, ti - si};
}

} // namespace sbarg
