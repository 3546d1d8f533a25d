#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sbarg/closed_form.hpp"
#include "sbarg/core_types.hpp"
#include "sbarg/dual.hpp"
#include "sbarg/line_search.hpp"
#include "sbarg/payoffs.hpp"

namespace sbarg {

struct SolverConfig {
    double share_tol = 1e-10;
    int max_iterations = 10'000;
    double damping = 0.5;
    int grid_points = 2001;
    double gain_floor = 1e-14;
    int investment_grid = 11; // points per continuous investment range

    void validate() const {
        if (!(share_tol > 0)) throw InvalidParameter("share_tol must be > 0");
        if (max_iterations < 1) throw InvalidParameter("max_iterations must be >= 1");
        if (!(damping > 0 && damping <= 1)) throw InvalidParameter("damping must lie in (0, 1]");
        if (grid_points < 3) throw InvalidParameter("grid_points must be >= 3");
        if (!(gain_floor > 0)) throw InvalidParameter("gain_floor must be > 0");
        if (investment_grid < 2) throw InvalidParameter("investment_grid must be >= 2");
    }
};

// Candidate investment levels for one bilateral deal: a finite list, a
// continuous range, or both. Zero investment is the no-deal fallback and
// need not be listed.
struct InvestmentSet {
    std::vector<double> candidates;
    std::optional<Interval> range;

    static InvestmentSet finite(std::vector<double> c) { return {std::move(c), std::nullopt}; }
    static InvestmentSet interval(double lo, double hi) { return {{}, Interval{lo, hi}}; }
};

struct BilateralSolution {
    bool deal = false;
    double investment = 0.0;
    double share = 0.0;
    double gain_i = 0.0;
    double gain_e = 0.0;
    double log_value = -std::numeric_limits<double>::infinity();
};

namespace detail {

// Gains (investor, entrepreneur) of one bilateral deal at investment I and
// share s. The objective must accept both double and Dual arguments.
template <class Obj>
std::pair<double, double> gains_at(Obj& obj, double I, double s) {
    const auto g = obj(I, s);
    const double gi = value_of(g.first), ge = value_of(g.second);
    if (!std::isfinite(gi) || !std::isfinite(ge))
        throw NumericError("non-finite gain at I=" + std::to_string(I) + ", s=" + std::to_string(s));
    return {gi, ge};
}

inline double log_nash(double theta, double gi, double ge, double floor) {
    if (theta == 0.0) return std::log(std::max(ge, floor));
    if (theta == 1.0) return std::log(std::max(gi, floor));
    return theta * std::log(std::max(gi, floor)) + (1 - theta) * std::log(std::max(ge, floor));
}

inline bool positive_product(double theta, double gi, double ge) {
    if (gi < 0 || ge < 0) return false;
    if (theta == 0.0) return ge > 0;
    if (theta == 1.0) return gi > 0;
    return gi > 0 && ge > 0;
}

// Best share for a fixed investment. Investor gain must be nondecreasing
// and entrepreneur gain nonincreasing in the share.
template <class Obj>
BilateralSolution best_share(Obj& obj, double I, double theta, Interval sh, const SolverConfig& cfg,
                             int grid_points) {
    BilateralSolution none;
    if (!(sh.hi >= sh.lo)) return none;
    auto gi = [&](double s) { return gains_at(obj, I, s).first; };
    auto ge = [&](double s) { return gains_at(obj, I, s).second; };

    if (gi(sh.hi) < 0 || ge(sh.lo) < 0) return none;
    const double lo = gi(sh.lo) >= 0 ? sh.lo
                                     : bisect_first_true([&](double s) { return gi(s) >= 0; }, sh.lo, sh.hi);
    const double hi = ge(sh.hi) >= 0 ? sh.hi
                                     : bisect_last_true([&](double s) { return ge(s) >= 0; }, sh.lo, sh.hi);
    if (lo > hi) return none;

    auto f = [&](double s) {
        const auto g = gains_at(obj, I, s);
        return log_nash(theta, g.first, g.second, cfg.gain_floor);
    };
    auto finish = [&](double s) {
        const auto g = gains_at(obj, I, s);
        BilateralSolution r;
        r.deal = positive_product(theta, g.first, g.second);
        r.investment = I;
        r.share = s;
        r.gain_i = g.first;
        r.gain_e = g.second;
        r.log_value = r.deal ? log_nash(theta, g.first, g.second, cfg.gain_floor)
                             : -std::numeric_limits<double>::infinity();
        return r;
    };

    if (theta == 0.0) return finish(lo);
    if (theta == 1.0) return finish(hi);
    if (hi - lo <= 0) return finish(lo);

    // Grid bracket.
    const int G = grid_points;
    int kbest = 0;
    double fbest = -std::numeric_limits<double>::infinity();
    auto xk = [&](int k) { return k == G - 1 ? hi : lo + (hi - lo) * k / (G - 1); };
    for (int k = 0; k < G; ++k) {
        const double v = f(xk(k));
        if (v > fbest) {
            fbest = v;
            kbest = k;
        }
    }
    const double a = xk(std::max(kbest - 1, 0));
    const double b = xk(std::min(kbest + 1, G - 1));

    // Exact derivative of the log objective. Bisection on its sign reaches
    // full precision where golden section stalls on the flat top.
    auto df = [&](double s) {
        const auto g = obj(Dual(I), Dual::variable(s));
        double d = 0;
        if (g.first.v > cfg.gain_floor) d += theta * g.first.d / g.first.v;
        if (g.second.v > cfg.gain_floor) d += (1 - theta) * g.second.d / g.second.v;
        return d;
    };
    double best;
    if (b > a && df(a) > 0 && df(b) < 0) {
        best = bisect_sign_change(df, a, b);
    } else {
        best = golden_section_max(f, a, b, 1e-12 * (hi - lo), 200).x;
    }
    if (fbest > f(best)) best = xk(kbest);
    return finish(best);
}

} // namespace detail

// Maximizes gain_i^theta * gain_e^(1-theta) over shares in `shares` and
// investments in `inv`. The objective maps (I, s) to (gain_i, gain_e) and
// must be generic over double and Dual.
template <class Obj>
BilateralSolution maximize_nash_product(Obj&& objective, double theta, Interval shares,
                                        const InvestmentSet& inv, const SolverConfig& cfg) {
    cfg.validate();
    if (!(theta >= 0 && theta <= 1)) throw InvalidParameter("theta must lie in [0, 1]");
    BilateralSolution best;
    auto consider = [&](const BilateralSolution& c) {
        // Ties go to the larger investment.
        if (!c.deal) return;
        if (!best.deal || c.log_value > best.log_value ||
            (c.log_value == best.log_value && c.investment > best.investment))
            best = c;
    };

    std::vector<double> cands = inv.candidates;
    std::sort(cands.begin(), cands.end());
    for (double I : cands) {
        if (I <= 0) continue;
        consider(detail::best_share(objective, I, theta, shares, cfg, cfg.grid_points));
    }

    if (inv.range && inv.range->hi > 0) {
        const double lo = std::max(inv.range->lo, 0.0), hi = inv.range->hi;
        const int inner = std::min(cfg.grid_points, 101);
        auto value = [&](double I) {
            if (I <= 0) return -std::numeric_limits<double>::infinity();
            return detail::best_share(objective, I, theta, shares, cfg, inner).log_value;
        };
        const int G = cfg.investment_grid;
        int kbest = -1;
        double vbest = -std::numeric_limits<double>::infinity();
        auto xk = [&](int k) { return k == G - 1 ? hi : lo + (hi - lo) * k / (G - 1); };
        for (int k = 0; k < G; ++k) {
            const double v = value(xk(k));
            if (v >= vbest && v > -std::numeric_limits<double>::infinity()) {
                vbest = v;
                kbest = k;
            }
        }
        if (kbest >= 0) {
            std::vector<double> pts{xk(kbest)};
            if (hi > lo) {
                const double a = xk(std::max(kbest - 1, 0)), b = xk(std::min(kbest + 1, G - 1));
                pts.push_back(golden_section_max(value, a, b, 1e-12 * (1 + hi), 200).x);
            }
            pts.push_back(hi);
            for (double I : pts) {
                if (I <= 0) continue;
                consider(detail::best_share(objective, I, theta, shares, cfg, cfg.grid_points));
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Nash-in-Nash best-response iteration.

struct StartPoint {
    std::vector<double> investments;
    std::vector<double> shares;
};

struct NumericDiagnostics {
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

struct BilateralObjective {
    const Scenario* sc;
    int i;
    std::array<double, 2> I_fixed;
    std::array<double, 2> s_fixed;
    double rho_e;
    std::array<double, 2> rho_i;
    double d_i_u;
    double d_e_u;

    template <class T>
    std::pair<T, T> operator()(T Ii, T si) const {
        std::array<T, 2> I{T(I_fixed[0]), T(I_fixed[1])};
        std::array<T, 2> s{T(s_fixed[0]), T(s_fixed[1])};
        I[i] = Ii;
        s[i] = si;
        const auto r = expected_kernel(*sc, I, s, rho_e, rho_i);
        return {r.inv[i] - T(d_i_u), r.ent - T(d_e_u)};
    }
};

inline BilateralObjective make_objective(const Scenario& sc, const RiskProfile& risk, int i,
                                         const std::array<double, 2>& I,
                                         const std::array<double, 2>& s) {
    BilateralObjective o{};
    o.sc = &sc;
    o.i = i;
    o.I_fixed = I;
    o.s_fixed = s;
    o.rho_e = risk.rho_e();
    for (int j = 0; j < sc.n_investors(); ++j) o.rho_i[j] = risk.rho_investor(static_cast<std::size_t>(j));
    o.d_i_u = crra(sc.endowment(i), o.rho_i[i]);
    OtherDeal other{};
    if (sc.n_investors() == 2) other = {I[1 - i], s[1 - i]};
    o.d_e_u = entrepreneur_disagreement_utility(sc, o.rho_e, i, other);
    return o;
}

enum class InvestmentMode { AllOrNothing, Continuous };

inline InvestmentSet investment_set(const Scenario& sc, int i, const std::array<double, 2>& I,
                                    InvestmentMode mode) {
    const double e = sc.params().e();
    const double endow = sc.endowment(i);
    double cap = endow;
    if (sc.n_investors() == 2) cap = std::min(endow, e - I[1 - i]);
    if (cap < 0) cap = 0;
    if (sc.institution() == Institution::TIL || mode == InvestmentMode::Continuous)
        return InvestmentSet::interval(0.0, cap);
    if (cap < endow * (1 - 1e-12)) return InvestmentSet::finite({});
    return InvestmentSet::finite({endow});
}

inline std::string format_iterate(int it, const std::array<double, 2>& I,
                                  const std::array<double, 2>& s, double residual) {
    std::ostringstream os;
    os.precision(17);
    os << "iter " << it << ": I=(" << I[0] << ", " << I[1] << ") s=(" << s[0] << ", " << s[1]
       << ") residual=" << residual;
    return os.str();
}

inline EquilibriumOutcome finish_outcome(const Scenario& sc, std::vector<double> I,
                                         std::vector<double> s) {
    for (std::size_t j = 0; j < I.size(); ++j) {
        if (I[j] <= 0) {
            I[j] = 0;
            s[j] = 0;
        }
        s[j] = std::clamp(s[j], 0.0, 1.0);
    }
    const auto pr = expected_profits(sc, I, s);
    return EquilibriumOutcome(std::move(I), std::move(s), pr.entrepreneur, pr.investors, Regime::Numeric);
}

inline EquilibriumOutcome solve_bilateral_si(const Scenario& sc, const RiskProfile& risk,
                                             const SolverConfig& cfg, InvestmentMode mode) {
    const std::array<double, 2> I0{0.0, 0.0}, s0{0.0, 0.0};
    auto obj = make_objective(sc, risk, 0, I0, s0);
    const auto inv = investment_set(sc, 0, I0, mode);
    const auto r = maximize_nash_product(obj, sc.powers()[0], Interval{0.0, 1.0}, inv, cfg);
    if (!r.deal) return finish_outcome(sc, {0.0}, {0.0});
    return finish_outcome(sc, {r.investment}, {r.share});
}

inline EquilibriumOutcome solve_two_investor(const Scenario& sc, const RiskProfile& risk,
                                             const SolverConfig& cfg, InvestmentMode mode,
                                             const std::optional<StartPoint>& start,
                                             NumericDiagnostics* diag) {
    std::array<double, 2> I{}, s{0.0, 0.0};
    const double e = sc.params().e();
    if (start) {
        if (start->investments.size() != 2 || start->shares.size() != 2)
            throw InvalidParameter("start point needs two investments and two shares");
        check_allocation(sc, start->investments, start->shares);
        I = {start->investments[0], start->investments[1]};
        s = {start->shares[0], start->shares[1]};
    } else if (sc.institution() == Institution::TIL) {
        I = {e / 2, e / 2};
    } else {
        I = {sc.endowment(0), sc.endowment(1)};
    }

    std::deque<std::string> trace;
    std::deque<double> residuals;
    int since_investment_change = 0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        double residual = 0;
        bool moved = false;
        for (int i = 0; i < 2; ++i) {
            const int j = 1 - i;
            auto obj = make_objective(sc, risk, i, I, s);
            const auto inv = investment_set(sc, i, I, mode);
            auto br = maximize_nash_product(obj, sc.powers()[i], Interval{0.0, 1.0 - s[j]}, inv, cfg);
            // Investing must beat abstaining, where the entrepreneur keeps the
            // counterpart deal. Binds only when d_e^{-i} understates that
            // position, i.e. under JointDisagreement.
            if (br.deal) {
                const auto g0 = obj(0.0, 0.0);
                const double abstain = g0.first + g0.second;
                if (br.gain_i + br.gain_e < abstain - 1e-12 * (1 + std::abs(abstain))) br.deal = false;
            }
            const double newI = br.deal ? br.investment : 0.0;
            const double news = br.deal ? br.share : 0.0;
            if (std::abs(newI - I[i]) > 1e-12 * (1 + e)) {
                residual = std::max(residual, std::abs(news - s[i]) + 1.0);
                I[i] = newI;
                s[i] = news;
                moved = true;
            } else {
                I[i] = newI;
                residual = std::max(residual, std::abs(news - s[i]));
                s[i] += cfg.damping * (news - s[i]);
            }
            if (I[i] <= 0) s[i] = 0;
            s[i] = std::clamp(s[i], 0.0, std::max(0.0, 1.0 - s[j]));
        }
        trace.push_back(format_iterate(it, I, s, residual));
        if (trace.size() > 10) trace.pop_front();
        if (diag) {
            diag->iterations = it;
            diag->residual = residual;
        }
        if (!moved && residual < cfg.share_tol)
            return finish_outcome(sc, {I[0], I[1]}, {s[0], s[1]});

        since_investment_change = moved ? 0 : since_investment_change + 1;
        residuals.push_back(residual);
        if (residuals.size() > 100) residuals.pop_front();
        // Fail loudly when the share map is not contracting.
        if (since_investment_change >= 100 && residuals.size() == 100 &&
            residuals.back() >= residuals.front() && residuals.back() > 100 * cfg.share_tol) {
            throw NumericError("best-response iteration is not contracting (residual " +
                               std::to_string(residuals.front()) + " -> " +
                               std::to_string(residuals.back()) + " over 100 iterations)");
        }
    }
    throw MaxIterationsExceeded("best-response iteration hit max_iterations = " +
                                    std::to_string(cfg.max_iterations),
                                std::vector<std::string>(trace.begin(), trace.end()));
}

} // namespace detail

// Damped Gauss-Seidel best-response iteration for TI and TIL.
inline EquilibriumOutcome solve_nash_in_nash(const Scenario& sc, const RiskProfile& risk,
                                             const SolverConfig& cfg = {},
                                             const std::optional<StartPoint>& start = std::nullopt,
                                             NumericDiagnostics* diag = nullptr) {
    cfg.validate();
    if (sc.n_investors() != 2) throw InvalidParameter("Nash-in-Nash needs two investors (TI or TIL)");
    return detail::solve_two_investor(sc, risk, cfg, detail::InvestmentMode::AllOrNothing, start, diag);
}

// Any institution; uses the scenario's own risk profile.
inline EquilibriumOutcome solve_numeric(const Scenario& sc, const SolverConfig& cfg = {},
                                        const std::optional<StartPoint>& start = std::nullopt,
                                        NumericDiagnostics* diag = nullptr) {
    cfg.validate();
    if (sc.n_investors() == 1)
        return detail::solve_bilateral_si(sc, sc.risk(), cfg, detail::InvestmentMode::AllOrNothing);
    return solve_nash_in_nash(sc, sc.risk(), cfg, start, diag);
}

// Utility gains u(pi) - u(d) with u(x) = x^(1 - rho). With full_investment
// each investor's candidate set is its endowment; otherwise any amount in
// [0, endowment] is considered.
inline EquilibriumOutcome solve_risk_averse(const Scenario& sc, const RiskProfile& risk,
                                            const SolverConfig& cfg = {}, bool full_investment = true) {
    cfg.validate();
    if (sc.institution() == Institution::TIL)
        throw InvalidParameter("risk-averse solver covers SI and TI");
    const auto mode = full_investment ? detail::InvestmentMode::AllOrNothing
                                      : detail::InvestmentMode::Continuous;
    if (sc.n_investors() == 1) return detail::solve_bilateral_si(sc, risk, cfg, mode);
    return detail::solve_two_investor(sc, risk, cfg, mode, std::nullopt, nullptr);
}

} // namespace sbarg
