#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sbarg/closed_form.hpp"
#include "sbarg/payoffs.hpp"
#include "support.hpp"

using namespace sbarg;

namespace {

Scenario poor(Institution inst, Contract c) { return make_paper_scenario(Arm::PoorEnt, inst, c); }
Scenario rich(Institution inst, Contract c) { return make_paper_scenario(Arm::RichEnt, inst, c); }

// Random feasible allocation for a scenario; investments may be zero.
std::pair<std::vector<double>, std::vector<double>> random_allocation(std::mt19937_64& rng, const Scenario& sc) {
    const int n = sc.n_investors();
    const double e = sc.params().e();
    std::vector<double> I(n), s(n);
    double room = e, share_room = 1.0;
    for (int j = 0; j < n; ++j) {
        const double cap = std::min(sc.endowment(j), room);
        I[j] = test::uniform(rng, 0, 1) < 0.1 ? 0.0 : test::uniform(rng, 0, cap);
        room -= I[j];
        s[j] = I[j] > 0 ? test::uniform(rng, 0, share_room) : 0.0;
        share_room -= s[j];
    }
    return {I, s};
}

} // namespace

TEST(RealizedPayoffs, CommonSingleInvestorHighState) {
    const auto r = realized_payoffs(poor(Institution::SI, Contract::Common), {200}, {0.65}, State::High);
    EXPECT_NEAR(r.investors[0], 1430.0, 1e-9);
    EXPECT_NEAR(r.entrepreneur, 770.0, 1e-9);
}

TEST(RealizedPayoffs, CommonSingleInvestorLowState) {
    const auto r = realized_payoffs(poor(Institution::SI, Contract::Common), {200}, {0.65}, State::Low);
    EXPECT_NEAR(r.investors[0], 130.0, 1e-9);
    EXPECT_NEAR(r.entrepreneur, 70.0, 1e-9);
}

TEST(RealizedPayoffs, PreferredLowStateRepaysInvestment) {
    for (double s : {0.0, 0.2, 0.65, 1.0}) {
        const auto r = realized_payoffs(poor(Institution::SI, Contract::Preferred), {200}, {s}, State::Low);
        EXPECT_EQ(r.investors[0], 200.0);
        EXPECT_EQ(r.entrepreneur, 0.0);
    }
}

TEST(RealizedPayoffs, PreferredHighStateFloorsAtInvestment) {
    // V = 2200; 0.05 V = 110 < 200.
    const auto r = realized_payoffs(poor(Institution::SI, Contract::Preferred), {200}, {0.05}, State::High);
    EXPECT_EQ(r.investors[0], 200.0);
    EXPECT_EQ(r.entrepreneur, 2000.0);
}

TEST(RealizedPayoffs, PreferredCrossCompensationOffEquilibrium) {
    // V = 11 * 20 = 220. Investor 1: 220 * 0.97 - (10 - 220 * 0.03)^+ = 213.4 - 3.4.
    const MarketParams mp(200, 11, 1, 0.2, 0);
    const Scenario sc(Institution::TI, Contract::Preferred, mp, BargainingPowers{0.5, 0.5});
    const auto r = realized_payoffs(sc, {10, 10}, {0.97, 0.0}, State::High);
    EXPECT_NEAR(r.investors[0] - (100 - 10), 210.0, 1e-9);
    EXPECT_NEAR(r.investors[1] - (100 - 10), 10.0, 1e-9);
    EXPECT_NEAR(r.entrepreneur, 0.0, 1e-9);
}

TEST(RealizedPayoffs, RejectsInfeasibleAllocations) {
    const auto si = poor(Institution::SI, Contract::Common);
    const auto ti = poor(Institution::TI, Contract::Common);
    EXPECT_THROW(realized_payoffs(si, {201}, {0.5}, State::High), InfeasibleAllocation);
    EXPECT_THROW(realized_payoffs(si, {200}, {1.5}, State::High), InfeasibleAllocation);
    EXPECT_THROW(realized_payoffs(si, {0}, {0.5}, State::High), InfeasibleAllocation);
    EXPECT_THROW(realized_payoffs(ti, {100, 100}, {0.6, 0.6}, State::High), InfeasibleAllocation);
    EXPECT_THROW(realized_payoffs(ti, {100}, {0.6}, State::High), InfeasibleAllocation);
    const auto til = poor(Institution::TIL, Contract::Common);
    EXPECT_THROW(realized_payoffs(til, {150, 150}, {0.1, 0.1}, State::High), InfeasibleAllocation);
}

TEST(StateOutcome, ValueIsMultipleOfTotalInvestment) {
    const auto sc = poor(Institution::TI, Contract::Common);
    EXPECT_EQ(state_outcome(sc, {100, 50}, State::High).value, 11.0 * 150);
    EXPECT_EQ(state_outcome(sc, {100, 50}, State::Low).value, 150.0);
}

TEST(ExpectedProfits, SingleInvestorAtTwoThirds) {
    const auto pr = expected_profits(poor(Institution::SI, Contract::Common), {200}, {2.0 / 3.0});
    EXPECT_NEAR(pr.entrepreneur, 200.0, 1e-9);
    EXPECT_NEAR(pr.investors[0], 400.0, 1e-9);
}

TEST(ExpectedProfits, TwoInvestorsCommon) {
    const auto pr = expected_profits(poor(Institution::TI, Contract::Common), {100, 100}, {0.2, 0.2});
    EXPECT_NEAR(pr.entrepreneur, 360.0, 1e-9);
    EXPECT_NEAR(pr.investors[0], 120.0, 1e-9);
    EXPECT_NEAR(pr.investors[1], 120.0, 1e-9);
}

TEST(ExpectedProfits, NoInvestmentPaysOutsideOptions) {
    for (auto inst : {Institution::SI, Institution::TI, Institution::TIL}) {
        const auto sc = rich(inst, Contract::Common);
        const std::vector<double> zero(static_cast<std::size_t>(sc.n_investors()), 0.0);
        const auto pr = expected_profits(sc, zero, zero);
        EXPECT_EQ(pr.entrepreneur, 160.0);
        for (int j = 0; j < sc.n_investors(); ++j) EXPECT_EQ(pr.investors[j], sc.endowment(j));
    }
}

TEST(ExpectedUtilities, RiskNeutralEqualsProfits) {
    const auto sc = rich(Institution::TI, Contract::Preferred);
    const auto u = expected_utilities(sc, RiskProfile{}, {100, 100}, {0.2, 0.1});
    const auto pr = expected_profits(sc, {100, 100}, {0.2, 0.1});
    EXPECT_EQ(u.entrepreneur, pr.entrepreneur);
    EXPECT_EQ(u.investors, pr.investors);
}

TEST(ExpectedUtilities, CrraEntrepreneurDirectEvaluation) {
    const auto u = expected_utilities(poor(Institution::SI, Contract::Common), RiskProfile(0.25, 0.0), {200}, {0.5});
    EXPECT_NEAR(u.entrepreneur, 0.2 * std::pow(1100.0, 0.75) + 0.8 * std::pow(100.0, 0.75), 1e-9);
    EXPECT_NEAR(u.investors[0], 0.2 * 1100 + 0.8 * 100, 1e-9);
}

TEST(ExpectedUtilities, ZeroPayoffInsideCrraDomain) {
    // Entrepreneur keeps nothing; x^(1 - rho) at 0 is 0.
    const auto u = expected_utilities(poor(Institution::SI, Contract::Common), RiskProfile(0.25, 0.25), {200}, {1.0});
    EXPECT_EQ(u.entrepreneur, 0.0);
    EXPECT_NEAR(u.investors[0], 0.2 * std::pow(2200.0, 0.75) + 0.8 * std::pow(200.0, 0.75), 1e-9);
}

TEST(DisagreementPoints, StandardBeliefAgainstOtherDeal) {
    const auto dp = disagreement_points(poor(Institution::TI, Contract::Common), OtherDeal{100, 0.2});
    EXPECT_NEAR(dp.d_e_vs[0], 240.0, 1e-9);
    EXPECT_NEAR(dp.d_e_vs[1], 240.0, 1e-9);
    EXPECT_EQ(dp.d_i, (std::vector<double>{100, 100}));
}

TEST(DisagreementPoints, StandardBeliefProratesOutsideOption) {
    // 160 * (200 - 100) / 200 + 240.
    const auto dp = disagreement_points(rich(Institution::TI, Contract::Common), OtherDeal{100, 0.2});
    EXPECT_NEAR(dp.d_e_vs[0], 320.0, 1e-9);
    const auto forfeit = rich(Institution::TI, Contract::Common).with_proration(ProrationRule::Forfeit);
    EXPECT_NEAR(disagreement_points(forfeit, OtherDeal{100, 0.2}).d_e_vs[0], 240.0, 1e-9);
}

TEST(DisagreementPoints, JointBeliefUsesOutsideOption) {
    const auto sc = rich(Institution::TI, Contract::Common).with_belief(BeliefModel::JointDisagreement);
    const auto dp = disagreement_points(sc, OtherDeal{100, 0.2});
    EXPECT_EQ(dp.d_e_vs, (std::vector<double>{160, 160}));
}

TEST(DisagreementPoints, NoOtherDeal) {
    const auto dp = disagreement_points(rich(Institution::TI, Contract::Common), OtherDeal{0, 0});
    EXPECT_EQ(dp.d_e_vs, (std::vector<double>{160, 160}));
    const auto dp2 = disagreement_points(rich(Institution::TI, Contract::Common), std::nullopt);
    EXPECT_EQ(dp2.d_e_vs, (std::vector<double>{160, 160}));
}

TEST(DisagreementPoints, PreferredUsesFlooredHighStatePayoff) {
    // Other deal (100, 0.05): V_H = 1100, investor takes max(55, 100) = 100,
    // entrepreneur 1000; low state 0. d = 0.2 * 1000 = 200.
    const auto dp = disagreement_points(poor(Institution::TI, Contract::Preferred), OtherDeal{100, 0.05});
    EXPECT_NEAR(dp.d_e_vs[0], 200.0, 1e-9);
}

TEST(DisagreementPoints, PerInvestorAgainstAllocation) {
    const auto dp = disagreement_points(poor(Institution::TI, Contract::Common), {100, 100}, {0.2, 0.3});
    EXPECT_NEAR(dp.d_e_vs[0], 3 * 100 * 0.7, 1e-9);
    EXPECT_NEAR(dp.d_e_vs[1], 3 * 100 * 0.8, 1e-9);
}

TEST(RiskExposure, FourCells) {
    using P = std::pair<ExposureDomain, ExposureDomain>;
    const auto G = ExposureDomain::Gain, GL = ExposureDomain::GainOrLoss;
    EXPECT_EQ(risk_exposure_domains(poor(Institution::SI, Contract::Common)), P(G, GL));
    EXPECT_EQ(risk_exposure_domains(rich(Institution::SI, Contract::Preferred)), P(GL, G));
    EXPECT_EQ(risk_exposure_domains(poor(Institution::TI, Contract::Preferred)), P(G, G));
    EXPECT_EQ(risk_exposure_domains(rich(Institution::TI, Contract::Common)), P(GL, GL));
}

TEST(PayoffProperties, BudgetBalance) {
    std::mt19937_64 rng(21);
    int floored = 0;
    for (int k = 0; k < 3000; ++k) {
        const auto c = k % 2 ? Contract::Preferred : Contract::Common;
        const auto inst = static_cast<Institution>(k % 3);
        const auto mp = test::random_params(rng, c);
        const Scenario sc(inst, c, mp,
                          BargainingPowers(std::vector<double>(static_cast<std::size_t>(investor_count(inst)), 0.5)));
        const auto [I, s] = random_allocation(rng, sc);
        double sum_i = 0, idle = 0;
        for (int j = 0; j < sc.n_investors(); ++j) {
            sum_i += I[j];
            idle += sc.endowment(j) - I[j];
        }
        for (State st : {State::High, State::Low}) {
            const auto r = realized_payoffs(sc, I, s, st);
            double total = r.entrepreneur;
            for (double x : r.investors) total += x;
            const double expect = state_alpha(mp, st) * sum_i + idle + (sum_i == 0 ? mp.d_e() : 0.0);
            if (c == Contract::Preferred && r.entrepreneur == 0 && sum_i > 0) {
                // Residual floored at zero: investors may be owed more than V.
                EXPECT_GE(total, expect - 1e-9 * (1 + expect));
                ++floored;
            } else {
                EXPECT_NEAR(total, expect, 1e-9 * (1 + expect));
            }
        }
    }
    EXPECT_GT(floored, 0);
}

TEST(PayoffProperties, ExpectedIsProbabilityWeightedRealized) {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 3000; ++k) {
        const auto c = k % 2 ? Contract::Preferred : Contract::Common;
        const auto inst = static_cast<Institution>(k % 3);
        const auto mp = test::random_params(rng, c);
        const Scenario sc(inst, c, mp,
                          BargainingPowers(std::vector<double>(static_cast<std::size_t>(investor_count(inst)), 0.5)));
        const auto [I, s] = random_allocation(rng, sc);
        const auto hi = realized_payoffs(sc, I, s, State::High);
        const auto lo = realized_payoffs(sc, I, s, State::Low);
        const auto ex = expected_profits(sc, I, s);
        const double p = mp.p();
        const double ref_e = p * hi.entrepreneur + (1 - p) * lo.entrepreneur;
        EXPECT_NEAR(ex.entrepreneur, ref_e, 1e-12 * (1 + std::abs(ref_e)));
        for (int j = 0; j < sc.n_investors(); ++j) {
            const double ref = p * hi.investors[j] + (1 - p) * lo.investors[j];
            EXPECT_NEAR(ex.investors[j], ref, 1e-12 * (1 + std::abs(ref)));
        }
    }
}

TEST(PayoffProperties, PreferredLowStateIsInvestmentPlusIdleCapital) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 2000; ++k) {
        const auto inst = k % 2 ? Institution::TI : Institution::SI;
        const auto mp = test::random_params(rng, Contract::Preferred);
        const Scenario sc(inst, Contract::Preferred, mp,
                          BargainingPowers(std::vector<double>(static_cast<std::size_t>(investor_count(inst)), 0.5)));
        const auto [I, s] = random_allocation(rng, sc);
        const auto lo = realized_payoffs(sc, I, s, State::Low);
        for (int j = 0; j < sc.n_investors(); ++j) EXPECT_NEAR(lo.investors[j], sc.endowment(j), 1e-12 * sc.endowment(j));
    }
}

TEST(PayoffProperties, PreferredEquilibriumGuardOnClosedForms) {
    std::mt19937_64 rng(24);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
        const auto mp = test::random_params(rng, Contract::Preferred);
        const auto set = solve_ti(mp, {test::random_theta(rng), test::random_theta(rng)}, Contract::Preferred,
                                  k % 2 ? BeliefModel::Standard : BeliefModel::JointDisagreement);
        for (const auto& o : set.outcomes) {
            const auto& I = o.investments();
            const auto& s = o.shares();
            const double tot = I[0] + I[1];
            EXPECT_GE(mp.alpha_h() * tot * (1 - s[0]), I[1] - 1e-9);
            EXPECT_GE(mp.alpha_h() * tot * (1 - s[1]), I[0] - 1e-9);
            ++checked;
        }
    }
    EXPECT_GE(checked, 500);
}
