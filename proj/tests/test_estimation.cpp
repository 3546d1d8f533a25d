#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "sbarg/estimation.hpp"
#include "support.hpp"

using namespace sbarg;

namespace {

constexpr Arm kArms[] = {Arm::PoorEnt, Arm::RichEnt};
constexpr Contract kContracts[] = {Contract::Common, Contract::Preferred};

// One exact observation per cell at the given power and belief.
std::vector<ShareObservation> exact_obs(Institution inst, double theta, BeliefModel belief) {
    std::vector<ShareObservation> out;
    for (Arm a : kArms)
        for (Contract c : kContracts)
            out.push_back({inst, c, a, predict_share(make_paper_scenario(a, inst, c), {theta}, belief)});
    return out;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

} // namespace

TEST(PredictShare, BenchmarkCell) {
    const auto sc = make_paper_scenario(Arm::PoorEnt, Institution::SI, Contract::Common);
    EXPECT_NEAR(predict_share(sc, {0.5}, BeliefModel::Standard), 1.0 / 3.0, 1e-12);
}

TEST(PredictShare, SingleInvestorCommonFormula) {
    const auto sc = make_paper_scenario(Arm::PoorEnt, Institution::SI, Contract::Common);
    const double mu = sc.params().mu_alpha();
    EXPECT_NEAR(predict_share(sc, {0.355}, BeliefModel::Standard), (mu - 1) * (1 - 0.355) / mu, 1e-12);
}

TEST(PredictShare, TwoInvestorsKeepPositiveShareAtFullInvestorPower) {
    const auto sc = make_paper_scenario(Arm::PoorEnt, Institution::TI, Contract::Common);
    EXPECT_GT(predict_share(sc, {1.0}, BeliefModel::Standard), 0.0);
    EXPECT_THROW(predict_share(make_paper_scenario(Arm::PoorEnt, Institution::TIL, Contract::Common), {0.5},
                               BeliefModel::Standard),
                 InvalidParameter);
}

TEST(FitTheta, RecoversKnownPower) {
    auto obs = exact_obs(Institution::SI, 0.42, BeliefModel::Standard);
    const auto ti = exact_obs(Institution::TI, 0.42, BeliefModel::Standard);
    obs.insert(obs.end(), ti.begin(), ti.end());
    const auto f = fit_theta(obs, ModelTag::RevisedI);
    ASSERT_EQ(f.theta_hat.size(), 1u);
    EXPECT_NEAR(f.theta_hat[0], 0.42, 1e-4);
    EXPECT_LE(f.mse, 1e-10);
    EXPECT_EQ(f.residuals.size(), obs.size());
}

TEST(FitTheta, OriginalIsExactAtEqualPowers) {
    const auto f = fit_theta(exact_obs(Institution::SI, 0.5, BeliefModel::Standard), ModelTag::Original);
    EXPECT_EQ(f.theta_hat, std::vector<double>{0.5});
    EXPECT_LE(f.mse, 1e-20);
}

TEST(FitTheta, SharesAboveRangeGoToZeroPower) {
    std::vector<ShareObservation> obs;
    for (Arm a : kArms) obs.push_back({Institution::SI, Contract::Common, a, 1.0});
    const auto f = fit_theta(obs, ModelTag::RevisedI);
    EXPECT_NEAR(f.theta_hat[0], 0.0, 1e-9);
    EXPECT_GT(f.mse, 0.0);
}

TEST(FitTheta, RandomPowerRoundTrip) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 100; ++k) {
        const double t = test::uniform(rng, 0.05, 0.95);
        auto obs = exact_obs(Institution::SI, t, BeliefModel::Standard);
        const auto ti = exact_obs(Institution::TI, t, BeliefModel::Standard);
        obs.insert(obs.end(), ti.begin(), ti.end());
        EXPECT_NEAR(fit_theta(obs, ModelTag::RevisedI).theta_hat[0], t, 1e-3);
        const auto joint = exact_obs(Institution::TI, t, BeliefModel::JointDisagreement);
        EXPECT_NEAR(fit_theta(joint, ModelTag::RevisedII).theta_hat[0], t, 1e-3);
    }
}

TEST(FitTheta, FreePowerNeverWorseThanFixed) {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 50; ++k) {
        std::vector<ShareObservation> obs;
        for (int j = 0; j < 12; ++j)
            obs.push_back({j % 2 ? Institution::TI : Institution::SI, kContracts[(j / 2) % 2], kArms[(j / 4) % 2],
                           test::uniform(rng, 0.1, 0.8), test::uniform(rng, 0.5, 2.0)});
        EXPECT_LE(fit_theta(obs, ModelTag::RevisedI).mse, fit_theta(obs, ModelTag::Original).mse + 1e-15);
    }
}

TEST(FitTheta, NoisyObservationsStayClose) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, 0.05);
    const auto base = exact_obs(Institution::SI, 0.42, BeliefModel::Standard);
    int close = 0;
    constexpr int kTrials = 500;
    for (int trial = 0; trial < kTrials; ++trial) {
        std::vector<ShareObservation> obs;
        for (int j = 0; j < 100; ++j) {
            auto o = base[j % base.size()];
            o.share = std::clamp(o.share + noise(rng), 0.0, 1.0);
            obs.push_back(o);
        }
        if (std::abs(fit_theta(obs, ModelTag::RevisedI).theta_hat[0] - 0.42) <= 0.05) ++close;
    }
    EXPECT_GE(close, 0.95 * kTrials);
}

TEST(FitTheta, SeparatePowersForTwoInvestors) {
    const auto obs = exact_obs(Institution::TI, 0.3, BeliefModel::Standard);
    const auto f = fit_theta(obs, ModelTag::RevisedI, false);
    ASSERT_EQ(f.theta_hat.size(), 2u);
    EXPECT_LE(f.mse, 1e-10);
    EXPECT_THROW(fit_theta(exact_obs(Institution::SI, 0.3, BeliefModel::Standard), ModelTag::RevisedI, false),
                 InvalidParameter);
}

TEST(FitTheta, RejectsEmptyAndInvalid) {
    EXPECT_THROW(fit_theta({}, ModelTag::RevisedI), InvalidParameter);
    EXPECT_THROW(fit_theta({{Institution::SI, Contract::Common, Arm::PoorEnt, 1.5}}, ModelTag::RevisedI),
                 InvalidParameter);
}

TEST(CompareModels, JointBeliefDataFavoursRevisedII) {
    const auto rows = compare_models(exact_obs(Institution::TI, 0.462, BeliefModel::JointDisagreement));
    ASSERT_EQ(rows.size(), 3u);
    const auto& r1 = rows[1];
    const auto& r2 = rows[2];
    EXPECT_EQ(r2.model, ModelTag::RevisedII);
    EXPECT_NEAR(r2.fit.theta_hat[0], 0.462, 1e-4);
    EXPECT_LE(r2.fit.mse, 1e-10);
    EXPECT_LT(r2.fit.mse, r1.fit.mse);
    EXPECT_FALSE(r2.coincides_with_revised_i);
}

TEST(CompareModels, SingleInvestorRevisedRowsCoincide) {
    const auto rows = compare_models(exact_obs(Institution::SI, 0.37, BeliefModel::Standard));
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) EXPECT_EQ(r.institution, Institution::SI);
    EXPECT_EQ(rows[1].fit.theta_hat, rows[2].fit.theta_hat);
    EXPECT_EQ(rows[1].fit.mse, rows[2].fit.mse);
    EXPECT_TRUE(rows[2].coincides_with_revised_i);
    EXPECT_FALSE(rows[1].coincides_with_revised_i);
}

TEST(CompareModels, BothInstitutionsGiveSixRows) {
    auto obs = exact_obs(Institution::SI, 0.4, BeliefModel::Standard);
    const auto ti = exact_obs(Institution::TI, 0.4, BeliefModel::Standard);
    obs.insert(obs.end(), ti.begin(), ti.end());
    EXPECT_EQ(compare_models(obs).size(), 6u);
}

TEST(ObservationsCsv, ReadsFixture) {
    const auto obs = read_observations_csv(std::string(SBARG_DATA_DIR) + "/estimation_synthetic.csv");
    ASSERT_FALSE(obs.empty());
    std::vector<ShareObservation> si;
    for (const auto& o : obs)
        if (o.institution == Institution::SI) si.push_back(o);
    EXPECT_NEAR(fit_theta(si, ModelTag::RevisedI).theta_hat[0], 0.42, 1e-3);
}

TEST(ObservationsCsv, OptionalWeightColumn) {
    const auto p = write_temp("sbarg_obs_w.csv", "institution,contract,arm,share,weight\nSI,Common,PoorEnt,0.3,2\n");
    const auto obs = read_observations_csv(p.string());
    ASSERT_EQ(obs.size(), 1u);
    EXPECT_EQ(obs[0].weight, 2.0);
}

TEST(ObservationsCsv, ErrorsNameTheLine) {
    auto expect_line = [](const std::string& body, const std::string& fragment) {
        const auto p = write_temp("sbarg_obs_bad.csv", body);
        try {
            read_observations_csv(p.string());
            ADD_FAILURE() << "expected DataError for " << body;
        } catch (const DataError& ex) {
            EXPECT_NE(std::string(ex.what()).find(fragment), std::string::npos) << ex.what();
        }
    };
    expect_line("institution,contract,arm,share\nSI,Common,PoorEnt,0.3\nXX,Common,PoorEnt,0.3\n", "line 3");
    expect_line("institution,contract,arm,share\nSI,Common,PoorEnt,abc\n", "line 2");
    expect_line("institution,contract,arm,share\nSI,Common,PoorEnt\n", "line 2");
    expect_line("institution,contract,arm,share\nSI,Common,PoorEnt,1.7\n", "line 2");
    EXPECT_THROW(read_observations_csv("/nonexistent/sbarg.csv"), DataError);
    EXPECT_THROW(read_observations_csv(write_temp("sbarg_obs_nohdr.csv", "a,b\n1,2\n").string()), DataError);
}

TEST(ModelTag, Parsing) {
    EXPECT_EQ(parse_model_tag("revised-ii"), ModelTag::RevisedII);
    EXPECT_EQ(parse_model_tag("Original"), ModelTag::Original);
    EXPECT_THROW(parse_model_tag("bogus"), InvalidParameter);
}
