#include "rse/mm_estimator.hpp"
#include "rse/sim.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace rse;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

TEST(Likelihood, StandardNormalAtMean) {
    EXPECT_NEAR(likelihood(Vec::Zero(2), Mat::Identity(2, 2)), 1.0 / (2 * kPi), 1e-15);
}

TEST(Likelihood, ScalarOneSigma) {
    EXPECT_NEAR(likelihood(Vec::Ones(1), Mat::Identity(1, 1)), std::exp(-0.5) / std::sqrt(2 * kPi), 1e-15);
}

TEST(Likelihood, RankDeficientUsesPseudoDeterminant) {
    const Mat S = (Mat(2, 2) << 1, 0, 0, 0).finished();
    const Vec r = (Vec(2) << 1, 0).finished();
    EXPECT_NEAR(likelihood(r, S), std::exp(-0.5) / std::sqrt(2 * kPi), 1e-15);
    EXPECT_NEAR(log_likelihood(r, S), -0.5 - 0.5 * std::log(2 * kPi), 1e-14);
}

TEST(Likelihood, ZeroCovarianceWithResidualVanishes) {
    EXPECT_EQ(log_likelihood(Vec::Ones(2), Mat::Zero(2, 2)), kNegInf);
}

TEST(UpdateProbabilities, EqualLikelihoodsLeaveMuUnchanged) {
    const Vec mu = (Vec(3) << 0.2, 0.3, 0.5).finished();
    const ProbabilityUpdate up = update_probabilities(mu, Vec::Constant(3, -4.2), 1e-6);
    EXPECT_LT((up.mu - mu).norm(), 1e-15);
    EXPECT_FALSE(up.all_zero);
}

TEST(UpdateProbabilities, FloorActivates) {
    const Vec mu = Vec::Constant(2, 0.5);
    const Vec ll = (Vec(2) << 0.0, kNegInf).finished();
    const ProbabilityUpdate up = update_probabilities(mu, ll, 1e-6);
    const double c = 1.0 / (0.5 + 1e-6);
    EXPECT_NEAR(up.mu(0), 0.5 * c, 1e-15);
    EXPECT_NEAR(up.mu(1), 1e-6 * c, 1e-15);
}

TEST(UpdateProbabilities, AllVanishingIsReported) {
    const Vec mu = Vec::Constant(2, 0.5);
    const ProbabilityUpdate up = update_probabilities(mu, Vec::Constant(2, kNegInf), 1e-6);
    EXPECT_TRUE(up.all_zero);
    EXPECT_EQ(up.mu, mu);
}

TEST(UpdateProbabilities, FloorBoundHoldsOnRandomSequences) {
    Rng rng(21);
    const double eps = 1e-6;
    for (int trial = 0; trial < 200; ++trial) {
        const int N = 2 + trial % 6;
        Vec mu = Vec::Constant(N, 1.0 / N);
        for (int k = 0; k < 50; ++k) {
            Vec ll(N);
            for (int j = 0; j < N; ++j) ll(j) = 20.0 * rng.normal();
            double top = eps;
            for (int j = 0; j < N; ++j) top = std::max(top, std::exp(ll(j)) * mu(j));
            mu = update_probabilities(mu, ll, eps).mu;
            EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
            EXPECT_GE(mu.minCoeff(), eps / (N * top) * (1 - 1e-12));
        }
    }
}

TEST(ArgmaxFirst, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax_first((Vec(3) << 0.5, 0.5, 0.0).finished()), 0);
    EXPECT_EQ(argmax_first((Vec(2) << 0.2, 0.8).finished()), 1);
}

namespace {

StaticMMEstimator two_mode_bank() {
    const PlantTopology t = test::unstable_topology();
    return StaticMMEstimator(ModeSet{build_mode(t, AttackSupport::from_signals(t, 0, {0})),
                                     build_mode(t, AttackSupport::from_signals(t, 0, {1}))});
}

}  // namespace

TEST(FusedOutput, FollowsMostLikelyMode) {
    StaticMMEstimator est = two_mode_bank();
    const Vec y = (Vec(2) << 0.3, -0.7).finished();
    est.initialize(Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), y, (Vec(2) << 0.2, 0.8).finished());
    EXPECT_EQ(est.fused().q_hat, 1);
    EXPECT_EQ(est.fused().x, est.filter(1).x);
    est.initialize(Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), y, Vec::Constant(2, 0.5));
    EXPECT_EQ(est.fused().q_hat, 0);
}

TEST(FusedOutput, PermutationInvariance) {
    const PlantTopology t = test::unstable_topology();
    const ModeModel a = build_mode(t, AttackSupport::from_signals(t, 0, {0}));
    const ModeModel b = build_mode(t, AttackSupport::from_signals(t, 0, {1}));
    StaticMMEstimator ab(ModeSet{a, b}), ba(ModeSet{b, a});
    Rng rng(2);
    const Vec y0 = Vec::Zero(2);
    ab.initialize(Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), y0);
    ba.initialize(Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), y0);
    for (int k = 0; k < 50; ++k) {
        const Vec y = test::random_matrix(rng, 2, 1) + Vec::Constant(2, 0.3);
        ab.step(Vec::Zero(1), Vec::Zero(1), y);
        ba.step(Vec::Zero(1), Vec::Zero(1), y);
        EXPECT_NEAR(ab.mu()(0), ba.mu()(1), 1e-12);
        if (std::abs(ab.mu()(0) - ab.mu()(1)) > 1e-9) {
            EXPECT_LT((ab.fused().x - ba.fused().x).norm(), 1e-12);
        }
    }
}

TEST(DetectionReport, NominalModeWithoutAttack) {
    PlantTopology t = test::unstable_topology();
    t.operation_modes[0].A(0, 0) = 0.5;
    const ModeSet modes{build_mode(t, AttackSupport::from_signals(t, 0, {})),
                        build_mode(t, AttackSupport::from_signals(t, 0, {0}))};
    Scenario sc;
    sc.horizon = 400;
    sc.seed = 4;
    sc.mode_schedule = {{0, 0}};
    sc.attack_profiles.assign(1, SignalProfile{});
    sc.x0 = Vec::Zero(2);
    sc.x0_hat = Vec::Zero(2);
    sc.P0 = 1e-4 * Mat::Identity(2, 2);
    SimulationOptions so;
    so.estimator.nominal_mode = 0;
    const Trace tr = simulate(modes, sc, so);
    ASSERT_TRUE(tr.report.has_value());
    EXPECT_FALSE(tr.report->attack_detected);
    EXPECT_EQ(tr.report->top_mode, 0);
}

TEST(WindowRatios, NonOverlappingWindows) {
    std::vector<Vec> ll;
    for (int k = 0; k < 25; ++k) ll.push_back((Vec(2) << 0.0, k < 10 ? 0.0 : -1.0).finished());
    const std::vector<double> r = window_ratios(ll, 0, 1, 10);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0], 1.0, 1e-15);
    EXPECT_NEAR(r[1], std::exp(1.0), 1e-12);
    EXPECT_NEAR(fraction_within(r, 1.05), 0.5, 1e-15);
    EXPECT_EQ(fraction_within({}, 1.05), 0.0);
}
