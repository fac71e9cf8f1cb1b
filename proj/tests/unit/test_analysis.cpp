#include "rse/analysis.hpp"
#include "rse/linalg.hpp"
#include "rse/network.hpp"
#include "rse/sim.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace rse;
using test::has_zero;
using test::make_mode;

namespace {

ModeModel unstable_example() {
    return make_mode("u", (Mat(2, 2) << 1.5, 1, 0, 0.1).finished(), (Mat(2, 2) << 1, 0, 0, 0).finished(),
                     Mat::Identity(2, 2), (Mat(2, 2) << 0, 0, 0, 1).finished());
}

ModeModel two_sensor_example() {
    const Mat I = Mat::Identity(2, 2);
    return make_mode("both", (Mat(2, 2) << 0.1, 1, 0, 1.2).finished(), Mat::Zero(2, 2), I, I);
}

}  // namespace

TEST(StrongDetectability, UnstableExampleHasZeroAtOneTenth) {
    const DetectabilityVerdict v = strong_detectability(unstable_example());
    EXPECT_TRUE(v.strongly_detectable);
    EXPECT_EQ(v.normal_rank, 4);
    ASSERT_EQ(v.invariant_zeros.size(), 1u);
    EXPECT_TRUE(has_zero(v.invariant_zeros, {0.1, 0.0}, 1e-6));
}

TEST(StrongDetectability, BothSensorsAttackedIsNotDetectable) {
    const DetectabilityVerdict v = strong_detectability(two_sensor_example());
    EXPECT_FALSE(v.strongly_detectable);
    EXPECT_TRUE(has_zero(v.invariant_zeros, {0.1, 0.0}, 1e-6));
    EXPECT_TRUE(has_zero(v.invariant_zeros, {1.2, 0.0}, 1e-6));
    EXPECT_NEAR(v.max_zero_modulus, 1.2, 1e-6);
}

TEST(StrongDetectability, RankDeficientPencil) {
    // Two identical attack directions.
    const ModeModel m = make_mode("dup", 0.5 * Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Identity(2, 2),
                                  (Mat(2, 2) << 1, 1, 0, 0).finished());
    const DetectabilityVerdict v = strong_detectability(m);
    EXPECT_FALSE(v.strongly_detectable);
    EXPECT_LT(v.normal_rank, v.full_rank);
    EXPECT_NE(v.reason.find("rank deficient"), std::string::npos);
}

TEST(StrongDetectability, SimilarityInvariance) {
    Rng rng(8);
    for (const ModeModel& base : {unstable_example(), two_sensor_example()}) {
        const Mat T = test::random_matrix(rng, 2, 2) + 3.0 * Mat::Identity(2, 2);
        const Mat Ti = T.inverse();
        ModeModel m = base;
        m.A = T * base.A * Ti;
        m.G = T * base.G;
        m.C = base.C * Ti;
        m.Q = T * base.Q * T.transpose();
        const DetectabilityVerdict a = strong_detectability(base), b = strong_detectability(m);
        EXPECT_EQ(a.strongly_detectable, b.strongly_detectable);
        EXPECT_LT(linalg::spectrum_distance(a.invariant_zeros, b.invariant_zeros), 1e-6);
    }
}

TEST(StrongDetectability, ReportedZerosDropPencilRank) {
    for (const ModeModel& m : {unstable_example(), two_sensor_example()}) {
        const DetectabilityVerdict v = strong_detectability(m);
        for (const Complex& z : v.invariant_zeros) {
            EXPECT_LT(linalg::rank(system_pencil(m, z), 1e-8), v.normal_rank);
        }
    }
}

TEST(StrongDetectability, BenchmarkModesAllDetectable) {
    const Benchmark b = build_benchmark();
    ASSERT_EQ(b.modes.size(), 5u);
    for (const ModeModel& m : b.modes) EXPECT_TRUE(strong_detectability(m).strongly_detectable) << m.label;
}

TEST(MaxCorrectable, Bounds) {
    EXPECT_TRUE(max_correctable(5, 4).all_within);
    EXPECT_FALSE(max_correctable(2, 3).all_within);
    const BoundReport r = max_correctable(ModeSet{unstable_example()});
    EXPECT_TRUE(r.all_within);
    EXPECT_EQ(r.p_star_bound, 2);
    EXPECT_TRUE(strong_detectability(unstable_example()).strongly_detectable);
}

TEST(Resilience, IdenticalModesNeedOnlyStateRank) {
    const ModeModel m = make_mode("m", 0.5 * Mat::Identity(2, 2), Mat::Identity(2, 1),
                                  (Mat(3, 2) << 1, 0, 0, 1, 1, 1).finished(), Mat::Zero(3, 1));
    const ResilienceReport r = resilience_guarantee(ModeSet{m, m});
    ASSERT_TRUE(r.hypothesis_holds);
    EXPECT_TRUE(r.guaranteed);
    for (const PairCheck& pc : r.pairs) {
        EXPECT_FALSE(pc.outputs_differ);
        EXPECT_EQ(pc.required, 2);
    }
}

TEST(Resilience, ThreeAreaBreakerModes) {
    const ThreeArea ta = three_area_network();
    ModeSet pair;
    for (const ModeModel& m : ta.model.modes) {
        if (m.label == "closed:a1" || m.label == "breaker2:a1") pair.push_back(m);
    }
    ASSERT_EQ(pair.size(), 2u);
    EXPECT_FALSE(pair[0].A.isApprox(pair[1].A));
    const ResilienceReport r = resilience_guarantee(pair);
    ASSERT_TRUE(r.hypothesis_holds);
    const TransformedMode t0 = transform(pair[0]);
    for (const PairCheck& pc : r.pairs) {
        EXPECT_FALSE(pc.outputs_differ);
        EXPECT_EQ(pc.required, pair[0].n());
        EXPECT_EQ(pc.rank, linalg::rank(Mat(t0.T2 * pair[0].C), kAnalysisRankTol));
    }
    EXPECT_TRUE(r.guaranteed);
}

TEST(Resilience, DistinctOutputsWithTooFewChannelsFail) {
    const Mat A = 0.5 * Mat::Identity(2, 2);
    const ModeModel a = make_mode("a", A, Mat::Identity(2, 1), (Mat(3, 2) << 1, 0, 0, 1, 0, 0).finished(),
                                  Mat::Zero(3, 1));
    const ModeModel b = make_mode("b", A, Mat::Identity(2, 1), (Mat(3, 2) << 1, 0, 0, 1, 1, 1).finished(),
                                  Mat::Zero(3, 1));
    const ResilienceReport r = resilience_guarantee(ModeSet{a, b});
    ASSERT_TRUE(r.hypothesis_holds);
    EXPECT_FALSE(r.guaranteed);
    const PairCheck& pc = r.pairs[1];
    EXPECT_TRUE(pc.outputs_differ);
    EXPECT_EQ(pc.required, 4);
    EXPECT_FALSE(pc.note.empty());
}

TEST(Resilience, DifferentFeedthroughBreaksHypothesis) {
    const ModeModel a = two_sensor_example();
    ModeModel b = a;
    b.H = Mat::Zero(2, 2);
    EXPECT_FALSE(resilience_guarantee(ModeSet{a, b}).hypothesis_holds);
}

TEST(SynthUnidentifiable, SharedFeedthroughIsInfeasible) {
    const PlantTopology t = test::unstable_topology();
    const ModeModel a = build_mode(t, AttackSupport::from_signals(t, 0, {1}));
    ModeModel b = a;
    b.A(0, 0) = 0.9;
    const std::vector<TransformedMode> tms{transform(a), transform(b)};
    AttackerMoments mom{Mat::Zero(2, 2), Mat::Identity(1, 1)};
    const UnidentifiablePlan p = synth_unidentifiable(tms, 0, 1, mom);
    EXPECT_FALSE(p.feasible);
}

TEST(SynthUnidentifiable, SelfMasqueradeNeedsNoShaping) {
    const PlantTopology t = test::unstable_topology();
    const ModeModel a = build_mode(t, AttackSupport::from_signals(t, 0, {1}));
    const std::vector<TransformedMode> tms{transform(a)};
    const UnidentifiablePlan p = synth_unidentifiable(tms, 0, 0, {Mat::Zero(2, 2), Mat::Identity(1, 1)});
    EXPECT_TRUE(p.feasible);
    EXPECT_EQ(p.Ds.norm(), 0.0);
    EXPECT_EQ(p.mean(tms[0], tms[0], Vec::Ones(2), Vec::Zero(2), Vec::Zero(1)).norm(), 0.0);
}
